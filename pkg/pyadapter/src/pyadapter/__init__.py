from .model import AdapterModel, toy_model
from .server import create_app, serve
from .stdio import stdio_loop

__all__ = ["AdapterModel", "toy_model", "create_app", "serve", "stdio_loop"]
