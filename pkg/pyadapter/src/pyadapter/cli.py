from __future__ import annotations

import argparse
import sys


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pyadapter", description="Reference classifier adapter (toy keyword model)."
    )
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--port", type=int, help="Serve POST /v1/predict on this port.")
    group.add_argument("--stdio", action="store_true", help="Speak the line protocol on stdin/stdout.")
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)

    if args.stdio:
        from .stdio import stdio_loop

        return stdio_loop()
    from .server import serve

    serve(port=args.port, host=args.host)
    return 0


if __name__ == "__main__":
    sys.exit(main())
