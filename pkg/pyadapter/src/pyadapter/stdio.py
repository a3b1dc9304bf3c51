"""Subprocess adapter: rid-matched JSON-lines protocol on stdin/stdout."""

from __future__ import annotations

import json
import sys
from typing import IO

from .model import AdapterModel, toy_model


def stdio_loop(
    model: AdapterModel = toy_model,
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
) -> int:
    """Answer requests until EOF; returns the process exit code.

    A malformed line yields an error response carrying the rid when one is
    parseable, and the loop continues; EOF is a clean exit.
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        rid = None
        try:
            request = json.loads(line)
            if isinstance(request, dict):
                rid = request.get("rid")
            response = {"rid": rid, "probs": model(request)}
        except (ValueError, TypeError) as exc:
            response = {"rid": rid, "error": str(exc)}
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
    return 0
