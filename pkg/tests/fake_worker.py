"""Minimal wire-protocol peer for exercising the bridge in isolation.

Mirrors the worker's externally visible behavior (one JSON reply per line,
positional invocation, per-call seeding, non-finite rejection) without any
of its resource handling. Test fixture only.
"""

from __future__ import annotations

import json
import math
import sys
import traceback

import numpy as np

PROTOCOL_VERSION = 1


def encode_value(value):
    if isinstance(value, np.ndarray):
        dtype = "f8" if value.dtype.kind == "f" else "i8"
        arr = value.astype(np.float64 if dtype == "f8" else np.int64)
        return {"shape": list(arr.shape), "dtype": dtype, "data": arr.tolist()}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def decode_value(value):
    if isinstance(value, dict) and "shape" in value:
        dtype = np.float64 if value.get("dtype", "f8") == "f8" else np.int64
        return np.array(value["data"], dtype=dtype).reshape(value["shape"])
    return value


def reply(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def error_reply(request_id, exc):
    reply(
        {
            "id": request_id,
            "ok": False,
            "error": {
                "class": type(exc).__name__,
                "message": str(exc),
                "traceback": traceback.format_exc(),
            },
        }
    )


def main() -> int:
    np_alias = np
    if not hasattr(np_alias, "math"):
        np_alias.math = math
    loaded = None
    for line in sys.stdin:
        try:
            request = json.loads(line)
            request_id = request.get("id")
            op = request.get("op")
        except json.JSONDecodeError as exc:
            reply(
                {
                    "id": None,
                    "ok": False,
                    "error": {"class": "ProtocolError", "message": str(exc), "traceback": ""},
                }
            )
            continue
        if op == "hello":
            reply({"id": request_id, "ok": True, "version": PROTOCOL_VERSION})
        elif op == "shutdown":
            reply({"id": request_id, "ok": True})
            return 0
        elif op == "load":
            namespace = {"np": np_alias, "numpy": np_alias, "math": math}
            try:
                exec(compile(request["source"], "<heuristic>", "exec"), namespace)
                fn = namespace.get(request["entry"])
                if not callable(fn):
                    raise NameError(f"entry {request['entry']!r} not defined")
            except BaseException as exc:  # noqa: BLE001
                error_reply(request_id, exc)
                continue
            loaded = fn
            reply({"id": request_id, "ok": True})
        elif op == "call":
            try:
                if loaded is None:
                    raise RuntimeError("no heuristic loaded")
                if request.get("seed") is not None:
                    np.random.seed(request["seed"] & 0xFFFFFFFF)
                values = [decode_value(a["value"]) for a in request["args"]]
                result = loaded(*values)
                if isinstance(result, np.ndarray) and not np.isfinite(result).all():
                    raise ValueError("NonFiniteOutput")
                reply({"id": request_id, "ok": True, "result": encode_value(result)})
            except BaseException as exc:  # noqa: BLE001
                error_reply(request_id, exc)
        else:
            reply(
                {
                    "id": request_id,
                    "ok": False,
                    "error": {"class": "ProtocolError", "message": f"unknown op {op!r}", "traceback": ""},
                }
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
