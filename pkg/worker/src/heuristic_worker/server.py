"""Sandbox server: executes heuristic source under an import allowlist.

Speaks one UTF-8 JSON object per line over stdin/stdout. Requests carry
{"id", "op", ...} with ops hello/load/call/shutdown; every request gets
exactly one reply {"id", "ok", ...}, errors as {"class", "message",
"traceback"}. Arrays travel as {"shape", "dtype", "data"} with float64
values surviving exactly.

Isolation is process-level best effort: a fresh namespace per load, imports
restricted to the numeric stack, dangerous builtins removed, and an
address-space cap from the command line. The parent enforces call timeouts
by killing the process.
"""

from __future__ import annotations

import argparse
import builtins
import json
import math
import sys
import traceback
from typing import Any

import numpy as np

PROTOCOL_VERSION = 1

ALLOWED_MODULES = ("numpy", "math")

REMOVED_BUILTINS = frozenset(
    {"open", "exec", "eval", "compile", "input", "breakpoint", "memoryview", "vars"}
)


class WorkerError(Exception):
    """Raised for protocol-level failures; class name travels on the wire."""


def encode_value(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        if value.dtype.kind == "f":
            arr = value.astype(np.float64)
            dtype = "f8"
        elif value.dtype.kind in "iu":
            arr = value.astype(np.int64)
            dtype = "i8"
        elif value.dtype.kind == "b":
            arr = value.astype(np.int64)
            dtype = "i8"
        else:
            raise WorkerError(f"unsupported result dtype {value.dtype}")
        return {"shape": list(arr.shape), "dtype": dtype, "data": arr.tolist()}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if isinstance(value, (tuple, list)):
        return [encode_value(v) for v in value]
    raise WorkerError(f"unsupported result type {type(value).__name__}")


def decode_value(value: Any) -> Any:
    if isinstance(value, dict) and "shape" in value and "data" in value:
        dtype = np.float64 if value.get("dtype", "f8") == "f8" else np.int64
        return np.array(value["data"], dtype=dtype).reshape([int(s) for s in value["shape"]])
    return value


def _restricted_import(name, globals=None, locals=None, fromlist=(), level=0):
    root = name.split(".")[0]
    if root not in ALLOWED_MODULES:
        raise ImportError(f"import of {name!r} is not allowed in the sandbox")
    return _real_import(name, globals, locals, fromlist, level)


_real_import = builtins.__import__


def _sandbox_builtins() -> dict[str, Any]:
    table = {
        name: value
        for name, value in vars(builtins).items()
        if name not in REMOVED_BUILTINS
    }
    table["__import__"] = _restricted_import
    return table


def _fresh_namespace() -> dict[str, Any]:
    if not hasattr(np, "math"):
        # Heuristic code written against older numpy reaches math routines
        # through the array-package alias; keep that spelling alive.
        np.math = math  # type: ignore[attr-defined]
    return {
        "__builtins__": _sandbox_builtins(),
        "__name__": "__heuristic__",
        "np": np,
        "numpy": np,
        "math": math,
    }


def _error_payload(exc: BaseException) -> dict[str, str]:
    if isinstance(exc, SyntaxError):
        message = exc.msg or str(exc)
    else:
        message = str(exc)
    return {
        "class": type(exc).__name__,
        "message": message,
        "traceback": "".join(traceback.format_exception(type(exc), exc, exc.__traceback__)),
    }


def _all_finite(value: Any) -> bool:
    if isinstance(value, (tuple, list)):
        return all(_all_finite(v) for v in value)
    arr = np.asarray(value, dtype=np.float64)
    return bool(np.isfinite(arr).all())


class WorkerState:
    def __init__(self) -> None:
        self.loaded: Any = None

    def exec_load(self, source: str, entry: str) -> None:
        namespace = _fresh_namespace()
        code = compile(source, "<heuristic>", "exec")
        exec(code, namespace)  # noqa: S102 - the whole point of this process
        fn = namespace.get(entry)
        if not callable(fn):
            raise WorkerError(f"entry {entry!r} not defined by the source")
        self.loaded = fn

    def exec_call(self, args: list[dict[str, Any]], seed: int | None) -> Any:
        if self.loaded is None:
            raise WorkerError("no heuristic loaded")
        if seed is not None:
            np.random.seed(int(seed) & 0xFFFFFFFF)
        values = [decode_value(a["value"]) for a in args]
        result = self.loaded(*values)
        if not _all_finite(result):
            raise NonFiniteOutput("result contains NaN or inf")
        return encode_value(result)


class NonFiniteOutput(Exception):
    pass


def _write_reply(out: Any, reply: dict[str, Any]) -> None:
    out.write(json.dumps(reply, separators=(",", ":")) + "\n")
    out.flush()


def serve(stdin: Any = None, stdout: Any = None) -> int:
    """Request loop: one reply per request, in order; survives everything
    except shutdown or a hard resource kill."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    # Read raw bytes so undecodable garbage reaches the error path instead
    # of blowing up inside the line iterator.
    lines = stdin.buffer if hasattr(stdin, "buffer") else stdin
    state = WorkerState()
    for line in lines:
        if not line.strip():
            continue
        try:
            if isinstance(line, bytes):
                line = line.decode("utf-8")
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request is not an object")
        except (ValueError, UnicodeDecodeError) as exc:
            _write_reply(
                stdout,
                {
                    "id": None,
                    "ok": False,
                    "error": {
                        "class": "ProtocolError",
                        "message": f"malformed request: {exc}",
                        "traceback": "",
                    },
                },
            )
            continue
        request_id = request.get("id")
        op = request.get("op")
        try:
            if op == "hello":
                version = request.get("version")
                if version != PROTOCOL_VERSION:
                    _write_reply(
                        stdout,
                        {
                            "id": request_id,
                            "ok": False,
                            "error": {
                                "class": "ProtocolError",
                                "message": (
                                    f"protocol version {version!r} unsupported, "
                                    f"this worker speaks {PROTOCOL_VERSION}"
                                ),
                                "traceback": "",
                            },
                        },
                    )
                    return 1  # version mismatch is fatal
                _write_reply(
                    stdout, {"id": request_id, "ok": True, "version": PROTOCOL_VERSION}
                )
            elif op == "load":
                state.exec_load(str(request.get("source", "")), str(request.get("entry", "")))
                _write_reply(stdout, {"id": request_id, "ok": True})
            elif op == "call":
                args = request.get("args")
                if not isinstance(args, list):
                    raise WorkerError("call needs an args list")
                result = state.exec_call(args, request.get("seed"))
                _write_reply(stdout, {"id": request_id, "ok": True, "result": result})
            elif op == "shutdown":
                _write_reply(stdout, {"id": request_id, "ok": True})
                return 0
            else:
                _write_reply(
                    stdout,
                    {
                        "id": request_id,
                        "ok": False,
                        "error": {
                            "class": "ProtocolError",
                            "message": f"unknown op {op!r}",
                            "traceback": "",
                        },
                    },
                )
        except KeyboardInterrupt:
            raise  # operator interrupt, never user code
        except BaseException as exc:  # noqa: BLE001 - survive user code, always
            # SystemExit from loaded source is just another failure.
            _write_reply(
                stdout, {"id": request_id, "ok": False, "error": _error_payload(exc)}
            )
    return 0


def _apply_memory_cap(cap_bytes: int) -> None:
    if cap_bytes <= 0:
        return
    try:
        import resource

        resource.setrlimit(resource.RLIMIT_AS, (cap_bytes, cap_bytes))
    except (ImportError, ValueError, OSError):
        pass  # best effort; unsupported platforms keep running uncapped


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="heuristic-worker")
    parser.add_argument("--call-timeout", type=float, default=10.0,
                        help="advisory; the parent enforces it by killing the process")
    parser.add_argument("--memory-cap", type=int, default=512 * 1024 * 1024)
    args = parser.parse_args(argv)
    _apply_memory_cap(args.memory_cap)
    return serve()


if __name__ == "__main__":
    sys.exit(main())
