"""Worker process management and the line-delimited JSON wire protocol.

Generated heuristic source never executes inside the engine process: a
fresh worker is spawned per individual, spoken to over stdin/stdout (one
UTF-8 JSON object per line), and killed on timeout. Every worker failure
surfaces as a structured ErrorRecord.

TrustedLocalRuntime exists for the bundled fixture heuristics and tests
only; it runs source in-process with the same call conventions.
"""

from __future__ import annotations

import json
import math
import selectors
import subprocess
import sys
import threading
import time
import traceback as tb
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import ErrorRecord, HeuristicError

PROTOCOL_VERSION = 1
HELLO_TIMEOUT = 5.0
SHUTDOWN_GRACE = 2.0


class ProtocolError(Exception):
    pass


@dataclass(frozen=True)
class SandboxLimits:
    call_timeout: float = 10.0  # seconds per heuristic call
    load_timeout: float = 10.0
    memory_cap: int = 512 * 1024 * 1024  # bytes, worker address-space limit


def default_worker_cmd(limits: SandboxLimits) -> list[str]:
    return [
        sys.executable,
        "-m",
        "heuristic_worker",
        "--call-timeout",
        str(limits.call_timeout),
        "--memory-cap",
        str(limits.memory_cap),
    ]


def encode_value(value: Any) -> Any:
    """Encode a scalar or array for the wire; float64 values survive exactly."""
    if isinstance(value, np.ndarray):
        if value.dtype.kind == "f":
            arr = value.astype(np.float64)
            dtype = "f8"
        elif value.dtype.kind in "iu":
            arr = value.astype(np.int64)
            dtype = "i8"
        else:
            raise ProtocolError(f"unsupported array dtype {value.dtype}")
        return {"shape": list(arr.shape), "dtype": dtype, "data": arr.tolist()}
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise ProtocolError(f"unsupported value type {type(value).__name__}")


def decode_value(value: Any) -> Any:
    if isinstance(value, dict) and "shape" in value and "data" in value:
        dtype = np.float64 if value.get("dtype", "f8") == "f8" else np.int64
        arr = np.array(value["data"], dtype=dtype)
        return arr.reshape([int(s) for s in value["shape"]])
    return value


def encode_message(message: dict[str, Any]) -> bytes:
    return (json.dumps(message, separators=(",", ":")) + "\n").encode("utf-8")


def decode_message(line: bytes) -> dict[str, Any]:
    try:
        message = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed message: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError("message is not an object")
    return message


class WorkerHandle:
    """One worker process; at most one in-flight request at a time."""

    def __init__(self, process: subprocess.Popen, limits: SandboxLimits, cmd: list[str]):
        self.process = process
        self.limits = limits
        self.cmd = cmd
        self.state = "idle"
        self.loaded_entry: str | None = None
        self._next_id = 0
        self._lock = threading.Lock()
        self._dying = False
        self._selector = selectors.DefaultSelector()
        self._selector.register(process.stdout, selectors.EVENT_READ)
        self._buffer = b""

    @property
    def pid(self) -> int:
        return self.process.pid

    def _read_line(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = self._buffer[:newline]
                self._buffer = self._buffer[newline + 1 :]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError(f"no reply within {timeout}s")
            if not self._selector.select(timeout=remaining):
                continue
            chunk = self.process.stdout.read1(65536)
            if not chunk:
                raise EOFError("worker closed its output")
            self._buffer += chunk

    def _kill(self) -> None:
        self.state = "dead"
        if self.process.poll() is None:
            self.process.kill()
            self.process.wait()

    def _request(self, op: str, payload: dict[str, Any], timeout: float, *, phase: str) -> dict[str, Any]:
        with self._lock:
            if self.state == "dead":
                raise HeuristicError(
                    ErrorRecord(phase=phase, message="WorkerDead: handle is dead")
                )
            if self.state == "busy":
                raise HeuristicError(
                    ErrorRecord(phase=phase, message="WorkerBusy: request already in flight")
                )
            self.state = "busy"
            self._next_id += 1
            request_id = self._next_id
        try:
            message = {"id": request_id, "op": op, **payload}
            self.process.stdin.write(encode_message(message))
            self.process.stdin.flush()
            reply = decode_message(self._read_line(timeout))
        except TimeoutError:
            self._kill()
            raise HeuristicError(
                ErrorRecord(
                    phase=phase,
                    message=f"TimeoutError: no reply to {op!r} within {timeout}s",
                )
            ) from None
        except (EOFError, BrokenPipeError, OSError, ProtocolError) as exc:
            dying = self._dying
            self._kill()
            reason = "shutdown requested" if dying else str(exc)
            raise HeuristicError(
                ErrorRecord(phase=phase, message=f"WorkerDied: {reason}")
            ) from None
        else:
            with self._lock:
                if self.state == "busy":
                    self.state = "idle"
            if reply.get("id") != request_id:
                self._kill()
                raise HeuristicError(
                    ErrorRecord(
                        phase=phase,
                        message=(
                            f"ProtocolError: reply id {reply.get('id')!r} "
                            f"does not match request {request_id}"
                        ),
                    )
                )
            return reply

    def load(self, source: str, entry: str) -> None:
        reply = self._request(
            "load",
            {"source": source, "entry": entry},
            self.limits.load_timeout,
            phase="load",
        )
        if not reply.get("ok"):
            raise HeuristicError(_record_from_reply(reply, "load"))
        self.loaded_entry = entry

    def call(self, args: dict[str, Any], seed: int | None = None) -> Any:
        if self.loaded_entry is None:
            raise HeuristicError(
                ErrorRecord(phase="call", message="StateError: no heuristic loaded")
            )
        payload = {
            "args": [{"name": k, "value": encode_value(v)} for k, v in args.items()],
            "seed": seed,
        }
        reply = self._request("call", payload, self.limits.call_timeout, phase="call")
        if not reply.get("ok"):
            raise HeuristicError(_record_from_reply(reply, "call"))
        return decode_value(reply.get("result"))

    def shutdown(self) -> None:
        """Graceful shutdown request, forced kill after a grace period.

        Idempotent; an in-flight call on another thread aborts with a
        shutdown error.
        """
        self._dying = True
        if self.state == "dead":
            return
        try:
            self.process.stdin.write(encode_message({"id": 0, "op": "shutdown"}))
            self.process.stdin.flush()
            self.process.stdin.close()
        except (BrokenPipeError, OSError, ValueError):
            pass
        try:
            self.process.wait(timeout=SHUTDOWN_GRACE)
        except subprocess.TimeoutExpired:
            pass
        self._kill()

    # Context-manager sugar so evaluation sites cannot leak processes.
    def __enter__(self) -> "WorkerHandle":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.shutdown()


def _record_from_reply(reply: dict[str, Any], phase: str) -> ErrorRecord:
    error = reply.get("error") or {}
    cls = error.get("class", "UnknownError")
    message = error.get("message", "")
    return ErrorRecord(
        phase=phase,
        message=f"{cls}: {message}" if message else cls,
        traceback=error.get("traceback", ""),
    )


def spawn_worker(limits: SandboxLimits | None = None, cmd: list[str] | None = None) -> WorkerHandle:
    """Start a worker process and complete the version handshake."""
    limits = limits or SandboxLimits()
    cmd = cmd or default_worker_cmd(limits)
    try:
        process = subprocess.Popen(
            cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
    except OSError as exc:
        raise RuntimeError(f"cannot spawn worker {cmd!r}: {exc}") from exc
    handle = WorkerHandle(process, limits, cmd)
    try:
        reply = handle._request(
            "hello", {"version": PROTOCOL_VERSION}, HELLO_TIMEOUT, phase="load"
        )
    except HeuristicError as exc:
        handle._kill()
        raise RuntimeError(f"worker handshake failed for {cmd!r}: {exc.record.message}") from None
    if not reply.get("ok") or reply.get("version") != PROTOCOL_VERSION:
        handle._kill()
        raise RuntimeError(
            f"worker {cmd!r} speaks protocol {reply.get('version')!r}, "
            f"engine requires {PROTOCOL_VERSION}"
        )
    return handle


def load_heuristic(handle: WorkerHandle, source: str, entry: str) -> None:
    handle.load(source, entry)


def call_heuristic(handle: WorkerHandle, args: dict[str, Any], seed: int | None = None) -> Any:
    return handle.call(args, seed=seed)


def shutdown(handle: WorkerHandle) -> None:
    handle.shutdown()


class TrustedLocalRuntime:
    """In-process runner for bundled fixture heuristics and tests.

    Mirrors the worker call conventions (positional invocation, per-call
    numpy seeding, non-finite output rejection) without any isolation; never
    feed it model-generated source.
    """

    def __init__(self):
        self._fn = None

    def load(self, source: str, entry: str) -> None:
        namespace = _heuristic_namespace()
        try:
            exec(compile(source, "<heuristic>", "exec"), namespace)
        except BaseException as exc:  # noqa: BLE001
            raise HeuristicError(
                ErrorRecord(
                    phase="load",
                    message=_format_exception(exc),
                    traceback="".join(tb.format_exception(exc)),
                )
            ) from None
        fn = namespace.get(entry)
        if not callable(fn):
            raise HeuristicError(
                ErrorRecord(phase="load", message=f"EntryNotFound: no callable {entry!r} defined")
            )
        self._fn = fn

    def call(self, args: dict[str, Any], seed: int | None = None) -> Any:
        if self._fn is None:
            raise HeuristicError(
                ErrorRecord(phase="call", message="StateError: no heuristic loaded")
            )
        if seed is not None:
            np.random.seed(seed & 0xFFFFFFFF)
        try:
            result = self._fn(*args.values())
        except BaseException as exc:  # noqa: BLE001
            raise HeuristicError(
                ErrorRecord(
                    phase="call",
                    message=_format_exception(exc),
                    traceback="".join(tb.format_exception(exc)),
                )
            ) from None
        if not _all_finite(result):
            raise HeuristicError(
                ErrorRecord(phase="call", message="NonFiniteOutput: result contains NaN or inf")
            )
        return result

    def shutdown(self) -> None:
        self._fn = None

    def __enter__(self) -> "TrustedLocalRuntime":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.shutdown()


def _heuristic_namespace() -> dict[str, Any]:
    np_alias = np
    if not hasattr(np_alias, "math"):
        # Older heuristic code reaches math routines through the array
        # package alias; keep that spelling working.
        np_alias.math = math  # type: ignore[attr-defined]
    return {"np": np_alias, "numpy": np_alias, "math": math, "__name__": "__heuristic__"}


def _format_exception(exc: BaseException) -> str:
    if isinstance(exc, SyntaxError):
        return f"SyntaxError: {exc.msg}"
    return f"{type(exc).__name__}: {exc}"


def _all_finite(value: Any) -> bool:
    if isinstance(value, (tuple, list)):
        return all(_all_finite(v) for v in value)
    arr = np.asarray(value, dtype=np.float64)
    return bool(np.isfinite(arr).all())
