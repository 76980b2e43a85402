from __future__ import annotations

import json
import sys
import threading
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mela.core import HeuristicError
from mela.sandbox import (
    SandboxLimits,
    TrustedLocalRuntime,
    decode_message,
    decode_value,
    encode_message,
    encode_value,
    spawn_worker,
)
from mela import heuristics

FAKE_WORKER = [sys.executable, str(Path(__file__).parent / "fake_worker.py")]


def fake_worker(limits: SandboxLimits | None = None):
    return spawn_worker(limits or SandboxLimits(), cmd=FAKE_WORKER)


class TestWireCodec:
    def test_message_round_trip(self):
        message = {"id": 3, "op": "call", "args": [{"name": "x", "value": 1.5}]}
        assert decode_message(encode_message(message).strip()) == message

    @given(
        st.lists(
            st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=40
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_float64_arrays_value_exact(self, values):
        arr = np.array(values, dtype=np.float64)
        wire = json.loads(json.dumps(encode_value(arr)))
        back = decode_value(wire)
        assert back.dtype == np.float64
        assert (back == arr).all()

    @given(st.integers(-(2**62), 2**62))
    @settings(max_examples=100, deadline=None)
    def test_int_arrays_exact(self, value):
        arr = np.array([[value]], dtype=np.int64)
        back = decode_value(json.loads(json.dumps(encode_value(arr))))
        assert back[0, 0] == value

    def test_shape_preserved(self):
        arr = np.arange(12, dtype=np.float64).reshape(3, 4)
        assert decode_value(encode_value(arr)).shape == (3, 4)

    def test_malformed_line_rejected(self):
        from mela.sandbox import ProtocolError

        with pytest.raises(ProtocolError):
            decode_message(b"garbage{{{")


class TestSpawn:
    def test_missing_executable_names_command(self):
        with pytest.raises(RuntimeError, match="no-such-worker"):
            spawn_worker(SandboxLimits(), cmd=["/no-such-worker"])

    def test_handshake_and_idle_state(self):
        with fake_worker() as handle:
            assert handle.state == "idle"

    def test_two_spawns_independent_processes(self):
        with fake_worker() as a, fake_worker() as b:
            assert a.pid != b.pid


class TestLoadAndCall:
    def test_bundled_source_loads(self):
        with fake_worker() as handle:
            handle.load(heuristics.listing_source(3), "heuristics_v2")
            assert handle.loaded_entry == "heuristics_v2"

    def test_syntax_error_reported(self):
        with fake_worker() as handle:
            with pytest.raises(HeuristicError) as exc_info:
                handle.load("def f(:\n", "f")
            assert "SyntaxError" in exc_info.value.record.message
            assert exc_info.value.record.phase == "load"

    def test_missing_entry_reported(self):
        with fake_worker() as handle:
            with pytest.raises(HeuristicError, match="not defined"):
                handle.load("def g(x):\n    return x\n", "nope")

    def test_call_round_trip_shapes(self, stream):
        with fake_worker() as handle:
            handle.load(heuristics.listing_source(3), "heuristics_v2")
            positions = stream.rng().random((20, 120))
            result = handle.call(
                {
                    "Positions": positions,
                    "Best_pos": positions[0],
                    "Best_score": 100.0,
                    "rg": 2.0,
                },
                seed=7,
            )
            assert result.shape == (20, 120)

    def test_seeded_calls_bit_identical(self, stream):
        with fake_worker() as handle:
            handle.load(heuristics.listing_source(3), "heuristics_v2")
            positions = stream.rng().random((5, 12))
            args = {
                "Positions": positions,
                "Best_pos": positions[0],
                "Best_score": 10.0,
                "rg": 1.0,
            }
            a = handle.call(args, seed=123)
            b = handle.call(args, seed=123)
            assert (a == b).all()

    def test_runtime_exception_preserves_message(self):
        with fake_worker() as handle:
            handle.load(
                "def f(x):\n    import numpy as np\n    return x + np.zeros((50, 150))\n",
                "f",
            )
            with pytest.raises(HeuristicError) as exc_info:
                handle.call({"x": np.zeros(50)})
            assert "operands could not be broadcast" in exc_info.value.record.message
            assert exc_info.value.record.phase == "call"

    def test_call_before_load_rejected(self):
        with fake_worker() as handle:
            with pytest.raises(HeuristicError, match="no heuristic loaded"):
                handle.call({"x": 1.0})


class TestTimeoutsAndShutdown:
    def test_infinite_loop_killed_within_budget(self):
        limits = SandboxLimits(call_timeout=1.0)
        with fake_worker(limits) as handle:
            handle.load("def f(x):\n    while True:\n        pass\n", "f")
            started = time.monotonic()
            with pytest.raises(HeuristicError, match="TimeoutError"):
                handle.call({"x": 1.0})
            assert time.monotonic() - started <= limits.call_timeout + 1.0
            assert handle.state == "dead"

    def test_dead_handle_rejects_operations(self):
        handle = fake_worker()
        handle.shutdown()
        assert handle.state == "dead"
        with pytest.raises(HeuristicError, match="WorkerDead"):
            handle.load("def f(x):\n    return x\n", "f")

    def test_shutdown_idempotent(self):
        handle = fake_worker()
        handle.shutdown()
        handle.shutdown()
        assert handle.state == "dead"

    def test_shutdown_aborts_inflight_call(self):
        limits = SandboxLimits(call_timeout=30.0)
        handle = fake_worker(limits)
        handle.load("def f(x):\n    while True:\n        pass\n", "f")
        failures: list[HeuristicError] = []

        def blocked_call():
            try:
                handle.call({"x": 1.0})
            except HeuristicError as exc:
                failures.append(exc)

        thread = threading.Thread(target=blocked_call)
        thread.start()
        time.sleep(0.3)
        handle.shutdown()
        thread.join(timeout=5)
        assert not thread.is_alive()
        assert failures and "shutdown" in failures[0].record.message


class TestTrustedLocalRuntime:
    def test_matches_worker_output_bit_for_bit(self, stream):
        positions = stream.rng().random((6, 9))
        args = {
            "Positions": positions,
            "Best_pos": positions[0],
            "Best_score": 50.0,
            "rg": 1.5,
        }
        local = TrustedLocalRuntime()
        local.load(heuristics.listing_source(4), "heuristics_v2")
        local_out = local.call(dict(args), seed=99)
        with fake_worker() as handle:
            handle.load(heuristics.listing_source(4), "heuristics_v2")
            worker_out = handle.call(dict(args), seed=99)
        assert (local_out == worker_out).all()

    def test_non_finite_output_rejected(self):
        local = TrustedLocalRuntime()
        local.load("import numpy as np\ndef f(x):\n    return x * np.nan\n", "f")
        with pytest.raises(HeuristicError, match="NonFiniteOutput"):
            local.call({"x": np.ones(3)})

    def test_replaced_entry_fully_swapped(self):
        local = TrustedLocalRuntime()
        local.load("def f(x):\n    return x + 1\n", "f")
        assert local.call({"x": 1.0}) == 2.0
        local.load("def f(x):\n    return x + 10\n", "f")
        assert local.call({"x": 1.0}) == 11.0
