"""Shared fixtures for scripted runs and well-formed model replies."""

from __future__ import annotations

from pathlib import Path

from mela.core import SeedStream


def make_reply(code_body: str, thought: str = "1.try a step\n2.keep it bounded") -> str:
    """A well-formed model reply wrapping the given heuristic source."""
    return f"{{thought process:\n{thought}}}\n```python\n{code_body}```\n"


UPDATE_REPLY = make_reply(
    "import numpy as np\n"
    "\n"
    "def heuristics_v1(Positions, Best_pos, Best_score, rg):\n"
    "    #EVOLVE-START\n"
    "    Positions = 0.5 * Positions + 0.5 * Best_pos "
    "+ 0.01 * np.random.randn(*Positions.shape)\n"
    "    #EVOLVE-END\n"
    "    return Positions\n"
)


def record_scripted_run(out_dir, vcfg, replies, problem=None):
    """Execute a scripted run with the CLI's directory layout, recording the
    cassette so the same config can later replay from ``out_dir``."""
    from mela import orchestrator, store
    from mela.llm import RecordingBackend, ScriptedBackend
    from mela.sandbox import TrustedLocalRuntime

    run_dirs = []
    for k in range(vcfg.runs):
        run_dir = Path(out_dir) / f"run_{k:03d}"
        run_dir.mkdir(parents=True, exist_ok=True)
        backend = RecordingBackend(
            ScriptedBackend(list(replies)), str(run_dir / store.CASSETTE_LOG)
        )
        with store.EventLog(run_dir) as log:
            result = orchestrator.run(
                vcfg,
                backend,
                lambda: TrustedLocalRuntime(),
                SeedStream(vcfg.seed).child(k),
                sink=log,
                problem=problem,
            )
        store.write_run_artifacts(run_dir, result, wall_time=0.0)
        run_dirs.append(run_dir)
    return run_dirs
