"""Run-directory persistence and cross-run summary statistics.

Layout per run directory: config.snapshot, events.log (append-only JSON
lines with strictly increasing sequence numbers), cassette.log, per
generation gen_<k>.population files, best.heuristic, convergence.table,
summary.report, meta.yaml and plots/. The event log carries no wall-clock
data, so replaying a cassette reproduces it byte for byte; timings live in
meta.yaml.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .orchestrator import RunResult

CONFIG_SNAPSHOT = "config.snapshot"
EVENTS_LOG = "events.log"
CASSETTE_LOG = "cassette.log"
BEST_HEURISTIC = "best.heuristic"
CONVERGENCE_TABLE = "convergence.table"
SUMMARY_REPORT = "summary.report"
META_FILE = "meta.yaml"
PLOTS_DIR = "plots"


class StoreError(RuntimeError):
    pass


class EventLog:
    """Append-only event writer with durable, strictly ordered records.

    Reopening after a crash truncates any torn final line so the durable
    prefix stays the single source of truth, then resumes the sequence.
    """

    def __init__(self, run_dir: str | Path):
        self.path = Path(run_dir) / EVENTS_LOG
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._seq = 0
        if self.path.exists():
            durable, events = _scan_log(self.path)
            if durable < self.path.stat().st_size:
                with open(self.path, "r+b") as fh:
                    fh.truncate(durable)
            self._seq = events[-1]["seq"] if events else 0
        self._fh = open(self.path, "a", encoding="utf-8")

    def emit(self, event_type: str, data: dict[str, Any]) -> int:
        self._seq += 1
        record = {"seq": self._seq, "type": event_type, "data": data}
        self._fh.write(json.dumps(record, separators=(",", ":"), sort_keys=True) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        return self._seq

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def append_event(log: EventLog, event_type: str, data: dict[str, Any]) -> int:
    return log.emit(event_type, data)


def _scan_log(path: Path) -> tuple[int, list[dict[str, Any]]]:
    """Return (durable byte length, parsed events), stopping at a torn tail.

    A final line without its trailing newline is treated as torn even if it
    happens to parse, so readers and the resuming writer agree exactly.
    """
    events: list[dict[str, Any]] = []
    durable = 0
    raw = path.read_bytes()
    offset = 0
    for chunk in raw.split(b"\n"):
        end = offset + len(chunk) + 1
        if end > len(raw):
            break
        if chunk.strip():
            try:
                events.append(json.loads(chunk.decode("utf-8")))
            except (json.JSONDecodeError, UnicodeDecodeError):
                break
        durable = end
        offset = end
    return durable, events[: _sequence_prefix(events)]


def _sequence_prefix(events: list[dict[str, Any]]) -> int:
    for i, (prev, cur) in enumerate(zip(events, events[1:])):
        if cur.get("seq") != prev.get("seq", 0) + 1:
            raise StoreError(
                f"event sequence jumps from {prev.get('seq')} to {cur.get('seq')}"
            )
    return len(events)


def read_events(run_dir: str | Path) -> list[dict[str, Any]]:
    """Parse the event log, tolerating a torn final line after a crash."""
    path = Path(run_dir) / EVENTS_LOG
    if not path.exists():
        return []
    _, events = _scan_log(path)
    return events


def write_run_artifacts(run_dir: str | Path, result: RunResult, wall_time: float) -> None:
    """Persist the derived run files next to the event log."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / CONFIG_SNAPSHOT, "w", encoding="utf-8") as fh:
        yaml.safe_dump(result.config.to_dict(), fh, sort_keys=True)
    for record in result.generations:
        with open(run_dir / f"gen_{record.generation}.population", "w", encoding="utf-8") as fh:
            for ind in record.individuals:
                fh.write(json.dumps(ind.to_dict(), separators=(",", ":")) + "\n")
    if result.best is not None:
        (run_dir / BEST_HEURISTIC).write_text(result.best.source, encoding="utf-8")
    with open(run_dir / META_FILE, "w", encoding="utf-8") as fh:
        yaml.safe_dump({"wall_time": wall_time}, fh)
    write_convergence_table(run_dir)


def convergence_points(run_dir: str | Path) -> list[tuple[int, float]]:
    """(solutions generated, best-so-far fitness) pairs for one run.

    Derived from the event log when present, falling back to a stored
    convergence table (how baseline runs persist their traces).
    """
    points: list[tuple[int, float]] = []
    best = math.inf
    count = 0
    for event in read_events(run_dir):
        if event["type"] != "individual":
            continue
        count += 1
        fitness = event["data"].get("fitness")
        if fitness is not None and fitness < best:
            best = fitness
        if best < math.inf:
            points.append((count, best))
    if points:
        return points
    table = Path(run_dir) / CONVERGENCE_TABLE
    if table.exists():
        for line in table.read_text(encoding="utf-8").splitlines()[1:]:
            count_str, best_str = line.split("\t")
            points.append((int(count_str), float(best_str)))
    return points


def write_convergence_table(
    run_dir: str | Path, points: list[tuple[int, float]] | None = None
) -> Path:
    if points is None:
        points = convergence_points(run_dir)
    path = Path(run_dir) / CONVERGENCE_TABLE
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("solutions\tbest_fitness\n")
        for count, best in points:
            fh.write(f"{count}\t{best!r}\n")
    return path


@dataclass(frozen=True)
class Summary:
    problem: str
    n_runs: int
    best_fitnesses: tuple[float, ...]
    sr_post: float
    sr_pre: float
    wall_times: tuple[float, ...]

    @property
    def mean(self) -> float:
        return sum(self.best_fitnesses) / len(self.best_fitnesses)

    @property
    def std(self) -> float:
        """Sample standard deviation (n-1 denominator); 0 for a single run."""
        n = len(self.best_fitnesses)
        if n < 2:
            return 0.0
        mean = self.mean
        return math.sqrt(sum((x - mean) ** 2 for x in self.best_fitnesses) / (n - 1))

    def objective_str(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.2f}"

    def sr_str(self) -> str:
        return f"{self.sr_post * 100:.2f}%"


def summarize(run_dirs: list[str | Path]) -> Summary:
    """Aggregate completed runs into the comparison-table statistics.

    Pure function of the stored event logs (plus meta.yaml for wall times):
    recomputation always reproduces the stored summary.
    """
    if not run_dirs:
        raise StoreError("no run directories given")
    best_fitnesses: list[float] = []
    generated = valid = repaired = 0
    problem = None
    wall_times: list[float] = []
    for run_dir in run_dirs:
        events = read_events(run_dir)
        run_end = next((e for e in events if e["type"] == "run_end"), None)
        if run_end is None:
            raise StoreError(f"{run_dir}: no completed run (missing run_end event)")
        start = next((e for e in events if e["type"] == "run_start"), None)
        if start is not None:
            problem = problem or start["data"].get("problem")
        data = run_end["data"]
        if data.get("best_fitness") is not None:
            best_fitnesses.append(float(data["best_fitness"]))
        generated += int(data["generated"])
        valid += int(data["valid"])
        repaired += int(data["repaired"])
        meta_path = Path(run_dir) / META_FILE
        if meta_path.exists():
            meta = yaml.safe_load(meta_path.read_text(encoding="utf-8")) or {}
            if "wall_time" in meta:
                wall_times.append(float(meta["wall_time"]))
    if not best_fitnesses:
        raise StoreError("no run produced a valid heuristic; nothing to summarize")
    return Summary(
        problem=problem or "?",
        n_runs=len(run_dirs),
        best_fitnesses=tuple(best_fitnesses),
        sr_post=(valid + repaired) / generated if generated else 0.0,
        sr_pre=valid / generated if generated else 0.0,
        wall_times=tuple(wall_times),
    )


def format_summary(summary: Summary) -> str:
    lines = [
        f"problem: {summary.problem}",
        f"independent runs: {summary.n_runs}",
        f"SR: {summary.sr_str()} (pre-repair {summary.sr_pre * 100:.2f}%)",
        f"objective: {summary.objective_str()}",
        "per-run best: " + ", ".join(f"{x!r}" for x in summary.best_fitnesses),
    ]
    if summary.wall_times:
        lines.append(
            "wall times (s): " + ", ".join(f"{t:.1f}" for t in summary.wall_times)
        )
    return "\n".join(lines) + "\n"


def write_summary_report(out_dir: str | Path, summary: Summary) -> Path:
    path = Path(out_dir) / SUMMARY_REPORT
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_summary(summary), encoding="utf-8")
    return path
