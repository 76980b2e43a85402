"""Turns a heuristic into a fitness number.

Matrix heuristics (tsp, bpp) are called once per instance and their score
matrices drive deterministic greedy constructors; position heuristics (acs,
wsn) act as the update rule of a population inner loop. Both paths share
the EvaluationResult contract: failures become structured error records,
never engine crashes.
"""

from __future__ import annotations

import time
import traceback as tb
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .core import ErrorRecord, HeuristicError, HeuristicIndividual, SeedStream
from .problems import ProblemSpec, bpp_count_bins, tsp_tour_length
from .problems.bpp import BppInstance

# Child-stream labels inside one evaluation.
_LABEL_INIT = 0
_LABEL_SEEDS = 1


class HeuristicRuntime(Protocol):
    """Where heuristic source actually executes (sandbox worker or trusted
    in-process runner for bundled fixtures)."""

    def load(self, source: str, entry: str) -> None: ...

    def call(self, args: dict[str, Any], seed: int | None = None) -> Any: ...


@dataclass(frozen=True)
class EvaluationResult:
    fitness: float | None
    valid: bool
    error: ErrorRecord | None = None
    trace: tuple[tuple[int, float], ...] = ()
    wall_time: float = 0.0


@dataclass
class PopulationState:
    """Inner-loop state handed to position-update rules."""

    positions: np.ndarray  # agents x dim, in [0,1]
    fitness: np.ndarray  # per-agent objective at positions
    best_pos: np.ndarray
    best_score: float
    iter: int
    max_iter: int
    rg: float
    extra: dict[str, Any] = field(default_factory=dict)


StepFn = Callable[[PopulationState, np.random.Generator], np.ndarray]


def rg_schedule(iteration: int, max_iter: int) -> float:
    """Linearly decaying search radius from 2 to 0."""
    if not 0 <= iteration <= max_iter:
        raise ValueError(f"iteration {iteration} outside [0, {max_iter}]")
    return 2.0 * (1.0 - iteration / max_iter)


def construct_tour_greedy(
    instance: np.ndarray, score_matrix: np.ndarray, start: int = 0
) -> np.ndarray:
    """Build a closed tour from an edge-score matrix.

    Starts at city ``start`` and repeatedly moves to the unvisited city with
    the highest score from the current one (ties to the lowest index); the
    diagonal is ignored.
    """
    n = instance.shape[0]
    score = np.asarray(score_matrix, dtype=np.float64)
    if score.shape != (n, n):
        raise ValueError(f"score matrix shape {score.shape} does not match {n} cities")
    off_diag = ~np.eye(n, dtype=bool)
    if not np.isfinite(score[off_diag]).all():
        raise ValueError("score matrix has non-finite off-diagonal entries")
    tour = np.empty(n, dtype=np.int64)
    tour[0] = start
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    current = start
    for k in range(1, n):
        row = score[current].copy()
        row[visited] = -np.inf
        row[current] = -np.inf
        current = int(np.argmax(row))
        tour[k] = current
        visited[current] = True
    return tour


def best_tour_multi_start(instance: np.ndarray, score_matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Greedy tours from every start city; keep the shortest.

    This is the tsp evaluation protocol: deterministic, and much closer to
    the published objective scale than a single fixed start.
    """
    best_tour: np.ndarray | None = None
    best_length = np.inf
    for start in range(instance.shape[0]):
        tour = construct_tour_greedy(instance, score_matrix, start=start)
        length = tsp_tour_length(instance, tour)
        if length < best_length:
            best_length = length
            best_tour = tour
    assert best_tour is not None
    return best_tour, best_length


def construct_bins_greedy(instance: BppInstance, score_matrix: np.ndarray) -> dict[int, int]:
    """Pack items in input order using pairwise placement scores.

    Each item joins the open bin whose last item scores it highest among
    bins with room (ties to the oldest bin), or opens a new bin.
    """
    sizes = instance.item_sizes
    n = len(sizes)
    score = np.asarray(score_matrix, dtype=np.float64)
    if score.shape != (n, n):
        raise ValueError(f"score matrix shape {score.shape} does not match {n} items")
    if not np.isfinite(score).all():
        raise ValueError("score matrix has non-finite entries")
    loads: list[int] = []
    last_item: list[int] = []
    assignment: dict[int, int] = {}
    for item in range(n):
        size = int(sizes[item])
        if size > instance.capacity:
            raise ValueError(f"item {item} of size {size} exceeds capacity {instance.capacity}")
        best_bin = -1
        best_score = -np.inf
        for b in range(len(loads)):
            if loads[b] + size <= instance.capacity and score[last_item[b], item] > best_score:
                best_bin = b
                best_score = score[last_item[b], item]
        if best_bin < 0:
            loads.append(size)
            last_item.append(item)
            assignment[item] = len(loads) - 1
        else:
            loads[best_bin] += size
            last_item[best_bin] = item
            assignment[item] = best_bin
    return assignment


def _error_record(exc: BaseException, phase: str) -> ErrorRecord:
    if isinstance(exc, HeuristicError):
        return exc.record
    return ErrorRecord(
        phase=phase,
        message=f"{type(exc).__name__}: {exc}",
        traceback="".join(tb.format_exception(exc)),
    )


def run_population_search(
    problem: ProblemSpec,
    update: Callable[..., np.ndarray],
    agents: int,
    iters: int,
    stream: SeedStream,
) -> EvaluationResult:
    """Drive a position-update rule over the problem's [0,1]^dim landscape.

    ``update`` maps (positions, best_pos, best_score, rg) to new positions.
    Callables carrying ``wants_seed = True`` (sandbox adapters) receive a
    per-iteration seed keyword instead; plain callables get the same seed
    installed into the process-global numpy RNG first, so in-process and
    sandboxed runs of one heuristic produce identical traces.
    """
    wants_seed = bool(getattr(update, "wants_seed", False))

    def step(state: PopulationState, _rng: np.random.Generator) -> np.ndarray:
        seed = state.extra["iter_seeds"][state.iter]
        if wants_seed:
            return update(
                state.positions, state.best_pos, state.best_score, state.rg, seed=seed
            )
        np.random.seed(seed)
        return update(state.positions, state.best_pos, state.best_score, state.rg)

    iter_seeds = [int(s) for s in stream.child(_LABEL_SEEDS).rng().integers(0, 2**32, size=iters)]
    return population_loop(problem, step, agents, iters, stream, extra={"iter_seeds": iter_seeds})


def population_loop(
    problem: ProblemSpec,
    step: StepFn,
    agents: int,
    iters: int,
    stream: SeedStream,
    extra: dict[str, Any] | None = None,
) -> EvaluationResult:
    """Shared inner loop: init uniform, step, clamp, evaluate, track best."""
    started = time.perf_counter()
    rng = stream.child(_LABEL_INIT).rng()
    positions = rng.random((agents, problem.dim))
    fitness = np.array([problem.vector_fitness(p) for p in positions])
    best_idx = int(np.argmin(fitness))
    best_pos = positions[best_idx].copy()
    best_score = float(fitness[best_idx])
    trace: list[tuple[int, float]] = [(0, best_score)]

    state = PopulationState(
        positions=positions,
        fitness=fitness,
        best_pos=best_pos,
        best_score=best_score,
        iter=0,
        max_iter=iters,
        rg=rg_schedule(0, iters),
        extra=extra or {},
    )

    for it in range(iters):
        state.iter = it
        state.rg = rg_schedule(it, iters)
        try:
            new_positions = np.asarray(step(state, rng), dtype=np.float64)
        except Exception as exc:  # noqa: BLE001 - every failure becomes a record
            return EvaluationResult(
                fitness=None,
                valid=False,
                error=_error_record(exc, "call"),
                trace=tuple(trace),
                wall_time=time.perf_counter() - started,
            )
        if new_positions.shape != (agents, problem.dim):
            record = ErrorRecord(
                phase="call",
                message=(
                    f"ValueError: update returned shape {new_positions.shape}, "
                    f"expected {(agents, problem.dim)}"
                ),
            )
            return EvaluationResult(
                fitness=None,
                valid=False,
                error=record,
                trace=tuple(trace),
                wall_time=time.perf_counter() - started,
            )
        state.positions = np.clip(new_positions, 0.0, 1.0)
        state.fitness = np.array([problem.vector_fitness(p) for p in state.positions])
        idx = int(np.argmin(state.fitness))
        if float(state.fitness[idx]) < state.best_score:
            state.best_score = float(state.fitness[idx])
            state.best_pos = state.positions[idx].copy()
        trace.append((it + 1, state.best_score))

    return EvaluationResult(
        fitness=state.best_score,
        valid=True,
        trace=tuple(trace),
        wall_time=time.perf_counter() - started,
    )


class SandboxUpdate:
    """Position-update view of a heuristic loaded in a runtime."""

    wants_seed = True

    def __init__(self, runtime: HeuristicRuntime):
        self.runtime = runtime

    def __call__(
        self,
        positions: np.ndarray,
        best_pos: np.ndarray,
        best_score: float,
        rg: float,
        seed: int | None = None,
    ) -> np.ndarray:
        result = self.runtime.call(
            {
                "Positions": positions,
                "Best_pos": best_pos,
                "Best_score": float(best_score),
                "rg": float(rg),
            },
            seed=seed,
        )
        return np.asarray(result, dtype=np.float64)


def evaluate_heuristic(
    problem: ProblemSpec,
    individual: HeuristicIndividual,
    runtime: HeuristicRuntime,
    stream: SeedStream,
) -> EvaluationResult:
    """Load one individual into a runtime and measure it on its problem.

    tsp/bpp: one call per instance produces the score matrix, the greedy
    constructor builds the solution, and the fitness is the mean objective
    over the instance set. acs/wsn: the heuristic drives the population
    inner loop at the problem's published agent/iteration counts.
    """
    started = time.perf_counter()
    try:
        runtime.load(individual.source, individual.entry_name)
    except Exception as exc:  # noqa: BLE001
        return EvaluationResult(
            fitness=None,
            valid=False,
            error=_error_record(exc, "load"),
            wall_time=time.perf_counter() - started,
        )

    if problem.kind == "position":
        update = SandboxUpdate(runtime)
        result = run_population_search(
            problem, update, problem.search_agents, problem.max_iters, stream
        )
        return EvaluationResult(
            fitness=result.fitness,
            valid=result.valid,
            error=result.error,
            trace=result.trace,
            wall_time=time.perf_counter() - started,
        )

    call_seeds = stream.child(_LABEL_SEEDS).rng().integers(0, 2**32, size=problem.n_instances)
    objectives = []
    best_so_far = np.inf
    trace: list[tuple[int, float]] = []
    for i in range(problem.n_instances):
        try:
            matrix = runtime.call(problem.heuristic_args(i), seed=int(call_seeds[i]))
            if problem.problem_id == "tsp":
                coords = problem.tsp_instances[i]
                _, objective = best_tour_multi_start(coords, np.asarray(matrix))
            else:
                inst = problem.bpp_instances[i]
                assignment = construct_bins_greedy(inst, np.asarray(matrix))
                objective = float(bpp_count_bins(inst, assignment))
        except Exception as exc:  # noqa: BLE001
            return EvaluationResult(
                fitness=None,
                valid=False,
                error=_error_record(exc, "call"),
                trace=tuple(trace),
                wall_time=time.perf_counter() - started,
            )
        objectives.append(objective)
        best_so_far = min(best_so_far, objective)
        trace.append((i, best_so_far))

    return EvaluationResult(
        fitness=float(np.mean(objectives)),
        valid=True,
        trace=tuple(trace),
        wall_time=time.perf_counter() - started,
    )
