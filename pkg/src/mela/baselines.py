"""The five baseline metaheuristics, run through the shared inner loop.

Parameter defaults follow the published comparison settings; GA, PSO and
SCSO use their classic update equations, SOA and WO are reconstructions of
their original publications' phases. All baselines search the same clamped
[0,1]^dim space and decode rules as generated heuristics, and share one
bound-handling convention: a candidate that leaves the box is reinitialized
uniformly (the same rule the bundled heuristics apply in their preambles).
Plain clipping would park coordinates on the boundary, which on the sensor
problem coincides with minimum power and makes weak searchers look strong.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SeedStream
from .problems import ProblemSpec
from .search import EvaluationResult, PopulationState, population_loop

ALGORITHMS = ("ga", "pso", "scso", "soa", "wo")


@dataclass(frozen=True)
class GaParams:
    pc: float = 0.7
    pm: float = 0.1
    sigma: float = 0.1  # mutation step


@dataclass(frozen=True)
class PsoParams:
    w: float = 0.8
    c1: float = 2.0
    c2: float = 2.0


@dataclass(frozen=True)
class WoParams:
    r: float = 0.4


@dataclass(frozen=True)
class BaselineParams:
    ga: GaParams = field(default_factory=GaParams)
    pso: PsoParams = field(default_factory=PsoParams)
    wo: WoParams = field(default_factory=WoParams)


def _reinit_out_of_bounds(positions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniformly reinitialize every individual with any coordinate outside
    [0,1]."""
    bad = ((positions < 0.0) | (positions > 1.0)).any(axis=1)
    if bad.any():
        positions = positions.copy()
        positions[bad] = rng.random((int(bad.sum()), positions.shape[1]))
    return positions


class GaStep:
    """Generational GA: roulette selection, uniform crossover, Gaussian
    mutation; no elitism (best-so-far is tracked by the loop)."""

    def __init__(self, params: GaParams):
        self.params = params

    def __call__(self, state: PopulationState, rng: np.random.Generator) -> np.ndarray:
        n, dim = state.positions.shape
        worst = float(state.fitness.max())
        weights = worst - state.fitness + 1e-12
        probs = weights / weights.sum()
        children = np.empty_like(state.positions)
        for k in range(n):
            i, j = rng.choice(n, size=2, p=probs)
            if rng.random() < self.params.pc:
                mask = rng.random(dim) < 0.5
                children[k] = np.where(mask, state.positions[i], state.positions[j])
            else:
                children[k] = state.positions[i]
        mutate = rng.random((n, dim)) < self.params.pm
        children = children + mutate * rng.normal(0.0, self.params.sigma, size=(n, dim))
        return _reinit_out_of_bounds(children, rng)


class PsoStep:
    def __init__(self, params: PsoParams):
        self.params = params
        self.velocity: np.ndarray | None = None
        self.pbest: np.ndarray | None = None
        self.pbest_fitness: np.ndarray | None = None

    def __call__(self, state: PopulationState, rng: np.random.Generator) -> np.ndarray:
        n, dim = state.positions.shape
        if self.velocity is None:
            self.velocity = np.zeros((n, dim))
            self.pbest = state.positions.copy()
            self.pbest_fitness = state.fitness.copy()
        else:
            improved = state.fitness < self.pbest_fitness
            self.pbest[improved] = state.positions[improved]
            self.pbest_fitness[improved] = state.fitness[improved]
        p = self.params
        r1 = rng.random((n, dim))
        r2 = rng.random((n, dim))
        self.velocity = (
            p.w * self.velocity
            + p.c1 * r1 * (self.pbest - state.positions)
            + p.c2 * r2 * (state.best_pos - state.positions)
        )
        return _reinit_out_of_bounds(state.positions + self.velocity, rng)


class ScsoStep:
    """Sand-cat sensitivity-range update with the shared rg schedule."""

    def __call__(self, state: PopulationState, rng: np.random.Generator) -> np.ndarray:
        n, dim = state.positions.shape
        rg = state.rg
        big_r = 2.0 * rg * rng.random((n, 1)) - rg
        r = rg * rng.random((n, 1))
        theta = 2.0 * np.pi * rng.random((n, 1))
        attack = (
            state.best_pos
            - r * np.abs(rng.random((n, dim)) * state.best_pos - state.positions) * np.cos(theta)
        )
        roam = r * (state.best_pos - rng.random((n, dim)) * state.positions)
        return _reinit_out_of_bounds(np.where(np.abs(big_r) <= 1.0, attack, roam), rng)


class SoaStep:
    """Skill acquisition from a better-performing expert, then bounded
    individual practice shrinking with the iteration count; both phases
    accept greedily."""

    def __init__(self, problem: ProblemSpec):
        self.problem = problem

    def _settle(self, candidate: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if ((candidate < 0.0) | (candidate > 1.0)).any():
            return rng.random(candidate.shape)
        return candidate

    def __call__(self, state: PopulationState, rng: np.random.Generator) -> np.ndarray:
        n, dim = state.positions.shape
        positions = state.positions.copy()
        fitness = state.fitness.copy()
        t = state.iter + 1
        for i in range(n):
            better = np.nonzero(fitness < fitness[i])[0]
            expert = positions[rng.choice(better)] if len(better) else state.best_pos
            scale = float(rng.integers(1, 3))
            candidate = self._settle(
                positions[i] + rng.random(dim) * (expert - scale * positions[i]), rng
            )
            value = self.problem.vector_fitness(candidate)
            if value < fitness[i]:
                positions[i] = candidate
                fitness[i] = value
            candidate = self._settle(positions[i] + (1.0 - 2.0 * rng.random(dim)) / t, rng)
            value = self.problem.vector_fitness(candidate)
            if value < fitness[i]:
                positions[i] = candidate
                fitness[i] = value
        return positions


class WoStep:
    """Migration toward random peers under high danger, otherwise foraging
    around the best; r gates how often the herd keeps exploring."""

    def __init__(self, params: WoParams):
        self.params = params

    def __call__(self, state: PopulationState, rng: np.random.Generator) -> np.ndarray:
        n, dim = state.positions.shape
        a = 1.0 - state.iter / state.max_iter
        danger = (2.0 * a * rng.random((n, 1)) - a) * (2.0 * rng.random((n, 1)) - 1.0)
        peers = state.positions[rng.permutation(n)]
        migrate = state.positions + rng.random((n, dim)) * (peers - state.positions) + danger
        explore = rng.random((n, 1)) < self.params.r
        forage = state.best_pos + a * (2.0 * rng.random((n, dim)) - 1.0) * np.abs(
            state.best_pos - state.positions
        )
        moved = np.where(np.abs(danger) >= a / 2.0, migrate, np.where(explore, migrate, forage))
        return _reinit_out_of_bounds(moved, rng)


def run_baseline(
    alg: str,
    problem: ProblemSpec,
    agents: int | None = None,
    iters: int | None = None,
    stream: SeedStream | None = None,
    params: BaselineParams | None = None,
) -> EvaluationResult:
    """Run one named baseline through the shared population loop."""
    if alg not in ALGORITHMS:
        raise ValueError(f"unknown baseline {alg!r}; expected one of {ALGORITHMS}")
    if stream is None:
        stream = SeedStream(0)
    params = params or BaselineParams()
    agents = agents or problem.search_agents
    iters = iters or problem.max_iters
    step = {
        "ga": lambda: GaStep(params.ga),
        "pso": lambda: PsoStep(params.pso),
        "scso": lambda: ScsoStep(),
        "soa": lambda: SoaStep(problem),
        "wo": lambda: WoStep(params.wo),
    }[alg]()
    return population_loop(problem, step, agents, iters, stream)
