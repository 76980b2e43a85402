"""Curriculum-sequencing cohort: synthetic generator and selection objective.

The cohort is synthetic with the production sizes (120 materials, 20
concepts, 30 learners); the objective assembles the published penalty
constants over a 120-bit material selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import SeedStream
from .breakdown import FitnessBreakdown

N_MATERIALS = 120
N_CONCEPTS = 20
N_LEARNERS = 30

PRIORITIES = ("high", "medium", "challenging", "normal")
# Selection limits apply to the first three classes only.
PRIORITY_LIMITS = {"high": 3, "medium": 6, "challenging": 1}

EPS_EXCESS = 1.0  # per concept learned beyond the required set
EPS_MISSING = 1e4  # per required concept the selection fails to cover
EPS_ATTENTION = 1000.0  # per minute beyond a learner's attention span
W_EXCESS = 0.25
W_MISSING = 1.0
W_ATTENTION = 0.25


@dataclass(frozen=True)
class Material:
    concepts: frozenset[int]  # subset of 1..20, never empty, never all 20
    duration: int  # minutes
    priority: str


@dataclass(frozen=True)
class Learner:
    required: frozenset[int]
    attention_span: int  # minutes


@dataclass(frozen=True)
class AcsCohort:
    materials: tuple[Material, ...]
    learners: tuple[Learner, ...]
    priority_limits: dict[str, int] = field(
        default_factory=lambda: dict(PRIORITY_LIMITS)
    )

    def check(self) -> list[str]:
        problems = []
        if len(self.materials) != N_MATERIALS:
            problems.append(f"expected {N_MATERIALS} materials, got {len(self.materials)}")
        if len(self.learners) != N_LEARNERS:
            problems.append(f"expected {N_LEARNERS} learners, got {len(self.learners)}")
        for i, m in enumerate(self.materials):
            if not 1 <= len(m.concepts) <= N_CONCEPTS - 1:
                problems.append(f"material {i} covers {len(m.concepts)} concepts")
            if not m.concepts <= set(range(1, N_CONCEPTS + 1)):
                problems.append(f"material {i} names unknown concepts")
        return problems


# Generator defaults, chosen so that covering a learner's requirements while
# staying inside attention spans is tight but feasible.
_CONCEPTS_PER_MATERIAL = (1, 5)
_DURATION_RANGE = (5, 25)
_REQUIRED_PER_LEARNER = (3, 8)
_ATTENTION_RANGE = (90, 150)
_PRIORITY_WEIGHTS = (0.2, 0.3, 0.1, 0.4)  # high, medium, challenging, normal


def gen_acs_cohort(stream: SeedStream) -> AcsCohort:
    rng = stream.rng()
    materials = []
    for _ in range(N_MATERIALS):
        k = int(rng.integers(_CONCEPTS_PER_MATERIAL[0], _CONCEPTS_PER_MATERIAL[1] + 1))
        concepts = frozenset(int(c) + 1 for c in rng.choice(N_CONCEPTS, size=k, replace=False))
        duration = int(rng.integers(_DURATION_RANGE[0], _DURATION_RANGE[1] + 1))
        priority = PRIORITIES[int(rng.choice(len(PRIORITIES), p=_PRIORITY_WEIGHTS))]
        materials.append(Material(concepts, duration, priority))
    learners = []
    for _ in range(N_LEARNERS):
        k = int(rng.integers(_REQUIRED_PER_LEARNER[0], _REQUIRED_PER_LEARNER[1] + 1))
        required = frozenset(int(c) + 1 for c in rng.choice(N_CONCEPTS, size=k, replace=False))
        span = int(rng.integers(_ATTENTION_RANGE[0], _ATTENTION_RANGE[1] + 1))
        learners.append(Learner(required, span))
    return AcsCohort(tuple(materials), tuple(learners))


def acs_fitness(cohort: AcsCohort, selection: np.ndarray) -> FitnessBreakdown:
    """Score a 0/1 material selection; lower is better, 0 is a perfect plan.

    Per learner: excess concepts beyond the required set, required concepts
    left uncovered, and minutes of selected material beyond the attention
    span, each with its own penalty factor and weight.  Cohort-wide: one
    penalty unit per selected material beyond each priority-class limit.
    """
    selection = np.asarray(selection)
    if selection.shape != (len(cohort.materials),):
        raise ValueError(
            f"selection length {selection.shape} does not match "
            f"{len(cohort.materials)} materials"
        )
    chosen = [m for m, bit in zip(cohort.materials, selection) if bit]
    covered: frozenset[int] = frozenset().union(*(m.concepts for m in chosen)) if chosen else frozenset()
    total_duration = sum(m.duration for m in chosen)

    excess = 0.0
    missing = 0.0
    attention = 0.0
    for learner in cohort.learners:
        excess += W_EXCESS * EPS_EXCESS * len(covered - learner.required)
        missing += W_MISSING * EPS_MISSING * len(learner.required - covered)
        attention += W_ATTENTION * EPS_ATTENTION * max(0, total_duration - learner.attention_span)

    priority = 0.0
    for cls, limit in cohort.priority_limits.items():
        count = sum(1 for m in chosen if m.priority == cls)
        priority += EPS_EXCESS * max(0, count - limit)

    return FitnessBreakdown.from_components(
        excess_concepts_penalty=excess,
        missing_concepts_penalty=missing,
        attention_penalty=attention,
        priority_penalty=priority,
    )
