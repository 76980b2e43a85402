"""Fitness value decomposed into named penalty/objective contributions."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FitnessBreakdown:
    total: float
    components: dict[str, float]

    @classmethod
    def from_components(cls, **components: float) -> "FitnessBreakdown":
        return cls(total=float(sum(components.values())), components=dict(components))
