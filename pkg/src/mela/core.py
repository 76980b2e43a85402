"""Shared value types, configuration validation, and seed-stream management."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import yaml

PROBLEM_IDS = ("tsp", "bpp", "acs", "wsn")


class ConfigError(ValueError):
    """Raised when a run configuration violates its invariants.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(violations))


class Status(str, Enum):
    PENDING = "pending"
    VALID = "valid"
    REPAIRED = "repaired"
    FAILED = "failed"


@dataclass(frozen=True)
class ErrorRecord:
    """One failure observed while loading or calling a heuristic."""

    phase: str  # "load" or "call"
    message: str  # exception class + message, e.g. "ValueError: ..."
    traceback: str = ""
    repair_attempt: int = 0

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ErrorRecord":
        return cls(
            phase=d["phase"],
            message=d["message"],
            traceback=d.get("traceback", ""),
            repair_attempt=int(d.get("repair_attempt", 0)),
        )


class HeuristicError(Exception):
    """A heuristic failed to load or run; carries the structured record."""

    def __init__(self, record: ErrorRecord):
        self.record = record
        super().__init__(record.message)


@dataclass(frozen=True)
class HeuristicIndividual:
    """One generated candidate: source code plus its extracted thought process.

    For parse failures ``source`` holds the raw model reply and ``entry_name``
    is empty; the single-definition invariant applies to valid/repaired
    individuals only.
    """

    id: str
    source: str
    entry_name: str
    thought: str
    generation: int
    fitness: float | None = None
    status: Status = Status.PENDING
    errors: tuple[ErrorRecord, ...] = ()
    parent_prompt_id: str | None = None

    def replace(self, **changes: Any) -> "HeuristicIndividual":
        return dataclasses.replace(self, **changes)

    def check(self) -> list[str]:
        """Return invariant violations for a settled (non-pending) individual."""
        problems = []
        if self.status in (Status.VALID, Status.REPAIRED) and self.fitness is None:
            problems.append(f"{self.id}: status {self.status.value} without fitness")
        if self.status is Status.FAILED and self.fitness is not None:
            problems.append(f"{self.id}: failed individual carries fitness")
        if self.status is Status.REPAIRED and not self.errors:
            problems.append(f"{self.id}: repaired individual has no error history")
        if self.status in (Status.VALID, Status.REPAIRED):
            n_defs = self.source.count(f"def {self.entry_name}(")
            if n_defs != 1:
                problems.append(
                    f"{self.id}: expected exactly one definition of "
                    f"{self.entry_name!r}, found {n_defs}"
                )
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source": self.source,
            "entry_name": self.entry_name,
            "thought": self.thought,
            "generation": self.generation,
            "fitness": self.fitness,
            "status": self.status.value,
            "errors": [e.to_dict() for e in self.errors],
            "parent_prompt_id": self.parent_prompt_id,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "HeuristicIndividual":
        return cls(
            id=d["id"],
            source=d["source"],
            entry_name=d["entry_name"],
            thought=d["thought"],
            generation=int(d["generation"]),
            fitness=d.get("fitness"),
            status=Status(d["status"]),
            errors=tuple(ErrorRecord.from_dict(e) for e in d.get("errors", [])),
            parent_prompt_id=d.get("parent_prompt_id"),
        )


@dataclass(frozen=True)
class BackendConfig:
    temperature: float = 1.0
    model: str = "DeepSeek-V3-0324"

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BackendConfig":
        return cls(temperature=float(d.get("temperature", 1.0)), model=d.get("model", cls.model))


@dataclass(frozen=True)
class AblationFlags:
    problem_analysis: bool = True
    metacognition: bool = True
    error_repair: bool = True

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AblationFlags":
        return cls(
            problem_analysis=bool(d.get("problem_analysis", True)),
            metacognition=bool(d.get("metacognition", True)),
            error_repair=bool(d.get("error_repair", True)),
        )


# Per-problem population defaults: initial pop, evolutionary pop, total budget.
_PROBLEM_DEFAULTS = {
    "tsp": (30, 10, 100),
    "bpp": (30, 10, 50),
    "acs": (20, 10, 50),
    "wsn": (20, 10, 50),
}


@dataclass(frozen=True)
class RunConfig:
    problem: str
    init_pop: int = 0  # 0 means "use the problem default"
    evo_pop: int = 0
    total_budget: int = 0
    repair_limit: int = 3
    llm: BackendConfig = field(default_factory=BackendConfig)
    seed: int = 0
    ablation: AblationFlags = field(default_factory=AblationFlags)
    runs: int = 3

    def to_dict(self) -> dict[str, Any]:
        return {
            "problem": self.problem,
            "init_pop": self.init_pop,
            "evo_pop": self.evo_pop,
            "total_budget": self.total_budget,
            "repair_limit": self.repair_limit,
            "llm": self.llm.to_dict(),
            "seed": self.seed,
            "ablation": self.ablation.to_dict(),
            "runs": self.runs,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        return cls(
            problem=d["problem"],
            init_pop=int(d.get("init_pop", 0)),
            evo_pop=int(d.get("evo_pop", 0)),
            total_budget=int(d.get("total_budget", 0)),
            repair_limit=int(d.get("repair_limit", 3)),
            llm=BackendConfig.from_dict(d.get("llm", {})),
            seed=int(d.get("seed", 0)),
            ablation=AblationFlags.from_dict(d.get("ablation", {})),
            runs=int(d.get("runs", 3)),
        )


@dataclass(frozen=True)
class ValidatedConfig:
    """A RunConfig with defaults filled in and the generation limit computed."""

    problem: str
    init_pop: int
    evo_pop: int
    total_budget: int
    generation_limit: int
    repair_limit: int
    llm: BackendConfig
    seed: int
    ablation: AblationFlags
    runs: int

    def to_run_config(self) -> RunConfig:
        return RunConfig(
            problem=self.problem,
            init_pop=self.init_pop,
            evo_pop=self.evo_pop,
            total_budget=self.total_budget,
            repair_limit=self.repair_limit,
            llm=self.llm,
            seed=self.seed,
            ablation=self.ablation,
            runs=self.runs,
        )

    def to_dict(self) -> dict[str, Any]:
        d = self.to_run_config().to_dict()
        d["generation_limit"] = self.generation_limit
        return d


def validate_config(cfg: RunConfig) -> ValidatedConfig:
    """Normalize a run configuration, filling per-problem defaults.

    Raises ConfigError with the full violation list when the budget is not
    reachable from the population sizes or the problem id is unknown.
    """
    violations = []
    if cfg.problem not in PROBLEM_IDS:
        raise ConfigError([f"unknown problem id {cfg.problem!r}"])

    d_init, d_evo, d_budget = _PROBLEM_DEFAULTS[cfg.problem]
    init_pop = cfg.init_pop or d_init
    evo_pop = cfg.evo_pop or d_evo
    total_budget = cfg.total_budget or d_budget

    if init_pop <= 0:
        violations.append("init_pop must be positive")
    if evo_pop <= 0:
        violations.append("evo_pop must be positive")
    if cfg.repair_limit < 0:
        violations.append("repair_limit must be >= 0")
    if cfg.runs <= 0:
        violations.append("runs must be positive")
    if total_budget < init_pop:
        violations.append(
            f"total_budget {total_budget} smaller than init_pop {init_pop}"
        )
    elif evo_pop > 0 and (total_budget - init_pop) % evo_pop != 0:
        violations.append(
            f"budget not reachable: ({total_budget} - {init_pop}) "
            f"not divisible by {evo_pop}"
        )
    if violations:
        raise ConfigError(violations)

    return ValidatedConfig(
        problem=cfg.problem,
        init_pop=init_pop,
        evo_pop=evo_pop,
        total_budget=total_budget,
        generation_limit=(total_budget - init_pop) // evo_pop,
        repair_limit=cfg.repair_limit,
        llm=cfg.llm,
        seed=cfg.seed,
        ablation=cfg.ablation,
        runs=cfg.runs,
    )


def load_config_file(path: str) -> RunConfig:
    """Load a RunConfig from a YAML (or JSON) key/value document."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError([f"config file {path} does not hold a key/value tree"])
    return RunConfig.from_dict(data)


@dataclass(frozen=True)
class SeedStream:
    """Deterministic hierarchical random stream.

    Child streams derived with distinct labels are statistically independent;
    the same (root_seed, path) always reproduces the identical sequence.
    """

    root_seed: int
    path: tuple[int, ...] = ()

    def child(self, label: int) -> "SeedStream":
        return SeedStream(self.root_seed, self.path + (int(label),))

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.root_seed, spawn_key=self.path)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.sequence())

    def integer_seed(self, bits: int = 32) -> int:
        """A fixed-width integer seed for APIs that take a single seed word."""
        word = int(self.sequence().generate_state(1, np.uint64)[0])
        return word & ((1 << bits) - 1)

    def label(self) -> str:
        return f"{self.root_seed}:" + ".".join(str(p) for p in self.path)

    def to_dict(self) -> dict[str, Any]:
        return {"root_seed": self.root_seed, "path": list(self.path)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SeedStream":
        return cls(root_seed=int(d["root_seed"]), path=tuple(int(p) for p in d["path"]))


def derive_stream(stream: SeedStream, label: int) -> SeedStream:
    return stream.child(label)
