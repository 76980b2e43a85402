"""The four native optimization problems behind one evaluation-facing surface.

A ProblemSpec bundles everything the search harness needs: the evaluation
instances or model parameters, the inner-loop sizes, the position decode
rule, and the canonical textual description fed to the analysis prompt.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..core import SeedStream
from . import acs, bpp, tsp, wsn
from .acs import AcsCohort, acs_fitness, gen_acs_cohort
from .bpp import BppInstance, bpp_count_bins, gen_bpp_instances
from .breakdown import FitnessBreakdown
from .tsp import gen_tsp_instances, tsp_tour_length
from .wsn import WsnConfig, make_wsn_config, wsn_fitness, wsn_path_loss

__all__ = [
    "AcsCohort",
    "BppInstance",
    "FitnessBreakdown",
    "ProblemSpec",
    "WsnConfig",
    "acs_fitness",
    "bpp_count_bins",
    "build_problem",
    "decode_position",
    "gen_acs_cohort",
    "gen_bpp_instances",
    "gen_tsp_instances",
    "make_wsn_config",
    "reference_description",
    "tsp_tour_length",
    "wsn_fitness",
    "wsn_path_loss",
]

# Child-stream labels for instance generation, one per concern.
_LABEL_INSTANCES = 1


@dataclass(frozen=True)
class ProblemSpec:
    """Common evaluation surface over the four problem families.

    ``kind`` is "matrix" for problems whose heuristics emit a score matrix
    consumed by a constructive solver (tsp, bpp) and "position" for problems
    searched by a population of position vectors (acs, wsn).
    """

    problem_id: str
    kind: str
    dim: int
    search_agents: int
    max_iters: int
    tsp_instances: tuple[np.ndarray, ...] = ()
    tsp_matrices: tuple[np.ndarray, ...] = ()
    bpp_instances: tuple[BppInstance, ...] = ()
    cohort: AcsCohort | None = None
    wsn_config: WsnConfig | None = None

    @property
    def n_instances(self) -> int:
        if self.problem_id == "tsp":
            return len(self.tsp_instances)
        if self.problem_id == "bpp":
            return len(self.bpp_instances)
        return 1

    def heuristic_args(self, index: int) -> dict[str, object]:
        """Named call arguments for a matrix heuristic on one instance."""
        if self.problem_id == "tsp":
            return {"distance_matrix": self.tsp_matrices[index]}
        if self.problem_id == "bpp":
            inst = self.bpp_instances[index]
            return {
                "node_attr": inst.item_sizes.astype(np.float64),
                "node_constraint": float(inst.capacity),
            }
        raise ValueError(f"{self.problem_id} heuristics are not matrix producers")

    def decode(self, vector: np.ndarray) -> object:
        return decode_position(self, vector)

    def vector_breakdown(self, vector: np.ndarray) -> FitnessBreakdown:
        if self.problem_id == "acs":
            assert self.cohort is not None
            return acs_fitness(self.cohort, self.decode(vector))
        if self.problem_id == "wsn":
            assert self.wsn_config is not None
            return wsn_fitness(self.wsn_config, self.decode(vector))
        raise ValueError(f"{self.problem_id} has no position fitness breakdown")

    def vector_fitness(self, vector: np.ndarray) -> float:
        """Objective of one position vector; the surface baselines search.

        For the matrix problems this is the random-key relaxation on the
        first instance: tsp sorts the keys into a tour, bpp packs items
        first-fit in key order.
        """
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {vector.shape}")
        if self.problem_id in ("acs", "wsn"):
            return self.vector_breakdown(vector).total
        if self.problem_id == "tsp":
            tour = np.argsort(vector, kind="stable")
            return tsp_tour_length(self.tsp_instances[0], tour)
        inst = self.bpp_instances[0]
        order = np.argsort(vector, kind="stable")
        assignment = _first_fit(inst, order)
        return float(bpp_count_bins(inst, assignment))


def _first_fit(inst: BppInstance, order: np.ndarray) -> dict[int, int]:
    loads: list[int] = []
    assignment: dict[int, int] = {}
    for item in order:
        size = int(inst.item_sizes[item])
        for b, load in enumerate(loads):
            if load + size <= inst.capacity:
                loads[b] = load + size
                assignment[int(item)] = b
                break
        else:
            loads.append(size)
            assignment[int(item)] = len(loads) - 1
    return assignment


def decode_position(problem: ProblemSpec, vector: np.ndarray) -> object:
    """Map a [0,1]^dim position to a problem solution.

    acs: bit i set iff v_i > 0.5 (strictly, so 0.5 decodes to 0).
    wsn: consecutive triples scaled to (x, y, power) bounds.
    """
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (problem.dim,):
        raise ValueError(f"expected vector of length {problem.dim}, got {vector.shape}")
    if problem.problem_id == "acs":
        return (vector > 0.5).astype(np.int64)
    if problem.problem_id == "wsn":
        cfg = problem.wsn_config
        assert cfg is not None
        triples = vector.reshape(cfg.n_cn, 3).copy()
        lo_c, hi_c = cfg.coord_bounds
        lo_p, hi_p = cfg.power_bounds
        triples[:, 0] = lo_c + triples[:, 0] * (hi_c - lo_c)
        triples[:, 1] = lo_c + triples[:, 1] * (hi_c - lo_c)
        triples[:, 2] = lo_p + triples[:, 2] * (hi_p - lo_p)
        return triples
    raise ValueError(f"{problem.problem_id} has no position decode rule")


def build_problem(
    problem_id: str,
    stream: SeedStream,
    *,
    n_instances: int | None = None,
    n_cities: int = 50,
    n_items: int = 500,
    capacity: int = 150,
    size_range: tuple[int, int] = (20, 100),
    search_agents: int | None = None,
    max_iters: int | None = None,
) -> ProblemSpec:
    """Materialize a ProblemSpec with its evaluation data for one run seed."""
    gen_stream = stream.child(_LABEL_INSTANCES)
    if problem_id == "tsp":
        instances = gen_tsp_instances(n_instances or 64, n_cities, gen_stream)
        return ProblemSpec(
            problem_id="tsp",
            kind="matrix",
            dim=n_cities,
            search_agents=search_agents or 50,
            max_iters=max_iters or 100,
            tsp_instances=tuple(instances),
            tsp_matrices=tuple(tsp.distance_matrix(c) for c in instances),
        )
    if problem_id == "bpp":
        instances = gen_bpp_instances(
            n_instances or 5, n_items, capacity, size_range[0], size_range[1], gen_stream
        )
        return ProblemSpec(
            problem_id="bpp",
            kind="matrix",
            dim=n_items,
            search_agents=search_agents or 50,
            max_iters=max_iters or 100,
            bpp_instances=tuple(instances),
        )
    if problem_id == "acs":
        cohort = gen_acs_cohort(gen_stream)
        return ProblemSpec(
            problem_id="acs",
            kind="position",
            dim=acs.N_MATERIALS,
            search_agents=search_agents or 20,
            max_iters=max_iters or 50,
            cohort=cohort,
        )
    if problem_id == "wsn":
        cfg = make_wsn_config(gen_stream)
        return ProblemSpec(
            problem_id="wsn",
            kind="position",
            dim=cfg.n_cn * 3,
            search_agents=search_agents or 50,
            max_iters=max_iters or 100,
            wsn_config=cfg,
        )
    raise ValueError(f"unknown problem id {problem_id!r}")


def reference_description(problem_id: str) -> str:
    """The shipped canonical problem description (evaluator source plus
    parameter table) substituted into the analysis prompt; byte-stable."""
    if problem_id not in ("tsp", "bpp", "acs", "wsn"):
        raise ValueError(f"unknown problem id {problem_id!r}")
    ref = resources.files("mela.assets.descriptions") / f"{problem_id}.txt"
    return ref.read_text(encoding="utf-8")
