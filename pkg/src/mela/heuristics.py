"""Bundled heuristics: the shipped regression fixtures and seed codes.

The numbered fixture sources are executable assets fed through the sandbox
by ``mela eval-listing``; the native functions below transcribe the same
math for in-process use (stub update callbacks in tests and worker-less
environments). Seed codes are the minimal valid starting points handed to
the first generation prompt.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

LISTING_PROBLEMS = {1: "tsp", 2: "bpp", 3: "acs", 4: "wsn"}
LISTING_ENTRY = "heuristics_v2"
SEED_ENTRY = "heuristics_v1"


def listing_source(number: int) -> str:
    if number not in LISTING_PROBLEMS:
        raise ValueError(f"listing number must be 1..4, got {number}")
    ref = resources.files("mela.assets.heuristics") / f"listing_{number}.py"
    return ref.read_text(encoding="utf-8")


def seed_source(problem_id: str) -> str:
    ref = resources.files("mela.assets.seeds") / f"{problem_id}.py"
    return ref.read_text(encoding="utf-8")


def tsp_reference_matrix(distance_matrix: np.ndarray) -> np.ndarray:
    """Neighborhood-normalized reciprocal-distance scores (fixture 1)."""
    eps = 1e-8
    neigh_mean = np.mean(np.sort(distance_matrix, axis=1)[:, 1:5], axis=1)
    norm_term = (neigh_mean[:, None] + neigh_mean) / np.maximum(distance_matrix, eps) ** 2
    return np.reciprocal(distance_matrix + eps) * norm_term


def bpp_reference_weights(node_attr: np.ndarray, node_constraint: float) -> np.ndarray:
    """Pairwise fill-gap weights (fixture 2)."""
    attr_sum = node_attr[:, None] + node_attr[None, :]
    constraint_diff = np.maximum(1e-6, abs(node_constraint - attr_sum))
    return 1 / (1 + constraint_diff * node_attr.mean())


def acs_reference_update(
    Positions: np.ndarray, Best_pos: np.ndarray, Best_score: float, rg: float
) -> np.ndarray:
    """Levy-guided learning-probability update (fixture 3)."""
    SearchAgents_no, dim = Positions.shape
    lb_array = np.zeros((SearchAgents_no, dim))
    ub_array = np.ones((SearchAgents_no, dim))
    rand_adjust = lb_array + (ub_array - lb_array) * np.random.rand(*Positions.shape)
    Positions = np.where(
        (Positions < lb_array) | (Positions > ub_array), rand_adjust, Positions
    )
    beta = 1.5
    sigma = (
        math.gamma(1 + beta)
        * np.sin(np.pi * beta / 2)
        / (math.gamma((1 + beta) / 2) * beta * (2 ** ((beta - 1) / 2)))
    ) ** (1 / beta)
    levy_step = (
        0.01
        * np.random.randn(SearchAgents_no, 1)
        * sigma
        / (np.abs(np.random.randn(SearchAgents_no, 1)) ** beta)
    )
    learn_prob = 0.5 + 0.4 * (
        Best_score - np.min(np.linalg.norm(Positions - Best_pos, axis=1))
    ) / Best_score
    mask = np.random.rand(SearchAgents_no, dim) < learn_prob.reshape(-1, 1)
    return np.where(
        mask,
        Best_pos + levy_step * (Positions - Best_pos.mean(axis=0)),
        Positions * (1 + 0.5 * (np.random.rand(*Positions.shape) - 0.5)),
    )


def wsn_reference_update(
    Positions: np.ndarray, Best_pos: np.ndarray, Best_score: float, rg: float
) -> np.ndarray:
    """Levy-flight hybrid update with fitness-scaled weights (fixture 4)."""
    SearchAgents_no, dim = Positions.shape
    lb_array = np.zeros((SearchAgents_no, dim))
    ub_array = np.ones((SearchAgents_no, dim))
    rand_adjust = lb_array + (ub_array - lb_array) * np.random.rand(*Positions.shape)
    Positions = np.where(
        (Positions < lb_array) | (Positions > ub_array), rand_adjust, Positions
    )
    beta = 1.5
    sigma = (
        math.gamma(1 + beta)
        * np.sin(np.pi * beta / 2)
        / (math.gamma((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2))
    ) ** (1 / beta)
    u = np.random.randn(*Positions.shape) * sigma
    v = np.random.randn(*Positions.shape)
    step = u / abs(v) ** (1 / beta)
    w = 0.9 - 0.5 * (Best_score / 1000)
    r = np.random.rand(SearchAgents_no, 1)
    mask = r < 0.5
    return np.where(
        mask,
        Best_pos + w * step * Positions,
        w * Positions + (Best_pos - Positions) * np.random.rand(*Positions.shape),
    )


NATIVE_UPDATES = {3: acs_reference_update, 4: wsn_reference_update}
NATIVE_MATRICES = {1: tsp_reference_matrix, 2: bpp_reference_weights}
