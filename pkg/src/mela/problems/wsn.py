"""Sensor-network deployment: log-distance path loss and placement objective.

Fixed sensing nodes (SNs) must be covered by placeable convergence nodes
(CNs) with tunable transmit power; the objective is total radiated power in
milliwatts plus penalties for uncovered SNs, a disconnected CN relay graph,
and non-uniform power levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import SeedStream
from .breakdown import FitnessBreakdown

D_MIN = 1e-3  # distance clamp avoiding log10(0) for coincident nodes


@dataclass(frozen=True)
class WsnConfig:
    n_sn: int = 200
    n_cn: int = 50
    area: float = 50.0  # square side; midlines at area/2 define the quadrants
    sn_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    comm_range: float = 20.0  # CN-CN relay link range, units
    capacity: int = 15  # SNs served per CN
    base_loss: float = 55.0  # dB at 1 unit
    exponent: float = 2.5
    min_signal: float = -85.0  # dBm required at the SN
    beta_x: float = 0.0  # extra dB when the link crosses the vertical midline
    beta_y: float = 0.0  # ... the horizontal midline
    coord_bounds: tuple[float, float] = (0.0, 50.0)
    power_bounds: tuple[float, float] = (0.0, 30.0)  # dBm
    coverage_penalty: float = 10.0  # per uncovered SN
    connectivity_penalty: float = 1000.0  # flat, when the CN graph is disconnected
    power_std_penalty: float = 100.0  # per dB of power std beyond power_std_limit
    power_std_limit: float = 1.0

    def check(self) -> list[str]:
        problems = []
        if self.sn_positions.shape != (self.n_sn, 2):
            problems.append(
                f"sn_positions shape {self.sn_positions.shape} != ({self.n_sn}, 2)"
            )
        return problems


def make_wsn_config(stream: SeedStream, **overrides: object) -> WsnConfig:
    """Build a config with SN positions drawn uniformly over the area.

    Positions come from a dedicated child stream so they are frozen per run
    seed regardless of what else the run draws.
    """
    base = WsnConfig(**overrides)  # type: ignore[arg-type]
    if base.sn_positions.size == 0:
        rng = stream.child(0).rng()
        positions = rng.random((base.n_sn, 2)) * base.area
        base = WsnConfig(**{**overrides, "sn_positions": positions})  # type: ignore[arg-type]
    return base


def wsn_path_loss(d: float, crossings: tuple[bool, bool], cfg: WsnConfig) -> float:
    """Log-distance path loss in dB with midline-crossing surcharges."""
    d = max(float(d), D_MIN)
    loss = cfg.base_loss + 10.0 * cfg.exponent * np.log10(d)
    if crossings[0]:
        loss += cfg.beta_x
    if crossings[1]:
        loss += cfg.beta_y
    return float(loss)


def _midline_crossings(a: np.ndarray, b: np.ndarray, mid: float) -> tuple[np.ndarray, np.ndarray]:
    cross_x = (a[:, None, 0] - mid) * (b[None, :, 0] - mid) < 0
    cross_y = (a[:, None, 1] - mid) * (b[None, :, 1] - mid) < 0
    return cross_x, cross_y


def received_power_matrix(cfg: WsnConfig, cn_xy: np.ndarray, cn_power: np.ndarray) -> np.ndarray:
    """dBm received at each SN (rows) from each CN (columns)."""
    diff = cfg.sn_positions[:, None, :] - cn_xy[None, :, :]
    d = np.maximum(np.sqrt((diff**2).sum(axis=-1)), D_MIN)
    loss = cfg.base_loss + 10.0 * cfg.exponent * np.log10(d)
    cross_x, cross_y = _midline_crossings(cfg.sn_positions, cn_xy, cfg.area / 2.0)
    loss = loss + cfg.beta_x * cross_x + cfg.beta_y * cross_y
    return cn_power[None, :] - loss


def assign_sensors(cfg: WsnConfig, rx: np.ndarray) -> tuple[np.ndarray, int]:
    """Greedy SN->CN assignment by strongest admissible signal.

    SNs are processed in index order; each takes the CN with the strongest
    received signal above the threshold among CNs with remaining capacity.
    Returns (assignment with -1 for uncovered, uncovered count).
    """
    n_sn, n_cn = rx.shape
    remaining = np.full(n_cn, cfg.capacity)
    assignment = np.full(n_sn, -1)
    order = np.argsort(-rx, axis=1, kind="stable")  # ties resolve to lowest CN index
    for sn in range(n_sn):
        for cn in order[sn]:
            if rx[sn, cn] < cfg.min_signal:
                break  # sorted descending: nothing admissible remains
            if remaining[cn] > 0:
                assignment[sn] = cn
                remaining[cn] -= 1
                break
    return assignment, int((assignment < 0).sum())


def cn_graph_connected(cfg: WsnConfig, cn_xy: np.ndarray) -> bool:
    """True when CNs form one component under the relay-range disk graph."""
    n = cn_xy.shape[0]
    if n <= 1:
        return True
    diff = cn_xy[:, None, :] - cn_xy[None, :, :]
    adjacent = np.sqrt((diff**2).sum(axis=-1)) <= cfg.comm_range
    seen = np.zeros(n, dtype=bool)
    frontier = [0]
    seen[0] = True
    while frontier:
        node = frontier.pop()
        for nb in np.nonzero(adjacent[node])[0]:
            if not seen[nb]:
                seen[nb] = True
                frontier.append(int(nb))
    return bool(seen.all())


def wsn_fitness(cfg: WsnConfig, cn_decoded: np.ndarray) -> FitnessBreakdown:
    """Score a CN layout given as an (n_cn, 3) array of (x, y, power_dBm)."""
    cn_decoded = np.asarray(cn_decoded, dtype=np.float64)
    if cn_decoded.shape != (cfg.n_cn, 3):
        raise ValueError(f"expected ({cfg.n_cn}, 3) CN rows, got {cn_decoded.shape}")
    cn_xy = cn_decoded[:, :2]
    cn_power = cn_decoded[:, 2]

    rx = received_power_matrix(cfg, cn_xy, cn_power)
    _, uncovered = assign_sensors(cfg, rx)

    coverage = cfg.coverage_penalty * uncovered
    connectivity = 0.0 if cn_graph_connected(cfg, cn_xy) else cfg.connectivity_penalty
    power_std = float(np.std(cn_power))  # population std over the CN set
    uniformity = cfg.power_std_penalty * max(0.0, power_std - cfg.power_std_limit)
    power_mw = float(np.sum(10.0 ** (cn_power / 10.0)))

    return FitnessBreakdown.from_components(
        coverage_penalty=coverage,
        connectivity_penalty=connectivity,
        power_std_penalty=uniformity,
        power_mw=power_mw,
    )
