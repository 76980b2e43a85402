from __future__ import annotations

import numpy as np
import pytest

from mela.core import SeedStream
from mela.problems import make_wsn_config, wsn_fitness, wsn_path_loss
from mela.problems.wsn import WsnConfig, cn_graph_connected

from oracles import oracle_wsn_connected, oracle_wsn_fitness


def small_config(n_sn=1, n_cn=2, sn=None, **overrides) -> WsnConfig:
    positions = np.array(sn if sn is not None else [[10.0, 11.0]])
    return WsnConfig(n_sn=n_sn, n_cn=n_cn, sn_positions=positions, **overrides)


class TestPathLoss:
    def test_spot_values(self):
        cfg = small_config()
        assert wsn_path_loss(1.0, (False, False), cfg) == pytest.approx(55.0, abs=1e-6)
        assert wsn_path_loss(10.0, (False, False), cfg) == pytest.approx(80.0, abs=1e-6)
        assert wsn_path_loss(20.0, (False, False), cfg) == pytest.approx(87.5257, abs=1e-3)

    def test_quadrant_surcharges(self):
        cfg = small_config(beta_x=3.0, beta_y=7.0)
        assert wsn_path_loss(1.0, (True, False), cfg) == pytest.approx(58.0)
        assert wsn_path_loss(1.0, (False, True), cfg) == pytest.approx(62.0)
        assert wsn_path_loss(1.0, (True, True), cfg) == pytest.approx(65.0)

    def test_clamped_at_zero_distance(self):
        cfg = small_config()
        assert wsn_path_loss(0.0, (False, False), cfg) == wsn_path_loss(1e-3, (False, False), cfg)

    def test_strictly_increasing(self):
        cfg = small_config()
        distances = np.linspace(1e-3, 80, 500)
        losses = [wsn_path_loss(d, (False, False), cfg) for d in distances]
        assert all(b > a for a, b in zip(losses, losses[1:]))


class TestWsnFitness:
    def test_hand_example_two_mw(self):
        cfg = small_config()
        fb = wsn_fitness(cfg, np.array([[10.0, 10.0, 0.0], [20.0, 10.0, 0.0]]))
        assert fb.total == pytest.approx(2.0)
        assert fb.components["coverage_penalty"] == 0.0
        assert fb.components["connectivity_penalty"] == 0.0
        assert fb.components["power_std_penalty"] == 0.0

    def test_max_power_term(self):
        cfg = make_wsn_config(SeedStream(1))
        rows = np.zeros((50, 3))
        rows[:, 0] = np.linspace(0, 50, 50)
        rows[:, 1] = 25.0
        rows[:, 2] = 30.0
        fb = wsn_fitness(cfg, rows)
        assert fb.components["power_mw"] == pytest.approx(50 * 1000.0)
        assert fb.components["power_std_penalty"] == 0.0

    def test_disconnected_pays_flat_penalty(self):
        cfg = small_config()
        fb = wsn_fitness(cfg, np.array([[0.0, 0.0, 0.0], [40.0, 40.0, 0.0]]))
        assert fb.components["connectivity_penalty"] == 1000.0

    def test_uncovered_sensor_penalty(self):
        # power 0 dBm covers up to ~15.8 units; an SN 40 units away is dark
        cfg = small_config(n_sn=1, n_cn=2, sn=[[49.0, 49.0]])
        fb = wsn_fitness(cfg, np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]))
        assert fb.components["coverage_penalty"] == 10.0

    def test_capacity_limits_assignments(self):
        # 16 SNs on top of one CN with capacity 15: exactly one uncovered
        # when the second CN is too far to help.
        sn = [[5.0, 5.0]] * 16
        cfg = small_config(n_sn=16, n_cn=2, sn=sn)
        fb = wsn_fitness(cfg, np.array([[5.0, 5.0, 0.0], [5.0, 20.0, 0.0]]))
        # the far CN still reaches (d=15 -> loss ~84.4, rx ~ -84.4 >= -85)
        assert fb.components["coverage_penalty"] == 0.0
        cfg2 = small_config(n_sn=16, n_cn=2, sn=sn, min_signal=-80.0)
        fb2 = wsn_fitness(cfg2, np.array([[5.0, 5.0, 0.0], [5.0, 20.0, 0.0]]))
        assert fb2.components["coverage_penalty"] == 10.0

    def test_power_std_penalty(self):
        cfg = small_config(n_sn=1, n_cn=2, sn=[[10.0, 10.0]])
        # powers 0 and 10: population std = 5 -> 100 * (5 - 1) = 400
        fb = wsn_fitness(cfg, np.array([[10.0, 10.0, 0.0], [12.0, 10.0, 10.0]]))
        assert fb.components["power_std_penalty"] == pytest.approx(400.0)

    def test_total_is_component_sum(self):
        cfg = make_wsn_config(SeedStream(2))
        rng = SeedStream(3).rng()
        rows = np.column_stack(
            [rng.random(50) * 50, rng.random(50) * 50, rng.random(50) * 30]
        )
        fb = wsn_fitness(cfg, rows)
        assert fb.total == pytest.approx(sum(fb.components.values()), rel=0, abs=0)

    def test_wrong_shape_rejected(self):
        cfg = make_wsn_config(SeedStream(2))
        with pytest.raises(ValueError, match="CN rows"):
            wsn_fitness(cfg, np.zeros((49, 3)))

    def test_matches_oracle(self):
        cfg = make_wsn_config(SeedStream(5))
        rng = SeedStream(6).rng()
        for _ in range(25):
            rows = np.column_stack(
                [rng.random(50) * 50, rng.random(50) * 50, rng.random(50) * 30]
            )
            got = wsn_fitness(cfg, rows).total
            want = oracle_wsn_fitness(cfg, rows)
            assert got == pytest.approx(want, rel=1e-9)

    def test_quadrant_loss_affects_fitness(self):
        base = small_config(sn=[[20.0, 10.0]])
        lossy = small_config(sn=[[20.0, 10.0]], beta_x=40.0)
        rows = np.array([[30.0, 10.0, 0.0], [31.0, 10.0, 0.0]])  # links cross x=25
        assert wsn_fitness(lossy, rows).components["coverage_penalty"] > 0
        assert wsn_fitness(base, rows).components["coverage_penalty"] == 0


class TestConnectivity:
    def test_single_node_connected(self):
        cfg = small_config()
        assert cn_graph_connected(cfg, np.array([[1.0, 1.0]]))

    def test_matches_bfs_oracle_on_random_layouts(self):
        cfg = small_config(comm_range=20.0)
        rng = SeedStream(7).rng()
        agree = 0
        for _ in range(1000):
            n = int(rng.integers(2, 12))
            pts = rng.random((n, 2)) * 60
            got = cn_graph_connected(cfg, pts)
            want = oracle_wsn_connected([tuple(p) for p in pts], 20.0)
            assert got == want
            agree += got == want
        assert agree == 1000


class TestConfigGenerator:
    def test_sn_positions_frozen_per_stream(self):
        a = make_wsn_config(SeedStream(9))
        b = make_wsn_config(SeedStream(9))
        assert (a.sn_positions == b.sn_positions).all()
        assert a.sn_positions.shape == (200, 2)
        assert a.check() == []

    def test_defaults_match_published_constants(self):
        cfg = make_wsn_config(SeedStream(9))
        assert (cfg.n_sn, cfg.n_cn, cfg.capacity) == (200, 50, 15)
        assert (cfg.base_loss, cfg.exponent, cfg.min_signal) == (55.0, 2.5, -85.0)
        assert (cfg.coverage_penalty, cfg.connectivity_penalty) == (10.0, 1000.0)
        assert (cfg.power_std_penalty, cfg.power_std_limit) == (100.0, 1.0)
        assert cfg.coord_bounds == (0.0, 50.0)
        assert cfg.power_bounds == (0.0, 30.0)
