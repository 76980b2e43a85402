from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mela.problems import build_problem, decode_position, reference_description


class TestAcsDecode:
    def test_all_zeros_selects_nothing(self, stream):
        problem = build_problem("acs", stream.child(1))
        assert decode_position(problem, np.zeros(120)).sum() == 0

    def test_half_is_strictly_below_threshold(self, stream):
        problem = build_problem("acs", stream.child(1))
        assert decode_position(problem, np.full(120, 0.5)).sum() == 0

    def test_above_half_selects(self, stream):
        problem = build_problem("acs", stream.child(1))
        vector = np.zeros(120)
        vector[[3, 77]] = 0.51
        bits = decode_position(problem, vector)
        assert list(np.nonzero(bits)[0]) == [3, 77]

    def test_wrong_length_rejected(self, stream):
        problem = build_problem("acs", stream.child(1))
        with pytest.raises(ValueError, match="length"):
            decode_position(problem, np.zeros(119))


class TestWsnDecode:
    def test_midpoint_maps_to_center_at_half_power(self, stream):
        problem = build_problem("wsn", stream.child(1))
        rows = decode_position(problem, np.full(150, 0.5))
        assert rows.shape == (50, 3)
        assert (rows[:, 0] == 25.0).all()
        assert (rows[:, 1] == 25.0).all()
        assert (rows[:, 2] == 15.0).all()

    def test_extremes_hit_bounds(self, stream):
        problem = build_problem("wsn", stream.child(1))
        low = decode_position(problem, np.zeros(150))
        high = decode_position(problem, np.ones(150))
        assert (low == 0.0).all()
        assert (high[:, :2] == 50.0).all()
        assert (high[:, 2] == 30.0).all()

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_decoded_values_always_within_bounds(self, seed, ):
        from mela.core import SeedStream

        problem = build_problem("wsn", SeedStream(1).child(1))
        vector = SeedStream(seed).rng().random(150)
        rows = decode_position(problem, vector)
        assert (rows[:, :2] >= 0).all() and (rows[:, :2] <= 50).all()
        assert (rows[:, 2] >= 0).all() and (rows[:, 2] <= 30).all()


class TestMatrixProblemsHaveNoDecode:
    def test_tsp_rejected(self, stream):
        problem = build_problem("tsp", stream.child(1), n_instances=1, n_cities=5)
        with pytest.raises(ValueError, match="no position decode"):
            decode_position(problem, np.zeros(5))


class TestReferenceDescriptions:
    def test_wsn_carries_model_constants(self):
        text = reference_description("wsn")
        for token in ("55", "2.5", "-85"):
            assert token in text

    def test_acs_carries_priority_limits(self):
        text = reference_description("acs")
        for token in ("3", "6", "1", "10^4"):
            assert token in text

    def test_byte_stable(self):
        assert reference_description("tsp") == reference_description("tsp")
        assert reference_description("bpp") == reference_description("bpp")

    def test_unknown_problem_rejected(self):
        with pytest.raises(ValueError, match="unknown problem"):
            reference_description("sat")
