from __future__ import annotations

import numpy as np
import pytest

from mela.problems import bpp_count_bins, gen_bpp_instances, gen_tsp_instances, tsp_tour_length
from mela.problems import bpp as bpp_mod
from mela.problems import tsp as tsp_mod
from mela.problems.bpp import BppInstance, CapacityViolation

from oracles import oracle_bin_count, oracle_tour_length


class TestTspInstances:
    def test_counts_and_bounds(self, stream):
        instances = gen_tsp_instances(64, 50, stream)
        assert len(instances) == 64
        for coords in instances:
            assert coords.shape == (50, 2)
            assert ((coords >= 0) & (coords <= 1)).all()

    def test_deterministic(self, stream):
        a = gen_tsp_instances(3, 10, stream)
        b = gen_tsp_instances(3, 10, stream)
        for x, y in zip(a, b):
            assert (x == y).all()

    def test_distance_matrix_properties(self, stream):
        coords = gen_tsp_instances(1, 3, stream)[0]
        d = tsp_mod.distance_matrix(coords)
        assert np.allclose(d, d.T)
        assert (np.diag(d) == 0).all()
        # triangle inequality
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    assert d[i, j] <= d[i, k] + d[k, j] + 1e-12

    def test_min_cities(self, stream):
        with pytest.raises(ValueError):
            gen_tsp_instances(1, 2, stream)

    def test_serialization_round_trip(self, stream, tmp_path):
        instances = gen_tsp_instances(2, 5, stream)
        path = tmp_path / "tsp.txt"
        tsp_mod.save_instances(instances, str(path), stream.label())
        loaded = tsp_mod.load_instances(str(path))
        for x, y in zip(instances, loaded):
            assert (x == y).all()


class TestTourLength:
    def test_unit_square_perimeter(self):
        coords = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert tsp_tour_length(coords, np.array([0, 1, 2, 3])) == pytest.approx(4.0)

    def test_collinear_out_and_back(self):
        coords = np.array([[0.0, 0.0], [0.0, 0.5], [0.0, 1.0]])
        for tour in ([0, 1, 2], [1, 0, 2], [2, 0, 1]):
            assert tsp_tour_length(coords, np.array(tour)) == pytest.approx(2.0)

    def test_rejects_non_permutation(self):
        coords = np.zeros((4, 2))
        with pytest.raises(ValueError, match="permutation"):
            tsp_tour_length(coords, np.array([0, 1, 1, 3]))

    def test_matches_oracle_on_random_instances(self, stream):
        rng = stream.rng()
        for _ in range(50):
            coords = rng.random((5, 2))
            tour = rng.permutation(5)
            got = tsp_tour_length(coords, tour)
            want = oracle_tour_length(coords, list(tour))
            assert got == pytest.approx(want, rel=1e-12)


class TestBppInstances:
    def test_sizes_within_bounds(self, stream):
        instances = gen_bpp_instances(3, 500, 150, 20, 100, stream)
        assert len(instances) == 3
        for inst in instances:
            assert len(inst.item_sizes) == 500
            assert inst.item_sizes.min() >= 20
            assert inst.item_sizes.max() <= 100

    def test_lower_bound_scale(self, stream):
        inst = gen_bpp_instances(1, 500, 150, 20, 100, stream)[0]
        assert inst.lower_bound() == int(np.ceil(inst.item_sizes.sum() / 150))
        assert 180 <= inst.lower_bound() <= 220  # mean size 60 -> ~200

    def test_single_full_item(self, stream):
        inst = gen_bpp_instances(1, 1, 150, 150, 150, stream)[0]
        assert list(inst.item_sizes) == [150]

    def test_deterministic(self, stream):
        a = gen_bpp_instances(1, 50, 150, 20, 100, stream)[0]
        b = gen_bpp_instances(1, 50, 150, 20, 100, stream)[0]
        assert (a.item_sizes == b.item_sizes).all()

    def test_bad_bounds(self, stream):
        with pytest.raises(ValueError):
            gen_bpp_instances(1, 10, 150, 20, 200, stream)

    def test_serialization_round_trip(self, stream, tmp_path):
        instances = gen_bpp_instances(2, 10, 150, 20, 100, stream)
        path = tmp_path / "bpp.txt"
        bpp_mod.save_instances(instances, str(path), stream.label())
        loaded = bpp_mod.load_instances(str(path))
        for x, y in zip(instances, loaded):
            assert (x.item_sizes == y.item_sizes).all()
            assert x.capacity == y.capacity


class TestBinCount:
    def test_two_bins(self):
        inst = BppInstance(np.array([60, 60, 90]), 150)
        assert bpp_count_bins(inst, {0: "A", 1: "A", 2: "B"}) == 2

    def test_single_item(self):
        inst = BppInstance(np.array([70]), 150)
        assert bpp_count_bins(inst, {0: 0}) == 1

    def test_capacity_violation_names_bin(self):
        inst = BppInstance(np.array([100, 60]), 150)
        with pytest.raises(CapacityViolation, match="'B'"):
            bpp_count_bins(inst, {0: "B", 1: "B"})

    def test_matches_oracle_on_random_assignments(self, stream):
        rng = stream.rng()
        for _ in range(50):
            sizes = rng.integers(20, 101, size=30)
            inst = BppInstance(sizes, 150)
            # random assignment respecting capacity via first fit on shuffle
            order = rng.permutation(30)
            loads: list[int] = []
            assignment: dict[int, int] = {}
            for item in order:
                for b, load in enumerate(loads):
                    if load + sizes[item] <= 150:
                        loads[b] += int(sizes[item])
                        assignment[int(item)] = b
                        break
                else:
                    loads.append(int(sizes[item]))
                    assignment[int(item)] = len(loads) - 1
            assert bpp_count_bins(inst, assignment) == oracle_bin_count(sizes, 150, assignment)
