from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from mela.core import (
    ConfigError,
    ErrorRecord,
    HeuristicIndividual,
    RunConfig,
    SeedStream,
    Status,
    derive_stream,
    load_config_file,
    validate_config,
)


class TestValidateConfig:
    def test_tsp_defaults_generation_limit(self):
        v = validate_config(RunConfig(problem="tsp", init_pop=30, evo_pop=10, total_budget=100))
        assert v.generation_limit == 7

    def test_acs_generation_limit(self):
        v = validate_config(RunConfig(problem="acs", init_pop=20, evo_pop=10, total_budget=50))
        assert v.generation_limit == 3

    def test_unreachable_budget(self):
        with pytest.raises(ConfigError, match="budget not reachable"):
            validate_config(RunConfig(problem="tsp", init_pop=30, evo_pop=10, total_budget=35))

    def test_unknown_problem(self):
        with pytest.raises(ConfigError, match="unknown problem"):
            validate_config(RunConfig(problem="knapsack"))

    def test_budget_below_init(self):
        with pytest.raises(ConfigError, match="smaller than init_pop"):
            validate_config(RunConfig(problem="tsp", init_pop=30, evo_pop=10, total_budget=20))

    def test_defaults_fill_in(self):
        v = validate_config(RunConfig(problem="wsn"))
        assert (v.init_pop, v.evo_pop, v.total_budget) == (20, 10, 50)
        assert v.llm.temperature == 1.0

    def test_normalization_idempotent(self):
        v1 = validate_config(RunConfig(problem="bpp"))
        v2 = validate_config(v1.to_run_config())
        assert v1 == v2

    @given(
        init=st.integers(1, 60),
        evo=st.integers(1, 20),
        gens=st.integers(0, 12),
    )
    def test_budget_identity(self, init, evo, gens):
        budget = init + gens * evo
        v = validate_config(
            RunConfig(problem="tsp", init_pop=init, evo_pop=evo, total_budget=budget)
        )
        assert v.generation_limit * v.evo_pop + v.init_pop == v.total_budget

    def test_round_trip_through_dict(self):
        cfg = RunConfig(problem="acs", seed=99, runs=5)
        assert RunConfig.from_dict(cfg.to_dict()) == cfg

    def test_config_file_round_trip(self, tmp_path):
        cfg = RunConfig(problem="wsn", seed=7, total_budget=50, init_pop=20, evo_pop=10)
        path = tmp_path / "run.yaml"
        import yaml

        path.write_text(yaml.safe_dump(cfg.to_dict()))
        assert load_config_file(str(path)) == cfg


class TestSeedStream:
    def test_same_label_same_sequence(self, stream):
        a = derive_stream(stream, 0).rng().random(100)
        b = derive_stream(stream, 0).rng().random(100)
        assert (a == b).all()

    def test_different_labels_differ(self, stream):
        a = derive_stream(stream, 0).rng().random(1000)
        b = derive_stream(stream, 1).rng().random(1000)
        assert (a != b).any()

    def test_path_order_matters(self, stream):
        a = derive_stream(derive_stream(stream, 1), 2).rng().random(1000)
        b = derive_stream(derive_stream(stream, 2), 1).rng().random(1000)
        assert (a != b).any()

    def test_integer_seed_stable(self, stream):
        assert stream.child(3).integer_seed() == stream.child(3).integer_seed()

    def test_round_trip(self, stream):
        child = stream.child(4).child(2)
        assert SeedStream.from_dict(child.to_dict()) == child


class TestIndividualInvariants:
    def _individual(self, **overrides):
        base = dict(
            id="g0-i0",
            source="def heuristics_v1(x):\n    return x\n",
            entry_name="heuristics_v1",
            thought="t",
            generation=0,
            fitness=1.0,
            status=Status.VALID,
        )
        base.update(overrides)
        return HeuristicIndividual(**base)

    def test_valid_individual_clean(self):
        assert self._individual().check() == []

    def test_valid_without_fitness_flagged(self):
        problems = self._individual(fitness=None).check()
        assert any("without fitness" in p for p in problems)

    def test_failed_with_fitness_flagged(self):
        problems = self._individual(status=Status.FAILED).check()
        assert any("carries fitness" in p for p in problems)

    def test_repaired_needs_errors(self):
        problems = self._individual(status=Status.REPAIRED).check()
        assert any("no error history" in p for p in problems)
        repaired = self._individual(
            status=Status.REPAIRED,
            errors=(ErrorRecord(phase="call", message="ValueError: x"),),
        )
        assert repaired.check() == []

    def test_duplicate_definition_flagged(self):
        source = "def heuristics_v1(x):\n    return x\ndef heuristics_v1(y):\n    return y\n"
        problems = self._individual(source=source).check()
        assert any("exactly one definition" in p for p in problems)

    def test_serialization_round_trip(self):
        ind = self._individual(
            errors=(ErrorRecord(phase="load", message="SyntaxError: bad", repair_attempt=2),),
            parent_prompt_id="abc123",
        )
        assert HeuristicIndividual.from_dict(ind.to_dict()) == ind
