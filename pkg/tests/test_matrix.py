import numpy as np
import pytest

from conftest import random_matrix, records_from_matrix
from ecoaudit import (
    ConflictingPrediction,
    EmptyEcosystem,
    IncompleteCoverage,
    PredictionRecord,
    UnknownInstance,
    build_failure_matrix,
    failure_rates,
    profile,
    systemic_failure_rate,
)


class TestHiringScenarios:
    def test_scenario_a_rates_and_rows(self, hiring_a):
        eco = build_failure_matrix(hiring_a, "2020")
        assert failure_rates(eco) == (0.2, 0.2, 0.2)
        assert eco.failure_matrix[:2].tolist() == [[1, 1, 1], [1, 1, 1]]
        assert eco.failure_matrix[2:].sum() == 0

    def test_scenario_a_systemic_rate(self, hiring_a):
        eco = build_failure_matrix(hiring_a, "2020")
        assert systemic_failure_rate(eco) == 0.2

    def test_scenario_b_has_no_systemic_failures(self, hiring_b):
        eco = build_failure_matrix(hiring_b, "2020")
        assert failure_rates(eco) == (0.2, 0.2, 0.2)
        assert systemic_failure_rate(eco) == 0.0

    def test_scenario_a_profiles(self, hiring_a):
        eco = build_failure_matrix(hiring_a, "2020")
        assert profile(eco, "i01") == (1, 1, 1)
        assert profile(eco, "i05") == (0, 0, 0)


def test_single_correct_prediction_gives_zero_matrix():
    recs = [PredictionRecord("i1", "m", "p", "yes", "yes")]
    eco = build_failure_matrix(recs, "p")
    assert eco.failure_matrix.tolist() == [[0]]
    assert profile(eco, "i1") == (0,)


def test_equal_rates_tie_break_is_lexicographic():
    recs = records_from_matrix([[1, 0], [0, 1]], models=["b", "a"])
    eco = build_failure_matrix(recs, "2020")
    assert eco.model_ids_ordered == ("a", "b")


def test_rates_are_ordered_column_means():
    recs = records_from_matrix([[1, 1], [1, 0], [0, 0]], models=["m0", "m1"])
    eco = build_failure_matrix(recs, "2020")
    assert failure_rates(eco) == (1 / 3, 2 / 3)


def test_all_zero_matrix_rates():
    recs = records_from_matrix(np.zeros((5, 2), dtype=int))
    assert failure_rates(build_failure_matrix(recs, "2020")) == (0.0, 0.0)


def test_single_all_ones_row():
    recs = records_from_matrix([[1, 1, 1]])
    assert systemic_failure_rate(build_failure_matrix(recs, "2020")) == 1.0


def test_unknown_instance_raises(hiring_a):
    eco = build_failure_matrix(hiring_a, "2020")
    with pytest.raises(UnknownInstance):
        profile(eco, "nope")


def test_strict_policy_rejects_missing_cell(hiring_a):
    with pytest.raises(IncompleteCoverage) as exc:
        build_failure_matrix(hiring_a[:-1], "2020")
    assert exc.value.instance_id == "i10"
    assert exc.value.model_id == "f3"


def test_drop_incomplete_keeps_maximal_rectangle(hiring_a):
    eco = build_failure_matrix(hiring_a[:-1], "2020", policy="drop-incomplete")
    assert eco.n_instances == 9
    assert eco.dropped_instances == 1
    assert "i10" not in eco.instance_ids


def test_empty_period_raises(hiring_a):
    with pytest.raises(EmptyEcosystem):
        build_failure_matrix(hiring_a, "1999")


def test_model_filter_selects_columns(hiring_a):
    eco = build_failure_matrix(hiring_a, "2020", models={"f1", "f2"})
    assert eco.model_ids_ordered == ("f1", "f2")


def test_requested_model_without_records_is_incomplete(hiring_a):
    with pytest.raises(IncompleteCoverage):
        build_failure_matrix(hiring_a, "2020", models={"f1", "ghost"})


def test_identical_duplicate_records_collapse_at_build(hiring_a):
    eco = build_failure_matrix(hiring_a + hiring_a[:3], "2020")
    assert eco.n_instances == 10


def test_conflicting_records_rejected_at_build(hiring_a):
    clash = [PredictionRecord("i01", "f1", "2020", "accept", "accept")]
    with pytest.raises(ConflictingPrediction):
        build_failure_matrix(hiring_a + clash, "2020")


def test_build_is_deterministic_under_record_order():
    rng = np.random.default_rng(7)
    for _ in range(20):
        recs = records_from_matrix(random_matrix(rng))
        perm = list(recs)
        rng.shuffle(perm)
        a = build_failure_matrix(recs, "2020")
        b = build_failure_matrix(perm, "2020")
        assert a.model_ids_ordered == b.model_ids_ordered
        assert a.instance_ids == b.instance_ids
        assert np.array_equal(a.failure_matrix, b.failure_matrix)


def test_systemic_rate_never_exceeds_min_failure_rate():
    rng = np.random.default_rng(11)
    for _ in range(50):
        eco = build_failure_matrix(records_from_matrix(random_matrix(rng)), "2020")
        assert systemic_failure_rate(eco) <= min(failure_rates(eco))


def test_cell_sum_matches_column_counts():
    rng = np.random.default_rng(13)
    for _ in range(50):
        M = random_matrix(rng)
        eco = build_failure_matrix(records_from_matrix(M), "2020")
        assert int(eco.failure_matrix.sum()) == int(M.sum())
        assert sum(eco.column_counts) == int(M.sum())


def test_column_ordering_is_a_permutation():
    rng = np.random.default_rng(17)
    for _ in range(50):
        M = random_matrix(rng)
        eco = build_failure_matrix(records_from_matrix(M), "2020")
        assert sorted(eco.column_counts) == sorted(M.sum(axis=0).tolist())
        assert list(eco.column_counts) == sorted(eco.column_counts)
