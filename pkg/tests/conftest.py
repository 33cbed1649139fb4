import numpy as np
import pytest

from ecoaudit import PredictionRecord


def make_records(failures, period="2020", models=("f1", "f2", "f3"), n=10):
    """Records for n instances where failures[model] is a set of 1-based ids."""
    recs = []
    for i in range(1, n + 1):
        for m in models:
            fail = i in failures.get(m, set())
            recs.append(
                PredictionRecord(
                    f"i{i:02d}", m, period, "neg" if fail else "pos", "pos"
                )
            )
    return recs


@pytest.fixture
def hiring_a():
    """Three firms all reject the same two of ten candidates."""
    return make_records({m: {1, 2} for m in ("f1", "f2", "f3")})


@pytest.fixture
def hiring_b():
    """Each firm rejects two distinct candidates; six are rejected once."""
    return make_records({"f1": {1, 2}, "f2": {3, 4}, "f3": {5, 6}})


@pytest.fixture
def temporal_fixture():
    """Four instances, models A/B/C; A fixes instances 1 and 2 in p2."""
    p1 = {"A": {1, 2, 3}, "B": {1, 3}, "C": {1}}
    p2 = {"A": {3}, "B": {1, 3}, "C": {1}}
    recs = []
    for period, fails in (("p1", p1), ("p2", p2)):
        recs.extend(make_records(fails, period=period, models=("A", "B", "C"), n=4))
    return recs


def records_from_matrix(matrix, period="2020", models=None, instances=None):
    """Turn a binary failure matrix into prediction records."""
    matrix = np.asarray(matrix)
    n, k = matrix.shape
    models = models or [f"m{j:02d}" for j in range(k)]
    instances = instances or [f"i{i:04d}" for i in range(n)]
    recs = []
    for i, inst in enumerate(instances):
        for j, m in enumerate(models):
            recs.append(
                PredictionRecord(
                    inst, m, period, "neg" if matrix[i, j] else "pos", "pos"
                )
            )
    return recs


def random_matrix(rng, n=None, k=None):
    n = n if n is not None else int(rng.integers(2, 40))
    k = k if k is not None else int(rng.integers(2, 5))
    return (rng.random((n, k)) < rng.random(k)).astype(np.uint8)
