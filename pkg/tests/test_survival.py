import math
import random

import numpy as np
import pytest

from wavemine.errors import ConfigError, FoldError, UndefinedMetricError
from wavemine.matrix import BinaryDesignMatrix
from wavemine.survival import (
    CoxModel,
    concordance_index,
    cox_objective,
    cross_validate,
    cv_score_vector,
    fit_ridge_cox,
    make_folds,
    rank_patterns,
    rr_score,
)


def _matrix(cells, times, events, keys=None):
    cells = np.asarray(cells, dtype=np.int8)
    if cells.ndim == 1:
        cells = cells.reshape(-1, 1)
    keys = tuple(keys or (f"K{j}" for j in range(cells.shape[1])))
    return BinaryDesignMatrix(
        patient_ids=tuple(f"p{i}" for i in range(cells.shape[0])),
        times=np.asarray(times, dtype=float),
        events=np.asarray(events, dtype=bool),
        pattern_keys=keys,
        cells=cells,
    )


# ---------------------------------------------------------------------------
# concordance


def test_concordance_worked_example():
    c = concordance_index([3, 1, 2], [2, 4, 6], [1, 1, 0])
    assert c == pytest.approx(2 / 3, abs=1e-15)


def test_concordance_perfect_and_antiperfect():
    times = np.array([1.0, 2.0, 3.0, 4.0])
    events = np.ones(4, dtype=bool)
    assert concordance_index(-times, times, events) == 1.0
    assert concordance_index(times, times, events) == 0.0


def test_concordance_all_ties_half():
    assert concordance_index([2, 2, 2], [1, 2, 3], [1, 1, 1]) == 0.5


def test_concordance_equal_times_single_event():
    # (event at t, censored at t) is comparable; both events at t is not
    assert concordance_index([2, 1], [3, 3], [1, 0]) == 1.0
    with pytest.raises(UndefinedMetricError):
        concordance_index([2, 1], [3, 3], [1, 1])


def test_concordance_undefined_without_pairs():
    with pytest.raises(UndefinedMetricError):
        concordance_index([1.0], [2.0], [True])
    with pytest.raises(UndefinedMetricError):
        concordance_index([1.0, 2.0], [2.0, 3.0], [False, False])


def test_concordance_invariant_under_monotone_transform():
    rng = np.random.default_rng(4)
    for _ in range(25):
        n = 30
        scores = rng.normal(size=n)
        times = rng.integers(1, 8, size=n).astype(float)
        events = rng.random(n) < 0.4
        if not events.any() or not (~events).any():
            continue
        base = concordance_index(scores, times, events)
        assert concordance_index(np.exp(scores), times, events) == pytest.approx(base)
        assert concordance_index(3 * scores + 7, times, events) == pytest.approx(base)


def test_concordance_sign_flip_complements():
    rng = np.random.default_rng(11)
    scores = rng.permutation(40).astype(float)  # distinct: no score ties
    times = rng.integers(1, 9, size=40).astype(float)
    events = rng.random(40) < 0.5
    c = concordance_index(scores, times, events)
    assert concordance_index(-scores, times, events) == pytest.approx(1 - c)


# ---------------------------------------------------------------------------
# ridge Cox


def _toy_cox_matrix():
    cells = [1, 1, 1, 0, 0, 0]
    times = [2, 3, 5, 4, 5, 5]
    events = [1, 1, 0, 1, 0, 0]
    return _matrix(cells, times, events)


def _naive_penalized_ll(x, times, events, beta, lam):
    """Independent objective: direct double loop over risk sets (Breslow)."""
    ll = 0.0
    n = len(x)
    for i in range(n):
        if not events[i]:
            continue
        denom = sum(math.exp(x[j] * beta) for j in range(n) if times[j] >= times[i])
        ll += x[i] * beta - math.log(denom)
    return ll - 0.5 * lam * beta * beta


def _golden_max(fn, lo, hi, tol=1e-10):
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    while abs(b - a) > tol:
        if fn(c) > fn(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return (a + b) / 2


def test_ridge_cox_matches_grid_maximization():
    matrix = _toy_cox_matrix()
    x = matrix.cells[:, 0].astype(float).tolist()
    times = matrix.times.tolist()
    events = matrix.events.tolist()
    for lam in (0.01, 0.5, 2.0):
        model = fit_ridge_cox(matrix, lam)
        assert model.converged
        expected = _golden_max(
            lambda b: _naive_penalized_ll(x, times, events, b, lam), -6.0, 6.0
        )
        assert model.coefficients[0] == pytest.approx(expected, abs=1e-4)


def test_ridge_cox_huge_penalty_shrinks_to_zero():
    model = fit_ridge_cox(_toy_cox_matrix(), 1e6)
    assert model.converged
    assert abs(model.coefficients[0]) < 1e-4


def test_ridge_cox_constant_column_zero_coefficient():
    matrix = _matrix(
        np.ones((6, 1)), [2, 3, 5, 4, 5, 5], [1, 1, 0, 1, 0, 0], keys=("const",)
    )
    model = fit_ridge_cox(matrix, 1.0)
    assert model.coefficients[0] == 0.0


def test_ridge_cox_objective_monotone_and_gradient_small():
    matrix = _toy_cox_matrix()
    model = fit_ridge_cox(matrix, 0.1, tol=1e-8)
    path = model.objective_path
    slack = 1e-8 * (1 + abs(path[0]))
    assert all(b >= a - slack for a, b in zip(path, path[1:]))
    _, grad = cox_objective(
        matrix.cells.astype(float), matrix.times, matrix.events, model.coefficients, 0.1
    )
    assert model.converged and np.max(np.abs(grad)) < 1e-8


def _naive_penalized_ll_multi(X, times, events, beta, lam):
    ll = 0.0
    n = len(X)
    for i in range(n):
        if not events[i]:
            continue
        eta_i = sum(X[i][k] * beta[k] for k in range(len(beta)))
        denom = 0.0
        for j in range(n):
            if times[j] >= times[i]:
                denom += math.exp(sum(X[j][k] * beta[k] for k in range(len(beta))))
        ll += eta_i - math.log(denom)
    return ll - 0.5 * lam * sum(b * b for b in beta)


def test_ridge_cox_multicolumn_optimum():
    rng = np.random.default_rng(6)
    n = 40
    cells = rng.integers(0, 2, size=(n, 3)).astype(np.int8)
    events = rng.random(n) < 0.5
    times = np.where(events, rng.integers(1, 6, size=n), 6).astype(float)
    matrix = _matrix(cells, times, events, keys=("a", "b", "c"))
    model = fit_ridge_cox(matrix, 0.5)
    assert model.converged
    X = cells.astype(float).tolist()
    beta = model.coefficients
    # the independent objective's finite-difference gradient vanishes here
    h = 1e-6
    for k in range(3):
        up, down = beta.copy(), beta.copy()
        up[k] += h
        down[k] -= h
        fd = (
            _naive_penalized_ll_multi(X, times, events, up, 0.5)
            - _naive_penalized_ll_multi(X, times, events, down, 0.5)
        ) / (2 * h)
        assert abs(fd) < 1e-4
    # and perturbing the solution never improves the independent objective
    base = _naive_penalized_ll_multi(X, times, events, beta, 0.5)
    for k in range(3):
        for delta in (-0.05, 0.05):
            probe = beta.copy()
            probe[k] += delta
            assert _naive_penalized_ll_multi(X, times, events, probe, 0.5) <= base + 1e-12


def test_ridge_cox_validates_inputs():
    with pytest.raises(ConfigError):
        fit_ridge_cox(_toy_cox_matrix(), -1.0)
    no_events = _matrix([1, 0], [1, 2], [0, 0])
    from wavemine.errors import CohortValidationError

    with pytest.raises(CohortValidationError):
        fit_ridge_cox(no_events, 1.0)


# ---------------------------------------------------------------------------
# rr_score


def test_rr_score_zero_columns():
    matrix = _matrix(np.zeros((4, 0)), [1, 2, 3, 4], [1, 0, 1, 0], keys=())
    assert rr_score(matrix, {}).tolist() == [0.0] * 4


def test_rr_score_single_pattern():
    matrix = _matrix([1, 0, 1], [1, 2, 3], [1, 0, 0], keys=("k",))
    scores = rr_score(matrix, {"k": 6.0})
    assert scores == pytest.approx([math.log(6.0), 0.0, math.log(6.0)])


def test_rr_score_identical_columns_double():
    cells = np.array([[1, 1], [0, 0]], dtype=np.int8)
    matrix = _matrix(cells, [1, 2], [1, 0], keys=("k1", "k2"))
    scores = rr_score(matrix, {"k1": 4.0, "k2": 4.0})
    assert scores[0] == pytest.approx(2 * math.log(4.0))


def test_rr_score_missing_stats_rejected():
    matrix = _matrix([1, 0], [1, 2], [1, 0], keys=("k",))
    with pytest.raises(ConfigError):
        rr_score(matrix, {})


# ---------------------------------------------------------------------------
# cross-validation


def _cv_matrix(n=60, seed=0):
    rng = np.random.default_rng(seed)
    carrier = rng.random(n) < 0.4
    events = np.where(carrier, rng.random(n) < 0.6, rng.random(n) < 0.1)
    times = np.where(events, rng.integers(1, 5, size=n), 5).astype(float)
    return _matrix(carrier.astype(np.int8), times, events, keys=("planted",))


def test_cross_validate_deterministic_for_seed():
    matrix = _cv_matrix()
    one = cross_validate(matrix, k=5, seed=3)
    two = cross_validate(matrix, k=5, seed=3)
    assert one.fold_c == two.fold_c
    assert np.array_equal(one.folds, two.folds)
    assert one.chosen_lambda == two.chosen_lambda
    other = cross_validate(matrix, k=5, seed=4)
    assert not np.array_equal(one.folds, other.folds)


def test_cross_validate_stratifies_events():
    matrix = _cv_matrix()
    cv = cross_validate(matrix, k=5, seed=0)
    for f in range(5):
        assert matrix.events[cv.folds == f].any()


def test_cross_validate_rejects_zero_columns():
    matrix = _matrix(np.zeros((10, 0)), np.arange(1, 11), [1] * 5 + [0] * 5, keys=())
    with pytest.raises(UndefinedMetricError):
        cross_validate(matrix, k=2, seed=0)


def test_folds_error_when_events_fewer_than_k():
    events = np.array([True, True, False, False, False, False])
    with pytest.raises(FoldError):
        make_folds(events, 4, seed=0)


def test_leave_one_out_no_censoring_defined():
    n = 6
    rng = np.random.default_rng(2)
    matrix = _matrix(
        rng.integers(0, 2, size=n).astype(np.int8),
        rng.permutation(n) + 1,
        np.ones(n, dtype=bool),
    )
    cv = cross_validate(matrix, k=n, seed=0)
    assert all(math.isnan(c) for c in cv.fold_c)  # one-patient test folds
    assert 0.0 <= cv.mean_c <= 1.0  # falls back to the pooled held-out C
    assert cv.mean_c == cv.pooled_c


def test_cv_score_vector_uses_same_folds():
    matrix = _cv_matrix()
    cv = cross_validate(matrix, k=5, seed=1)
    fold_c = cv_score_vector(matrix, matrix.cells[:, 0].astype(float), cv.folds)
    assert len(fold_c) == 5
    assert all(0.0 <= c <= 1.0 for c in fold_c)


# ---------------------------------------------------------------------------
# rank_patterns


def _ranking_matrix(keys):
    return _matrix(np.zeros((4, len(keys)), dtype=np.int8), [1, 2, 3, 4], [1, 1, 0, 0], keys=keys)


def _model(coefs):
    return CoxModel(np.asarray(coefs, dtype=float), lam=1.0, converged=True, iterations=1)


def test_rank_patterns_sums_fold_ranks():
    matrix = _ranking_matrix(("X", "Y", "Z"))
    models = [_model([3.0, -2.0, 1.0]), _model([-2.0, 3.0, 1.0])]
    # fold ranks: X:(1,2), Y:(2,1), Z:(3,3) -> sums 3,3,6; X before Y by key
    ranking = rank_patterns(models, matrix)
    assert ranking.ordered_keys == ("X", "Y", "Z")
    assert [ranking.rank_sum[k] for k in ranking.ordered_keys] == [3, 3, 6]


def test_rank_patterns_single_model_uses_coefficient_order():
    matrix = _ranking_matrix(("X", "Y", "Z"))
    ranking = rank_patterns([_model([0.5, -3.0, 1.0])], matrix)
    assert ranking.ordered_keys == ("Y", "Z", "X")


def test_rank_patterns_all_zero_ties_break_by_key():
    matrix = _ranking_matrix(("b", "c", "a"))
    ranking = rank_patterns([_model([0.0, 0.0, 0.0])], matrix)
    assert ranking.ordered_keys == ("a", "b", "c")


def test_rank_patterns_scale_invariant():
    matrix = _ranking_matrix(("X", "Y", "Z"))
    models = [_model([3.0, -2.0, 1.0]), _model([-2.0, 3.0, 1.0])]
    scaled = [_model([30.0, -20.0, 10.0]), _model([-2.0, 3.0, 1.0])]
    assert rank_patterns(models, matrix) == rank_patterns(scaled, matrix)
