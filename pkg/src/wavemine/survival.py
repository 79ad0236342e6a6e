"""Survival evaluation of mined patterns on censored outcomes.

Provides Harrell's concordance index, a ridge-penalized Cox baseline with
Breslow tie handling, a model-free log-relative-risk sum scorer, event-
stratified k-fold cross-validation, and sum-of-ranks pattern ranking.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._kernels import concordance_counts, cox_suffix_sums
from .errors import CohortValidationError, ConfigError, FoldError, UndefinedMetricError
from .matrix import BinaryDesignMatrix

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class CoxModel:
    """Ridge-penalized Cox fit: score(patient) = row . coefficients."""

    coefficients: np.ndarray
    lam: float
    converged: bool
    iterations: int
    objective_path: tuple[float, ...] = ()

    def score(self, matrix: BinaryDesignMatrix) -> np.ndarray:
        return matrix.cells.astype(float) @ self.coefficients


@dataclass(frozen=True)
class CVResult:
    fold_c: tuple[float, ...]
    mean_c: float
    pooled_c: float
    models: tuple[CoxModel, ...]
    chosen_lambda: tuple[float, ...]
    seed: int
    folds: np.ndarray  # fold id per patient


@dataclass(frozen=True)
class PatternRanking:
    ordered_keys: tuple[str, ...]
    rank_sum: Mapping[str, int]


def concordance_index(scores, times, events) -> float:
    """Harrell's C: fraction of comparable pairs ranked correctly.

    A pair is comparable when the earlier time carries an event (equal times:
    exactly one event).  Concordant means the higher risk score belongs to
    the earlier event; tied scores contribute 0.5.
    """
    scores = np.asarray(scores, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if not (scores.shape == times.shape == events.shape):
        raise ConfigError("scores, times and events must have identical shapes")
    concordant, ties, comparable = concordance_counts(scores, times, events)
    if comparable == 0:
        raise UndefinedMetricError("no comparable pairs: concordance undefined")
    return (concordant + 0.5 * ties) / comparable


def cox_objective(
    X: np.ndarray, times: np.ndarray, events: np.ndarray, beta: np.ndarray, lam: float
) -> tuple[float, np.ndarray]:
    """Penalized Breslow partial log-likelihood and its gradient."""
    order = np.argsort(times, kind="stable")
    Xs = X[order]
    ts = times[order]
    es = events[order]
    eta = Xs @ beta
    w = np.exp(eta)
    s0, s1 = cox_suffix_sums(w, Xs)
    first = np.searchsorted(ts, ts, side="left")
    ev = np.flatnonzero(es)
    if ev.size == 0:
        raise CohortValidationError("Cox objective needs at least one event")
    f = first[ev]
    ll = float(np.sum(eta[ev] - np.log(s0[f])) - 0.5 * lam * beta @ beta)
    grad = Xs[ev].sum(axis=0) - (s1[f] / s0[f, None]).sum(axis=0) - lam * beta
    return ll, grad


def _cox_hessian(Xs, ts, es, w, s0, s1, lam):
    p = Xs.shape[1]
    hess = -lam * np.eye(p)
    ev = np.flatnonzero(es)
    for t in np.unique(ts[ev]):
        f = int(np.searchsorted(ts, t, side="left"))
        d = int(np.sum(es & (ts == t)))
        tail = Xs[f:]
        S2 = tail.T @ (w[f:, None] * tail)
        mean = s1[f] / s0[f]
        hess -= d * (S2 / s0[f] - np.outer(mean, mean))
    return hess


def _fit_cox(X, times, events, lam, tol, max_iter):
    n, p = X.shape
    order = np.argsort(times, kind="stable")
    Xs, ts, es = X[order], times[order], events[order]
    beta = np.zeros(p)
    if p == 0:
        return CoxModel(beta, lam, True, 0, ())
    path = []
    ll, grad = cox_objective(X, times, events, beta, lam)
    path.append(ll)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if np.max(np.abs(grad)) < tol:
            converged = True
            iterations -= 1
            break
        eta = Xs @ beta
        w = np.exp(eta)
        s0, s1 = cox_suffix_sums(w, Xs)
        hess = _cox_hessian(Xs, ts, es, w, s0, s1, lam)
        try:
            delta = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(-hess, grad, rcond=None)[0]
        # near the optimum the objective is flat at float resolution; a tiny
        # relative slack keeps one-ulp rejections from stalling the search
        slack = 1e-12 * (1.0 + abs(ll))
        step = 1.0
        moved = False
        for _ in range(30):
            cand = beta + step * delta
            cand_ll, cand_grad = cox_objective(X, times, events, cand, lam)
            if np.isfinite(cand_ll) and cand_ll >= ll - slack:
                moved = not np.array_equal(cand, beta)
                beta, ll, grad = cand, cand_ll, cand_grad
                path.append(ll)
                break
            step *= 0.5
        if not moved:
            break
    else:
        iterations = max_iter
    if not converged and np.max(np.abs(grad)) < tol:
        converged = True
    if not converged:
        log.warning("ridge Cox did not converge (lambda=%g, %d iterations)", lam, iterations)
    return CoxModel(beta, lam, converged, iterations, tuple(path))


def fit_ridge_cox(
    matrix: BinaryDesignMatrix, lam: float, tol: float = 1e-8, max_iter: int = 50
) -> CoxModel:
    """Maximize the Breslow partial log-likelihood minus (lam/2)||beta||^2.

    Newton iterations with step halving; converged when the gradient
    max-norm drops below ``tol``.  A non-converged model is still returned.
    """
    if lam < 0:
        raise ConfigError("ridge penalty must be non-negative")
    if not matrix.events.any():
        raise CohortValidationError("Cox fit needs at least one event")
    return _fit_cox(
        matrix.cells.astype(float), matrix.times.astype(float), matrix.events, lam, tol, max_iter
    )


def rr_score(matrix: BinaryDesignMatrix, rr_by_key: Mapping[str, float]) -> np.ndarray:
    """Model-free baseline: score_i = sum_j cell(i, j) * log(rr_j)."""
    missing = [k for k in matrix.pattern_keys if k not in rr_by_key]
    if missing:
        raise ConfigError(f"missing relative risk for columns: {missing[:3]}")
    weights = np.log([rr_by_key[k] for k in matrix.pattern_keys])
    if weights.size == 0:
        return np.zeros(len(matrix.patient_ids))
    return matrix.cells.astype(float) @ weights


def make_folds(events: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Event-stratified fold assignment, reshuffled if a fold lacks an event."""
    events = np.asarray(events, dtype=bool)
    n = events.shape[0]
    if k < 2 or k > n:
        raise ConfigError(f"k must lie in [2, {n}], got {k}")
    n_events = int(events.sum())
    if k > n_events:
        log.warning("k=%d exceeds the %d events; folds without events are likely", k, n_events)
    rng = np.random.default_rng(seed)
    for _attempt in range(5):
        folds = np.empty(n, dtype=np.int64)
        for group in (np.flatnonzero(events), np.flatnonzero(~events)):
            shuffled = rng.permutation(group)
            folds[shuffled] = np.arange(shuffled.size) % k
        ok = all(
            events[folds == f].any() and events[folds != f].any() for f in range(k)
        )
        if ok:
            return folds
        log.warning("fold %s lacked an event; reshuffling", _attempt)
    raise FoldError("could not build folds with at least one event per fold")


def cv_score_vector(
    matrix: BinaryDesignMatrix, scores: np.ndarray, folds: np.ndarray
) -> tuple[float, ...]:
    """Per-fold test C-index of a fixed score vector."""
    out = []
    for f in range(int(folds.max()) + 1):
        test = folds == f
        out.append(
            concordance_index(scores[test], matrix.times[test], matrix.events[test])
        )
    return tuple(out)


def cross_validate(
    matrix: BinaryDesignMatrix,
    k: int = 5,
    seed: int = 0,
    lam_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
) -> CVResult:
    """Event-stratified k-fold CV of the ridge Cox baseline.

    The penalty is chosen per fold on the training side only (best train
    C-index; ties go to the smaller penalty).  A test fold too small to hold
    a comparable pair contributes NaN; the mean then falls back to the C of
    the pooled held-out scores (keeps leave-one-out defined).
    """
    if len(matrix.pattern_keys) == 0:
        raise UndefinedMetricError("matrix has no pattern columns to evaluate")
    folds = make_folds(matrix.events, k, seed)
    X = matrix.cells.astype(float)
    heldout = np.zeros(X.shape[0])
    fold_c: list[float] = []
    models: list[CoxModel] = []
    chosen: list[float] = []
    for f in range(k):
        test = folds == f
        train = ~test
        best: tuple[float, float, CoxModel] | None = None
        for lam in lam_grid:
            model = _fit_cox(
                X[train], matrix.times[train], matrix.events[train], lam, 1e-8, 50
            )
            c_train = concordance_index(
                X[train] @ model.coefficients, matrix.times[train], matrix.events[train]
            )
            if best is None or c_train > best[0]:
                best = (c_train, lam, model)
        _, lam, model = best
        scores = X[test] @ model.coefficients
        heldout[test] = scores
        try:
            c_test = concordance_index(scores, matrix.times[test], matrix.events[test])
        except UndefinedMetricError:
            c_test = float("nan")
        fold_c.append(c_test)
        models.append(model)
        chosen.append(lam)
    pooled = concordance_index(heldout, matrix.times, matrix.events)
    defined = [c for c in fold_c if not np.isnan(c)]
    mean_c = float(np.mean(defined)) if defined else pooled
    return CVResult(
        fold_c=tuple(fold_c),
        mean_c=mean_c,
        pooled_c=pooled,
        models=tuple(models),
        chosen_lambda=tuple(chosen),
        seed=seed,
        folds=folds,
    )


def rank_patterns(models: Sequence[CoxModel], matrix: BinaryDesignMatrix) -> PatternRanking:
    """Sum-of-ranks selection: rank columns per model by |coefficient|, sum ranks.

    Rank 1 is the largest absolute coefficient; ties inside a model and in
    the final ordering break by canonical pattern key.
    """
    if not models:
        raise ConfigError("rank_patterns needs at least one model")
    keys = matrix.pattern_keys
    sums = {key: 0 for key in keys}
    for model in models:
        coef = np.abs(np.asarray(model.coefficients, dtype=float))
        if coef.shape[0] != len(keys):
            raise ConfigError("model width does not match the matrix")
        order = sorted(range(len(keys)), key=lambda j: (-coef[j], keys[j]))
        for rank, j in enumerate(order, start=1):
            sums[keys[j]] += rank
    ordered = tuple(sorted(keys, key=lambda key: (sums[key], key)))
    return PatternRanking(ordered_keys=ordered, rank_sum=sums)
