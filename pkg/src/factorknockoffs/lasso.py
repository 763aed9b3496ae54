"""L1-penalized least squares by cyclic coordinate descent.

The objective is ``||y - A b||_2^2 + lambda * ||b||_1`` (no sample-size
normalization), so the stationarity conditions read ``2 a_j'(y - A b) =
lambda * sign(b_j)`` on the active set and ``|2 a_j'(y - A b)| <= lambda``
elsewhere.  Convergence is declared on the maximum violation of those
conditions, never on coefficient movement alone.  Also provides K-fold
cross-validation over a log-spaced penalty grid and a rank-checked
least-squares solver for refits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from .data import SeedSpec


@dataclass(frozen=True)
class LassoFit:
    """Solution of the L1 program at one penalty value."""

    beta: np.ndarray
    lam: float
    n_iterations: int
    kkt_violation: float
    objective: float
    converged: bool


@dataclass(frozen=True)
class CvResult:
    """Cross-validation curve over a descending penalty grid."""

    lambda_grid: np.ndarray
    cv_mse: np.ndarray
    lambda_star: float
    fold_assignment_seed: SeedSpec


@numba.njit(cache=True, fastmath=True)
def _kkt_max(a, r, beta, lam):  # pragma: no cover - exercised via wrappers
    n, m = a.shape
    worst = 0.0
    for j in range(m):
        g = 0.0
        for i in range(n):
            g += a[i, j] * r[i]
        g *= 2.0
        bj = beta[j]
        if bj > 0.0:
            v = abs(g - lam)
        elif bj < 0.0:
            v = abs(g + lam)
        else:
            v = abs(g) - lam
            if v < 0.0:
                v = 0.0
        if v > worst:
            worst = v
    return worst


@numba.njit(cache=True, fastmath=True)
def _cd_sweep(a, r, beta, col_ss, half_lam, active_only):
    """One cyclic pass; returns the largest scaled coefficient move."""
    n, m = a.shape
    max_move = 0.0
    for j in range(m):
        ss = col_ss[j]
        if ss == 0.0:
            continue
        bj_old = beta[j]
        if active_only and bj_old == 0.0:
            continue
        rho = ss * bj_old
        for i in range(n):
            rho += a[i, j] * r[i]
        if rho > half_lam:
            bj_new = (rho - half_lam) / ss
        elif rho < -half_lam:
            bj_new = (rho + half_lam) / ss
        else:
            bj_new = 0.0
        d = bj_old - bj_new
        if d != 0.0:
            for i in range(n):
                r[i] += a[i, j] * d
            beta[j] = bj_new
            move = abs(d) * np.sqrt(ss)
            if move > max_move:
                max_move = move
    return max_move


@numba.njit(cache=True, fastmath=True)
def _record_objective(r, beta, lam, obj_trace, sweeps):
    if sweeps < obj_trace.shape[0]:
        obj = 0.0
        for i in range(r.shape[0]):
            obj += r[i] * r[i]
        for j in range(beta.shape[0]):
            obj += lam * abs(beta[j])
        obj_trace[sweeps] = obj


@numba.njit(cache=True, fastmath=True)
def _cd_solve(a, y, lam, tol_abs, max_sweeps, beta, obj_trace):
    """Cyclic coordinate descent; returns (sweeps_used, kkt_violation).

    ``a`` must be Fortran-ordered so column access is contiguous.  ``beta``
    is updated in place (warm start in, solution out).  After every full
    sweep the exact KKT violation is evaluated; between full sweeps the
    current active set is iterated until coefficient movement is negligible.
    ``obj_trace[k]`` records the objective after sweep ``k``.
    """
    n, m = a.shape
    col_ss = np.empty(m)
    max_ss = 0.0
    for j in range(m):
        s = 0.0
        for i in range(n):
            s += a[i, j] * a[i, j]
        col_ss[j] = s
        if s > max_ss:
            max_ss = s
    r = y.copy()
    for j in range(m):
        bj = beta[j]
        if col_ss[j] == 0.0:
            beta[j] = 0.0  # zero column: coefficient pinned at zero
        elif bj != 0.0:
            for i in range(n):
                r[i] -= a[i, j] * bj
    half_lam = 0.5 * lam
    # movement threshold for the inner active-set loop: a coordinate move of
    # size d perturbs other gradients by at most 2 ||a_j|| ||a_k|| d
    inner_tol = 0.25 * tol_abs / (2.0 * np.sqrt(max_ss) + 1e-300)

    sweeps = 0
    kkt = np.inf
    while sweeps < max_sweeps:
        _cd_sweep(a, r, beta, col_ss, half_lam, False)
        _record_objective(r, beta, lam, obj_trace, sweeps)
        sweeps += 1
        kkt = _kkt_max(a, r, beta, lam)
        if kkt <= tol_abs:
            return sweeps, kkt
        while sweeps < max_sweeps:
            move = _cd_sweep(a, r, beta, col_ss, half_lam, True)
            _record_objective(r, beta, lam, obj_trace, sweeps)
            sweeps += 1
            if move <= inner_tol:
                break
    # ran out of sweeps: refresh the violation so the diagnostic reflects
    # the coefficients actually returned
    return sweeps, _kkt_max(a, r, beta, lam)


def _as_design(a) -> np.ndarray:
    a = np.asfortranarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("design must be a 2-d matrix")
    if not np.isfinite(a).all():
        raise ValueError("design contains non-finite entries")
    return a


def _gradient_scale(a, y) -> float:
    s = float(np.abs(a.T @ y).max()) if a.shape[1] else 0.0
    return s if s > 0 else 1.0


def lasso_cd(a, y, lam: float, tol: float = 1e-7, max_sweeps: int = 10_000,
             beta0=None, validate_descent: bool = False) -> LassoFit:
    """Solve ``min_b ||y - A b||^2 + lam * ||b||_1`` by coordinate descent.

    ``tol`` is relative to ``||A'y||_inf``; the returned fit carries the
    absolute KKT violation actually achieved.  Non-convergence within
    ``max_sweeps`` is not an exception: the fit is returned with
    ``converged=False`` so callers can decide.  ``beta0`` warm-starts the
    solve.  With ``validate_descent`` the objective is checked to be
    non-increasing across sweeps (cheap; used by the test suite).
    """
    a = _as_design(a)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if y.shape[0] != a.shape[0]:
        raise ValueError("y length does not match design rows")
    if not np.isfinite(y).all():
        raise ValueError("y contains non-finite entries")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if beta0 is None:
        beta = np.zeros(a.shape[1])
    else:
        beta = np.array(beta0, dtype=float).ravel()
        if beta.shape[0] != a.shape[1]:
            raise ValueError("beta0 length does not match design columns")
    tol_abs = tol * _gradient_scale(a, y)
    obj_trace = np.full(min(max_sweeps, 4096), np.nan)
    sweeps, kkt = _cd_solve(a, y, float(lam), tol_abs, max_sweeps, beta, obj_trace)
    if validate_descent:
        trace = obj_trace[: min(sweeps, obj_trace.shape[0])]
        rises = np.diff(trace) > 1e-9 * max(1.0, abs(float(trace[0])))
        if rises.any():
            raise AssertionError("objective increased during coordinate descent")
    resid = y - a @ beta
    objective = float(resid @ resid + lam * np.abs(beta).sum())
    return LassoFit(beta=beta, lam=float(lam), n_iterations=int(sweeps),
                    kkt_violation=float(kkt), objective=objective,
                    converged=bool(kkt <= tol_abs))


def kkt_check(a, y, beta, lam: float) -> float:
    """Maximum stationarity violation of ``beta`` for the L1 objective.

    For active coordinates this is ``|2 a_j'(y - A b) - lam * sign(b_j)|``;
    for inactive ones the excess of ``|2 a_j'(y - A b)|`` over ``lam``.
    """
    a = np.asarray(a, dtype=float)
    beta = np.asarray(beta, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    g = 2.0 * (a.T @ (y - a @ beta))
    active = beta != 0
    viol = np.where(active,
                    np.abs(g - lam * np.sign(beta)),
                    np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0


def lasso_cv(a, y, n_folds: int, grid_size: int, seed: SeedSpec,
             tol: float = 1e-4, max_sweeps: int = 300) -> CvResult:
    """K-fold cross-validation over a descending log-spaced penalty grid.

    The grid runs from ``lambda_max = 2 ||A'y||_inf`` (the smallest penalty
    with an all-zero solution) down three decades.  Folds come from a seeded
    permutation of the rows, so the result is a pure function of
    ``(a, y, n_folds, grid_size, seed)``.  ``lambda_star`` minimizes the mean
    held-out MSE; ties resolve to the larger (sparser) penalty.

    Fold fits are warm-started along the path and solved only to
    cross-validation accuracy (``tol``/``max_sweeps`` here are deliberately
    loose; the dense low-penalty tail converges slowly and its MSE only has
    to be roughly placed).  Within a fold the penalty is scaled by
    ``n_train / n`` so the penalty-per-sample matches the full problem; the
    grid and ``lambda_star`` stay in full-problem units.  Refit at
    ``lambda_star`` with :func:`lasso_cd` for a fully converged model.
    """
    a = _as_design(a)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    n = a.shape[0]
    if not 2 <= n_folds <= n:
        raise ValueError(f"n_folds={n_folds} outside [2, {n}]")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    lam_max = 2.0 * float(np.abs(a.T @ y).max())
    if lam_max <= 0:
        lam_max = 1.0  # degenerate all-zero response; any penalty ties
    grid = np.geomspace(lam_max, 1e-3 * lam_max, grid_size)

    perm = seed.generator().permutation(n)
    folds = np.array_split(perm, n_folds)
    fold_mse = np.empty((n_folds, grid_size))
    dummy = np.empty(0)
    for f, test_idx in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        a_tr = np.asfortranarray(a[mask])
        y_tr = y[mask]
        a_te = a[test_idx]
        y_te = y[test_idx]
        tol_abs = tol * _gradient_scale(a_tr, y_tr)
        lam_scale = a_tr.shape[0] / n
        beta = np.zeros(a.shape[1])
        for g, lam in enumerate(grid):
            _cd_solve(a_tr, y_tr, float(lam) * lam_scale, tol_abs, max_sweeps,
                      beta, dummy)
            err = y_te - a_te @ beta
            fold_mse[f, g] = float(err @ err) / len(test_idx)
    cv_mse = fold_mse.mean(axis=0)
    lambda_star = float(grid[int(np.argmin(cv_mse))])
    return CvResult(lambda_grid=grid, cv_mse=cv_mse, lambda_star=lambda_star,
                    fold_assignment_seed=seed)


def ols(a, y) -> np.ndarray:
    """Least-squares coefficients of ``y`` on ``a``, requiring full column rank.

    Rank is judged against the usual singular-value tolerance; on deficiency
    the error names the first redundant column (by QR pivot order).
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if a.ndim != 2:
        raise ValueError("design must be a 2-d matrix")
    n, m = a.shape
    if m > n:
        raise ValueError(f"more columns ({m}) than rows ({n})")
    beta, _, rank, sv = np.linalg.lstsq(a, y, rcond=None)
    tol = sv[0] * max(n, m) * np.finfo(float).eps if sv.size else 0.0
    if rank < m or (sv.size and sv[-1] <= tol):
        _, rdiag, pivots = scipy.linalg.qr(a, mode="economic", pivoting=True)
        d = np.abs(np.diag(rdiag))
        cutoff = d[0] * max(n, m) * np.finfo(float).eps if d.size else 0.0
        bad = np.flatnonzero(d <= cutoff)
        j = int(pivots[bad[0]]) if bad.size else int(pivots[-1])
        raise ValueError(f"design is rank deficient; offending pivot column {j}")
    return beta


def lasso_fit_to_json(fit: LassoFit) -> str:
    """Serialize a fit with the coefficient vector sparse-encoded."""
    idx = np.flatnonzero(fit.beta)
    payload = {
        "lambda": fit.lam,
        "length": int(fit.beta.shape[0]),
        "indices": idx.tolist(),
        "values": fit.beta[idx].tolist(),
        "n_iterations": fit.n_iterations,
        "kkt_violation": fit.kkt_violation,
        "objective": fit.objective,
        "converged": fit.converged,
    }
    return json.dumps(payload, sort_keys=True)


def lasso_fit_from_json(text: str) -> LassoFit:
    """Inverse of :func:`lasso_fit_to_json`."""
    payload = json.loads(text)
    beta = np.zeros(payload["length"])
    beta[np.asarray(payload["indices"], dtype=int)] = payload["values"]
    return LassoFit(beta=beta, lam=float(payload["lambda"]),
                    n_iterations=int(payload["n_iterations"]),
                    kkt_violation=float(payload["kkt_violation"]),
                    objective=float(payload["objective"]),
                    converged=bool(payload["converged"]))
