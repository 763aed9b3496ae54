"""The end-to-end knockoff selection pipeline on a single data set.

Steps: estimate the factor structure of the design, draw an empirical
knockoff copy, fit the chosen statistic on the augmented design, and apply
the knockoff filter at level ``q``.  This is the routine the simulation lab,
the forecaster, and the command line all delegate to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, SeedSpec, center_columns, rescale_columns
from .factors import estimate_num_factors, fit_pc
from .forest import ForestConfig, fit_forest, mda
from .inference import SelectionResult, WStats, knockoff_threshold, lcd, mda_diff, select
from .knockoffs import augment, generate
from .lasso import lasso_cd, lasso_cv

DEFAULT_R_MAX = 8
DEFAULT_FOLDS = 10
DEFAULT_GRID = 20


@dataclass(frozen=True)
class SelectionDiagnostics:
    """Side facts from one selection run (useful for reports and debugging)."""

    r_hat: int
    sigma2_hat: float
    lambda_star: float | None
    w: WStats


def knockoff_select(
    x,
    y,
    q: float,
    seed: SeedSpec,
    plus: bool = False,
    statistic: str = "lcd",
    r_max: int = DEFAULT_R_MAX,
    n_folds: int = DEFAULT_FOLDS,
    grid_size: int = DEFAULT_GRID,
    standardize: bool = False,
    n_trees: int = 500,
) -> tuple[SelectionResult, SelectionDiagnostics]:
    """Run the full selection procedure on ``(x, y)`` at target level ``q``.

    ``statistic`` is ``"lcd"`` (cross-validated Lasso on the augmented
    design) or ``"mda"`` (random-forest permutation importance, for
    nonlinear responses).  With ``standardize`` the columns of ``x`` and the
    response are centered and the columns rescaled to unit norm first, the
    convention for observational data; simulated designs arrive already
    scaled.  The knockoff draw, CV folds, and forest randomness all derive
    from ``seed``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("design/response shape mismatch")
    if x.shape[0] < 4:
        raise ValueError("need at least 4 rows")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if statistic not in ("lcd", "mda"):
        raise ValueError(f"unknown statistic {statistic!r}")

    if standardize:
        names = tuple(f"c{j}" for j in range(x.shape[1]))
        d, _ = rescale_columns(center_columns(Dataset(x, y, names)))
        x, y = d.x, d.y

    r_cap = min(r_max, max(1, min(x.shape) // 2))
    r_hat = estimate_num_factors(x, r_cap)
    fe = fit_pc(x, r_hat)
    km = generate(fe.c_hat, fe.sigma2_hat, seed.child(0))
    a = augment(x, km)

    lambda_star = None
    if statistic == "lcd":
        cv = lasso_cv(a, y, n_folds=n_folds, grid_size=grid_size, seed=seed.child(1))
        lambda_star = cv.lambda_star
        fit = lasso_cd(a, y, cv.lambda_star)
        w = lcd(fit.beta)
    else:
        cfg = ForestConfig(seed=seed.child(2), n_trees=n_trees)
        model = fit_forest(a, y, cfg)
        report = mda(model, a, y, seed.child(3))
        w = mda_diff(report.importance)

    threshold = knockoff_threshold(w, q, plus)
    result = select(w, threshold, q, plus)
    diag = SelectionDiagnostics(r_hat=r_hat, sigma2_hat=fe.sigma2_hat,
                                lambda_star=lambda_star, w=w)
    return result, diag


def selection_frequencies(
    x,
    y,
    q: float,
    seed: SeedSpec,
    draws: int,
    **kwargs,
) -> tuple[SelectionResult, np.ndarray]:
    """Repeat the selection over ``draws`` independent knockoff draws.

    Returns the first draw's result (the point selection) together with the
    per-variable selection frequency across draws.
    """
    if draws < 1:
        raise ValueError("draws must be positive")
    p = np.asarray(x).shape[1]
    counts = np.zeros(p)
    first = None
    for d in range(draws):
        result, _ = knockoff_select(x, y, q, seed.child(d), **kwargs)
        if first is None:
            first = result
        counts[list(result.selected)] += 1
    return first, counts / draws
