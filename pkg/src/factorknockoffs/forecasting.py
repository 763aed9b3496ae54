"""Rolling-window one-step-ahead forecasting bench.

Four forecasters share the protocol: at each origin the most recent
``window`` observations are used to fit a model and predict the next value
of the target.  The bench reports per-method predictions, RMSE, and
Diebold-Mariano comparisons of squared forecast errors.

Methods
-------
``ar``     intercept + first lag of the target.
``far``    ar plus principal-component factors of the predictors.
``lasso``  L1 regression on lag, factors, and all predictors (CV penalty).
``ipad``   knockoff selection on AR-residualized predictors, then a
           least-squares refit on the selected columns; averaged over many
           knockoff draws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import Dataset, SeedSpec, center_columns, rescale_columns
from .factors import estimate_num_factors, fit_pc
from .inference import knockoff_threshold, lcd, select
from .knockoffs import augment, generate
from .lasso import lasso_cd, lasso_cv, ols
from .procedure import DEFAULT_FOLDS, DEFAULT_GRID

METHODS = ("ar", "far", "lasso", "ipad")
_FACTOR_CAP = 8

# per-origin sub-stream codes
_STREAM_IPAD = 0
_STREAM_LASSO = 1


@dataclass(frozen=True)
class SeriesPanel:
    """A dated panel: target series plus named predictor series."""

    dates: tuple[str, ...]
    values: np.ndarray  # T x (1 + p); column 0 is the target
    target_name: str
    predictor_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "predictor_names", tuple(self.predictor_names))
        if values.ndim != 2 or values.shape[1] < 2:
            raise ValueError("panel needs a target plus at least one predictor")
        if len(self.dates) != values.shape[0]:
            raise ValueError("dates length does not match panel rows")
        if len(set(self.dates)) != len(self.dates):
            raise ValueError("dates must be unique (rows in time order)")
        if not np.isfinite(values).all():
            raise ValueError("panel contains missing or non-finite values")
        if len(self.predictor_names) != values.shape[1] - 1:
            raise ValueError("predictor_names length mismatch")

    @property
    def target(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def predictors(self) -> np.ndarray:
        return self.values[:, 1:]


@dataclass(frozen=True)
class DmResult:
    statistic: float
    stars: int


@dataclass(frozen=True)
class ForecastReport:
    """Aligned predictions, accuracy, and pairwise forecast comparisons."""

    forecast_dates: tuple[str, ...]
    actuals: np.ndarray
    predictions: dict
    rmse: dict
    dm: dict
    selection_frequency: np.ndarray | None = None


def _ar1_coefs(y: np.ndarray) -> tuple[float, float]:
    """Intercept and slope of y_t on y_{t-1}, with the degenerate case -> (mean, 0)."""
    lead, lag = y[1:], y[:-1]
    lag_c = lag - lag.mean()
    denom = float(lag_c @ lag_c)
    rho = float(lag_c @ (lead - lead.mean())) / denom if denom > 0 else 0.0
    alpha = float(lead.mean() - rho * lag.mean())
    return alpha, rho


def ar1_step(y_window) -> float:
    """One-step forecast from an AR(1) fit on the window."""
    y = np.asarray(y_window, dtype=float).ravel()
    if y.shape[0] < 3:
        raise ValueError("window too short for an AR(1) fit")
    alpha, rho = _ar1_coefs(y)
    return alpha + rho * float(y[-1])


def _window_factors(z: np.ndarray, r_max: int = _FACTOR_CAP) -> np.ndarray:
    """Principal-component factor series of the window's predictors.

    Columns are centered and rescaled to unit norm before extraction; the
    number of factors comes from the PC_p1 criterion (possibly zero, in
    which case the block is empty).  ``r_max=0`` disables the factor block
    outright.
    """
    n, p = z.shape
    if r_max == 0:
        return np.zeros((n, 0))
    names = tuple(f"z{j}" for j in range(p))
    d, _ = rescale_columns(center_columns(Dataset(z, np.zeros(n), names)))
    cap = min(r_max, max(1, min(n, p) // 2))
    m = estimate_num_factors(d.x, cap)
    if m == 0:
        return np.zeros((n, 0))
    return fit_pc(d.x, m).f_hat


def _ols_drop_collinear(design: np.ndarray, y: np.ndarray,
                        protected: int) -> tuple[np.ndarray, list[int]]:
    """Least squares, dropping non-protected columns (highest index first)
    until the design has full column rank.  Returns (beta, kept indices)."""
    keep = list(range(design.shape[1]))
    while True:
        try:
            return ols(design[:, keep], y), keep
        except ValueError:
            droppable = [j for j in keep[protected:]]
            if not droppable:
                raise
            keep.remove(droppable[-1])


def far_step(y_window, z_window, r_max: int = _FACTOR_CAP) -> float:
    """AR(1) augmented with lagged principal-component factors."""
    y = np.asarray(y_window, dtype=float).ravel()
    z = np.asarray(z_window, dtype=float)
    if z.shape[0] != y.shape[0]:
        raise ValueError("target/predictor window length mismatch")
    f = _window_factors(z, r_max)
    if f.shape[1] == 0:
        return ar1_step(y)
    rows = y.shape[0] - 1
    design = np.column_stack([np.ones(rows), y[:-1], f[:-1]])
    beta, kept = _ols_drop_collinear(design, y[1:], protected=2)
    x_last = np.concatenate([[1.0, y[-1]], f[-1]])[kept]
    return float(x_last @ beta)


def lasso_step(y_window, z_window, seed: SeedSpec,
               n_folds: int = DEFAULT_FOLDS, r_max: int = _FACTOR_CAP) -> float:
    """L1 regression of the target on lag, factors, and all predictors.

    Columns are centered and scaled for the fit (the intercept is implicit
    and unpenalized); the penalty is chosen by cross-validation within the
    window.
    """
    y = np.asarray(y_window, dtype=float).ravel()
    z = np.asarray(z_window, dtype=float)
    f = _window_factors(z, r_max)
    design_full = np.column_stack([y[:-1], f[:-1], z[:-1]])
    x_last = np.concatenate([[y[-1]], f[-1], z[-1]])
    target = y[1:]

    mu = design_full.mean(axis=0)
    centered = design_full - mu
    scales = np.linalg.norm(centered, axis=0)
    usable = scales > 0
    a = centered[:, usable] / scales[usable]
    y_mean = target.mean()
    yc = target - y_mean
    if a.shape[1] == 0:
        return float(y_mean)
    cv = lasso_cv(a, yc, n_folds=min(n_folds, a.shape[0]), grid_size=DEFAULT_GRID,
                  seed=seed)
    fit = lasso_cd(a, yc, cv.lambda_star)
    coef = np.zeros(design_full.shape[1])
    coef[usable] = fit.beta / scales[usable]
    return float(y_mean + (x_last - mu) @ coef)


def _residualize_on_lag(mat: np.ndarray, lag: np.ndarray) -> np.ndarray:
    """Residuals of each column of ``mat`` on (1, lag)."""
    lag_c = lag - lag.mean()
    denom = float(lag_c @ lag_c)
    centered = mat - mat.mean(axis=0)
    if denom <= 0:
        return centered
    slopes = lag_c @ centered / denom
    return centered - np.outer(lag_c, slopes)


def ipad_step(y_window, z_window, seed: SeedSpec, draws: int = 100,
              q: float = 0.2, plus: bool = False, r_max: int = _FACTOR_CAP,
              n_folds: int = DEFAULT_FOLDS,
              return_frequencies: bool = False):
    """Knockoff-selection forecast, averaged over independent knockoff draws.

    The target's own lag is kept in the model by construction: both the
    target and each predictor column are first residualized on (1, lag),
    the selection procedure runs on the residual data, and the forecast comes
    from a least-squares refit of the target on (1, lag, selected predictors).
    A draw that selects nothing falls back to the plain AR(1) refit.
    """
    if draws < 1:
        raise ValueError("draws must be positive")
    y = np.asarray(y_window, dtype=float).ravel()
    z = np.asarray(z_window, dtype=float)
    if z.shape[0] != y.shape[0]:
        raise ValueError("target/predictor window length mismatch")
    rows = y.shape[0] - 1
    lag = y[:-1]
    lead = y[1:]
    z_lag = z[:-1]

    e_y = _residualize_on_lag(lead[:, None], lag).ravel()
    e_z = _residualize_on_lag(z_lag, lag)

    norms = np.linalg.norm(e_z, axis=0)
    usable = np.flatnonzero(norms > 0)
    e_z_std = e_z[:, usable] / norms[usable]

    cap = min(r_max, max(1, min(e_z_std.shape) // 2))
    r_hat = estimate_num_factors(e_z_std, cap)
    fe = fit_pc(e_z_std, r_hat)

    freq = np.zeros(z.shape[1])
    forecasts = np.empty(draws)
    for d in range(draws):
        km = generate(fe.c_hat, fe.sigma2_hat, seed.child(d).child(0))
        a = augment(e_z_std, km)
        cv = lasso_cv(a, e_y, n_folds=min(n_folds, rows), grid_size=DEFAULT_GRID,
                      seed=seed.child(d).child(1))
        fit = lasso_cd(a, e_y, cv.lambda_star)
        w = lcd(fit.beta)
        sel = select(w, knockoff_threshold(w, q, plus), q, plus)
        chosen = usable[list(sel.selected)] if sel.selected else np.empty(0, dtype=int)
        freq[chosen] += 1

        design = np.column_stack([np.ones(rows), lag, z_lag[:, chosen]])
        beta, kept = _ols_drop_collinear(design, lead, protected=2)
        x_last = np.concatenate([[1.0, y[-1]], z[-1, chosen]])[kept]
        forecasts[d] = float(x_last @ beta)
    prediction = float(forecasts.mean())
    if return_frequencies:
        return prediction, freq / draws
    return prediction


def roll(panel: SeriesPanel, window_size: int = 120, methods=METHODS,
         seed: SeedSpec = SeedSpec(0), draws: int = 100, q: float = 0.2,
         plus: bool = False) -> ForecastReport:
    """Roll each method through the panel, forecasting one step ahead.

    Origin ``t`` uses rows ``t - window_size + 1 .. t`` (never anything at or
    after the forecast date) to predict row ``t + 1``; every origin of every
    method draws from its own derived stream.
    """
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    t_total = panel.values.shape[0]
    if t_total <= window_size:
        raise ValueError(f"panel length {t_total} too short for window {window_size}")
    origins = range(window_size - 1, t_total - 1)
    horizon = len(origins)

    y_all = panel.target
    z_all = panel.predictors
    predictions = {m: np.empty(horizon) for m in methods}
    freqs = np.zeros((horizon, z_all.shape[1])) if "ipad" in methods else None

    for k, t in enumerate(origins):
        lo = t - window_size + 1
        y_win = y_all[lo:t + 1]
        z_win = z_all[lo:t + 1]
        origin_seed = seed.child(k)
        for m in methods:
            if m == "ar":
                predictions[m][k] = ar1_step(y_win)
            elif m == "far":
                predictions[m][k] = far_step(y_win, z_win)
            elif m == "lasso":
                predictions[m][k] = lasso_step(y_win, z_win,
                                               origin_seed.child(_STREAM_LASSO))
            else:
                pred, f = ipad_step(y_win, z_win, origin_seed.child(_STREAM_IPAD),
                                    draws=draws, q=q, plus=plus,
                                    return_frequencies=True)
                predictions[m][k] = pred
                freqs[k] = f

    actuals = y_all[window_size:]
    forecast_dates = panel.dates[window_size:]
    rmse = {m: float(np.sqrt(np.mean((actuals - predictions[m]) ** 2)))
            for m in methods}
    dm = {}
    if horizon >= 2:  # a single forecast has no loss-differential variance
        for i, m1 in enumerate(methods):
            for m2 in methods[i + 1:]:
                dm[f"{m1}_vs_{m2}"] = dm_test(actuals - predictions[m1],
                                              actuals - predictions[m2])
    return ForecastReport(forecast_dates=forecast_dates, actuals=actuals,
                          predictions=predictions, rmse=rmse, dm=dm,
                          selection_frequency=freqs)


def dm_test(e1, e2) -> DmResult:
    """Diebold-Mariano comparison of squared one-step forecast errors.

    The loss differential is ``d_t = e1_t^2 - e2_t^2``; the statistic is
    ``mean(d) / sqrt(var(d) / T)`` with the T-1 sample variance and no lag
    correction (appropriate for one-step-ahead, serially uncorrelated
    differentials).  Stars mark two-sided normal significance at 5%, 1%,
    and 0.1%.
    """
    e1 = np.asarray(e1, dtype=float).ravel()
    e2 = np.asarray(e2, dtype=float).ravel()
    if e1.shape != e2.shape:
        raise ValueError("error vectors must have equal length")
    t = e1.shape[0]
    if t < 2:
        raise ValueError("need at least 2 forecast errors")
    d = e1**2 - e2**2
    mean = float(d.mean())
    var = float(d.var(ddof=1))
    if var == 0.0:
        if mean == 0.0:
            return DmResult(statistic=0.0, stars=0)
        return DmResult(statistic=float(np.sign(mean)) * float("inf"), stars=3)
    stat = mean / np.sqrt(var / t)
    stars = int(abs(stat) > 1.96) + int(abs(stat) > 2.576) + int(abs(stat) > 3.291)
    return DmResult(statistic=float(stat), stars=stars)


def load_panel_csv(path, target_name: str) -> SeriesPanel:
    """Read a dated panel CSV (date column plus named series)."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 3:
        raise ValueError(f"{path}: panel too short")
    header = [cell.strip() for cell in rows[0]]
    if header[0].lower() != "date":
        raise ValueError(f"{path}: first column must be 'date'")
    names = header[1:]
    if target_name not in names:
        raise ValueError(f"{path}: target {target_name!r} not found")
    t_idx = names.index(target_name)
    dates = [row[0].strip() for row in rows[1:]]
    data = np.array([[float(cell) for cell in row[1:]] for row in rows[1:]])
    order = [t_idx] + [j for j in range(len(names)) if j != t_idx]
    values = data[:, order]
    predictor_names = tuple(names[j] for j in order[1:])
    return SeriesPanel(dates=tuple(dates), values=values,
                       target_name=target_name, predictor_names=predictor_names)


def report_to_csvs(report: ForecastReport, panel: SeriesPanel, out_dir) -> None:
    """Write prediction, RMSE, DM, and (if present) frequency CSVs."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    methods = list(report.predictions)
    with open(os.path.join(out_dir, "predictions.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "actual", *methods])
        for i, date in enumerate(report.forecast_dates):
            writer.writerow([date, format(report.actuals[i], ".17g"),
                             *[format(report.predictions[m][i], ".17g")
                               for m in methods]])
    with open(os.path.join(out_dir, "rmse.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "rmse"])
        for m in methods:
            writer.writerow([m, format(report.rmse[m], ".17g")])
    with open(os.path.join(out_dir, "dm.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "statistic", "stars"])
        for pair, res in report.dm.items():
            writer.writerow([pair, format(res.statistic, ".17g"), "*" * res.stars])
    if report.selection_frequency is not None:
        with open(os.path.join(out_dir, "selection_frequency.csv"), "w",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", *panel.predictor_names])
            for i, date in enumerate(report.forecast_dates):
                writer.writerow([date, *[format(v, ".17g")
                                         for v in report.selection_frequency[i]]])
