"""Monte Carlo benchmark of the selection procedure on four synthetic designs.

Designs share one skeleton: a factor-structured (or deliberately
misspecified) design matrix with unit-norm columns, a sparse coefficient
vector with random signs, and a linear or nonlinear response.  Each
replication runs the full pipeline (factor estimation, knockoff draw,
statistic, both thresholds) and the report aggregates false discovery and
power rates across replications.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .data import Dataset, SeedSpec, center_columns, rescale_columns
from .factors import estimate_num_factors, fit_pc
from .forest import ForestConfig, fit_forest, mda
from .inference import fdp, knockoff_threshold, lcd, mda_diff, select, tdp
from .knockoffs import augment, generate, generate_oracle
from .lasso import lasso_cd, lasso_cv
from .procedure import DEFAULT_FOLDS, DEFAULT_GRID

DESIGNS = ("d1", "d2", "d3", "d4", "real_x")

# sub-stream codes within one replication
_STREAM_DATA = 0
_STREAM_KNOCKOFF = 1
_STREAM_CV = 2
_STREAM_FOREST = 3
_STREAM_MDA = 4


@dataclass(frozen=True)
class DesignSpec:
    """Parameters of one simulation setting."""

    design: str
    n: int
    p: int
    s: int
    amplitude: float = 4.0
    c: float = 0.2
    r: int = 3
    theta: float = 1.0
    rho: float = 0.0
    nu_df: int = 8
    q: float = 0.2
    reps: int = 100
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))
    oracle_knockoffs: bool = False
    r_max: int = 8
    dataset: Dataset | None = None  # design matrix source for real_x

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.design == "real_x":
            if self.dataset is None:
                raise ValueError("real_x design requires a dataset")
            object.__setattr__(self, "n", self.dataset.n)
            object.__setattr__(self, "p", self.dataset.p)
            if self.oracle_knockoffs:
                raise ValueError("oracle knockoffs are undefined for real_x")
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")
        if not 0 < self.s <= self.p:
            raise ValueError(f"s={self.s} outside (0, p={self.p}]")
        if self.amplitude <= 0 or self.c <= 0 or self.theta <= 0:
            raise ValueError("amplitude, c, and theta must be positive")
        if self.design == "d3":
            if self.r != 0:
                raise ValueError("design d3 forces r=0")
            if not 0 <= self.rho < 1:
                raise ValueError("rho must lie in [0, 1)")
        else:
            if self.rho != 0.0:
                raise ValueError("rho applies to design d3 only")
            if self.design in ("d1", "d2", "d4") and self.r < 1:
                raise ValueError("designs d1/d2/d4 need r >= 1")
        if self.design == "d2" and self.nu_df <= 4:
            raise ValueError("nu_df must exceed 4 (finite error variance)")
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if self.r_max < 1:
            raise ValueError("r_max must be positive")


@dataclass(frozen=True)
class DesignDraw:
    """One simulated data set plus the ground truth behind it."""

    x: np.ndarray
    y: np.ndarray
    beta: np.ndarray
    support: tuple[int, ...]
    c0: np.ndarray | None
    sigma2_0: float | None
    signal: np.ndarray


@dataclass(frozen=True)
class RepRecord:
    """Selection outcome of one replication at both thresholds."""

    rep_index: int
    fdp: float
    tdp: float
    fdp_plus: float
    tdp_plus: float
    r2: float
    r_hat: int
    n_selected: int
    n_selected_plus: int
    failed: bool = False
    message: str = ""


@dataclass(frozen=True)
class SimulationReport:
    """Monte Carlo aggregates over completed replications."""

    fdr: float
    power: float
    fdr_plus: float
    power_plus: float
    r2_mean: float
    reps_completed: int
    per_rep: tuple[RepRecord, ...]


def _factor_design(rng, n, p, r, theta, loadings=None, errors=None):
    """Raw factor design: common component plus scaled idiosyncratic noise.

    Draw order is fixed (factors, loadings, errors) so results are stable for
    a given stream.  ``loadings``/``errors`` can be supplied to pin parts of
    the construction.
    """
    f = rng.standard_normal((n, r))
    lam = rng.standard_normal((p, r)) if loadings is None else loadings
    e = rng.standard_normal((n, p)) if errors is None else errors
    c0 = f @ lam.T
    return c0 + math.sqrt(r * theta) * e, c0


def _fat_tail_errors(rng, n, p, nu):
    """Per-column chi-square mixing: heavy tails plus within-column dependence."""
    u = rng.standard_normal((n, p))
    chi2 = rng.chisquare(nu, size=p)
    return u * ((nu - 2) / chi2)[None, :]


def _ar1_rows(rng, n, p, rho):
    """Rows i.i.d. N(0, Sigma) with Sigma_jk = rho^|j-k|, built by recursion."""
    g = rng.standard_normal((n, p))
    if rho == 0.0:
        return g
    out = np.empty((n, p))
    out[:, 0] = g[:, 0]
    scale = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        out[:, j] = rho * out[:, j - 1] + scale * g[:, j]
    return out


def _sparse_beta(rng, p, s, amplitude):
    support = np.sort(rng.choice(p, size=s, replace=False))
    signs = 2.0 * rng.integers(0, 2, size=s) - 1.0
    beta = np.zeros(p)
    beta[support] = amplitude * signs
    return beta, tuple(int(j) for j in support)


def gen_design(spec: DesignSpec, rep_index: int) -> DesignDraw:
    """Generate the data set for replication ``rep_index`` of ``spec``.

    The design matrix is built on its raw scale, columns are rescaled to
    unit Euclidean norm, and the response is simulated from the rescaled
    matrix.  ``c0``/``sigma2_0`` report the raw-scale common component and
    error variance (the inputs an oracle knockoff draw needs); they are None
    for the real-design study, whose ground truth is unknown.
    """
    rng = spec.seed.child(rep_index).child(_STREAM_DATA).generator()
    n, p = spec.n, spec.p

    if spec.design == "d1":
        x_raw, c0 = _factor_design(rng, n, p, spec.r, spec.theta)
        sigma2_0 = spec.r * spec.theta
    elif spec.design == "d2":
        f = rng.standard_normal((n, spec.r))
        lam = rng.standard_normal((p, spec.r))
        errors = _fat_tail_errors(rng, n, p, spec.nu_df)
        c0 = f @ lam.T
        x_raw = c0 + math.sqrt(spec.r * spec.theta) * errors
        sigma2_0 = spec.r * spec.theta * (spec.nu_df - 2) / (spec.nu_df - 4)
    elif spec.design == "d3":
        x_raw = _ar1_rows(rng, n, p, spec.rho)  # Lambda = 0 and r*theta = 1
        c0 = np.zeros((n, p))
        sigma2_0 = 1.0
    elif spec.design == "d4":
        x_raw, c0 = _factor_design(rng, n, p, spec.r, spec.theta)
        sigma2_0 = spec.r * spec.theta
    else:  # real_x
        d, _ = rescale_columns(center_columns(spec.dataset))
        x_raw, c0, sigma2_0 = d.x, None, None

    norms = np.linalg.norm(x_raw, axis=0)
    if (norms == 0).any():
        raise ValueError("generated design has a zero-norm column")
    x = x_raw / norms

    beta, support = _sparse_beta(rng, p, spec.s, spec.amplitude)
    xb = x @ beta
    signal = np.sin(xb) * np.exp(xb) if spec.design == "d4" else xb
    y = signal + math.sqrt(spec.c) * rng.standard_normal(n)
    return DesignDraw(x=x, y=y, beta=beta, support=support, c0=c0,
                      sigma2_0=sigma2_0, signal=signal)


def _unit_columns(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=0)
    norms[norms == 0] = 1.0
    return m / norms


def run_rep(spec: DesignSpec, rep_index: int) -> RepRecord:
    """Run one full replication: data, knockoffs, statistic, both thresholds."""
    rep_seed = spec.seed.child(rep_index)
    try:
        draw = gen_design(spec, rep_index)
        k_seed = rep_seed.child(_STREAM_KNOCKOFF)
        if spec.oracle_knockoffs:
            km = generate_oracle(draw.c0, draw.sigma2_0, k_seed)
            # the data columns were rescaled to unit norm, so the knockoff
            # copy gets the same per-column treatment (by its own norms,
            # keeping the pair exchangeable)
            x_tilde = _unit_columns(km.x_tilde)
            a = np.hstack([draw.x, x_tilde])
            r_hat = spec.r
        else:
            r_cap = min(spec.r_max, max(1, min(spec.n, spec.p) // 2))
            r_hat = estimate_num_factors(draw.x, r_cap)
            fe = fit_pc(draw.x, r_hat)
            km = generate(fe.c_hat, fe.sigma2_hat, k_seed)
            a = augment(draw.x, km)

        if spec.design == "d4":
            cfg = ForestConfig(seed=rep_seed.child(_STREAM_FOREST))
            model = fit_forest(a, draw.y, cfg)
            report = mda(model, a, draw.y, rep_seed.child(_STREAM_MDA))
            w = mda_diff(report.importance)
        else:
            cv = lasso_cv(a, draw.y, n_folds=DEFAULT_FOLDS, grid_size=DEFAULT_GRID,
                          seed=rep_seed.child(_STREAM_CV))
            fit = lasso_cd(a, draw.y, cv.lambda_star)
            w = lcd(fit.beta)

        sel = select(w, knockoff_threshold(w, spec.q, plus=False), spec.q, False)
        sel_plus = select(w, knockoff_threshold(w, spec.q, plus=True), spec.q, True)
        r2 = float(np.corrcoef(draw.signal, draw.y)[0, 1] ** 2)
        return RepRecord(
            rep_index=rep_index,
            fdp=fdp(sel.selected, draw.support),
            tdp=tdp(sel.selected, draw.support),
            fdp_plus=fdp(sel_plus.selected, draw.support),
            tdp_plus=tdp(sel_plus.selected, draw.support),
            r2=r2,
            r_hat=int(r_hat),
            n_selected=len(sel.selected),
            n_selected_plus=len(sel_plus.selected),
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        return RepRecord(rep_index=rep_index, fdp=float("nan"), tdp=float("nan"),
                         fdp_plus=float("nan"), tdp_plus=float("nan"),
                         r2=float("nan"), r_hat=-1, n_selected=0,
                         n_selected_plus=0, failed=True, message=str(exc))


def run_monte_carlo(spec: DesignSpec, parallelism: int | None = None) -> SimulationReport:
    """Run all replications of ``spec`` and aggregate.

    Replications are independent (each owns a derived stream), so they can
    run in a worker pool; records are collected in replication order and the
    aggregates are means over completed (non-failed) replications.
    """
    n_jobs = parallelism if parallelism else (os.cpu_count() or 1)
    if n_jobs > 1 and spec.reps > 1:
        records = Parallel(n_jobs=min(n_jobs, spec.reps))(
            delayed(run_rep)(spec, i) for i in range(spec.reps)
        )
    else:
        records = [run_rep(spec, i) for i in range(spec.reps)]
    good = [rec for rec in records if not rec.failed]
    if not good:
        raise RuntimeError("every replication failed: " + records[0].message)

    def mean(attr):
        return float(np.mean([getattr(rec, attr) for rec in good]))

    return SimulationReport(
        fdr=mean("fdp"), power=mean("tdp"),
        fdr_plus=mean("fdp_plus"), power_plus=mean("tdp_plus"),
        r2_mean=mean("r2"), reps_completed=len(good),
        per_rep=tuple(records),
    )


_CSV_COLUMNS = ["design", "n", "p", "s", "A", "c", "r", "theta", "q", "reps",
                "fdr", "power", "fdr_plus", "power_plus", "r2"]


def report_to_csv(spec: DesignSpec, report: SimulationReport, path) -> None:
    """One-row summary in the fixed benchmark column order."""
    row = [spec.design, spec.n, spec.p, spec.s, spec.amplitude, spec.c, spec.r,
           spec.theta, spec.q, spec.reps, report.fdr, report.power,
           report.fdr_plus, report.power_plus, report.r2_mean]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def report_to_json(spec: DesignSpec, report: SimulationReport, path) -> None:
    """Full report (settings, aggregates, per-replication records) as JSON."""
    spec_dict = asdict(spec)
    spec_dict["seed"] = {"master_seed": spec.seed.master_seed,
                         "stream_id": spec.seed.stream_id}
    spec_dict.pop("dataset")
    payload = {
        "spec": spec_dict,
        "aggregates": {
            "fdr": report.fdr, "power": report.power,
            "fdr_plus": report.fdr_plus, "power_plus": report.power_plus,
            "r2_mean": report.r2_mean, "reps_completed": report.reps_completed,
        },
        "per_rep": [asdict(rec) for rec in report.per_rep],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
