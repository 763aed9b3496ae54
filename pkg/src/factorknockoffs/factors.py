"""Latent factor estimation by principal components.

The design matrix is split into a low-rank common component and an
idiosyncratic remainder via a truncated singular value decomposition.  The
number of factors is chosen with the PC_p1 information criterion, and the
idiosyncratic noise level is the maximum-likelihood variance of the residual
entries under an i.i.d. Gaussian working model.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FactorEstimate:
    """Rank-``r_hat`` principal-component split ``x = c_hat + e_hat``.

    ``f_hat`` is scaled so that ``f_hat' f_hat / n`` is the identity, and
    ``lambda_hat = x' f_hat / n``, which makes ``c_hat = f_hat lambda_hat'``
    exactly the best rank-``r_hat`` approximation of ``x``.
    """

    r_hat: int
    f_hat: np.ndarray
    lambda_hat: np.ndarray
    c_hat: np.ndarray
    e_hat: np.ndarray
    sigma2_hat: float


def _validated(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.size == 0:
        raise ValueError("x must be a nonempty 2-d matrix")
    if not np.isfinite(x).all():
        raise ValueError("x contains non-finite entries")
    return x


def fit_pc(x, r: int) -> FactorEstimate:
    """Fit an ``r``-factor principal-component decomposition of ``x``.

    Keeps the ``r`` largest singular values of ``x`` and zeroes the rest, so
    ``c_hat`` is the rank-``r`` truncated SVD and ``e_hat = x - c_hat``.
    Singular vectors are oriented so that the largest-magnitude entry of each
    right singular vector is positive, which removes the sign ambiguity of the
    SVD and makes repeated fits reproducible.
    """
    x = _validated(x)
    n, p = x.shape
    if not 0 <= r <= min(n, p):
        raise ValueError(f"r={r} outside [0, {min(n, p)}]")
    if r == 0:
        zeros = np.zeros((n, p))
        return FactorEstimate(
            r_hat=0,
            f_hat=np.zeros((n, 0)),
            lambda_hat=np.zeros((p, 0)),
            c_hat=zeros,
            e_hat=x.copy(),
            sigma2_hat=noise_variance(x),
        )
    u, _, vt = np.linalg.svd(x, full_matrices=False)
    for k in range(r):
        j = int(np.argmax(np.abs(vt[k])))
        if vt[k, j] < 0:
            vt[k] *= -1.0
            u[:, k] *= -1.0
    f_hat = np.sqrt(n) * u[:, :r]
    lambda_hat = x.T @ f_hat / n
    c_hat = f_hat @ lambda_hat.T
    e_hat = x - c_hat
    return FactorEstimate(
        r_hat=r,
        f_hat=f_hat,
        lambda_hat=lambda_hat,
        c_hat=c_hat,
        e_hat=e_hat,
        sigma2_hat=noise_variance(e_hat),
    )


def noise_variance(e_hat) -> float:
    """Mean of squared entries: the Gaussian MLE of the residual variance."""
    e_hat = np.asarray(e_hat, dtype=float)
    if e_hat.size == 0:
        raise ValueError("empty residual matrix")
    return float(np.mean(e_hat**2))


def estimate_num_factors(x, r_max: int) -> int:
    """Select the number of factors in ``x`` with the PC_p1 criterion.

    For each candidate rank ``k`` in ``0..r_max`` the criterion value is::

        PC_p1(k) = V(k) + k * sigma_bar2 * ((n+p)/(n*p)) * ln(n*p/(n+p))

    where ``V(k)`` is the mean squared residual of the rank-``k``
    principal-component fit and ``sigma_bar2 = V(r_max)``.  Returns the
    ``k`` minimizing the criterion; ties break toward the smaller ``k``.
    Zero is an admissible answer, meaning no factor structure was found.
    """
    x = _validated(x)
    n, p = x.shape
    if not 1 <= r_max <= min(n, p) / 2:
        raise ValueError(f"r_max={r_max} outside [1, {min(n, p) / 2}]")
    d2 = np.linalg.svd(x, compute_uv=False) ** 2
    total = float(d2.sum())
    # V(k) = mean squared residual after removing the top-k components
    v = (total - np.concatenate([[0.0], np.cumsum(d2[:r_max])])) / (n * p)
    sigma_bar2 = v[r_max]
    penalty = sigma_bar2 * (n + p) / (n * p) * np.log(n * p / (n + p))
    pc = v + penalty * np.arange(r_max + 1)
    return int(np.argmin(pc))


def save_factor_estimate(fe: FactorEstimate, directory) -> None:
    """Write a factor estimate as CSV matrices plus a small JSON header."""
    os.makedirs(directory, exist_ok=True)
    for name in ("f_hat", "lambda_hat", "c_hat", "e_hat"):
        np.savetxt(os.path.join(directory, f"{name}.csv"), getattr(fe, name),
                   delimiter=",", fmt="%.17g")
    header = {"r_hat": fe.r_hat, "sigma2_hat": fe.sigma2_hat}
    with open(os.path.join(directory, "header.json"), "w") as fh:
        json.dump(header, fh, sort_keys=True)


def load_factor_estimate(directory) -> FactorEstimate:
    """Read back a factor estimate written by :func:`save_factor_estimate`."""
    with open(os.path.join(directory, "header.json")) as fh:
        header = json.load(fh)
    mats = {}
    for name in ("f_hat", "lambda_hat", "c_hat", "e_hat"):
        m = np.loadtxt(os.path.join(directory, f"{name}.csv"), delimiter=",", ndmin=2)
        mats[name] = m
    r = int(header["r_hat"])
    if r == 0:
        n = mats["c_hat"].shape[0]
        p = mats["c_hat"].shape[1]
        mats["f_hat"] = np.zeros((n, 0))
        mats["lambda_hat"] = np.zeros((p, 0))
    return FactorEstimate(r_hat=r, sigma2_hat=float(header["sigma2_hat"]), **mats)
