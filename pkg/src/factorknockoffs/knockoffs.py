"""Knockoff matrix construction by resampling the factor-model error term.

A knockoff copy of the design is the common component plus a fresh draw of
i.i.d. Gaussian noise.  When the common component and noise variance are the
true ones (available in simulations) the copy is an oracle knockoff matrix;
when they come from a principal-component fit it is an empirical one.  In
both cases the construction consumes nothing but ``(c, sigma2, seed)``, so it
is conditionally independent of the response by design.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import SeedSpec


@dataclass(frozen=True)
class KnockoffMatrix:
    """A synthetic copy of the design matrix plus its generation record."""

    x_tilde: np.ndarray
    source: str  # "oracle" or "empirical"
    seed: SeedSpec
    sigma2_used: float

    def __post_init__(self):
        if self.source not in ("oracle", "empirical"):
            raise ValueError(f"unknown source {self.source!r}")


def _draw(c, sigma2: float, seed: SeedSpec, source: str) -> KnockoffMatrix:
    c = np.asarray(c, dtype=float)
    if c.ndim != 2:
        raise ValueError("common component must be a 2-d matrix")
    if not np.isfinite(c).all():
        raise ValueError("common component contains non-finite entries")
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    rng = seed.generator()
    x_tilde = c + np.sqrt(sigma2) * rng.standard_normal(c.shape)
    return KnockoffMatrix(x_tilde=x_tilde, source=source, seed=seed,
                          sigma2_used=float(sigma2))


def generate(c, sigma2: float, seed: SeedSpec) -> KnockoffMatrix:
    """Empirical knockoffs: estimated common component plus N(0, sigma2) noise."""
    return _draw(c, sigma2, seed, "empirical")


def generate_oracle(c0, sigma2_0: float, seed: SeedSpec) -> KnockoffMatrix:
    """Oracle knockoffs built from the true common component and noise variance."""
    if sigma2_0 <= 0:
        raise ValueError("oracle noise variance must be positive")
    return _draw(c0, sigma2_0, seed, "oracle")


def augment(x, k: KnockoffMatrix) -> np.ndarray:
    """Stack the design and its knockoff copy into an ``n x 2p`` matrix.

    Column ``j`` of the result is column ``j`` of ``x``; column ``p + j`` is
    the corresponding knockoff column.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("x must be a 2-d matrix with at least one column")
    if k.x_tilde.shape != x.shape:
        raise ValueError(
            f"shape mismatch: x is {x.shape}, knockoff is {k.x_tilde.shape}"
        )
    return np.hstack([x, k.x_tilde])


def save_knockoff(k: KnockoffMatrix, csv_path, header_path) -> None:
    """Write the knockoff matrix as CSV plus a JSON generation header."""
    np.savetxt(csv_path, k.x_tilde, delimiter=",", fmt="%.17g")
    header = {
        "source": k.source,
        "master_seed": k.seed.master_seed,
        "stream_id": k.seed.stream_id,
        "sigma2_used": k.sigma2_used,
    }
    with open(header_path, "w") as fh:
        json.dump(header, fh, sort_keys=True)


def load_knockoff(csv_path, header_path) -> KnockoffMatrix:
    """Read back a knockoff matrix written by :func:`save_knockoff`."""
    with open(header_path) as fh:
        header = json.load(fh)
    x_tilde = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    return KnockoffMatrix(
        x_tilde=x_tilde,
        source=header["source"],
        seed=SeedSpec(int(header["master_seed"]), int(header["stream_id"])),
        sigma2_used=float(header["sigma2_used"]),
    )
