"""Knockoff statistics, data-dependent thresholds, and selection metrics.

Statistics compare each original variable against its knockoff copy; the
thresholds turn those comparisons into a selected set with finite-sample
false-discovery guarantees.  Indices are 0-based throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WStats:
    """Per-variable knockoff statistics (length p)."""

    w: np.ndarray
    statistic_kind: str  # "lcd" or "mda_diff"

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        object.__setattr__(self, "w", w)
        if not np.isfinite(w).all():
            raise ValueError("knockoff statistics must be finite")
        if self.statistic_kind not in ("lcd", "mda_diff"):
            raise ValueError(f"unknown statistic kind {self.statistic_kind!r}")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of thresholding a statistic vector at level ``q``."""

    threshold: float
    selected: tuple[int, ...]
    q: float
    plus: bool
    statistic_kind: str

    def to_json(self) -> str:
        payload = {
            "threshold": self.threshold if np.isfinite(self.threshold) else "inf",
            "selected": list(self.selected),
            "q": self.q,
            "plus": self.plus,
            "statistic_kind": self.statistic_kind,
        }
        return json.dumps(payload, sort_keys=True)


def _paired(values, name: str) -> tuple[np.ndarray, int]:
    values = np.asarray(values, dtype=float).ravel()
    if values.shape[0] % 2:
        raise ValueError(f"{name} must have even length (original + knockoff)")
    return values, values.shape[0] // 2


def lcd(beta_aug) -> WStats:
    """Coefficient-difference statistic from an augmented-design Lasso fit.

    ``w_j = |beta_j| - |beta_{p+j}|``: positive when the original variable
    carries more of the fit than its knockoff copy.
    """
    beta_aug, p = _paired(beta_aug, "beta_aug")
    return WStats(w=np.abs(beta_aug[:p]) - np.abs(beta_aug[p:]), statistic_kind="lcd")


def mda_diff(importance) -> WStats:
    """Permutation-importance difference statistic for the nonlinear path."""
    importance, p = _paired(importance, "importance")
    return WStats(w=np.abs(importance[:p]) - np.abs(importance[p:]),
                  statistic_kind="mda_diff")


def knockoff_threshold(w: WStats, q: float, plus: bool) -> float:
    """Smallest positive cutoff whose estimated false-discovery ratio is <= q.

    Candidate cutoffs are the magnitudes of the nonzero statistics.  At each
    candidate ``t`` the ratio ``#{w_j <= -t} / max(#{w_j >= t}, 1)`` (with a
    ``1 +`` in the numerator when ``plus`` is set) estimates the FDP of
    selecting ``{j : w_j >= t}``.  Returns ``inf`` when no candidate
    qualifies, which selects nothing.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    values = w.w
    candidates = np.unique(np.abs(values[values != 0]))
    if candidates.size == 0:
        return float("inf")
    sorted_w = np.sort(values)
    n = sorted_w.shape[0]
    # counts of w >= t and w <= -t for every candidate t at once
    n_pos = n - np.searchsorted(sorted_w, candidates, side="left")
    n_neg = np.searchsorted(sorted_w, -candidates, side="right")
    numer = n_neg + (1 if plus else 0)
    ok = numer / np.maximum(n_pos, 1) <= q
    hits = np.flatnonzero(ok)
    return float(candidates[hits[0]]) if hits.size else float("inf")


def select(w: WStats, threshold: float, q: float, plus: bool) -> SelectionResult:
    """Variables whose statistic reaches the threshold."""
    if np.isinf(threshold):
        chosen: tuple[int, ...] = ()
    else:
        chosen = tuple(int(j) for j in np.flatnonzero(w.w >= threshold))
    return SelectionResult(threshold=float(threshold), selected=chosen, q=q,
                           plus=plus, statistic_kind=w.statistic_kind)


def fdp(selected, true_support) -> float:
    """False discovery proportion: |selected ∩ nulls| / max(|selected|, 1)."""
    sel = set(int(j) for j in selected)
    truth = set(int(j) for j in true_support)
    if not sel:
        return 0.0
    return len(sel - truth) / max(len(sel), 1)


def tdp(selected, true_support) -> float:
    """True discovery proportion: |selected ∩ signals| / |signals|."""
    truth = set(int(j) for j in true_support)
    if not truth:
        raise ValueError("true support is empty; power is undefined")
    sel = set(int(j) for j in selected)
    return len(sel & truth) / len(truth)
