"""Regression random forest with out-of-bag permutation importance.

Trees are grown on bootstrap samples with a random feature subset per split
(CART via scikit-learn); importance of a column is the average increase in
out-of-bag MSE when that column is permuted within the out-of-bag rows.
Every random choice (bootstrap, split subsets, permutations) descends from a
single SeedSpec, so fits and importances are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from .data import SeedSpec

_MDA_CHUNK = 64  # columns permuted per batched predict, bounds memory


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters; ``mtry=None`` means max(m // 3, 1)."""

    seed: SeedSpec
    n_trees: int = 500
    mtry: int | None = None
    min_leaf: int = 5

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be positive")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be positive")


@dataclass(frozen=True)
class MdaReport:
    """Permutation importance per design column (raw, signed)."""

    importance: np.ndarray
    n_permutations: int

    def __post_init__(self):
        imp = np.asarray(self.importance, dtype=float).ravel()
        object.__setattr__(self, "importance", imp)
        if not np.isfinite(imp).all():
            raise ValueError("importance must be finite")


class ForestModel:
    """A fitted forest: trees plus their bootstrap/out-of-bag bookkeeping."""

    def __init__(self, trees, oob_indices, config: ForestConfig, n: int, m: int):
        self.trees = trees
        self.oob_indices = oob_indices
        self.config = config
        self.n = n
        self.m = m

    def predict(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        out = np.zeros(a.shape[0])
        for tree in self.trees:
            out += tree.predict(a)
        return out / len(self.trees)

    def oob_predictions(self, a) -> np.ndarray:
        """Per-row average over trees for which the row was out of bag (NaN if none)."""
        a = np.asarray(a, dtype=float)
        total = np.zeros(a.shape[0])
        count = np.zeros(a.shape[0])
        for tree, oob in zip(self.trees, self.oob_indices):
            if oob.size == 0:
                continue
            total[oob] += tree.predict(a[oob])
            count[oob] += 1
        with np.errstate(invalid="ignore"):
            return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def fit_forest(a, y, config: ForestConfig) -> ForestModel:
    """Grow ``config.n_trees`` bootstrap regression trees on ``(a, y)``."""
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if a.ndim != 2 or a.shape[0] != y.shape[0]:
        raise ValueError("design/response shape mismatch")
    n, m = a.shape
    if n < 2 * config.min_leaf:
        raise ValueError(f"need at least {2 * config.min_leaf} rows, got {n}")
    mtry = config.mtry if config.mtry is not None else max(m // 3, 1)
    if mtry > m:
        raise ValueError(f"mtry={mtry} exceeds number of columns {m}")

    all_rows = np.arange(n)
    trees = []
    oob_sets = []
    for t in range(config.n_trees):
        rng = config.seed.child(t).generator()
        boot = rng.integers(0, n, size=n)
        oob = np.setdiff1d(all_rows, boot)
        tree = DecisionTreeRegressor(
            max_features=mtry,
            min_samples_leaf=config.min_leaf,
            random_state=int(rng.integers(0, 2**31 - 1)),
        )
        tree.fit(a[boot], y[boot])
        trees.append(tree)
        oob_sets.append(oob)
    return ForestModel(trees, oob_sets, config, n, m)


def mda(model: ForestModel, a, y, seed: SeedSpec) -> MdaReport:
    """Mean decrease in accuracy over the model's out-of-bag samples.

    For each tree and column, the column's values are shuffled within the
    tree's out-of-bag rows (one pass, seeded) and the increase of the
    out-of-bag MSE over the unpermuted baseline is recorded; the importance
    is the per-column average over trees.  A column a tree never splits on
    contributes exactly zero for that tree.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if a.ndim != 2 or a.shape[1] != model.m:
        raise ValueError("design width does not match the fitted model")
    if a.shape[0] != y.shape[0]:
        raise ValueError("design/response shape mismatch")
    m = model.m
    importance = np.zeros(m)
    used = 0
    for t, (tree, oob) in enumerate(zip(model.trees, model.oob_indices)):
        if oob.size < 2:
            continue
        used += 1
        rng = seed.child(t).generator()
        block = a[oob]
        y_oob = y[oob]
        base_mse = float(np.mean((y_oob - tree.predict(block)) ** 2))
        for start in range(0, m, _MDA_CHUNK):
            cols = range(start, min(start + _MDA_CHUNK, m))
            stacked = np.repeat(block[None, :, :], len(cols), axis=0)
            for k, j in enumerate(cols):
                stacked[k, :, j] = block[rng.permutation(oob.size), j]
            preds = tree.predict(stacked.reshape(-1, m)).reshape(len(cols), -1)
            mses = np.mean((y_oob[None, :] - preds) ** 2, axis=1)
            importance[list(cols)] += mses - base_mse
    if used == 0:
        raise ValueError("no tree has out-of-bag rows; cannot compute importance")
    return MdaReport(importance=importance / used, n_permutations=1)
