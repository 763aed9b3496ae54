"""Datasets, reproducible random streams, column standardization, and CSV I/O.

Everything downstream consumes the types defined here.  A ``Dataset`` couples a
response vector with its design matrix; a ``SeedSpec`` names one reproducible
random stream so that parallel Monte Carlo work never shares or reuses
randomness.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

# Fan-out of the stream derivation tree.  Child streams are encoded in base
# _BRANCH so that every (parent, child index) pair maps to a distinct id.
_BRANCH = 2**20


@dataclass(frozen=True)
class SeedSpec:
    """Identifier of one reproducible random stream.

    The pair ``(master_seed, stream_id)`` is fed as the entropy of a
    ``numpy.random.SeedSequence``, so distinct pairs yield independent
    generators and identical pairs yield bit-identical streams.  Sub-streams
    are derived with :meth:`child`, which encodes the path from the root in
    base ``2**20``; the encoding is injective, so no two nodes of the
    derivation tree ever collide.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Return a fresh PCG64 generator for this stream."""
        ss = np.random.SeedSequence([self.master_seed, self.stream_id])
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, k: int) -> "SeedSpec":
        """Derive the ``k``-th sub-stream of this stream (0 <= k < 2**20 - 1)."""
        if not 0 <= k < _BRANCH - 1:
            raise ValueError(f"child index {k} outside [0, {_BRANCH - 2}]")
        return SeedSpec(self.master_seed, self.stream_id * _BRANCH + 1 + k)


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """A response vector ``y`` plus an ``n x p`` design matrix ``x``.

    Columns are named; names must be unique.  All entries must be finite.
    Instances are immutable and safe to share across workers.
    """

    x: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        x = _freeze(np.atleast_2d(self.x))
        y = _freeze(np.asarray(self.y, dtype=float).ravel())
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if x.ndim != 2:
            raise ValueError("x must be a 2-d matrix")
        n, p = x.shape
        if n < 2:
            raise ValueError(f"need at least 2 rows, got {n}")
        if p < 1:
            raise ValueError("need at least 1 covariate column")
        if y.shape != (n,):
            raise ValueError(f"y has length {y.shape[0]}, expected {n}")
        if not np.isfinite(x).all() or not np.isfinite(y).all():
            raise ValueError("non-finite entries in dataset")
        if len(self.column_names) != p:
            raise ValueError("column_names length does not match p")
        if len(set(self.column_names)) != p:
            raise ValueError("column_names must be unique")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class StandardizationRecord:
    """State of a column-rescaling transform.

    ``original_norms[j]`` is the Euclidean norm column ``j`` had before the
    rescale; ``centered`` records whether the rescaled data was already
    column-centered (mean below 1e-12) when the transform was applied.
    """

    original_norms: np.ndarray
    centered: bool

    def __post_init__(self):
        object.__setattr__(self, "original_norms", _freeze(self.original_norms))
        if (self.original_norms <= 0).any():
            raise ValueError("original norms must be positive")


def center_columns(d: Dataset) -> Dataset:
    """Subtract column means from ``x`` and the mean from ``y``."""
    x = d.x - d.x.mean(axis=0)
    y = d.y - d.y.mean()
    return Dataset(x, y, d.column_names)


def _is_centered(d: Dataset) -> bool:
    return (
        float(np.abs(d.x.mean(axis=0)).max()) <= 1e-12
        and abs(float(d.y.mean())) <= 1e-12
    )


def rescale_columns(d: Dataset) -> tuple[Dataset, StandardizationRecord]:
    """Rescale each column of ``x`` to unit Euclidean norm.

    Returns the transformed dataset plus a record of the original norms,
    sufficient to invert the rescale with :func:`inverse_rescale`.  Raises if
    any column has exactly zero norm.
    """
    norms = np.linalg.norm(d.x, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        j = int(zero[0])
        raise ValueError(f"column {j} ({d.column_names[j]!r}) has zero norm")
    record = StandardizationRecord(original_norms=norms, centered=_is_centered(d))
    return Dataset(d.x / norms, d.y, d.column_names), record


def inverse_rescale(d: Dataset, record: StandardizationRecord) -> Dataset:
    """Undo :func:`rescale_columns` using the stored norms."""
    if record.original_norms.shape != (d.p,):
        raise ValueError("record does not match dataset width")
    return Dataset(d.x * record.original_norms, d.y, d.column_names)


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(
            f"non-numeric cell {text!r} at row {row}, column {col}"
        ) from None
    if not np.isfinite(value):
        raise ValueError(f"non-finite cell {text!r} at row {row}, column {col}")
    return value


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, has_header: bool, response_column) -> Dataset:
    """Load a comma-separated file into a :class:`Dataset`.

    The file may start with a label column of date strings (recognized by a
    header named ``date``, case-insensitively, or by a non-numeric first cell
    in the first data row); that column is ignored.  ``response_column``
    selects the response series either by header name or by 0-based position
    among the data columns.  Rows and columns in error messages are 1-based,
    counting data rows only.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty file")

    header = None
    if has_header:
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")

    width = len(rows[0])
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(f"{path}: ragged row {i} ({len(row)} cells, expected {width})")

    drop_first = False
    if header is not None and header and header[0].lower() == "date":
        drop_first = True
    elif not _looks_numeric(rows[0][0].strip()):
        drop_first = True
    offset = 1 if drop_first else 0

    names: list[str]
    if header is not None:
        names = header[offset:]
    else:
        names = [f"c{j}" for j in range(width - offset)]
    if len(names) != len(set(names)):
        raise ValueError(f"{path}: duplicate column names")

    if isinstance(response_column, str):
        if header is None:
            raise ValueError("response column given by name but file has no header")
        if response_column not in names:
            raise ValueError(f"{path}: response column {response_column!r} not found")
        y_idx = names.index(response_column)
    else:
        y_idx = int(response_column)
        if not 0 <= y_idx < len(names):
            raise ValueError(f"{path}: response column index {y_idx} out of range")

    data = np.empty((len(rows), width - offset))
    for i, row in enumerate(rows, start=1):
        for j in range(offset, width):
            data[i - 1, j - offset] = _parse_cell(row[j].strip(), i, j + 1)

    y = data[:, y_idx]
    x = np.delete(data, y_idx, axis=1)
    x_names = tuple(nm for k, nm in enumerate(names) if k != y_idx)
    return Dataset(x, y, x_names)


def save_csv(d: Dataset, path, response_name: str = "y") -> None:
    """Write a dataset back to CSV with 17 significant digits (exact round-trip)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([response_name, *d.column_names])
        for i in range(d.n):
            writer.writerow(
                [format(d.y[i], ".17g")] + [format(v, ".17g") for v in d.x[i]]
            )
