"""Disentanglement correlation, identity consistency and trace summaries."""
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .errors import ConstraintError, ShapeError, UndefinedCorrelationError


@dataclass(frozen=True)
class DeltaSet:
    """Per-attribute score differences, one row of length n per attribute."""

    names: Tuple[str, ...]
    deltas: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != len(self.names):
            raise ShapeError(f"expected {len(self.names)} delta rows, got shape {d.shape}")
        if d.shape[1] < 2:
            raise ShapeError("need at least two samples per attribute")
        if not np.all(np.isfinite(d)):
            raise ValueError("deltas must be finite")


@dataclass(frozen=True)
class CorrelationReport:
    """Absolute Pearson matrix; undefined pairs are NaN."""

    names: Tuple[str, ...]
    matrix: np.ndarray
    column_avg: np.ndarray
    overall_avg: float

    @property
    def undefined(self):
        """Names of attributes whose every off-diagonal entry is undefined.

        A constant delta sequence makes its whole row undefined, while its
        partners lose only the one shared entry.
        """
        k = len(self.names)
        if k < 2:
            return ()
        off = np.isnan(self.matrix) | np.eye(k, dtype=bool)
        bad = off.all(axis=0)
        return tuple(n for n, b in zip(self.names, bad) if b)


@dataclass(frozen=True)
class EmbeddingPair:
    e_ori: np.ndarray
    e_edit: np.ndarray


class TraceSummary(NamedTuple):
    initial: float
    final: float
    total_drop: float
    max_increase: float


def pearson_abs(x, y):
    """``|cov(x, y)| / (sigma_x sigma_y)`` with population moments."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ShapeError(f"sequence lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise ShapeError("need at least two samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant sequence")
    r = abs(float(xc @ yc)) / np.sqrt(sxx * syy)
    return min(r, 1.0)


def _averages(matrix):
    k = matrix.shape[0]
    off = ~np.eye(k, dtype=bool)
    if k < 2:
        return np.full(k, np.nan), float("nan")
    cols = np.array([matrix[off[:, j], j].mean() for j in range(k)])
    return cols, float(matrix[off].mean())


def correlation_matrix(deltas, strict=True):
    """Pairwise ``pearson_abs`` over attributes.

    With ``strict`` an undefined pair raises, naming the pair; otherwise it is
    stored as NaN and propagates into the affected averages.
    """
    d = np.asarray(deltas.deltas, dtype=np.float64)
    k = d.shape[0]
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                r = pearson_abs(d[i], d[j])
            except UndefinedCorrelationError as exc:
                if strict:
                    raise UndefinedCorrelationError(
                        f"attributes {deltas.names[i]!r}/{deltas.names[j]!r}: {exc}"
                    ) from None
                r = float("nan")
            mat[i, j] = mat[j, i] = r
    cols, overall = _averages(mat)
    return CorrelationReport(tuple(deltas.names), mat, cols, overall)


def mean_report(reports):
    """Entrywise mean of several reports over the same attributes."""
    reports = list(reports)
    names = reports[0].names
    if any(r.names != names for r in reports):
        raise ShapeError("reports cover different attributes")
    mat = np.mean([r.matrix for r in reports], axis=0)
    cols, overall = _averages(mat)
    return CorrelationReport(names, mat, cols, overall)


def identity_score(pair):
    """``1 - e_ori . e_edit`` for unit embeddings; lower keeps identity better."""
    a = np.asarray(pair.e_ori, dtype=np.float64).reshape(-1)
    b = np.asarray(pair.e_edit, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ShapeError(f"embedding lengths differ: {a.size} vs {b.size}")
    for name, e in (("e_ori", a), ("e_edit", b)):
        if abs(np.linalg.norm(e) - 1.0) > 1e-8:
            raise ConstraintError(f"{name} is not unit norm")
    return float(1.0 - a @ b)


def trace_summary(objectives: Sequence[float]):
    """Summarize an objective history; accepts a ``SolveTrace`` or plain values."""
    if hasattr(objectives, "objectives"):
        objectives = objectives.objectives
    j = np.asarray(objectives, dtype=np.float64)
    if j.size == 0:
        raise ValueError("empty trace")
    steps = np.diff(j)
    max_inc = float(steps.max()) if steps.size else 0.0
    return TraceSummary(float(j[0]), float(j[-1]), float(j[0] - j[-1]), max_inc)
