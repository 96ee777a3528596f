"""Attribute boundary normals, edit application and distance checks."""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConstraintError, ShapeError
from .matrix import as_matrix

# controllability distances are only guaranteed monotone for unit vectors
UNIT_TOL = 1e-8


@dataclass(frozen=True)
class BoundaryMatrix:
    """Unit-norm boundary normals, one column per attribute."""

    s: np.ndarray
    labels: Tuple[str, ...]

    @property
    def k(self):
        return self.s.shape[1]


@dataclass(frozen=True)
class EditRequest:
    z: np.ndarray
    direction_index: int
    beta: float


def default_labels(k):
    return tuple(f"attr{i}" for i in range(k))


def normalize_boundaries(raw, labels=None):
    """Scale each column of ``raw`` to unit length and attach labels.

    Raises
    ------
    ValueError
        If a column is identically zero; the message names the attribute.
    """
    raw = as_matrix(raw, "boundaries")
    k = raw.shape[1]
    labels = default_labels(k) if labels is None else tuple(str(x) for x in labels)
    if len(labels) != k:
        raise ShapeError(f"{len(labels)} labels for {k} boundary columns")
    norms = np.linalg.norm(raw, axis=0)
    for label, norm in zip(labels, norms):
        if norm == 0.0:
            raise ValueError(f"boundary for attribute {label!r} is a zero vector")
    s = raw / norms
    s.flags.writeable = False
    return BoundaryMatrix(s=s, labels=labels)


def boundary_distance(w, boundaries):
    """Per-attribute squared distances ``||w_i - s_i||^2`` and their total."""
    w = np.asarray(w, dtype=np.float64)
    s = boundaries.s if isinstance(boundaries, BoundaryMatrix) else np.asarray(boundaries)
    if w.shape != s.shape:
        raise ShapeError(f"w {w.shape} does not match boundaries {s.shape}")
    diff = w - s
    per = np.einsum("ij,ij->j", diff, diff)
    return per, float(per.sum())


def apply_edit(req, w):
    """Edited latent ``z + beta * w[:, direction_index]``."""
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(req.z, dtype=np.float64).reshape(-1)
    if w.ndim != 2 or w.shape[0] != z.shape[0]:
        raise ShapeError(f"latent of length {z.shape[0]} does not match directions {w.shape}")
    if not 0 <= req.direction_index < w.shape[1]:
        raise IndexError(f"direction index {req.direction_index} out of range [0, {w.shape[1]})")
    return z + req.beta * w[:, req.direction_index]


def controllability_check(w_col, s_col, betas):
    """Distances ``||beta w - s||_2`` for each beta, sorted by beta.

    Both vectors must have unit norm; only then does the distance grow
    strictly with beta for beta > 1.
    """
    w_col = np.asarray(w_col, dtype=np.float64).reshape(-1)
    s_col = np.asarray(s_col, dtype=np.float64).reshape(-1)
    if w_col.shape != s_col.shape:
        raise ShapeError(f"vector lengths differ: {w_col.shape[0]} vs {s_col.shape[0]}")
    for name, vec in (("w", w_col), ("s", s_col)):
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > UNIT_TOL:
            raise ConstraintError(f"{name} has norm {norm:.12g}; unit norm required")
    return [(float(b), float(np.linalg.norm(b * w_col - s_col))) for b in sorted(betas)]
