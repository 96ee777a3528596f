"""Planted-model data and brute-force oracles.

The planted model is a synthetic stand-in for sampled generator latents:
``k`` orthonormal, non-negative-leaning ground-truth directions, attribute
codes coupled by a mixing matrix, and boundary normals that point away from
the true directions (the repulsion premise of the boundary term). Attribute
scorers are linear and read the clean boundary normals; the observed
boundaries carry the same noise level as the latents.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from .boundary import BoundaryMatrix, default_labels, normalize_boundaries
from .errors import ShapeError
from .matrix import as_matrix
from .metrics import DeltaSet, correlation_matrix, mean_report
from .solver import solve_procrustes

# Per-evaluation scorer noise; keeps edit deltas from being exactly constant.
SCORER_NOISE = 1e-3
# Half-width of the per-sample edit response gain, g ~ U(1 - r, 1 + r).
RESPONSE_SPREAD = 0.5
# Off-support leakage added to the block-sparse directions before orthonormalizing.
LEAKAGE = 0.0


@dataclass(frozen=True)
class PlantedModel:
    """Generation parameters; the matrices themselves come from ``generate``.

    ``noise_sigma`` is the entrywise latent noise relative to unit-variance
    codes. ``boundary_noise`` is the expected norm of the perturbation added to
    each boundary normal before normalization.
    """

    rho: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 0.9:
            raise ValueError(f"rho must lie in [0, 0.9], got {self.rho}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class LinearScorer:
    """Attribute ``i`` scores a latent as ``weights[i] @ z + bias[i]``."""

    weights: np.ndarray
    bias: np.ndarray
    labels: tuple

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 2 or np.asarray(self.bias).shape != (w.shape[0],):
            raise ShapeError(f"scorer weights {w.shape} and bias {np.shape(self.bias)} disagree")
        if not np.allclose(np.linalg.norm(w, axis=1), 1.0, atol=1e-10):
            raise ValueError("scorer weights must have unit norm")

    @property
    def k(self):
        return self.weights.shape[0]

    def score(self, z):
        z = np.asarray(z, dtype=np.float64)
        return self.weights @ z + (self.bias[:, None] if z.ndim == 2 else self.bias)

    @classmethod
    def from_boundaries(cls, boundaries):
        s = boundaries.s
        return cls(np.ascontiguousarray(s.T), np.zeros(s.shape[1]), boundaries.labels)


@dataclass(frozen=True)
class PlantedData:
    z: np.ndarray
    boundaries: BoundaryMatrix
    scorers: LinearScorer
    w_true: np.ndarray
    mix: np.ndarray
    s_true: BoundaryMatrix


def mixing_matrix(k, rho):
    """Unit diagonal, ``rho`` everywhere off the diagonal."""
    return (1.0 - rho) * np.eye(k) + rho * np.ones((k, k))


def planted_directions(rng, m, k):
    """Orthonormal directions, each concentrated positively on its own block of coordinates."""
    base = np.zeros((m, k))
    edges = np.linspace(0, m, k + 1).round().astype(int)
    for i in range(k):
        base[edges[i]:edges[i + 1], i] = np.abs(rng.standard_normal(edges[i + 1] - edges[i]))
    base /= np.linalg.norm(base, axis=0)
    return solve_procrustes(base + LEAKAGE / np.sqrt(m) * rng.standard_normal((m, k)))


def generate(model, m, k, n):
    """Sample latents, boundaries and scorers from the planted model.

    ``Z = (W_true @ mix @ C + noise) / sqrt(n)`` with standard-normal codes
    ``C``, so ``Z Z^T`` is the empirical second moment of the latents.
    """
    if not 1 <= k <= m:
        raise ShapeError(f"need 1 <= k <= m, got k={k}, m={m}")
    if n < 2:
        raise ShapeError(f"need n >= 2 samples, got {n}")
    rng = np.random.default_rng(model.seed)
    w_true = planted_directions(rng, m, k)
    mix = mixing_matrix(k, model.rho)
    codes = rng.standard_normal((k, n))
    noise = model.noise_sigma * rng.standard_normal((m, n))
    z = (w_true @ (mix @ codes) + noise) / np.sqrt(n)
    labels = default_labels(k)
    s_true = normalize_boundaries(-w_true, labels)
    raw = s_true.s + model.noise_sigma * rng.standard_normal((m, k))
    boundaries = normalize_boundaries(raw, labels)
    scorers = LinearScorer.from_boundaries(s_true)
    return PlantedData(as_matrix(z, "latents"), boundaries, scorers, w_true, mix, s_true)


def score_deltas(z, w, scorers, beta, noise=0.0, spread=0.0, seed=0) -> List[DeltaSet]:
    """Score differences ``score(z) - score(z + beta g_j w_i)`` per edited direction.

    Returns one ``DeltaSet`` per column of ``w``. ``g_j`` is a per-sample
    response gain drawn from ``U(1 - spread, 1 + spread)`` (all ones when
    ``spread`` is zero) and each score evaluation carries independent
    Gaussian noise of scale ``noise``.
    """
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if z.ndim != 2 or w.ndim != 2 or z.shape[0] != w.shape[0]:
        raise ShapeError(f"latents {z.shape} and directions {w.shape} disagree")
    if w.shape[0] != scorers.weights.shape[1]:
        raise ShapeError(f"scorers expect length {scorers.weights.shape[1]}, latents have {w.shape[0]}")
    if beta == 0:
        raise ValueError("beta must be non-zero")
    n = z.shape[1]
    rng = np.random.default_rng(seed)
    out = []
    for i in range(w.shape[1]):
        gains = rng.uniform(1.0 - spread, 1.0 + spread, n) if spread else np.ones(n)
        # linear scorers: the bias and the unedited score cancel exactly
        deltas = -beta * np.outer(scorers.weights @ w[:, i], gains)
        if noise:
            deltas = deltas + noise * (rng.standard_normal(deltas.shape) - rng.standard_normal(deltas.shape))
        out.append(DeltaSet(tuple(scorers.labels), deltas))
    return out


def edit_correlation(z, w, scorers, beta=0.3, noise=SCORER_NOISE, spread=RESPONSE_SPREAD, seed=0):
    """Correlation report averaged over every edited direction.

    Pairs that are undefined for any direction stay NaN.
    """
    sets = score_deltas(z, w, scorers, beta, noise=noise, spread=spread, seed=seed)
    return mean_report(correlation_matrix(ds, strict=False) for ds in sets)


def haar_frames(rng, m, k, count):
    """``count`` Haar-distributed m x k orthonormal frames, shape (count, m, k)."""
    g = rng.standard_normal((count, m, k))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def brute_force_procrustes(a, trials, seed, batch=20000):
    """Best ``trace(a^T Q)`` over ``trials`` Haar-random frames.

    A lower bound for the Procrustes optimum; used only as an oracle.
    """
    a = as_matrix(a, "procrustes target")
    m, k = a.shape
    if m < k:
        raise ShapeError(f"no orthonormal {k}-frame exists in R^{m}")
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    best_val = -np.inf
    best = None
    done = 0
    while done < trials:
        count = min(batch, trials - done)
        frames = haar_frames(rng, m, k, count)
        vals = np.einsum("ij,tij->t", a, frames)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best = frames[i].copy()
        done += count
    return best, best_val
