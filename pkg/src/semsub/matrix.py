"""Dense matrix helpers and SVD kernels.

Matrices are plain float64 numpy arrays. ``as_matrix`` is the single entry
point that validates shape and finiteness and hands back a read-only copy,
so every kernel downstream can assume a well-formed 2-D array.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ShapeError

_EPS = np.finfo(np.float64).eps
# relative slack under which two entries count as equally large for the sign rule
TIE_TOL = 1e-12


def as_matrix(a, name="matrix"):
    """Return ``a`` as a read-only, C-contiguous float64 2-D array.

    Raises
    ------
    ShapeError
        If ``a`` is not 2-D or has an empty dimension.
    ValueError
        If any entry is NaN or infinite.
    """
    arr = np.array(a, dtype=np.float64, order="C", copy=True)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.flags.writeable = False
    return arr


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def matmul(a, b):
    """Matrix product ``a @ b`` with an explicit shape check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return _frozen(a @ b)


def frobenius_norm_sq(a):
    """Sum of squared entries."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.sum(a * a))


@dataclass(frozen=True)
class ThinSvd:
    """``a = u @ diag(singular_values) @ vt`` with ``r = min(rows, cols)``."""

    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray

    def reconstruct(self):
        return (self.u * self.singular_values) @ self.vt


def _round_robin(n):
    """Pairings for one Jacobi sweep; every pair appears exactly once.

    ``n`` must be even. Returns a list of ``(left, right)`` index arrays, each
    round touching every column once, so a round can be applied as a single
    vectorized rotation.
    """
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        left = np.array(players[: n // 2])
        right = np.array(players[n // 2:][::-1])
        rounds.append((left, right))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(y, max_sweeps=60):
    """One-sided Jacobi: rotate columns of ``y`` until mutually orthogonal.

    Returns the rotated columns and the accumulated orthogonal ``v`` such that
    ``y_in @ v == y_out``. Columns and the rows of ``v^T`` are stored side by
    side as contiguous rows, so each round needs one gather and one scatter
    per side of the pairing.
    """
    m, q = y.shape
    padded = q + (q % 2)
    both = np.zeros((padded, m + padded))
    both[:q, :m] = y.T
    both[:, m:] = np.eye(padded)
    tol = _EPS * padded
    rounds = _round_robin(padded) if padded > 1 else []
    off = 0.0
    for _ in range(max_sweeps):
        off = 0.0
        for left, right in rounds:
            bl = both[left]
            br = both[right]
            yl = bl[:, :m]
            yr = br[:, :m]
            alpha = np.einsum("ij,ij->i", yl, yl)
            beta = np.einsum("ij,ij->i", yr, yr)
            gamma = np.einsum("ij,ij->i", yl, yr)
            scale = np.sqrt(alpha * beta)
            ratio = np.abs(gamma) / np.where(scale > 0.0, scale, 1.0)
            active = (ratio > tol) & (scale > 0.0)
            if not active.any():
                continue
            off = max(off, float(ratio[active].max()))
            g = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.where(zeta >= 0.0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t[~active] = 0.0
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = c * t[:, None]
            both[left] = c * bl - s * br
            both[right] = s * bl + c * br
        if off <= tol:
            return both[:q, :m].T.copy(), both[:q, m:m + q].T.copy()
    raise ConvergenceError("one-sided Jacobi SVD did not converge", off)


def _complete_orthonormal(u, missing):
    """Replace columns listed in ``missing`` with an orthonormal completion.

    Candidates are standard basis vectors in index order, which keeps the
    result deterministic.
    """
    keep = [j for j in range(u.shape[1]) if j not in set(missing)]
    basis = [u[:, j] for j in keep]
    candidate = 0
    for j in missing:
        while True:
            e = np.zeros(u.shape[0])
            e[candidate] = 1.0
            candidate += 1
            for _ in range(2):
                for b in basis:
                    e -= (b @ e) * b
            norm = np.linalg.norm(e)
            if norm > 0.5:
                break
        e /= norm
        u[:, j] = e
        basis.append(e)
    return u


def _apply_sign_convention(u, vt):
    """Make the largest-magnitude entry of each column of ``u`` positive.

    Magnitudes within a relative ``TIE_TOL`` of the column maximum count as
    tied, and the lowest row index among them decides, so rounding noise at
    the last bit cannot flip the choice.
    """
    mag = np.abs(u)
    near = mag >= (1.0 - TIE_TOL) * mag.max(axis=0)
    idx = np.argmax(near, axis=0)
    signs = np.where(u[idx, np.arange(u.shape[1])] < 0.0, -1.0, 1.0)
    return u * signs, vt * signs[:, None]


def thin_svd(a):
    """Thin SVD by QR preconditioning followed by one-sided Jacobi.

    The Jacobi sweeps run on the small ``r x r`` triangular factor, where
    ``r = min(rows, cols)``. Singular values are returned in non-increasing
    order and each left singular vector has its largest-magnitude entry
    positive (ties go to the lowest row index).

    Raises
    ------
    ConvergenceError
        If the Jacobi sweeps exceed their budget.
    """
    a = as_matrix(a)
    rows, cols = a.shape
    transposed = rows < cols
    x = a.T if transposed else a

    qfac, r = np.linalg.qr(x, mode="reduced")
    y, v = _jacobi_columns(r)
    sigma = np.linalg.norm(y, axis=0)
    u_small = np.zeros_like(y)
    nonzero = sigma > 0.0
    u_small[:, nonzero] = y[:, nonzero] / sigma[nonzero]
    u_tall = qfac @ u_small
    missing = [j for j in range(len(sigma)) if not nonzero[j]]
    if missing:
        u_tall = _complete_orthonormal(u_tall, missing)

    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    u_tall = u_tall[:, order]
    v = v[:, order]

    if transposed:
        u, vt = v, u_tall.T
    else:
        u, vt = u_tall, v.T
    u, vt = _apply_sign_convention(u, vt)
    return ThinSvd(_frozen(u), _frozen(sigma), _frozen(vt))


def truncated_svd(a, k):
    """Leading ``k`` singular triplets of ``a``."""
    a = as_matrix(a)
    r = min(a.shape)
    if not 1 <= k <= r:
        raise ShapeError(f"k={k} out of range [1, {r}] for shape {a.shape}")
    full = thin_svd(a)
    return ThinSvd(
        _frozen(full.u[:, :k]),
        _frozen(full.singular_values[:k]),
        _frozen(full.vt[:k, :]),
    )


def orthonormality_residual(w):
    """``||w^T w - I||_F``."""
    w = np.asarray(w, dtype=np.float64)
    return float(np.linalg.norm(w.T @ w - np.eye(w.shape[1])))
