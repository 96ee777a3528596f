"""Alternating closed-form minimization of the constrained subspace objective.

The objective over ``(W, P, F)`` is::

    J = ||Z - W P||_F^2 + alpha ||W - F||_F^2 - lambda ||W - S||_F^2

with ``W^T W = I`` and ``F >= 0``. Each block has an exact minimizer:
``W`` is the orthogonal Procrustes factor of ``Z P^T + alpha F - lambda S``,
``P = W^T Z`` and ``F = max(W, 0)``.
"""
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple

import numpy as np

from .errors import ConstraintError, DivergenceError, ShapeError
from .matrix import as_matrix, orthonormality_residual, thin_svd, truncated_svd

VARIANTS = ("full", "no_boundary", "no_nonneg", "no_orthogonality", "baseline")
INIT_MODES = ("svd", "random")

# P-update refuses W whose columns are further than this from orthonormal
ORTHO_GUARD = 1e-6
NO_ORTHO_RIDGE = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.5
    lam: float = 1.0
    max_iters: int = 30
    rel_tol: float = 1e-6
    init_mode: str = "svd"
    seed: int = 0
    variant: str = "full"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init_mode!r}; expected one of {INIT_MODES}")
        if self.alpha < 0 or self.lam < 0:
            raise ValueError("alpha and lambda must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.variant in ("full", "no_boundary") and self.alpha <= 0:
            raise ValueError(f"variant {self.variant} needs alpha > 0")

    def effective(self):
        """Config with the variant's forced hyperparameters applied."""
        if self.variant == "no_boundary":
            return replace(self, lam=0.0)
        if self.variant == "no_nonneg":
            return replace(self, alpha=0.0)
        return self


@dataclass(frozen=True)
class SolveState:
    w: np.ndarray
    p: np.ndarray
    f: np.ndarray


class TraceRecord(NamedTuple):
    iteration: int
    objective: float
    ortho_residual: float
    min_f: float
    rel_drop: float


@dataclass
class SolveTrace:
    records: List[TraceRecord] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])


@dataclass(frozen=True)
class SolveResult:
    state: SolveState
    trace: SolveTrace
    converged: bool
    iterations_run: int


def _check_shapes(z, w, p, f, s):
    m, n = z.shape
    k = w.shape[1]
    if w.shape != (m, k) or f.shape != (m, k) or s.shape != (m, k) or p.shape != (k, n):
        raise ShapeError(
            f"incompatible shapes: z {z.shape}, w {w.shape}, p {p.shape}, "
            f"f {f.shape}, s {s.shape}"
        )


def evaluate_objective(z, state, s, alpha, lam):
    """Objective value ``J(W, P, F)``; may be negative."""
    z = np.asarray(z, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    _check_shapes(z, state.w, state.p, state.f, s)
    fit = z - state.w @ state.p
    couple = state.w - state.f
    repel = state.w - s
    return float(np.sum(fit * fit) + alpha * np.sum(couple * couple) - lam * np.sum(repel * repel))


def solve_procrustes(a):
    """Nearest matrix with orthonormal columns to ``a`` in Frobenius norm.

    Equivalently the maximizer of ``trace(a^T W)`` over ``W^T W = I``.
    Computed as ``U V^T`` from the thin SVD of ``a``.
    """
    a = as_matrix(a, "procrustes target")
    m, k = a.shape
    if m < k:
        raise ShapeError(f"no orthonormal {k}-frame exists in R^{m}")
    svd = thin_svd(a)
    w = svd.u @ svd.vt
    w.flags.writeable = False
    return w


def update_w(z, state, s, alpha, lam):
    """Exact minimizer of J over the Stiefel manifold with P and F fixed."""
    target = z @ state.p.T + alpha * state.f - lam * s
    return solve_procrustes(target)


def update_p(w, z):
    """Least-squares coefficients ``P = W^T Z`` for orthonormal ``W``."""
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if w.ndim != 2 or z.ndim != 2 or w.shape[0] != z.shape[0]:
        raise ShapeError(f"cannot form W^T Z for w {w.shape}, z {z.shape}")
    resid = orthonormality_residual(w)
    if resid > ORTHO_GUARD:
        raise ConstraintError(
            f"W is not orthonormal (||W^T W - I||_F = {resid:.3e}); P = W^T Z does not apply"
        )
    p = w.T @ z
    p.flags.writeable = False
    return p


def project_nonneg(w):
    """Euclidean projection onto the non-negative orthant, ``(W + |W|) / 2``."""
    f = np.maximum(np.asarray(w, dtype=np.float64), 0.0)
    f.flags.writeable = False
    return f


def init_state(z, s, config):
    """Initial ``(W, P, F)`` from the top-k left singular vectors or a seeded draw."""
    z = as_matrix(z, "latents")
    s = as_matrix(s, "boundaries")
    m, n = z.shape
    if s.shape[0] != m:
        raise ShapeError(f"boundaries have {s.shape[0]} rows, latents have {m}")
    k = s.shape[1]
    if k > min(m, n):
        raise ShapeError(f"k={k} exceeds min(m, n)={min(m, n)}")
    if config.init_mode == "svd":
        w = truncated_svd(z, k).u
    else:
        rng = np.random.default_rng(config.seed)
        w = solve_procrustes(rng.standard_normal((m, k)))
    return SolveState(w=w, p=update_p(w, z), f=project_nonneg(w))


def _rel_drop(prev, cur):
    return abs(prev - cur) / max(1.0, abs(prev))


def _record(trace, it, z, state, s, alpha, lam, prev):
    j = evaluate_objective(z, state, s, alpha, lam)
    if not np.isfinite(j):
        raise DivergenceError(f"objective became non-finite at iteration {it}")
    drop = float("nan") if prev is None else _rel_drop(prev, j)
    trace.records.append(
        TraceRecord(it, j, orthonormality_residual(state.w), float(state.f.min()), drop)
    )
    return j


def aidc_step(z, state, s, alpha, lam):
    """One sweep of the W -> P -> F block updates."""
    w = update_w(z, state, s, alpha, lam)
    p = update_p(w, z)
    return SolveState(w=w, p=p, f=project_nonneg(w))


def _run(z, s, config, step, initial=None):
    cfg = config.effective()
    if initial is None:
        state = init_state(z, s, cfg)
    z = as_matrix(z, "latents")
    s = as_matrix(s, "boundaries")
    if initial is not None:
        _check_shapes(z, initial.w, initial.p, initial.f, s)
        state = initial
    trace = SolveTrace()
    prev = _record(trace, 0, z, state, s, cfg.alpha, cfg.lam, None)
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        state = step(z, state, s, cfg, trace)
        cur = _record(trace, it, z, state, s, cfg.alpha, cfg.lam, prev)
        if _rel_drop(prev, cur) < cfg.rel_tol:
            converged = True
            break
        prev = cur
    return SolveResult(state=state, trace=trace, converged=converged, iterations_run=it)


def _full_step(z, state, s, cfg, trace):
    return aidc_step(z, state, s, cfg.alpha, cfg.lam)


def _no_nonneg_step(z, state, s, cfg, trace):
    # F never enters the W target; it is carried only for reporting
    w = solve_procrustes(z @ state.p.T - cfg.lam * s)
    return SolveState(w=w, p=update_p(w, z), f=project_nonneg(w))


def _no_ortho_step(z, state, s, cfg, trace):
    target = z @ state.p.T + cfg.alpha * state.f - cfg.lam * s
    norms = np.linalg.norm(target, axis=0)
    w = np.array(state.w)
    live = norms > 0.0
    w[:, live] = target[:, live] / norms[live]
    gram = w.T @ w
    rhs = w.T @ z
    k = gram.shape[0]
    if np.linalg.cond(gram) > 1e12:
        gram = gram + NO_ORTHO_RIDGE * np.eye(k)
        trace.warnings.append(f"iteration {len(trace.records)}: singular W^T W, ridge applied")
    p = np.linalg.solve(gram, rhs)
    return SolveState(w=w, p=p, f=project_nonneg(w))


def aidc_solve(z, s, config, initial=None):
    """Run the alternating W -> P -> F iteration from ``init_state``.

    Stops after ``max_iters`` sweeps or once the relative objective drop
    ``|J_t - J_{t+1}| / max(1, |J_t|)`` falls below ``rel_tol``.

    Parameters
    ----------
    initial : SolveState, optional
        Starting point to use instead of ``init_state(z, s, config)``. The
        default start depends only on ``z``, ``k``, ``init_mode`` and
        ``seed``, so a grid over ``alpha`` and ``lam`` can compute it once.
    """
    if config.variant != "full":
        config = replace(config, variant="full")
    return _run(z, s, config, _full_step, initial)


def solve_baseline(z, k):
    """Global minimizer of ``||Z - W P||_F^2`` subject to ``||W||_F = 1``."""
    z = as_matrix(z, "latents")
    if not 1 <= k <= min(z.shape):
        raise ShapeError(f"k={k} out of range [1, {min(z.shape)}]")
    svd = truncated_svd(z, k)
    root = np.sqrt(k)
    w = svd.u / root
    p = root * (svd.singular_values[:, None] * svd.vt)
    return SolveState(w=w, p=p, f=project_nonneg(w))


def solve_variant(z, s, config, initial=None):
    """Dispatch on ``config.variant`` (see ``VARIANTS``).

    ``initial`` is passed to the iterative variants and ignored by the
    closed-form baseline.
    """
    variant = config.variant
    if variant == "full":
        return aidc_solve(z, s, config, initial)
    if variant == "no_boundary":
        return _run(z, s, config, _full_step, initial)
    if variant == "no_nonneg":
        return _run(z, s, config, _no_nonneg_step, initial)
    if variant == "no_orthogonality":
        return _run(z, s, config, _no_ortho_step, initial)
    z = as_matrix(z, "latents")
    s = as_matrix(s, "boundaries")
    state = solve_baseline(z, s.shape[1])
    trace = SolveTrace()
    _record(trace, 0, z, state, s, 0.0, 0.0, None)
    return SolveResult(state=state, trace=trace, converged=True, iterations_run=0)
