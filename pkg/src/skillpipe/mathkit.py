"""Numerical kernels: ridge least squares, pseudo-inverse, truncated HOSVD,
CMA-ES, and Pearson correlation.

Dense SVD factorizations are delegated to numpy.linalg; everything layered on
top of them (ridge filtering, tolerance-based inversion, Tucker contraction,
the full CMA-ES update loop) lives here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LeastSquaresFit",
    "TuckerFactors",
    "CmaState",
    "least_squares",
    "pinv",
    "hosvd",
    "reconstruct",
    "cmaes_minimize",
    "pearson",
]

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class LeastSquaresFit:
    """Solution of min ||A X - B||^2 + ridge ||X||^2 with diagnostics."""

    x: np.ndarray
    rank: int
    singular_values: np.ndarray
    rank_deficient: bool


def least_squares(a, b, ridge: float = 0.0) -> LeastSquaresFit:
    """Solve A X = B in the (ridge) least-squares sense via SVD.

    With ridge == 0 and rank-deficient A, the minimum-norm solution is
    returned and flagged.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    if a.ndim != 2:
        raise ValueError("A must be a matrix")
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"incompatible shapes {a.shape} vs {b.shape}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if ridge == 0.0:
        cutoff = _RANK_TOL * (s[0] if s.size else 0.0)
        inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
        rank = int(np.sum(s > cutoff))
    else:
        inv = s / (s * s + ridge)
        rank = int(np.sum(s > 0))
    x = vt.T @ (inv[:, None] * (u.T @ b))
    deficient = rank < min(a.shape)
    if squeeze:
        x = x[:, 0]
    return LeastSquaresFit(x=x, rank=rank, singular_values=s, rank_deficient=deficient)


def pinv(m, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudo-inverse; singular values below tol * sigma_max are zeroed."""
    m = np.asarray(m, dtype=float)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0:
        return m.T.copy()
    cutoff = tol * s[0]
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return vt.T @ (inv[:, None] * u.T)


# ---------------------------------------------------------------------------
# Tucker / HOSVD
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TuckerFactors:
    """Truncated Tucker factorization of a 3-way tensor.

    core has shape (r1, r2, r3); the factor columns are orthonormal.  Rows of
    u3 act as per-slice weight vectors.
    """

    core: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray

    @property
    def ranks(self):
        return self.core.shape


def _unfold(t: np.ndarray, mode: int) -> np.ndarray:
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)


def hosvd(tensor, ranks) -> TuckerFactors:
    """Truncated higher-order SVD of a 3-way tensor.

    Factors are the leading left singular vectors of each unfolding; the core
    is the tensor contracted with the factor transposes.
    """
    t = np.asarray(tensor, dtype=float)
    if t.ndim != 3:
        raise ValueError("hosvd expects a 3-way tensor")
    r1, r2, r3 = ranks
    for r, dim in zip((r1, r2, r3), t.shape):
        if not (1 <= r <= dim):
            raise ValueError(f"rank {r} outside [1, {dim}]")
    factors = []
    for mode, r in enumerate((r1, r2, r3)):
        u, _, _ = np.linalg.svd(_unfold(t, mode), full_matrices=False)
        factors.append(u[:, :r])
    u1, u2, u3 = factors
    core = np.einsum("ijk,ia,jb,kc->abc", t, u1, u2, u3, optimize=True)
    return TuckerFactors(core=core, u1=u1, u2=u2, u3=u3)


def tucker_full(factors: TuckerFactors) -> np.ndarray:
    """Dense reconstruction of the full tensor from its factorization."""
    return np.einsum(
        "abc,ia,jb,kc->ijk", factors.core, factors.u1, factors.u2, factors.u3,
        optimize=True,
    )


def reconstruct(factors: TuckerFactors, weight) -> np.ndarray:
    """One frontal slice: core x1 U1 x2 U2 x3 w^T.

    weight is either an integer slice index (row of u3) or an r3-vector.
    """
    if np.isscalar(weight) and isinstance(weight, (int, np.integer)):
        w = factors.u3[int(weight)]
    else:
        w = np.asarray(weight, dtype=float)
        if w.shape != (factors.core.shape[2],):
            raise ValueError(
                f"weight length {w.shape} does not match third-mode rank {factors.core.shape[2]}"
            )
    return np.einsum(
        "abc,ia,jb,c->ij", factors.core, factors.u1, factors.u2, w, optimize=True
    )


# ---------------------------------------------------------------------------
# CMA-ES
# ---------------------------------------------------------------------------

@dataclass
class CmaState:
    """Mutable state of a (mu/mu_w, lambda) CMA-ES run."""

    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    path_sigma: np.ndarray
    path_cov: np.ndarray
    lam: int
    generation: int = 0
    evaluations: int = 0


def _cma_weights(lam: int):
    mu = lam // 2
    raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / np.sum(weights**2)
    return mu, weights, mu_eff


def cmaes_minimize(f, x0, sigma0: float, budget: int, seed: int, lam: int | None = None):
    """Minimize f with CMA-ES (rank-one plus rank-mu covariance updates).

    Runs whole generations while they fit in the evaluation budget.  Candidates
    with non-finite objective values are ranked worst and the run continues.
    Returns (x_best, f_best, history) where history[i] is the best objective
    value seen after evaluation i+1 (monotone non-increasing).
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    if lam is None:
        lam = 4 + int(3 * math.log(n)) if n > 1 else 6
    if budget < lam:
        raise ValueError(f"budget {budget} smaller than population size {lam}")
    mu, weights, mu_eff = _cma_weights(lam)

    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    c_1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))

    state = CmaState(
        mean=x0.copy(),
        sigma=float(sigma0),
        cov=np.eye(n),
        path_sigma=np.zeros(n),
        path_cov=np.zeros(n),
        lam=lam,
    )
    rng = np.random.Generator(np.random.PCG64(seed))

    x_best = x0.copy()
    f_best = math.inf
    history: list[float] = []

    while state.evaluations + lam <= budget:
        # keep the covariance numerically symmetric before factorizing
        state.cov = 0.5 * (state.cov + state.cov.T)
        eigvals, eigvecs = np.linalg.eigh(state.cov)
        eigvals = np.maximum(eigvals, 1e-20)
        d = np.sqrt(eigvals)
        inv_sqrt = eigvecs @ np.diag(1.0 / d) @ eigvecs.T

        z = rng.standard_normal((lam, n))
        y = z @ (eigvecs * d).T           # y_i ~ N(0, C)
        xs = state.mean + state.sigma * y

        fs = np.empty(lam)
        for i in range(lam):
            val = f(xs[i])
            fs[i] = val if np.isfinite(val) else math.inf
            state.evaluations += 1
            if fs[i] < f_best:
                f_best = float(fs[i])
                x_best = xs[i].copy()
            history.append(f_best)

        order = np.argsort(fs, kind="stable")
        y_sel = y[order[:mu]]
        y_w = weights @ y_sel

        old_mean = state.mean
        state.mean = old_mean + state.sigma * y_w

        state.path_sigma = (1.0 - c_sigma) * state.path_sigma + math.sqrt(
            c_sigma * (2.0 - c_sigma) * mu_eff
        ) * (inv_sqrt @ y_w)
        ps_norm = float(np.linalg.norm(state.path_sigma))
        denom = math.sqrt(
            1.0 - (1.0 - c_sigma) ** (2.0 * (state.generation + 1))
        )
        h_sigma = 1.0 if ps_norm / denom < (1.4 + 2.0 / (n + 1.0)) * chi_n else 0.0

        state.path_cov = (1.0 - c_c) * state.path_cov + h_sigma * math.sqrt(
            c_c * (2.0 - c_c) * mu_eff
        ) * y_w

        rank_one = np.outer(state.path_cov, state.path_cov)
        rank_mu = (y_sel * weights[:, None]).T @ y_sel
        delta_h = (1.0 - h_sigma) * c_c * (2.0 - c_c)
        state.cov = (
            (1.0 - c_1 - c_mu) * state.cov
            + c_1 * (rank_one + delta_h * state.cov)
            + c_mu * rank_mu
        )

        state.sigma *= math.exp((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0))
        state.generation += 1

    return x_best, f_best, np.asarray(history)


# ---------------------------------------------------------------------------
# Correlation
# ---------------------------------------------------------------------------

def pearson(x, y) -> float:
    """Sample Pearson correlation in [-1, 1].

    Zero variance in either input yields 0.0 with a warning instead of NaN.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson expects two equal-length vectors")
    if x.shape[0] < 2:
        raise ValueError("pearson needs at least 2 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        warnings.warn("zero-variance input to pearson; returning 0.0", stacklevel=2)
        return 0.0
    r = float(np.sum(dx * dy) / (sx * sy))
    return max(-1.0, min(1.0, r))
