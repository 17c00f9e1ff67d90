"""RBF kernel evaluation, Gram matrices, and the regularized SPD solve.

For bipolar vectors the squared Euclidean distance reduces to an inner
product, ||x - y||^2 = 2N - 2 x.y = 4d with d the Hamming distance, so Gram
matrices come from a single symmetric rank-k update instead of an explicit
pairwise-distance pass.  All arithmetic on the +-1 entries is exact in
float64, which makes Gram symmetry and the unit diagonal exact properties,
not approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, get_blas_funcs

from .patterns import PatternSet, _check_state

__all__ = [
    "KernelConfig",
    "FactorizationError",
    "for_dimension",
    "rbf",
    "gram_matrix",
    "kernel_row",
    "solve_regularized",
    "check_kernel_matrix",
]


class FactorizationError(RuntimeError):
    """SPD factorization failed even after the jitter fallback was exhausted."""


@dataclass(frozen=True)
class KernelConfig:
    """RBF width parameter gamma; K(x, y) = exp(-gamma ||x - y||^2).

    The conventional default for N-dimensional bipolar states is gamma = 1/N,
    which keeps kernel values in a usable range regardless of N (the maximum
    squared distance is 4N).
    """

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")


def for_dimension(n, scale=1.0):
    """KernelConfig with gamma = scale / n, the dimension-scaled default."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not scale > 0.0:
        raise ValueError(f"scale must be > 0, got {scale}")
    return KernelConfig(gamma=scale / n)


def rbf(x, y, config):
    """Kernel value exp(-gamma ||x - y||^2) for two bipolar vectors.

    Equal-length inputs required; the result is exp(-4 gamma d) where d is
    the Hamming distance, hence 1.0 exactly when x == y and strictly
    decreasing in d.
    """
    vx = _check_state(x, name="x")
    vy = _check_state(y, n=vx.shape[0], name="y")
    dot = int(vx.astype(np.int64) @ vy.astype(np.int64))
    d2 = 2 * vx.shape[0] - 2 * dot
    return float(np.exp(-config.gamma * d2))


def gram_matrix(pattern_set, config):
    """P x P kernel matrix of a pattern set.

    Built from one symmetric rank-k update (upper triangle, then mirrored),
    so the result is exactly symmetric with an exactly unit diagonal and all
    entries in (0, 1].
    """
    x = pattern_set.data.astype(np.float64)
    n = pattern_set.n
    (syrk,) = get_blas_funcs(("syrk",), (x,))
    upper = np.triu(syrk(1.0, x))  # upper triangle of x @ x.T
    dots = upper + np.triu(upper, 1).T
    return np.exp(-config.gamma * (2.0 * n - 2.0 * dots))


def kernel_row(state, pattern_set, config):
    """Vector of kernel values between one state and every stored pattern."""
    s = _check_state(state, n=pattern_set.n, name="state")
    dots = pattern_set.data.astype(np.float64) @ s.astype(np.float64)
    return np.exp(-config.gamma * (2.0 * pattern_set.n - 2.0 * dots))


def check_kernel_matrix(k):
    """Validate Gram-matrix invariants; raises ValueError on violation.

    Checks: square, finite, exactly symmetric, unit diagonal, entries in
    (0, 1].  Intended for tests and self-checks; the solver only requires
    symmetry.
    """
    k = np.asarray(k)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel matrix must be square, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel matrix has non-finite entries")
    if not np.array_equal(k, k.T):
        raise ValueError("kernel matrix is not exactly symmetric")
    if not np.all(k.diagonal() == 1.0):
        raise ValueError("kernel matrix diagonal is not exactly 1")
    if not (np.all(k > 0.0) and np.all(k <= 1.0)):
        raise ValueError("kernel matrix entries must lie in (0, 1]")
    return k


def solve_regularized(k, lam, targets):
    """Solve (K + lam*I) A = targets for all right-hand sides at once.

    K must be symmetric positive semidefinite and lam > 0, making the shifted
    matrix positive definite; the solve uses a Cholesky factorization, which
    is the cheapest stable option for SPD systems and fails loudly (rather
    than silently losing accuracy) if the matrix is not one.

    If the factorization breaks down numerically, e.g. for rank-deficient K
    from duplicate patterns pushed to the edge of the lam floor, the solve
    retries with a jitter lam + 1e-10 * trace(K)/P escalated tenfold at most
    three times, then raises :class:`FactorizationError`.
    """
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel matrix must be square, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel matrix has non-finite entries")
    if not np.allclose(k, k.T, rtol=0.0, atol=1e-12):
        raise ValueError("kernel matrix is not symmetric")
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValueError(f"lam must be finite and > 0, got {lam}")
    rhs = np.asarray(targets, dtype=np.float64)
    if rhs.shape[0] != k.shape[0]:
        raise ValueError(
            f"targets have {rhs.shape[0]} rows, expected {k.shape[0]}"
        )

    p = k.shape[0]
    jitter = 1e-10 * float(np.trace(k)) / p
    shifts = [lam, lam + jitter, lam + 10.0 * jitter, lam + 100.0 * jitter]
    identity = np.eye(p)
    for shift in shifts:
        try:
            factor = cho_factor(k + shift * identity, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        return cho_solve(factor, rhs, check_finite=False)
    raise FactorizationError(
        f"Cholesky failed for all jitter shifts up to {shifts[-1]!r}"
    )
