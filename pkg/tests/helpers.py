"""Shared test oracles, implemented independently of the package internals."""

import numpy as np


def pairwise_gram_oracle(data, gamma):
    """Gram matrix via the explicit pairwise squared-distance definition."""
    x = np.asarray(data, dtype=np.float64)
    p = x.shape[0]
    k = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            k[i, j] = np.exp(-gamma * float(np.sum((x[i] - x[j]) ** 2)))
    return k


def ridge_objective(k, alpha, x, lam):
    """Regularized squared error 0.5||K a - x||_F^2 + 0.5 lam tr(a^T K a)."""
    resid = k @ alpha - x
    return 0.5 * float(np.sum(resid * resid)) + 0.5 * lam * float(np.sum(alpha * (k @ alpha)))


def gd_ridge_oracle(k, x, lam, max_iters=60000, tol=1e-14):
    """Long-run gradient descent on :func:`ridge_objective` from zero.

    Returns (alpha, converged).  The step size is 1/L with L an upper bound
    on the Hessian norm, so the iteration is a contraction on the range of K;
    components in the null space of K never move, matching the closed-form
    solution whenever the targets share that null space (always true for
    duplicate-pattern Gram matrices, where the null space pairs identical
    rows of the targets).
    """
    p = k.shape[0]
    shifted = k + lam * np.eye(p)
    knorm = float(np.linalg.norm(k, 2))
    step = 1.0 / (knorm * (knorm + lam))
    alpha = np.zeros_like(x, dtype=np.float64)
    for _ in range(max_iters):
        grad = k @ (shifted @ alpha - x)
        new = alpha - step * grad
        if float(np.max(np.abs(new - alpha))) < tol:
            return new, True
        alpha = new
    return alpha, False


def fixed_point_scalar(lam, target, lo=-30.0, hi=30.0, iters=200):
    """Bisection root of sigmoid(a) - target + lam * a (scalar dual optimum)."""

    def g(a):
        return 1.0 / (1.0 + np.exp(-a)) - target + lam * a

    assert g(lo) * g(hi) < 0, "root not bracketed"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(lo) * g(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def synchronous_step_oracle(field_fn, state):
    """One synchronous update computed neuron by neuron from a frozen copy."""
    frozen = np.array(state, dtype=np.float64, copy=True)
    out = np.empty(len(frozen), dtype=np.int8)
    for i in range(len(frozen)):
        h = field_fn(frozen, i)
        out[i] = 1 if h >= 0.0 else -1
    return out
