"""Pure-Python/numpy implementations of the hot kernels.

Each function has a compiled twin in ``_kernels.pyx``.  The error-count and
prefix-sum kernels perform the same floating-point operations in the same
order in both backends and agree bitwise; the eigenvalue path differs only
in the dot-product summation order used by BLAS.
"""

import numpy as np

from .errors import ConvergenceError

_MASK64 = (1 << 64) - 1


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _reseed(v, state):
    # uniform entries in [-1, 1) from splitmix64, then normalized
    for i in range(v.shape[0]):
        state, r = _splitmix64(state)
        v[i] = (r >> 11) * (2.0 / 9007199254740992.0) - 1.0
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    v /= np.sqrt(s)
    return state


def lambda_max_path(Z, tol=1e-8, max_iter=10000, seed=0x5EED):
    """Largest eigenvalue of ``Z[:, :m] Z[:, :m]^T`` for m = 1..M.

    The n x n Gram matrix is grown by one rank-1 term per column and the
    power iteration is warm-started from the previous eigenvector.  The
    Rayleigh quotient is returned once its relative change drops to ``tol``.

    Returns
    -------
    values : (M,) float64
    iterations : (M,) int64
    """
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    n, M = Z.shape
    G = np.zeros((n, n))
    v = np.full(n, 1.0 / np.sqrt(n))
    values = np.empty(M)
    iters = np.zeros(M, dtype=np.int64)
    state = seed & _MASK64
    for m in range(M):
        z = Z[:, m]
        G += np.outer(z, z)
        lam_prev = -1.0
        it = 0
        converged = False
        while it < max_iter:
            it += 1
            w = G @ v
            lam = float(v @ w)
            nw = float(np.sqrt(w @ w))
            if nw == 0.0 or lam <= 0.0:
                state = _reseed(v, state)
                lam_prev = -1.0
                continue
            v = w / nw
            if abs(lam - lam_prev) <= tol * lam:
                converged = True
                break
            lam_prev = lam
        if not converged:
            raise ConvergenceError(
                f"power iteration did not converge at m={m + 1} after {it} iterations",
                iterations=it,
            )
        values[m] = lam
        iters[m] = it
    return values, iters


def nested_error_counts(C, labels):
    """Misclassification counts of the nested partial-sum scores.

    ``C[i, k]`` is the k-th ranked feature's contribution to test sample
    i's score; the score using the first m features is the running sum
    along the row.  Class 1 is predicted iff that sum is > 0.
    """
    C = np.asarray(C, dtype=np.float64)
    labels = np.asarray(labels)
    S = np.cumsum(C, axis=1)
    pred1 = S > 0.0
    wrong = np.where((labels == 1)[:, None], ~pred1, pred1)
    return wrong.sum(axis=0).astype(np.int64)


def compensated_cumsum(x):
    """Running sum with Neumaier compensation."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape[0])
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        xi = float(x[i])
        t = s + xi
        if abs(s) >= abs(xi):
            c += (s - t) + xi
        else:
            c += (xi - t) + s
        s = t
        out[i] = s + c
    return out
