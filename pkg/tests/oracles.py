"""Independent numerical oracles used by the unit and acceptance suites.

These deliberately avoid the library's own solution paths: the ridge oracle
uses hand-rolled Gaussian elimination instead of a Cholesky factorization,
and the isotonic fit is a direct pool-adjacent-violators pass.
"""

import numpy as np


def gaussian_elimination_solve(a, rhs):
    """Solve ``a x = rhs`` by partial-pivot elimination."""
    a = np.array(a, dtype=float)
    rhs = np.array(rhs, dtype=float)
    n = a.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            rhs[[col, pivot]] = rhs[[pivot, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            rhs[row] -= f * rhs[col]
    x = np.zeros_like(rhs)
    for row in range(n - 1, -1, -1):
        x[row] = (rhs[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


def ridge_oracle(phi, targets, beta):
    """Normal-equation ridge solution through the elimination solver."""
    a = phi @ phi.T + beta * np.eye(phi.shape[0])
    return gaussian_elimination_solve(a, (targets @ phi.T).T).T


def isotonic_fit(y, weights=None):
    """Nondecreasing least-squares fit by pool-adjacent-violators."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    level = list(y.astype(float))
    weight = list(w.astype(float))
    size = [1] * len(y)
    i = 0
    while i < len(level) - 1:
        if level[i] <= level[i + 1] + 1e-15:
            i += 1
            continue
        total = weight[i] + weight[i + 1]
        merged = (level[i] * weight[i] + level[i + 1] * weight[i + 1]) / total
        level[i] = merged
        weight[i] = total
        size[i] += size[i + 1]
        del level[i + 1], weight[i + 1], size[i + 1]
        if i > 0:
            i -= 1
    out = np.empty(len(y))
    pos = 0
    for lv, sz in zip(level, size):
        out[pos:pos + sz] = lv
        pos += sz
    return out
