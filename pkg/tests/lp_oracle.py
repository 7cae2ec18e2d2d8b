"""Vertex-enumeration reference for tiny LPs ``max z^T c s.t. A c <= b``."""

import itertools

import numpy as np

from invlp.lp import LpProblem


def brute_force_max(A, b, z, tol=1e-9):
    """Best objective over all basic feasible points (None when there is no vertex)."""
    m, N = A.shape
    best = None
    for rows in itertools.combinations(range(m), N):
        S = A[list(rows)]
        if abs(np.linalg.det(S)) < 1e-12:
            continue
        x = np.linalg.solve(S, b[list(rows)])
        if np.all(A @ x <= b + tol * (1 + np.abs(b))):
            val = float(z @ x)
            best = val if best is None else max(best, val)
    return best


def random_bounded_lp(rng, N=None, m=None):
    """Feasible LP whose objective is a positive combination of rows (hence bounded)."""
    N = N or int(rng.integers(1, 4))
    m = m or int(rng.integers(N + 1, 9))
    A = rng.normal(size=(m, N))
    x0 = rng.normal(size=N)
    b = A @ x0 + rng.uniform(0.1, 2.0, m)
    w = np.zeros(m)
    w[rng.choice(m, size=N, replace=False)] = rng.uniform(0.2, 1.0, N)
    w += rng.uniform(0, 0.3, m) * (rng.uniform(size=m) < 0.5)
    z = A.T @ w
    return raw_problem(A, b, z)


def raw_problem(A, b, z):
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    return LpProblem(np.asarray(z, dtype=float), A, np.asarray(b, dtype=float),
                     np.zeros(m, dtype=np.int8), np.arange(m))
