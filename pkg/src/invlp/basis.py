"""Finite-dimensional function spaces for the value function.

Two families are provided:

``MonomialBasis(n, degree)``
    all monomials of total degree ``<= degree``, ``N = C(n + d, n)``.
    Exponents are listed in graded-lexicographic order: by total degree, then
    lexicographically descending with ``x1`` the most significant variable.
    For ``n = 2, d = 2`` this is ``1, x1, x2, x1^2, x1 x2, x2^2``.

``ThinPlateBasis(centers)``
    ``phi_i(x) = r^2 log r`` with ``r = ||x - c_i||_2``, extended by 0 at ``r = 0``.

Evaluation is batched: ``eval`` maps an ``(M, n)`` array to ``(M, N)``.
"""

from __future__ import annotations

import math
from typing import Any, Iterator

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from .errors import ConfigurationError, InputError
from .geometry import Ball, Box, ConstraintSet, TransformedBox, as_points

_CHUNK_ENTRIES = 4_000_000
DEFAULT_MC_SAMPLES = 1_000_000
_MIN_CENTER_GAP = 1e-9


def graded_lex_exponents(n: int, degree: int) -> np.ndarray:
    """Exponent matrix of shape ``(N, n)`` in graded-lexicographic order."""

    def rec(nvars: int, total: int) -> Iterator[tuple]:
        if nvars == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in rec(nvars - 1, total - first):
                yield (first,) + rest

    rows = [e for d in range(degree + 1) for e in rec(n, d)]
    return np.array(rows, dtype=np.int64).reshape(-1, n)


class Basis:
    kind = ""
    n: int

    @property
    def size(self) -> int:
        raise NotImplementedError

    def _eval(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _grad(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _rows_per_chunk(self) -> int:
        return max(1, _CHUNK_ENTRIES // max(self.size, 1))

    def eval(self, x) -> np.ndarray:
        X, single = as_points(x, self.n)
        out = np.empty((X.shape[0], self.size))
        step = self._rows_per_chunk()
        for s in range(0, X.shape[0], step):
            out[s:s + step] = self._eval(X[s:s + step])
        return out[0] if single else out

    def eval_dot(self, x, coefficients) -> np.ndarray:
        """``eval(x) @ coefficients`` without materialising the full matrix."""
        X, single = as_points(x, self.n)
        c = np.asarray(coefficients, dtype=float)
        out = np.empty(X.shape[0])
        step = self._rows_per_chunk()
        for s in range(0, X.shape[0], step):
            out[s:s + step] = self._eval(X[s:s + step]) @ c
        return float(out[0]) if single else out

    def gradient(self, x) -> np.ndarray:
        """Gradients of all basis functions: ``(N, n)`` for one point, ``(M, N, n)`` for a batch."""
        X, single = as_points(x, self.n)
        G = self._grad(X)
        return G[0] if single else G

    def grad_dot(self, x, coefficients) -> np.ndarray:
        """Gradient of ``beta(x)^T c`` for a batch of points, shape ``(M, n)``."""
        X, single = as_points(x, self.n)
        c = np.asarray(coefficients, dtype=float)
        out = np.empty((X.shape[0], self.n))
        step = max(1, self._rows_per_chunk() // self.n)
        for s in range(0, X.shape[0], step):
            out[s:s + step] = np.einsum("mkj,k->mj", self._grad(X[s:s + step]), c)
        return out[0] if single else out

    def integrate(self, cset: ConstraintSet, quadrature: str = "auto",
                  samples: int = DEFAULT_MC_SAMPLES, seed=0) -> tuple[np.ndarray, dict]:
        """Mean of every basis function under the uniform probability measure on ``cset``.

        Returns ``(z, info)``; ``info`` records the method and, for Monte Carlo,
        the largest per-entry standard error.
        """
        if cset.dim != self.n:
            raise InputError("set and basis dimensions differ")
        if quadrature not in ("auto", "analytic", "monte_carlo"):
            raise ConfigurationError(f"unknown quadrature {quadrature!r}")
        if quadrature != "monte_carlo":
            z = self._analytic_integral(cset)
            if z is not None:
                return z, {"method": "analytic"}
            if quadrature == "analytic":
                raise ConfigurationError(
                    f"no closed-form integral for {self.kind} basis over a {cset.kind} set")
        return self._mc_integral(cset, int(samples), seed)

    def _analytic_integral(self, cset: ConstraintSet):
        return None

    def _mc_integral(self, cset, samples, seed):
        if samples < 2:
            raise InputError("Monte Carlo integration needs at least two samples")
        rng = np.random.default_rng(seed)
        total = np.zeros(self.size)
        total_sq = np.zeros(self.size)
        step = self._rows_per_chunk()
        done = 0
        while done < samples:
            m = min(step, samples - done)
            B = self._eval(cset.sample_uniform(m, rng))
            total += B.sum(axis=0)
            total_sq += np.einsum("ij,ij->j", B, B)
            done += m
        z = total / samples
        var = np.maximum(total_sq / samples - z * z, 0.0)
        stderr = float(np.sqrt(var.max() / samples))
        return z, {"method": "monte_carlo", "samples": samples, "seed": seed, "max_stderr": stderr}

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


class MonomialBasis(Basis):
    kind = "monomial"

    def __init__(self, n: int, degree: int):
        if int(n) < 1 or int(degree) < 0:
            raise InputError("monomial basis needs n >= 1 and degree >= 0")
        self.n = int(n)
        self.degree = int(degree)
        self.exponents = graded_lex_exponents(self.n, self.degree)

    @property
    def size(self):
        return self.exponents.shape[0]

    def _powers(self, X):
        # P[k, m, j] = X[m, j] ** k
        P = np.empty((self.degree + 1,) + X.shape)
        P[0] = 1.0
        for k in range(1, self.degree + 1):
            P[k] = P[k - 1] * X
        return P

    def _eval(self, X):
        P = self._powers(X)
        out = np.ones((X.shape[0], self.size))
        for j in range(self.n):
            out *= P[self.exponents[:, j], :, j].T
        return out

    def _grad(self, X):
        P = self._powers(X)
        M = X.shape[0]
        G = np.empty((M, self.size, self.n))
        for i in range(self.n):
            g = np.ones((M, self.size))
            for j in range(self.n):
                e = self.exponents[:, j]
                if j == i:
                    g *= (P[np.maximum(e - 1, 0), :, j] * e[:, None]).T
                else:
                    g *= P[e, :, j].T
            G[:, :, i] = g
        return G

    def _analytic_integral(self, cset):
        E = self.exponents
        if isinstance(cset, TransformedBox):
            if not np.array_equal(cset.Q, np.eye(self.n)):
                return None
            cset = cset.box
        if isinstance(cset, Box):
            lo, hi = cset.lower, cset.upper
            p = E + 1
            per_axis = (hi ** p - lo ** p) / (p * (hi - lo))
            return per_axis.prod(axis=1)
        if isinstance(cset, Ball) and np.all(cset.center == 0):
            # int_{B_r} x^g dx = 2 prod Gamma(b_j) / Gamma(sum b_j) * r^(|g|+n) / (|g|+n),
            # b_j = (g_j + 1) / 2, nonzero only for all-even exponents
            r, n = cset.radius, self.n
            z = np.zeros(self.size)
            even = np.all(E % 2 == 0, axis=1)
            b = (E[even] + 1) / 2.0
            tot = E[even].sum(axis=1) + n
            log_int = (math.log(2.0) + gammaln(b).sum(axis=1) - gammaln(b.sum(axis=1))
                       + tot * math.log(r) - np.log(tot))
            z[even] = np.exp(log_int) / cset.volume()
            return z
        return None

    def to_dict(self):
        return {"kind": "monomial", "n": self.n, "degree": self.degree}

    def __repr__(self):
        return f"MonomialBasis(n={self.n}, degree={self.degree})"


class ThinPlateBasis(Basis):
    kind = "rbf_thin_plate"

    def __init__(self, centers):
        C = np.atleast_2d(np.asarray(centers, dtype=float))
        if C.size == 0 or C.ndim != 2:
            raise InputError("thin-plate basis needs a non-empty (N, n) center array")
        if not np.all(np.isfinite(C)):
            raise InputError("RBF centers must be finite")
        if C.shape[0] > 1:
            from scipy.spatial import cKDTree

            d, _ = cKDTree(C).query(C, k=2)
            if d[:, 1].min() <= _MIN_CENTER_GAP:
                raise InputError("RBF centers must be pairwise distinct")
        self.centers = C
        self.n = C.shape[1]

    @property
    def size(self):
        return self.centers.shape[0]

    def _eval(self, X):
        R2 = cdist(X, self.centers, "sqeuclidean")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 0.5 * R2 * np.log(R2)
        out[R2 == 0.0] = 0.0
        return out

    def _grad(self, X):
        D = X[:, None, :] - self.centers[None, :, :]
        R2 = np.einsum("mkj,mkj->mk", D, D)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.log(R2) + 1.0          # 2 log r + 1
        w[R2 == 0.0] = 0.0
        return D * w[:, :, None]

    def to_dict(self):
        return {"kind": "rbf_thin_plate", "centers": self.centers.tolist()}

    def __repr__(self):
        return f"ThinPlateBasis(N={self.size}, n={self.n})"


def basis_from_dict(spec: dict) -> Basis:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("basis description must be an object with a 'kind' key")
    if spec["kind"] == "monomial":
        return MonomialBasis(spec["n"], spec["degree"])
    if spec["kind"] == "rbf_thin_plate":
        return ThinPlateBasis(spec["centers"])
    raise ConfigurationError(f"unknown basis kind {spec['kind']!r}")


def basis_dimension(basis: Basis) -> int:
    return basis.size


def eval_basis(basis: Basis, x) -> np.ndarray:
    return basis.eval(x)


def gradient_basis(basis: Basis, x) -> np.ndarray:
    return basis.gradient(x)


def integrate_basis(basis: Basis, cset: ConstraintSet, quadrature: str = "auto",
                    samples: int = DEFAULT_MC_SAMPLES, seed=0) -> np.ndarray:
    return basis.integrate(cset, quadrature, samples, seed)[0]


def unisolvency_check(basis: Basis, points) -> dict:
    """Rank test of the evaluation matrix ``[beta(z_1); ...; beta(z_K')]``.

    Singular values below ``N * sigma_max * 1e-12`` count as zero. Columns are
    scaled to unit norm first: this leaves the spanned space (and hence
    unisolvency) unchanged but removes the artificial ill-conditioning of
    high-degree monomials, whose raw Vandermonde matrix is otherwise rejected.
    """
    Z, _ = as_points(points, basis.n)
    N = basis.size
    if Z.shape[0] == 0:
        raise InputError("unisolvency check needs at least one point")
    V = basis.eval(Z)
    norms = np.linalg.norm(V, axis=0)
    V = V / np.where(norms > 0, norms, 1.0)
    sv = np.linalg.svd(V, compute_uv=False)
    smax = float(sv[0]) if sv.size else 0.0
    rank = int(np.sum(sv > N * smax * 1e-12)) if smax > 0 else 0
    smin = float(sv[-1]) if sv.size == N else 0.0
    cond = smax / smin if smin > 0 else math.inf
    return {"unisolvent": rank == N, "rank": rank, "condition_estimate": cond}


def generate_rbf_centers(cset: ConstraintSet, N: int, seed) -> np.ndarray:
    """``N`` uniform centers in ``cset``, redrawing any within 1e-9 of an earlier one."""
    if int(N) < 1:
        raise InputError("N must be positive")
    from scipy.spatial import cKDTree

    rng = np.random.default_rng(seed)
    C = cset.sample_uniform(int(N), rng)
    while True:
        tree = cKDTree(C)
        pairs = tree.query_pairs(_MIN_CENTER_GAP, output_type="ndarray")
        if len(pairs) == 0:
            return C
        bad = np.unique(pairs.max(axis=1))
        C[bad] = cset.sample_uniform(bad.size, rng)
