"""Constraint sets: boxes, Euclidean balls and orthogonally transformed boxes.

Every set exposes the two maps the value-function LP is built from:

* ``project`` -- the Euclidean projection onto the set,
* ``saturated_distance`` -- ``min(dist(x, set), 1)``.

All point-wise methods accept either a single point of shape ``(n,)`` or a
batch of shape ``(M, n)`` and return results of the matching shape.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError

# Relative slack used by the curved/rotated sets so that points produced by
# their own sampling or projection (which carry rounding error) test as members.
MEMBERSHIP_TOL = 1e-12

_MAX_GRID_CELLS = 5_000_000


def as_points(x, n: int) -> tuple[np.ndarray, bool]:
    """Return ``x`` as an ``(M, n)`` float array and whether it was a single point."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n:
        raise InputError(f"expected points of dimension {n}, got array of shape {np.shape(x)}")
    return arr, single


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


class ConstraintSet:
    """Base class; subclasses implement the projection in their own coordinates."""

    kind: str = ""
    dim: int

    # subclass hooks operating on (M, n) arrays ----------------------------
    def _project(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return projected points and the raw (unsaturated) distances."""
        raise NotImplementedError

    def _contains(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # public API ------------------------------------------------------------
    def project(self, x):
        X, single = as_points(x, self.dim)
        P, _ = self._project(X)
        return P[0] if single else P

    def saturated_distance(self, x):
        X, single = as_points(x, self.dim)
        _, d = self._project(X)
        d = np.minimum(d, 1.0)
        return float(d[0]) if single else d

    def project_and_distance(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Projection and saturated distance in one pass, batch form only."""
        X, _ = as_points(x, self.dim)
        P, d = self._project(X)
        return P, np.minimum(d, 1.0)

    def contains(self, x):
        X, single = as_points(x, self.dim)
        inside = self._contains(X)
        return bool(inside[0]) if single else inside

    def sample_uniform(self, count: int, seed=None) -> np.ndarray:
        """Draw ``count`` i.i.d. uniform points; deterministic for an integer seed."""
        if int(count) < 1:
            raise InputError("count must be a positive integer")
        return self._sample(int(count), _rng(seed))

    def volume(self) -> float:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box of the set."""
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    # grid helpers used by dispersion_upper_bound ---------------------------
    def _grid_frame(self):
        """Return (lower, upper, to_frame, keep_cell) for grid construction.

        ``to_frame`` maps points into the coordinates in which the grid is
        axis-aligned; ``keep_cell(centers, half_diag)`` filters cells that
        can intersect the set.
        """
        raise NotImplementedError

    def dispersion_upper_bound(self, points, grid_resolution: int) -> float:
        """Upper bound on the covering radius of ``points`` over the set.

        The set is covered by a regular grid with ``grid_resolution`` cells per
        axis. For each cell meeting the set the distance from its centre to the
        nearest point is computed; any point of the cell is then at most that
        distance plus half the cell diagonal away from the cloud. The maximum
        over cells bounds the Euclidean (hence also the sup-norm) covering
        radius. Refining the grid by an integer factor never increases it.
        """
        P, _ = as_points(points, self.dim)
        if P.shape[0] == 0:
            raise InputError("dispersion of an empty point set is undefined")
        res = int(grid_resolution)
        if res < 1:
            raise InputError("grid_resolution must be positive")
        if res ** self.dim > _MAX_GRID_CELLS:
            raise InputError(f"grid of {res}^{self.dim} cells is too large")
        lower, upper, to_frame, keep = self._grid_frame()
        width = (upper - lower) / res
        half_diag = 0.5 * float(np.linalg.norm(width))
        axes = [lower[j] + width[j] * (np.arange(res) + 0.5) for j in range(self.dim)]
        centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        centers = centers[keep(centers, half_diag)]
        tree = cKDTree(to_frame(P))
        worst = 0.0
        for start in range(0, centers.shape[0], 200_000):
            dist, _ = tree.query(centers[start:start + 200_000])
            worst = max(worst, float(dist.max()))
        return worst + half_diag

    def __eq__(self, other):
        return type(self) is type(other) and _dict_equal(self.to_dict(), other.to_dict())

    def __hash__(self):
        return hash(repr(self.to_dict()))


def _dict_equal(a, b) -> bool:
    return repr(a) == repr(b)


class Box(ConstraintSet):
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    kind = "box"

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float).ravel()
        self.upper = np.asarray(upper, dtype=float).ravel()
        if self.lower.shape != self.upper.shape or self.lower.size == 0:
            raise InputError("box bounds must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise InputError("box bounds must be finite")
        if np.any(self.lower >= self.upper):
            raise InputError("box requires lower < upper componentwise")
        self.dim = self.lower.size

    def _project(self, X):
        P = np.clip(X, self.lower, self.upper)
        return P, np.linalg.norm(X - P, axis=1)

    def _contains(self, X):
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    def _sample(self, count, rng):
        U = rng.random((count, self.dim))
        return np.clip(self.lower + (self.upper - self.lower) * U, self.lower, self.upper)

    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def bounds(self):
        return self.lower.copy(), self.upper.copy()

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def _grid_frame(self):
        return self.lower, self.upper, lambda P: P, lambda C, h: np.ones(len(C), dtype=bool)

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Ball(ConstraintSet):
    """Closed Euclidean ball."""

    kind = "ball"

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float).ravel()
        self.radius = float(radius)
        if self.center.size == 0 or not np.all(np.isfinite(self.center)):
            raise InputError("ball center must be a finite non-empty vector")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InputError("ball radius must be positive")
        self.dim = self.center.size

    def _project(self, X):
        diff = X - self.center
        norm = np.linalg.norm(diff, axis=1)
        outside = norm > self.radius * (1 + MEMBERSHIP_TOL)
        P = X.copy()
        if np.any(outside):
            P[outside] = self.center + diff[outside] * (self.radius / norm[outside])[:, None]
        dist = np.where(outside, norm - self.radius, 0.0)
        return P, dist

    def _contains(self, X):
        return np.linalg.norm(X - self.center, axis=1) <= self.radius * (1 + MEMBERSHIP_TOL)

    def _sample(self, count, rng):
        G = rng.standard_normal((count, self.dim))
        G /= np.linalg.norm(G, axis=1)[:, None]
        r = self.radius * rng.random(count) ** (1.0 / self.dim)
        return self.center + G * r[:, None]

    def volume(self):
        n = self.dim
        return float(math.pi ** (n / 2) * self.radius ** n / math.gamma(n / 2 + 1))

    def diameter(self):
        return 2.0 * self.radius

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}

    def _grid_frame(self):
        lo, hi = self.bounds()

        def keep(C, half_diag):
            return np.linalg.norm(C - self.center, axis=1) <= self.radius + half_diag

        return lo, hi, lambda P: P, keep

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class TransformedBox(ConstraintSet):
    """Image ``{Q u : lower <= u <= upper}`` of a box under an orthogonal matrix ``Q``."""

    kind = "transformed_box"

    def __init__(self, Q, lower, upper):
        self.box = Box(lower, upper)
        self.Q = np.asarray(Q, dtype=float)
        n = self.box.dim
        if self.Q.shape != (n, n):
            raise InputError(f"Q must be {n}x{n}")
        if np.max(np.abs(self.Q @ self.Q.T - np.eye(n))) > 1e-10:
            raise InputError("Q must be orthogonal (Q Q^T = I within 1e-10)")
        self.dim = n
        self._tol = MEMBERSHIP_TOL * (1.0 + float(np.max(np.abs(np.r_[self.box.lower, self.box.upper]))))

    @property
    def lower(self):
        return self.box.lower

    @property
    def upper(self):
        return self.box.upper

    def to_box_coords(self, X):
        return X @ self.Q

    def _inside_u(self, U):
        return np.all((U >= self.box.lower - self._tol) & (U <= self.box.upper + self._tol), axis=1)

    def _project(self, X):
        U = X @ self.Q
        inside = self._inside_u(U)
        Uc = np.clip(U, self.box.lower, self.box.upper)
        P = np.where(inside[:, None], X, Uc @ self.Q.T)
        dist = np.where(inside, 0.0, np.linalg.norm(U - Uc, axis=1))
        return P, dist

    def _contains(self, X):
        return self._inside_u(X @ self.Q)

    def _sample(self, count, rng):
        return self.box._sample(count, rng) @ self.Q.T

    def volume(self):
        return self.box.volume()

    def diameter(self):
        return self.box.diameter()

    def bounds(self):
        mid = 0.5 * (self.box.lower + self.box.upper)
        half = 0.5 * (self.box.upper - self.box.lower)
        c = self.Q @ mid
        r = np.abs(self.Q) @ half
        return c - r, c + r

    def to_dict(self):
        return {
            "kind": "transformed_box",
            "Q": self.Q.tolist(),
            "lower": self.box.lower.tolist(),
            "upper": self.box.upper.tolist(),
        }

    def _grid_frame(self):
        return self.box.lower, self.box.upper, self.to_box_coords, lambda C, h: np.ones(len(C), dtype=bool)

    def __repr__(self):
        return f"TransformedBox(n={self.dim})"


def set_from_dict(spec: dict) -> ConstraintSet:
    """Build a set from its JSON description, e.g. ``{"kind": "ball", "center": [0, 0], "radius": 1}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InputError("set description must be an object with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "box":
            return Box(spec["lower"], spec["upper"])
        if kind == "ball":
            return Ball(spec["center"], spec["radius"])
        if kind == "transformed_box":
            return TransformedBox(spec["Q"], spec["lower"], spec["upper"])
    except KeyError as exc:
        raise InputError(f"set of kind {kind!r} is missing field {exc}") from None
    raise InputError(f"unknown set kind {kind!r}")


# functional aliases ---------------------------------------------------------

def project(cset: ConstraintSet, x):
    return cset.project(x)


def saturated_distance(cset: ConstraintSet, x):
    return cset.saturated_distance(x)


def contains(cset: ConstraintSet, x):
    return cset.contains(x)


def sample_uniform(cset: ConstraintSet, count: int, seed=None) -> np.ndarray:
    return cset.sample_uniform(count, seed)


def volume(cset: ConstraintSet) -> float:
    return cset.volume()


def dispersion_upper_bound(cset: ConstraintSet, points, grid_resolution: int) -> float:
    return cset.dispersion_upper_bound(points, grid_resolution)
