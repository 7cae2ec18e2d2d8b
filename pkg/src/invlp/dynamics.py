"""Benchmark systems, transition datasets and rollout-based ground truth.

The four benchmark maps are

* ``julia``          -- ``x+ = (x1^2 - x2^2 + a1, 2 x1 x2 + a2)``,
* ``julia_product``  -- n/2 stacked Julia maps in coordinates rotated by a
  seeded orthogonal matrix ``Q``: ``f(x) = Q F(Q^T x)``,
* ``henon3``         -- three-dimensional Henon map with one control input,
* ``flower_switched``-- RK4 discretisation of a two-mode switched field.

Only the one-step pairs ``(x, x+)`` leave this module; control samples used to
produce a controlled dataset are discarded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, InputError
from .geometry import Ball, Box, ConstraintSet, TransformedBox, as_points

SYSTEM_KINDS = ("julia", "julia_product", "henon3_controlled", "flower_switched")

_FLOWER_A1 = np.array([[-1.0, 1.0], [-5.0, -0.1]])   # active when x1^2 <= x2^2
_FLOWER_A2 = np.array([[-0.1, 5.0], [-1.0, -0.1]])   # active when x1^2 >  x2^2


def random_unitary(n: int, seed) -> np.ndarray:
    """Seeded orthogonal matrix: QR of a standard Gaussian matrix with ``diag(R) > 0``."""
    if int(n) < 1:
        raise InputError("n must be positive")
    G = np.random.default_rng(seed).standard_normal((int(n), int(n)))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def rk4_step(field: Callable[[np.ndarray], np.ndarray], x, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``dx/dt = field(x)``.

    ``field`` must accept the same array shape as ``x``.
    """
    if not h > 0:
        raise InputError("step size h must be positive")
    x = np.asarray(x, dtype=float)
    k1 = field(x)
    k2 = field(x + 0.5 * h * k1)
    k3 = field(x + 0.5 * h * k2)
    k4 = field(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def julia_map(X: np.ndarray, a) -> np.ndarray:
    x1, x2 = X[:, 0], X[:, 1]
    return np.column_stack((x1 * x1 - x2 * x2 + a[0], 2.0 * x1 * x2 + a[1]))


@dataclass(frozen=True)
class SystemSpec:
    """Description of one benchmark system.

    Args:
        kind: one of ``SYSTEM_KINDS``.
        a: Julia parameter (``julia`` and ``julia_product``).
        n: state dimension for ``julia_product`` (even).
        unitary_seed: seed of the coordinate change for ``julia_product``.
        variant: ``"affine"`` or ``"nonlinear"`` for ``flower_switched``.
        h: RK4 step for ``flower_switched``.
    """

    kind: str
    a: tuple = (-0.7, 0.2)
    n: int = 2
    unitary_seed: int = 0
    variant: str = "affine"
    h: float = 0.05

    def __post_init__(self):
        if self.kind not in SYSTEM_KINDS:
            raise ConfigurationError(f"unknown system kind {self.kind!r}")
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if len(self.a) != 2:
            raise InputError("Julia parameter a must have two entries")
        if self.kind == "julia_product" and (self.n < 2 or self.n % 2):
            raise InputError("julia_product needs an even dimension n >= 2")
        if self.kind == "flower_switched":
            if self.variant not in ("affine", "nonlinear"):
                raise InputError("flower variant must be 'affine' or 'nonlinear'")
            if not self.h > 0:
                raise InputError("RK4 step h must be positive")

    @property
    def state_dim(self) -> int:
        return {"julia": 2, "julia_product": self.n, "henon3_controlled": 3, "flower_switched": 2}[self.kind]

    @property
    def control_dim(self) -> int:
        return 1 if self.kind == "henon3_controlled" else 0

    @cached_property
    def Q(self) -> np.ndarray:
        if self.kind != "julia_product":
            raise ConfigurationError("only julia_product carries a coordinate change")
        return random_unitary(self.n, self.unitary_seed)

    def _flower_field(self, x0: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        # mode is frozen at the state where the step starts
        first = (x0[:, 0] ** 2 <= x0[:, 1] ** 2)[:, None]

        def phi(X):
            return X if self.variant == "affine" else np.sin(X ** 3)

        def field(X):
            P = phi(X)
            return np.where(first, P @ _FLOWER_A1.T, P @ _FLOWER_A2.T)

        return field

    def step(self, x, u=None) -> np.ndarray:
        """Evaluate the transition map on one point or a batch of points."""
        X, single = as_points(x, self.state_dim)
        if self.control_dim:
            if u is None:
                raise InputError(f"system {self.kind!r} requires a control input")
            U, _ = as_points(np.reshape(u, (-1, self.control_dim)) if not single else np.atleast_1d(u),
                             self.control_dim)
            if U.shape[0] != X.shape[0]:
                raise InputError("state and control batches differ in length")
        elif u is not None:
            raise InputError(f"system {self.kind!r} takes no control input")

        if self.kind == "julia":
            Y = julia_map(X, self.a)
        elif self.kind == "julia_product":
            Z = X @ self.Q
            Y = np.empty_like(Z)
            for j in range(0, self.n, 2):
                Y[:, j:j + 2] = julia_map(Z[:, j:j + 2], self.a)
            Y = Y @ self.Q.T
        elif self.kind == "henon3_controlled":
            x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
            Y = np.column_stack((0.44 - 0.1 * x3 - 4.0 * x2 ** 2 + 0.25 * U[:, 0],
                                 x1 - 4.0 * x1 * x2,
                                 x2))
        else:
            Y = rk4_step(self._flower_field(X), X, self.h)
        return Y[0] if single else Y

    def default_state_set(self) -> ConstraintSet:
        """Constraint set used for this system in the benchmark experiments."""
        if self.kind == "julia":
            return Ball(np.zeros(2), 1.0)
        if self.kind == "julia_product":
            return TransformedBox(self.Q, -np.ones(self.n), np.ones(self.n))
        return Box(-np.ones(self.state_dim), np.ones(self.state_dim))

    def default_control_set(self) -> Optional[ConstraintSet]:
        return Box([-1.0], [1.0]) if self.control_dim else None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("julia", "julia_product"):
            d["a"] = list(self.a)
        if self.kind == "julia_product":
            d.update(n=self.n, unitary_seed=self.unitary_seed)
        if self.kind == "flower_switched":
            d.update(variant=self.variant, h=self.h)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SystemSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigurationError("system description must be an object with a 'kind' key")
        allowed = {"kind", "a", "n", "unitary_seed", "variant", "h"}
        extra = set(d) - allowed
        if extra:
            raise ConfigurationError(f"unknown system fields: {sorted(extra)}")
        return cls(**d)


def step(system: SystemSpec, x, u=None) -> np.ndarray:
    return system.step(x, u)


@dataclass
class TransitionDataset:
    """Unordered one-step transition pairs ``(x_i, x_i+)``."""

    X: np.ndarray
    Xp: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Xp = np.atleast_2d(np.asarray(self.Xp, dtype=float))
        if self.X.shape != self.Xp.shape:
            raise InputError("x and x+ arrays must have the same shape")
        if self.X.shape[0] == 0 or self.X.size == 0:
            raise InputError("a dataset needs at least one transition pair")

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return self.X.shape[0]

    def subset(self, idx) -> "TransitionDataset":
        return TransitionDataset(self.X[idx], self.Xp[idx], dict(self.metadata))

    def split(self, fraction: float) -> tuple["TransitionDataset", "TransitionDataset"]:
        """First ``floor(fraction * K)`` pairs and the remainder."""
        if not 0.0 < fraction < 1.0:
            raise InputError("split fraction must lie in (0, 1)")
        k1 = int(np.floor(fraction * len(self)))
        if k1 < 1 or k1 >= len(self):
            raise InputError(f"split fraction {fraction} leaves an empty part for K={len(self)}")
        return self.subset(slice(0, k1)), self.subset(slice(k1, None))

    def to_csv(self, path) -> None:
        n = self.dim
        header = [f"x{i + 1}" for i in range(n)] + [f"xp{i + 1}" for i in range(n)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in np.hstack((self.X, self.Xp)):
                w.writerow([format(v, ".17g") for v in row])

    @classmethod
    def from_csv(cls, path) -> "TransitionDataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise InputError(f"{path}: empty dataset file")
        header, body = rows[0], rows[1:]
        if len(header) % 2 or not header:
            raise InputError(f"{path}: header must list x1..xn,xp1..xpn")
        n = len(header) // 2
        expected = [f"x{i + 1}" for i in range(n)] + [f"xp{i + 1}" for i in range(n)]
        if header != expected:
            raise InputError(f"{path}: unexpected header {header}")
        try:
            data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, 2 * n)
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from None
        return cls(data[:, :n], data[:, n:], {"source": str(path)})


def generate_dataset(system: SystemSpec, state_set: ConstraintSet, control_set: Optional[ConstraintSet],
                     K: int, seed) -> TransitionDataset:
    """Sample ``K`` states (and controls) uniformly and record one-step transitions."""
    if state_set.dim != system.state_dim:
        raise InputError(f"state set has dimension {state_set.dim}, system needs {system.state_dim}")
    if system.control_dim:
        if control_set is None:
            raise InputError("controlled system needs a control set")
        if control_set.dim != system.control_dim:
            raise InputError("control set dimension does not match the system")
    elif control_set is not None:
        raise InputError("uncontrolled system takes no control set")
    if int(K) < 1:
        raise InputError("K must be a positive integer")
    rng = np.random.default_rng(seed)
    X = state_set.sample_uniform(int(K), rng)
    U = control_set.sample_uniform(int(K), rng) if control_set is not None else None
    Xp = system.step(X, U)
    meta = {"system": system.to_dict(), "seed": seed, "K": int(K)}
    return TransitionDataset(X, Xp, meta)


def _require_uncontrolled(system: SystemSpec):
    if system.control_dim:
        raise ConfigurationError("rollouts of controlled systems are not supported "
                                 "(the infimum over control sequences is not computed)")


def rollout_value(system: SystemSpec, state_set: ConstraintSet, x, alpha: float,
                  horizon: int) -> tuple[np.ndarray, float]:
    """Truncated discounted cost of the projected dynamics.

    Returns ``(value, tail)`` where ``value = sum_{k<T} alpha^k dist(f(xbar_k))``
    with ``xbar_{k+1} = proj(f(xbar_k))`` and ``tail = alpha^T / (1 - alpha)``
    bounds the neglected part of the infinite sum.
    """
    _require_uncontrolled(system)
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    if int(horizon) < 1:
        raise InputError("horizon must be at least 1")
    X, single = as_points(x, system.state_dim)
    value = np.zeros(X.shape[0])
    weight = 1.0
    for _ in range(int(horizon)):
        X, dist = state_set.project_and_distance(system.step(X))
        value += weight * dist
        weight *= alpha
    tail = alpha ** int(horizon) / (1.0 - alpha)
    return (float(value[0]) if single else value), tail


def rollout_trajectory(system: SystemSpec, state_set: ConstraintSet, x, horizon: int) -> np.ndarray:
    """States ``xbar_0 .. xbar_T`` of the projected dynamics, shape ``(T+1, M, n)``."""
    _require_uncontrolled(system)
    X, _ = as_points(x, system.state_dim)
    out = [X]
    for _ in range(int(horizon)):
        X = state_set.project(system.step(X))
        out.append(X)
    return np.stack(out)


def mpi_oracle(system: SystemSpec, state_set: ConstraintSet, x, horizon: int = 1000):
    """True where ``f^k(x)`` stays in the set for every ``k <= horizon``.

    Uses the raw map (no projection). Finite horizons give a superset of the
    maximum positively invariant set that shrinks towards it as the horizon
    grows. A trajectory is dropped as soon as it leaves the set.
    """
    _require_uncontrolled(system)
    X, single = as_points(x, system.state_dim)
    alive = state_set.contains(X)
    idx = np.flatnonzero(alive)
    Z = X[idx]
    for _ in range(int(horizon)):
        if idx.size == 0:
            break
        Z = system.step(Z)
        ok = state_set.contains(Z)
        alive[idx[~ok]] = False
        idx, Z = idx[ok], Z[ok]
    return bool(alive[0]) if single else alive


def make_oracle(system: SystemSpec, state_set: ConstraintSet, horizon: int = 1000):
    """Bind ``mpi_oracle`` to a system so it can be passed around as ``oracle(points)``."""
    _require_uncontrolled(system)

    def oracle(points):
        return mpi_oracle(system, state_set, points, horizon)

    oracle.horizon = int(horizon)
    return oracle
