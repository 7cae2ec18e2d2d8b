"""Fit pipeline for the value-function approximation and the sets derived from it.

The fitted function ``v(x) = beta(x)^T c`` is a lower bound on the discounted
constraint-violation cost along the data, and its zero sublevel set inside the
constraint set approximates the maximum positively (or controlled) invariant
set. Two larger thresholds are supported:

* conservative -- ``E_bar / (1 - alpha)`` with ``E_bar`` the largest Bellman
  slack on held-out transitions;
* guaranteed -- ``eps [Lip(v)(1 + alpha L_f) + L_f] / (1 - alpha)`` for a
  covering radius ``eps`` of the training states and Lipschitz bounds.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import Basis, basis_from_dict
from .dynamics import TransitionDataset
from .errors import ConfigurationError, DegenerateError, InputError, NumericalFailure
from .geometry import ConstraintSet, as_points, set_from_dict
from .lp import assemble_problem, solve_lp

logger = logging.getLogger(__name__)

MIN_ARTIFICIAL_POINTS = 200


def default_artificial_count(N: int) -> int:
    return max(2 * N, MIN_ARTIFICIAL_POINTS)


@dataclass
class FitConfig:
    """Options of :func:`fit`.

    ``n_artificial=None`` selects ``max(2N, 200)`` bound-constraint points.
    ``split_fraction`` fits on the first part of the data and estimates the
    conservative threshold on the rest.
    """

    basis: Basis
    alpha: float
    n_artificial: Optional[int] = None
    artificial_seed: int = 0
    split_fraction: Optional[float] = None
    feasibility_tol: float = 1e-8
    gap_tol: float = 1e-8
    quadrature: str = "auto"
    mc_samples: int = 1_000_000
    mc_seed: int = 0
    solver: str = "builtin"
    solver_options: dict = field(default_factory=dict)


@dataclass
class ValueModel:
    basis: Basis
    coefficients: np.ndarray
    alpha: float
    cset: ConstraintSet
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.basis.size,):
            raise InputError(f"expected {self.basis.size} coefficients, got {self.coefficients.shape}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError("alpha must lie in (0, 1)")
        if self.basis.n != self.cset.dim:
            raise InputError("basis and constraint set dimensions differ")

    @property
    def dim(self) -> int:
        return self.cset.dim

    def value(self, x):
        return self.basis.eval_dot(x, self.coefficients)

    def member(self, x, threshold: float = 0.0):
        X, single = as_points(x, self.dim)
        inside = self.cset.contains(X)
        out = np.zeros(X.shape[0], dtype=bool)
        if np.any(inside):
            out[inside] = self.value(X[inside]) <= threshold
        return bool(out[0]) if single else out

    def bellman_residual(self, x, x_plus):
        """Slack ``v(x) - dist(x+) - alpha v(proj(x+))``; non-positive where the constraint holds."""
        X, single = as_points(x, self.dim)
        Xp, _ = as_points(x_plus, self.dim)
        P, dist = self.cset.project_and_distance(Xp)
        E = self.value(X) - dist - self.alpha * self.value(P)
        return float(E[0]) if single else E

    # serialisation -----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "basis": self.basis.to_dict(),
            "coefficients": [format(float(v), ".17g") for v in self.coefficients],
            "alpha": self.alpha,
            "set": self.cset.to_dict(),
            "metadata": _jsonable(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValueModel":
        missing = {"basis", "coefficients", "alpha", "set"} - set(d)
        if missing:
            raise InputError(f"model file lacks keys {sorted(missing)}")
        return cls(basis_from_dict(d["basis"]), np.array([float(v) for v in d["coefficients"]]),
                   float(d["alpha"]), set_from_dict(d["set"]), dict(d.get("metadata", {})))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ValueModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def fit(dataset: TransitionDataset, cset: ConstraintSet, config: FitConfig) -> ValueModel:
    """Solve the sampled LP and wrap the optimal coefficients in a :class:`ValueModel`.

    The same path serves controlled data: the transitions alone enter the LP.

    Raises:
        InputError: empty data or dimension mismatch.
        ConfigurationError: artificial points not unisolvent for the basis.
        NumericalFailure / DegenerateError: the LP solver did not return an optimum.
    """
    if dataset is None or len(dataset) == 0:
        raise InputError("cannot fit on an empty dataset")
    if dataset.dim != cset.dim:
        raise InputError(f"dataset dimension {dataset.dim} differs from set dimension {cset.dim}")
    basis, alpha = config.basis, float(config.alpha)
    if basis.n != cset.dim:
        raise InputError("basis dimension differs from set dimension")

    train, validation = dataset, None
    if config.split_fraction is not None:
        train, validation = dataset.split(config.split_fraction)

    N = basis.size
    k_art = config.n_artificial if config.n_artificial is not None else default_artificial_count(N)
    if k_art < N:
        raise ConfigurationError(f"{k_art} artificial points cannot be unisolvent for N={N}")
    Z = cset.sample_uniform(k_art, config.artificial_seed)

    problem = assemble_problem(train, Z, basis, cset, alpha, quadrature=config.quadrature,
                               mc_samples=config.mc_samples, mc_seed=config.mc_seed)
    logger.info("LP with %d rows x %d columns", problem.num_rows, problem.num_vars)
    sol = solve_lp(problem, config.feasibility_tol, config.gap_tol, config.solver, **config.solver_options)
    if sol.status != "optimal":
        err = NumericalFailure if sol.status == "numerical_failure" else DegenerateError
        raise err(f"LP solver returned status {sol.status!r}: {sol.message}")

    metadata = {
        "K": len(train),
        "K_validation": len(validation) if validation is not None else 0,
        "K_prime": int(k_art),
        "seeds": {"artificial": config.artificial_seed, "mc": config.mc_seed},
        "integration": problem.info.get("integration"),
        "unisolvency_condition": problem.info["unisolvency"]["condition_estimate"],
        "solver": sol.stats(),
        "feasibility_tol": config.feasibility_tol,
    }
    if "source" in dataset.metadata or "seed" in dataset.metadata:
        metadata["data"] = {k: dataset.metadata[k] for k in ("system", "seed", "source") if k in dataset.metadata}
    model = ValueModel(basis, sol.coefficients, alpha, cset, metadata)
    if validation is not None:
        model.metadata.update(conservative_threshold(model, validation))
    return model


def evaluate_value(model: ValueModel, x):
    return model.value(x)


def member(model: ValueModel, x, threshold: float = 0.0):
    return model.member(x, threshold)


def bellman_residual(model: ValueModel, x, x_plus):
    return model.bellman_residual(x, x_plus)


def conservative_threshold(model: ValueModel, validation: TransitionDataset) -> dict:
    """Largest validation slack ``E_bar`` and the threshold ``E_bar / (1 - alpha)``.

    ``E_bar`` is not clipped at zero, so a negative value shrinks the set.
    """
    if validation is None or len(validation) == 0:
        raise InputError("conservative threshold needs a non-empty validation set")
    E_bar = float(np.max(model.bellman_residual(validation.X, validation.Xp)))
    return {"E_bar": E_bar, "conservative_threshold": E_bar / (1.0 - model.alpha)}


def guaranteed_threshold(model_or_alpha, L_f: float, epsilon_net: float, lip_v: Optional[float] = None) -> float:
    """Sublevel threshold ``eps [lip_v (1 + alpha L_f) + L_f] / (1 - alpha)``.

    The resulting set contains the true invariant set only when ``L_f`` and
    ``lip_v`` are genuine upper bounds on the Lipschitz constants of the
    dynamics and of the fitted value function and ``epsilon_net`` bounds the
    covering radius of the training states. ``lip_v`` defaults to the
    model's stored ``lipschitz_estimate``, which is a sampled estimate only.
    """
    if isinstance(model_or_alpha, ValueModel):
        alpha = model_or_alpha.alpha
        if lip_v is None:
            lip_v = model_or_alpha.metadata.get("lipschitz_estimate")
    else:
        alpha = float(model_or_alpha)
    if lip_v is None:
        raise ConfigurationError("a Lipschitz bound for the value function is required")
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    for name, v in (("L_f", L_f), ("epsilon_net", epsilon_net), ("lip_v", lip_v)):
        if not (v >= 0 and np.isfinite(v)):
            raise InputError(f"{name} must be a non-negative finite number")
    return float(epsilon_net * (lip_v * (1.0 + alpha * L_f) + L_f) / (1.0 - alpha))


def lipschitz_estimate(model: ValueModel, budget: int = 100_000, seed=0, safety_factor: float = 1.2) -> float:
    """Sampled estimate of ``Lip(v)``: max gradient norm over ``budget`` uniform points, inflated.

    Not a certificate: the true maximum may fall between samples.
    """
    if int(budget) < 1:
        raise InputError("budget must be positive")
    X = model.cset.sample_uniform(int(budget), seed)
    G = model.basis.grad_dot(X, model.coefficients)
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", G, G)))) * float(safety_factor)
