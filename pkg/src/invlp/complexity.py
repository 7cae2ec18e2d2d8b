"""Closed-form sample-size and volume-error calculators.

``epsilon_net_samples`` -- number of uniform samples after which the sample is
an eps-net (sup-norm balls) of a set of diameter ``D`` with probability
``>= 1 - delta``. The default ``variant="proof"`` uses the numerator
``log(1/delta) + n log(2D/eps)`` obtained from the union bound over a grid of
``(2D/eps)^n`` cells; ``variant="printed"`` uses ``log(1/delta) + n eps/(2D)``.

``sample_complexity`` -- the same count with ``eps/(2D)`` replaced by
``zeta = eps (1 - alpha) / (2 D L)`` where ``L`` bounds the Lipschitz constant
of the Bellman slack over the feasible set (user supplied).

``volume_error_bound`` -- evaluates the high-probability volume error bound for
user-supplied approximation constant ``C`` and boundary-growth value ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import InputError

VARIANTS = ("proof", "printed")


def _ceil(x: float) -> int:
    # counts equal to an integer up to rounding must not be bumped to the next one
    k = math.ceil(x)
    if k - x > 1.0 - 1e-9 * max(1.0, abs(x)):
        k -= 1
    return max(int(k), 1)


def _count(p: float, log_term: float, delta: float, n: int) -> int:
    # K >= (log(1/delta) + log_term) / log(1 / (1 - p^n))
    denom = -math.log1p(-(p ** n))
    if denom <= 0.0:
        raise InputError("coverage probability underflows; the sample bound is astronomically large")
    return _ceil((-math.log(delta) + log_term) / denom)


def _check_common(delta, n):
    if not 0.0 < delta <= 1.0:
        raise InputError("delta must lie in (0, 1]")
    if int(n) != n or n < 1:
        raise InputError("dimension n must be a positive integer")


def epsilon_net_samples(epsilon: float, delta: float, D: float, n: int, variant: str = "proof") -> int:
    if variant not in VARIANTS:
        raise InputError(f"variant must be one of {VARIANTS}")
    _check_common(delta, n)
    if not (epsilon > 0 and D > 0):
        raise InputError("epsilon and D must be positive")
    if epsilon >= 2 * D:
        raise InputError("epsilon >= 2D: every single point is already a net")
    p = epsilon / (2 * D)
    log_term = n * math.log(1.0 / p) if variant == "proof" else n * p
    return _count(p, log_term, delta, int(n))


@dataclass(frozen=True)
class BoundInputs:
    epsilon: float
    delta: float
    n: int
    D: float
    alpha: float
    L: float
    L_f: Optional[float] = None

    def __post_init__(self):
        _check_common(self.delta, self.n)
        for name in ("epsilon", "D", "L"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise InputError("alpha must lie in (0, 1)")
        if self.L_f is not None:
            if not self.L_f > 0:
                raise InputError("L_f must be positive")
            if self.alpha * self.L_f >= 1.0:
                raise InputError("alpha * L_f must be < 1")


def sample_complexity(inputs: BoundInputs) -> dict:
    """Return ``{"zeta": ..., "K": ...}`` for the accuracy/confidence pair in ``inputs``."""
    zeta = inputs.epsilon * (1.0 - inputs.alpha) / (2.0 * inputs.D * inputs.L)
    if zeta >= 1.0:
        raise InputError(f"zeta = {zeta:g} >= 1; decrease epsilon or increase L")
    K = _count(zeta, inputs.n * math.log(1.0 / zeta), inputs.delta, inputs.n)
    return {"zeta": zeta, "K": K}


def volume_error_bound(d: float, alpha: float, L_f: float, C: float, epsilon: float,
                       g_value: float) -> dict:
    """``4C/((1-a)(1-a L_f)) / (sqrt d + eps d) + eps / (1/sqrt d + eps) + g``.

    ``valid`` is False when ``d`` is below ``2C / ((1-a)(1-a L_f))``, the range
    in which the bound is established.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    if not (L_f > 0 and alpha * L_f < 1.0):
        raise InputError("need L_f > 0 and alpha * L_f < 1")
    if not d > 0 or C < 0 or epsilon < 0 or g_value < 0:
        raise InputError("d must be positive and C, epsilon, g non-negative")
    k = 1.0 / ((1.0 - alpha) * (1.0 - alpha * L_f))
    sd = math.sqrt(d)
    bound = 4.0 * C * k / (sd + epsilon * d) + epsilon / (1.0 / sd + epsilon) + g_value
    return {"bound": bound, "valid": d >= 2.0 * C * k, "min_degree": 2.0 * C * k}
