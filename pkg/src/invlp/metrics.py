"""Monte Carlo quality measures of a fitted approximation, and grid export.

Both percentages are relative to the volume of the true invariant set, which
is itself estimated from the same uniform sample through the oracle::

    volume error      = 100 * #(member and not oracle) / #oracle
    misclassification = 100 * #(oracle and not member) / #oracle
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateError, InputError
from .invariant import ValueModel

DEFAULT_SAMPLES = 100_000
DEFAULT_HORIZON = 1000


@dataclass
class MetricsReport:
    volume_error_pct: float
    misclassification_pct: float
    volume_error_se: float
    misclassification_se: float
    sample_count: int
    oracle_positive: int
    threshold: float
    oracle_horizon: Optional[int] = None
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def classification_report(member_mask, oracle_mask, threshold: float = 0.0,
                          oracle_horizon: Optional[int] = None, seed=None) -> MetricsReport:
    """Percentages and delta-method standard errors from paired boolean labels."""
    mem = np.asarray(member_mask, dtype=bool)
    orc = np.asarray(oracle_mask, dtype=bool)
    if mem.shape != orc.shape or mem.ndim != 1:
        raise InputError("member and oracle masks must be 1-D arrays of equal length")
    M = mem.size
    p = int(orc.sum())
    if p == 0:
        raise DegenerateError("no sample lies in the reference set; volume error is undefined")
    extra = int(np.sum(mem & ~orc))
    missed = int(np.sum(~mem & orc))
    ratio_v = extra / p
    ratio_m = missed / p
    # extra and oracle-positive are disjoint multinomial cells -> Var(a/p) ~ qa (1 + R) / (M qp^2)
    qp, qa = p / M, extra / M
    se_v = math.sqrt(qa * (1.0 + ratio_v) / M) / qp
    # missed is a sub-cell of oracle-positive -> binomial given p
    se_m = math.sqrt(ratio_m * (1.0 - ratio_m) / p)
    return MetricsReport(100.0 * ratio_v, 100.0 * ratio_m, 100.0 * se_v, 100.0 * se_m, M, p,
                         float(threshold), oracle_horizon, seed)


def estimate_metrics(model: ValueModel, threshold: float, oracle: Callable[[np.ndarray], np.ndarray],
                     M: int = DEFAULT_SAMPLES, seed=0) -> MetricsReport:
    """Volume error and misclassification of ``{v <= threshold}`` against ``oracle``."""
    if int(M) < 1000:
        raise InputError("use at least 1000 Monte Carlo samples")
    P = model.cset.sample_uniform(int(M), seed)
    return classification_report(model.member(P, threshold), oracle(P), threshold,
                                 getattr(oracle, "horizon", None), seed)


def classify_grid(model: ValueModel, threshold: float, resolution: int, path=None,
                  slice_values=None, projection: bool = False, fiber_samples: int = 200,
                  seed=0) -> np.ndarray:
    """Evaluate the model on a regular grid over the first two coordinates.

    For ``n > 2`` either fix the remaining coordinates (``slice_values``) or
    set ``projection=True``: a grid point is then a member when any of
    ``fiber_samples`` points of the set sharing its first two coordinates is
    a member, and its value is the smallest value found on that fibre.

    Returns rows ``(x1, x2, value, member)``; writes them as CSV when ``path``
    is given.
    """
    res = int(resolution)
    if res < 2:
        raise InputError("grid resolution must be at least 2")
    n = model.dim
    lo, hi = model.cset.bounds()
    g1 = np.linspace(lo[0], hi[0], res)
    g2 = np.linspace(lo[1], hi[1], res)
    G1, G2 = np.meshgrid(g1, g2, indexing="ij")
    grid = np.column_stack((G1.ravel(), G2.ravel()))

    if n == 2:
        vals = model.value(grid)
        mem = model.member(grid, threshold)
    elif projection:
        fiber = model.cset.sample_uniform(int(fiber_samples), seed)[:, 2:]
        vals = np.full(grid.shape[0], np.nan)
        mem = np.zeros(grid.shape[0], dtype=bool)
        for i, pt in enumerate(grid):
            pts = np.column_stack((np.tile(pt, (fiber.shape[0], 1)), fiber))
            pts = pts[model.cset.contains(pts)]
            if pts.shape[0]:
                v = model.value(pts)
                vals[i] = v.min()
                mem[i] = bool(np.any(v <= threshold))
    else:
        if slice_values is None:
            raise InputError(f"dimension {n} > 2 needs slice_values or projection=True")
        rest = np.asarray(slice_values, dtype=float).ravel()
        if rest.size != n - 2:
            raise InputError(f"slice_values must have {n - 2} entries")
        pts = np.column_stack((grid, np.tile(rest, (grid.shape[0], 1))))
        vals = model.value(pts)
        mem = model.member(pts, threshold)

    rows = np.column_stack((grid, vals, mem.astype(float)))
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x1", "x2", "value", "member"])
            for x1, x2, v, m in rows:
                w.writerow([format(x1, ".17g"), format(x2, ".17g"), format(v, ".17g"), int(m)])
    return rows
