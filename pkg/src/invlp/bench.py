"""Benchmark suites for the reference experiments (Julia, Henon, flower, stacked Julia).

Each suite is a list of cases sharing one system; ``scale`` multiplies the
number of transitions ``K`` and the number of RBF centres (monomial degrees
are left alone), so ``scale=1`` is the published benchmark size and smaller values give quick
desk runs.
"""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import MonomialBasis, ThinPlateBasis, generate_rbf_centers
from .dynamics import SystemSpec, generate_dataset, make_oracle
from .invariant import FitConfig, fit
from .metrics import classification_report

logger = logging.getLogger(__name__)


@dataclass
class Case:
    label: str
    basis: str                      # "monomial" or "rbf"
    size: int                       # degree for monomials, N for RBFs
    reference: Optional[dict] = None
    split_fraction: Optional[float] = None


@dataclass
class Suite:
    system: SystemSpec
    alpha: float
    K: int
    cases: list
    reseeds: int = 1
    oracle: bool = True
    extra: dict = field(default_factory=dict)


def _suites() -> dict:
    julia = SystemSpec("julia", a=(-0.7, 0.2))
    t1 = {10: (20.9, 0.0), 14: (15.0, 0.0035), 18: (13.27, 0.0035), 20: (11.70, 0.018)}
    t2 = {66: (22.46, 0.0), 120: (18.30, 0.0), 200: (15.27, 0.021), 400: (10.99, 0.014),
          600: (9.07, 0.024), 1000: (7.0, 0.179)}

    def ref(v):
        return {"volume_error_pct": v[0], "misclassification_pct": v[1]}

    return {
        "table1": Suite(julia, 0.6, 30_000,
                        [Case(f"d={d}", "monomial", d, ref(v)) for d, v in t1.items()]),
        "table2": Suite(julia, 0.6, 30_000,
                        [Case(f"N={N}", "rbf", N, ref(v)) for N, v in t2.items()], reseeds=3),
        "conservative": Suite(julia, 0.6, 30_000,
                              [Case("N=1000 split", "rbf", 1000, ref(t2[1000]), split_fraction=0.5)]),
        "henon": Suite(SystemSpec("henon3_controlled"), 0.2, 50_000,
                       [Case("N=1000 split", "rbf", 1000, split_fraction=0.5)], oracle=False),
        "flower": Suite(SystemSpec("flower_switched", variant="affine"), 0.8, 30_000,
                        [Case("affine N=600", "rbf", 600)]),
        "flower_nonlinear": Suite(SystemSpec("flower_switched", variant="nonlinear"), 0.8, 30_000,
                                  [Case("nonlinear N=600", "rbf", 600)]),
        "dimension": Suite(SystemSpec("julia_product", n=4), 0.6, 30_000,
                           [Case("n=4 N=1600", "rbf", 1600)], extra={"dims": (4, 6, 8, 10)}),
    }


SUITE_NAMES = tuple(_suites())


def run_case(system: SystemSpec, alpha: float, K: int, basis_kind: str, size: int, *,
             data_seed: int = 1, artificial_seed: int = 2, centers_seed: int = 3, mc_seed: int = 4,
             split_fraction: Optional[float] = None, probes: Optional[np.ndarray] = None,
             labels: Optional[np.ndarray] = None) -> dict:
    """Generate data, fit and score one configuration; returns a flat result row."""
    X = system.default_state_set()
    t0 = time.perf_counter()
    data = generate_dataset(system, X, system.default_control_set(), K, data_seed)
    if basis_kind == "monomial":
        basis = MonomialBasis(system.state_dim, size)
    else:
        basis = ThinPlateBasis(generate_rbf_centers(X, size, centers_seed))
    model = fit(data, X, FitConfig(basis, alpha, artificial_seed=artificial_seed, mc_seed=mc_seed,
                                   split_fraction=split_fraction))
    row = {"N": basis.size, "K": K, "centers_seed": centers_seed if basis_kind == "rbf" else None,
           "fit_seconds": round(time.perf_counter() - t0, 2), "E_bar": model.metadata.get("E_bar"),
           "lp_iterations": model.metadata["solver"]["iterations"]}
    if probes is not None:
        standard = model.member(probes, 0.0)
        row["standard_fraction"] = float(standard.mean())
        if "conservative_threshold" in model.metadata:
            cons = model.member(probes, model.metadata["conservative_threshold"])
            row["conservative_fraction"] = float(cons.mean())
            row["standard_in_conservative"] = bool(np.all(cons[standard]))
        if labels is not None:
            rep = classification_report(standard, labels)
            row.update(volume_error_pct=rep.volume_error_pct, misclassification_pct=rep.misclassification_pct)
            if "conservative_threshold" in model.metadata:
                rep_c = classification_report(cons, labels, model.metadata["conservative_threshold"])
                row.update(conservative_volume_error_pct=rep_c.volume_error_pct,
                           conservative_misclassification_pct=rep_c.misclassification_pct)
    return row


def run_suite(name: str, scale: float = 1.0, M: int = 100_000, T: int = 1000, seed: int = 0,
              reseeds: Optional[int] = None) -> dict:
    suites = _suites()
    if name not in suites:
        raise KeyError(name)
    suite = suites[name]
    systems = [suite.system]
    if "dims" in suite.extra:
        systems = [SystemSpec("julia_product", n=n) for n in suite.extra["dims"]]
    rows = []
    for system in systems:
        X = system.default_state_set()
        probes = X.sample_uniform(M, seed)
        labels = make_oracle(system, X, T)(probes) if suite.oracle else None
        K = max(1, int(round(suite.K * scale)))
        for case in suite.cases:
            size = case.size if case.basis == "monomial" else max(10, int(round(case.size * scale)))
            runs = []
            for r in range(reseeds or suite.reseeds):
                logger.info("%s %s %s reseed %d", name, system.kind, case.label, r)
                runs.append(run_case(system, suite.alpha, K, case.basis, size, centers_seed=3 + r,
                                     split_fraction=case.split_fraction, probes=probes, labels=labels))
            row = {"case": case.label, "system": system.to_dict(), "alpha": suite.alpha, "runs": runs}
            if labels is not None:
                row["volume_error_pct"] = statistics.median(r["volume_error_pct"] for r in runs)
                row["misclassification_pct"] = statistics.median(r["misclassification_pct"] for r in runs)
            if case.reference:
                row["reference"] = case.reference
            rows.append(row)
    return {"suite": name, "scale": scale, "M": M, "T": T, "seed": seed, "rows": rows}
