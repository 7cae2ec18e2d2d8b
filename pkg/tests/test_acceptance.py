"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Fits run at full benchmark size (K = 3e4 Julia transitions) and are shared
between criteria through module-scoped fixtures; expect a few minutes.
"""

import statistics
import time

import numpy as np
import pytest

from conftest import record_criterion
from invlp.basis import MonomialBasis, ThinPlateBasis, generate_rbf_centers
from invlp.complexity import BoundInputs, epsilon_net_samples, sample_complexity
from invlp.dynamics import SystemSpec, generate_dataset, make_oracle, rollout_value
from invlp.invariant import FitConfig, fit
from invlp.lp import solve_lp
from invlp.metrics import classification_report
from lp_oracle import brute_force_max, random_bounded_lp

ALPHA = 0.6
K_JULIA = 30_000
PROBES = 100_000
HORIZON = 1000

_fitted = {}   # label -> (model, training dataset)


def _fit(label, data, cset, basis, alpha, **kw):
    if label not in _fitted:
        t0 = time.perf_counter()
        model = fit(data, cset, FitConfig(basis, alpha, artificial_seed=2, mc_seed=4, **kw))
        model.metadata["fit_seconds"] = time.perf_counter() - t0
        train = data.split(kw["split_fraction"])[0] if kw.get("split_fraction") else data
        _fitted[label] = (model, train)
    return _fitted[label][0]


@pytest.fixture(scope="module")
def julia():
    s = SystemSpec("julia", a=(-0.7, 0.2))
    X = s.default_state_set()
    data = generate_dataset(s, X, None, K_JULIA, 1)
    probes = X.sample_uniform(PROBES, 123)
    labels = make_oracle(s, X, HORIZON)(probes)
    return s, X, data, probes, labels


def _scores(model, probes, labels, threshold=0.0):
    return classification_report(model.member(probes, threshold), labels, threshold)


def _monomial(julia, d):
    s, X, data, probes, labels = julia
    return _fit(f"julia monomial d={d}", data, X, MonomialBasis(2, d), ALPHA)


def _rbf(julia, N, seed, split=None):
    s, X, data, probes, labels = julia
    label = f"julia rbf N={N} centers={seed}" + (" split" if split else "")
    return _fit(label, data, X, ThinPlateBasis(generate_rbf_centers(X, N, seed)), ALPHA, split_fraction=split)


def test_c1_monomial_table(julia):
    *_, probes, labels = julia
    r10 = _scores(_monomial(julia, 10), probes, labels)
    r14 = _scores(_monomial(julia, 14), probes, labels)
    ok = (abs(r10.volume_error_pct - 20.9) <= 4 and r10.misclassification_pct <= 0.5
          and abs(r14.volume_error_pct - 15.0) <= 4)
    secs = max(_fitted[f"julia monomial d={d}"][0].metadata["fit_seconds"] for d in (10, 14))
    record_criterion("C1 monomial volume error", ok,
                     f"d=10 {r10.volume_error_pct:.2f}% (ref 20.9) miscl {r10.misclassification_pct:.3f}%; "
                     f"d=14 {r14.volume_error_pct:.2f}% (ref 15.0); slowest fit {secs:.1f}s")
    assert ok


def test_c2_rbf_table(julia):
    *_, probes, labels = julia
    out = {}
    for N in (200, 600):
        reps = [_scores(_rbf(julia, N, seed), probes, labels) for seed in (3, 4, 5)]
        out[N] = (statistics.median(r.volume_error_pct for r in reps),
                  statistics.median(r.misclassification_pct for r in reps))
    ok = (abs(out[200][0] - 15.27) <= 4 and out[200][1] <= 0.5
          and abs(out[600][0] - 9.07) <= 3.5 and out[600][1] <= 0.5)
    record_criterion("C2 RBF volume error (median of 3 centre draws)", ok,
                     f"N=200 {out[200][0]:.2f}% (ref 15.27) miscl {out[200][1]:.3f}%; "
                     f"N=600 {out[600][0]:.2f}% (ref 9.07) miscl {out[600][1]:.3f}%")
    assert ok


def test_c3_conservative_set(julia):
    *_, probes, labels = julia
    model = _rbf(julia, 1000, 3, split=0.5)
    std = _scores(model, probes, labels)
    cons = _scores(model, probes, labels, model.metadata["conservative_threshold"])
    ok = cons.misclassification_pct <= std.misclassification_pct and cons.misclassification_pct <= 0.05
    record_criterion("C3 conservative set removes misclassification", ok,
                     f"E_bar {model.metadata['E_bar']:.4g}; standard miscl {std.misclassification_pct:.3f}% "
                     f"vol {std.volume_error_pct:.2f}%; conservative miscl {cons.misclassification_pct:.3f}% "
                     f"vol {cons.volume_error_pct:.2f}%")
    assert ok


def test_c4_degree_trend(julia):
    *_, probes, labels = julia
    errs = [_scores(_monomial(julia, d), probes, labels).volume_error_pct for d in (10, 14, 18)]
    rises = [b - a for a, b in zip(errs, errs[1:]) if b >= a]
    ok = len(rises) == 0 or (len(rises) == 1 and rises[0] <= 0.5)
    record_criterion("C4 volume error decreases with degree", ok,
                     "d=10/14/18: " + " / ".join(f"{e:.2f}%" for e in errs))
    assert ok


def test_c5_bellman_feasibility(julia, henon_model, flower_model):
    worst_res, worst_bound = -np.inf, -np.inf
    for label, (model, train) in _fitted.items():
        unit = 1.0 + 1.0 / (1.0 - model.alpha)
        E = model.bellman_residual(train.X, train.Xp)
        worst_res = max(worst_res, float(E.max()) / unit)
        Z = model.cset.sample_uniform(model.metadata["K_prime"], 2)
        v = model.value(Z)
        worst_bound = max(worst_bound, float(np.max(v - 1.0 / (1.0 - model.alpha))), float(np.max(-1.0 - v)))
    ok = worst_res <= 1e-6 and worst_bound <= 1e-6
    record_criterion("C5 training residuals and artificial bounds", ok,
                     f"{len(_fitted)} models; max relative residual {worst_res:.2e}; "
                     f"max bound excess {worst_bound:.2e}")
    assert ok


def test_c6_rollout_consistency(julia):
    s, X, *_ = julia
    model = _monomial(julia, 14)
    P = X.sample_uniform(200, 2024)
    E_fresh = float(np.max(model.bellman_residual(P, s.step(P))))
    R, tail = rollout_value(s, X, P, ALPHA, 200)
    slack = (E_fresh + 1e-6) / (1 - ALPHA) + tail
    viol = int(np.sum(model.value(P) > R + slack))
    ok = viol == 0
    record_criterion("C6 value below rollout plus fresh slack", ok,
                     f"E_fresh {E_fresh:.3g}; violations {viol}/200; max v - rollout {np.max(model.value(P) - R):.3g}")
    assert ok


def test_c7_solver_vs_vertex_enumeration():
    rng = np.random.default_rng(77)
    good = 0
    for _ in range(50):
        p = random_bounded_lp(rng)
        sol = solve_lp(p)
        good += sol.status == "optimal" and abs(sol.primal_objective - brute_force_max(p.A, p.b, p.objective)) <= 1e-6
    ok = good == 50
    record_criterion("C7 built-in LP solver matches brute force", ok, f"{good}/50 instances")
    assert ok


@pytest.fixture(scope="module")
def henon_model():
    s = SystemSpec("henon3_controlled")
    X = s.default_state_set()
    data = generate_dataset(s, X, s.default_control_set(), 10_000, 1)
    basis = ThinPlateBasis(generate_rbf_centers(X, 300, 3))
    return _fit("henon rbf N=300 split", data, X, basis, 0.2, split_fraction=0.5)


def test_c8_controlled_pipeline(henon_model):
    model = henon_model
    probes = model.cset.sample_uniform(10_000, 5)
    std = model.member(probes, 0.0)
    cons = model.member(probes, model.metadata["conservative_threshold"])
    E_bar = model.metadata["E_bar"]
    contained = bool(np.all(cons[std]))
    ok = model.metadata["solver"]["status"] == "optimal" and (E_bar < 0 or contained)
    record_criterion("C8 controlled Henon fit and set ordering", ok,
                     f"E_bar {E_bar:.4g}; standard {std.mean():.3f} conservative {cons.mean():.3f} "
                     f"of probes; contained {contained}")
    assert ok


@pytest.fixture(scope="module")
def flower_model():
    s = SystemSpec("flower_switched", variant="affine")
    X = s.default_state_set()
    data = generate_dataset(s, X, None, 10_000, 1)
    basis = ThinPlateBasis(generate_rbf_centers(X, 200, 3))
    return _fit("flower affine rbf N=200", data, X, basis, 0.8), s


def test_c9_switched_system(flower_model):
    model, s = flower_model
    probes = model.cset.sample_uniform(PROBES, 7)
    labels = make_oracle(s, model.cset, HORIZON)(probes)
    rep = _scores(model, probes, labels)
    ok = model.metadata["solver"]["status"] == "optimal" and rep.misclassification_pct <= 1.0
    record_criterion("C9 switched flower system", ok,
                     f"miscl {rep.misclassification_pct:.3f}% vol {rep.volume_error_pct:.2f}%")
    assert ok


def test_c10_calculators():
    exact = epsilon_net_samples(1, 0.5, 1, 1) == 2
    mismatches = 0
    for eps in (0.1, 0.3, 0.5, 0.9, 1.3):
        for delta in (0.5, 0.1, 0.05, 0.01, 1e-3):
            for n in (1, 2, 3):
                r = sample_complexity(BoundInputs(eps, delta, n, 1.0, 0.5, 0.5))
                mismatches += r["zeta"] != eps / 2 or r["K"] != epsilon_net_samples(eps, delta, 1.0, n)
    ok = exact and mismatches == 0
    record_criterion("C10 sample-bound calculators", ok, f"example exact {exact}; grid mismatches {mismatches}/75")
    assert ok
