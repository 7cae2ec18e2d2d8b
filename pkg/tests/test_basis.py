import math

import numpy as np
import pytest

from invlp.basis import (MonomialBasis, ThinPlateBasis, basis_dimension, basis_from_dict, generate_rbf_centers,
                         graded_lex_exponents, unisolvency_check)
from invlp.errors import ConfigurationError, InputError
from invlp.geometry import Ball, Box


def test_dimension_examples():
    assert basis_dimension(MonomialBasis(2, 10)) == 66
    assert basis_dimension(MonomialBasis(2, 18)) == 190
    assert basis_dimension(MonomialBasis(1, 0)) == 1
    for n in range(1, 5):
        for d in range(7):
            assert MonomialBasis(n, d).size == math.comb(n + d, n)


def test_graded_lex_golden():
    assert graded_lex_exponents(2, 2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    assert graded_lex_exponents(3, 1).tolist() == [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    E = graded_lex_exponents(3, 3)
    assert E[-10:].tolist() == [[3, 0, 0], [2, 1, 0], [2, 0, 1], [1, 2, 0], [1, 1, 1],
                                [1, 0, 2], [0, 3, 0], [0, 2, 1], [0, 1, 2], [0, 0, 3]]


def test_graded_lex_ordering_rule():
    for n in range(1, 5):
        for d in range(7):
            E = [tuple(e) for e in graded_lex_exponents(n, d)]
            assert len(set(E)) == len(E)
            keys = [(sum(e), tuple(-x for x in e)) for e in E]
            assert keys == sorted(keys)


def test_monomial_eval_example():
    np.testing.assert_array_equal(MonomialBasis(2, 1).eval([3, 5]), [1, 3, 5])
    with pytest.raises(InputError):
        MonomialBasis(2, 1).eval([1, 2, 3])


def test_thin_plate_values():
    b = ThinPlateBasis([[0.0, 0.0], [1.0, 1.0]])
    assert b.eval([1.0, 1.0])[1] == 0.0
    assert b.eval([math.e, 0.0])[0] == pytest.approx(math.e**2, rel=1e-12)
    assert b.eval([math.e, 0.0])[0] == pytest.approx(7.389056, abs=1e-6)


def test_thin_plate_continuity_at_centre():
    b = ThinPlateBasis([[0.3, -0.2]])
    delta = 1e-6
    v = b.eval([0.3 + delta, -0.2])[0]
    assert abs(v) <= 2 * delta**2 * abs(math.log(delta))


def test_gradient_examples():
    b = MonomialBasis(2, 2)
    G = b.gradient([3.0, 7.0])
    assert G[3, 0] == 6.0          # d/dx1 of x1^2
    np.testing.assert_array_equal(G[0], [0, 0])
    t = ThinPlateBasis([[0.0, 0.0]])
    np.testing.assert_array_equal(t.gradient([0.0, 0.0]), [[0.0, 0.0]])


@pytest.mark.parametrize("basis", [MonomialBasis(2, 6), MonomialBasis(3, 4),
                                   ThinPlateBasis(np.random.default_rng(1).uniform(-1, 1, (20, 2)))])
def test_gradient_matches_central_differences(basis):
    X = np.random.default_rng(2).uniform(-1, 1, (100, basis.n))
    G = basis.gradient(X)
    h = 1e-6
    for j in range(basis.n):
        e = np.zeros(basis.n)
        e[j] = h
        fd = (basis.eval(X + e) - basis.eval(X - e)) / (2 * h)
        assert np.max(np.abs(fd - G[:, :, j])) <= 1e-5


def test_eval_dot_and_grad_dot_consistent():
    b = ThinPlateBasis(np.random.default_rng(1).uniform(-1, 1, (15, 2)))
    c = np.random.default_rng(3).normal(size=15)
    X = np.random.default_rng(4).uniform(-1, 1, (50, 2))
    np.testing.assert_allclose(b.eval_dot(X, c), b.eval(X) @ c, atol=1e-12)
    np.testing.assert_allclose(b.grad_dot(X, c), np.einsum("mkj,k->mj", b.gradient(X), c), atol=1e-12)


def test_integral_on_square():
    z, info = MonomialBasis(2, 2).integrate(Box([-1, -1], [1, 1]), "analytic")
    np.testing.assert_allclose(z, [1, 0, 0, 1 / 3, 0, 1 / 3], atol=1e-15)
    assert info["method"] == "analytic"


def test_constant_integrates_to_one():
    for cset in (Box([0, 2], [1, 5]), Ball([0, 0], 2.0), Ball([1, 1], 0.5)):
        z, _ = MonomialBasis(2, 3).integrate(cset, "auto", samples=20_000)
        assert z[0] == pytest.approx(1.0, abs=1e-12)


def test_monte_carlo_matches_analytic_box():
    b = MonomialBasis(2, 4)
    box = Box([-1, -0.5], [1, 1.5])
    za, _ = b.integrate(box, "analytic")
    zm, info = b.integrate(box, "monte_carlo", samples=1_000_000, seed=0)
    assert np.max(np.abs(za - zm)) <= 5e-3
    assert info["method"] == "monte_carlo" and info["max_stderr"] > 0


def test_monte_carlo_matches_analytic_ball():
    b = MonomialBasis(2, 6)
    ball = Ball([0, 0], 1.0)
    za, _ = b.integrate(ball, "analytic")
    assert za[3] == pytest.approx(0.25)         # E[x1^2] on the unit disk
    zm, _ = b.integrate(ball, "monte_carlo", samples=1_000_000, seed=0)
    assert np.max(np.abs(za - zm)) <= 5e-3


def test_analytic_unsupported_raises():
    with pytest.raises(ConfigurationError):
        ThinPlateBasis([[0.0, 0.0]]).integrate(Box([-1, -1], [1, 1]), "analytic")


def test_monte_carlo_deterministic():
    b = ThinPlateBasis([[0.0, 0.0], [0.5, 0.5]])
    a, _ = b.integrate(Ball([0, 0], 1), samples=10_000, seed=3)
    c, _ = b.integrate(Ball([0, 0], 1), samples=10_000, seed=3)
    np.testing.assert_array_equal(a, c)


def test_unisolvency_examples():
    b = MonomialBasis(1, 1)
    assert unisolvency_check(b, [[0.0], [1.0]])["unisolvent"]
    r = unisolvency_check(b, [[0.5], [0.5]])
    assert not r["unisolvent"] and r["rank"] == 1
    b2 = MonomialBasis(2, 4)
    pts = np.random.default_rng(0).uniform(-1, 1, (b2.size - 1, 2))
    assert not unisolvency_check(b2, pts)["unisolvent"]


def test_unisolvency_high_degree_on_disk():
    b = MonomialBasis(2, 20)
    pts = Ball([0, 0], 1).sample_uniform(2 * b.size, 0)
    r = unisolvency_check(b, pts)
    assert r["unisolvent"] and r["condition_estimate"] > 1


def test_rbf_centres():
    ball = Ball([0, 0], 1)
    C = generate_rbf_centers(ball, 50, 7)
    np.testing.assert_array_equal(C, generate_rbf_centers(ball, 50, 7))
    assert ball.contains(C).all()
    d = np.linalg.norm(C[:, None] - C[None], axis=2) + np.eye(50)
    assert d.min() > 1e-9


def test_duplicate_centres_rejected():
    with pytest.raises(InputError):
        ThinPlateBasis([[0.0, 0.0], [0.0, 0.0]])


def test_basis_round_trip():
    for b in (MonomialBasis(3, 4), ThinPlateBasis([[0.1, 0.2], [0.3, -0.4]])):
        back = basis_from_dict(b.to_dict())
        X = np.random.default_rng(0).uniform(-1, 1, (10, b.n))
        np.testing.assert_array_equal(back.eval(X), b.eval(X))
