import math

import numpy as np
import pytest

from invlp.dynamics import (SystemSpec, TransitionDataset, generate_dataset, make_oracle, mpi_oracle,
                            random_unitary, rk4_step, rollout_trajectory, rollout_value)
from invlp.errors import ConfigurationError, InputError
from invlp.geometry import Ball, Box


def test_julia_step_examples(julia):
    np.testing.assert_allclose(julia.step([0, 0]), [-0.7, 0.2])
    np.testing.assert_allclose(julia.step([-0.7, 0.2]), [-0.25, -0.08], atol=1e-15)


def test_henon_step_example():
    s = SystemSpec("henon3_controlled")
    np.testing.assert_allclose(s.step([0, 0, 0], [0]), [0.44, 0, 0])
    with pytest.raises(InputError):
        s.step([0, 0, 0])


def test_uncontrolled_step_rejects_control(julia):
    with pytest.raises(InputError):
        julia.step([0, 0], [0.1])


def test_julia_product_acts_blockwise_in_rotated_frame():
    s = SystemSpec("julia_product", n=4, unitary_seed=3)
    Q = s.Q
    x = np.array([0.1, -0.2, 0.3, 0.05])
    y = Q.T @ x
    blocks = [SystemSpec("julia", a=s.a).step(y[i:i + 2]) for i in (0, 2)]
    np.testing.assert_allclose(s.step(x), Q @ np.concatenate(blocks), atol=1e-14)


def test_rk4_examples():
    np.testing.assert_array_equal(rk4_step(lambda x: np.zeros_like(x), np.array([1.0, 2.0]), 0.1), [1.0, 2.0])
    h = 0.05
    y = rk4_step(lambda x: x, np.array([1.0]), h)
    assert y[0] == pytest.approx(1 + h + h**2 / 2 + h**3 / 6 + h**4 / 24, abs=1e-15)
    assert y[0] == pytest.approx(1.0512711, abs=1e-7)


def test_rk4_fourth_order():
    h = 0.2
    errs = []
    for k in (1, 2, 4):
        x = np.array([1.0])
        for _ in range(k):
            x = rk4_step(lambda z: z, x, h / k)
        errs.append(abs(x[0] - math.exp(h)))
    # local error O(h^5) per step, k steps of size h/k -> global O(h^5 / k^4)
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(16, rel=0.1)


def test_flower_branch_frozen_at_step_start():
    s = SystemSpec("flower_switched", variant="affine")
    A1 = np.array([[-1, 1], [-5, -0.1]])
    A2 = np.array([[-0.1, 5], [-1, -0.1]])
    x = np.array([0.5, 0.2])            # x1^2 > x2^2 -> second branch
    np.testing.assert_allclose(s.step(x), rk4_step(lambda z: z @ A2.T, x, s.h))
    x = np.array([0.1, 0.4])            # first branch
    np.testing.assert_allclose(s.step(x), rk4_step(lambda z: z @ A1.T, x, s.h))


def test_random_unitary():
    q1 = random_unitary(1, 5)
    assert abs(abs(q1[0, 0]) - 1) < 1e-15
    np.testing.assert_array_equal(q1, random_unitary(1, 5))
    Q = random_unitary(10, 0)
    np.testing.assert_allclose(Q.T @ Q, np.eye(10), atol=1e-10)
    np.testing.assert_array_equal(Q, random_unitary(10, 0))


def test_generate_dataset_basic(julia, disk):
    d = generate_dataset(julia, disk, None, 3, 0)
    assert len(d) == 3 and disk.contains(d.X).all()
    d = generate_dataset(julia, disk, None, 500, 11)
    np.testing.assert_array_equal(d.Xp, julia.step(d.X))
    d2 = generate_dataset(julia, disk, None, 500, 11)
    np.testing.assert_array_equal(d.X, d2.X)
    np.testing.assert_array_equal(d.Xp, d2.Xp)


def test_generate_dataset_errors(julia, disk):
    with pytest.raises(InputError):
        generate_dataset(julia, Box([-1] * 3, [1] * 3), None, 5, 0)
    with pytest.raises(InputError):
        generate_dataset(SystemSpec("henon3_controlled"), Box([-1] * 3, [1] * 3), None, 5, 0)


def test_dataset_csv_round_trip(tmp_path, julia, disk):
    d = generate_dataset(julia, disk, None, 50, 2)
    path = tmp_path / "d.csv"
    d.to_csv(path)
    assert path.read_text().splitlines()[0] == "x1,x2,xp1,xp2"
    back = TransitionDataset.from_csv(path)
    np.testing.assert_array_equal(back.X, d.X)
    np.testing.assert_array_equal(back.Xp, d.Xp)


def test_split_is_ordered_prefix(julia, disk):
    d = generate_dataset(julia, disk, None, 11, 2)
    a, b = d.split(0.5)
    assert len(a) == 5 and len(b) == 6
    np.testing.assert_array_equal(np.vstack([a.X, b.X]), d.X)


def test_rollout_examples(julia, disk):
    v, tail = rollout_value(julia, disk, [0.0, 0.0], 0.6, 200)
    assert v == 0.0
    assert tail == pytest.approx(0.6**200 / 0.4)
    pts = disk.sample_uniform(2000, 1)
    vals, _ = rollout_value(julia, disk, pts, 0.6, 100)
    assert vals.min() >= 0 and vals.max() <= 1 / 0.4


def test_rollout_first_term_saturates():
    s = SystemSpec("julia", a=(3.0, 0.0))
    X = Ball([0, 0], 1.0)
    # f(0) = (3, 0): distance 2 from the disk, saturated to 1
    v1, _ = rollout_value(s, X, [0.0, 0.0], 0.5, 1)
    assert v1 == 1.0


def test_bellman_equality(julia, disk):
    alpha, T = 0.6, 60
    X = disk.sample_uniform(100, 8)
    lhs, _ = rollout_value(julia, disk, X, alpha, T)
    P, dist = disk.project_and_distance(julia.step(X))
    nxt, _ = rollout_value(julia, disk, P, alpha, T - 1)
    assert np.max(np.abs(lhs - (dist + alpha * nxt))) <= 2 * alpha**T / (1 - alpha)


def test_rollout_value_lipschitz(julia, disk):
    # |Df| = 2|x| <= 2 on the unit disk and the projection is 1-Lipschitz
    L_f, alpha = 2.0, 0.3
    rng = np.random.default_rng(0)
    X = disk.sample_uniform(2000, 1)
    Y = disk.project(X + rng.normal(scale=0.02, size=X.shape))
    vx, _ = rollout_value(julia, disk, X, alpha, 60)
    vy, _ = rollout_value(julia, disk, Y, alpha, 60)
    q = np.abs(vx - vy) / np.maximum(np.linalg.norm(X - Y, axis=1), 1e-15)
    assert q.max() <= 1 / (1 - alpha * L_f) + 0.05


def test_trajectory_shape(julia, disk):
    T = rollout_trajectory(julia, disk, disk.sample_uniform(4, 0), 7)
    assert T.shape == (8, 4, 2)
    assert disk.contains(T.reshape(-1, 2)).all()


def test_oracle_examples(julia, disk):
    assert not mpi_oracle(julia, disk, [1.5, 0.0])
    # fixed point of z^2 + a inside the disk
    a = complex(-0.7, 0.2)
    z = (1 - np.sqrt(1 - 4 * a)) / 2
    assert abs(z * z + a - z) < 1e-12
    assert mpi_oracle(julia, disk, [z.real, z.imag], 1000)
    assert mpi_oracle(julia, disk, [0.0, 0.0], 1000)


def test_oracle_horizon_stability(julia, disk):
    P = disk.sample_uniform(10_000, 4)
    agree = np.mean(mpi_oracle(julia, disk, P, 100) == mpi_oracle(julia, disk, P, 1000))
    assert agree >= 0.999
    assert make_oracle(julia, disk, 50).horizon == 50


def test_controlled_rollouts_unsupported():
    s = SystemSpec("henon3_controlled")
    X = Box([-1] * 3, [1] * 3)
    with pytest.raises(ConfigurationError):
        rollout_value(s, X, [0, 0, 0], 0.5, 3)
    with pytest.raises(ConfigurationError):
        mpi_oracle(s, X, [0, 0, 0])


def test_system_spec_round_trip():
    for s in (SystemSpec("julia", a=(-0.7, 0.2)), SystemSpec("julia_product", n=6, unitary_seed=2),
              SystemSpec("flower_switched", variant="nonlinear")):
        assert SystemSpec.from_dict(s.to_dict()) == s
