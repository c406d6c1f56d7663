"""Problem families: values, gradients, constants, generators, round trips."""

import numpy as np
import pytest

from proxiq import (
    HolderPowerProblem,
    LogSumProblem,
    QuadraticProblem,
    generate_holder_instance,
    generate_logsum_instance,
    generate_quadratic_instance,
    load_logsum_instance,
    sample_l1_ball,
    save_logsum_instance,
)


def finite_difference_gradient(value, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        out[i] = (value(x + e) - value(x - e)) / (2.0 * eps)
    return out


# ----------------------------------------------------------------- logsum


def test_logsum_hand_values():
    # rows (1,0),(0,2), targets (1,0) at x=(1,1): residuals (0,2),
    # value log(5), gradient rows.T @ (0, 4/5) = (0, 8/5)
    p = LogSumProblem(rows=np.array([[1.0, 0.0], [0.0, 2.0]]),
                      targets=np.array([1.0, 0.0]), radius=3.0)
    x = np.array([1.0, 1.0])
    assert p.value(x) == pytest.approx(np.log(5.0), abs=1e-15)
    assert np.allclose(p.gradient(x), [0.0, 1.6], atol=1e-15)
    assert p.lipschitz == 5.0
    assert p.dim == 2
    assert not p.convex
    assert p.f_lower == 0.0


def test_logsum_gradient_matches_finite_differences():
    p = generate_logsum_instance(6, 10, 2.0, seed=4)
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = sample_l1_ball(rng, 6, 2.0)
        fd = finite_difference_gradient(p.value, x)
        assert np.allclose(p.gradient(x), fd, atol=1e-7)


def test_logsum_smoothness_constant_is_valid():
    p = generate_logsum_instance(6, 10, 2.0, seed=4)
    rng = np.random.default_rng(3)
    for _ in range(300):
        x = sample_l1_ball(rng, 6, 2.0)
        y = sample_l1_ball(rng, 6, 2.0)
        lhs = np.linalg.norm(p.gradient(x) - p.gradient(y))
        assert lhs <= p.lipschitz * np.linalg.norm(x - y) * (1.0 + 1e-9)


def test_logsum_generator_reproducible_and_grounded():
    a = generate_logsum_instance(8, 12, 2.0, seed=5)
    b = generate_logsum_instance(8, 12, 2.0, seed=5)
    assert np.array_equal(a.rows, b.rows)
    assert np.array_equal(a.targets, b.targets)
    assert np.array_equal(a.x_true, b.x_true)
    c = generate_logsum_instance(8, 12, 2.0, seed=6)
    assert not np.array_equal(a.rows, c.rows)
    assert np.abs(a.x_true).sum() <= 2.0

    # zero observation noise puts the ground truth at the global minimum
    clean = generate_logsum_instance(8, 12, 2.0, noise_level=0.0, seed=5)
    assert clean.value(clean.x_true) == 0.0
    assert np.linalg.norm(clean.gradient(clean.x_true)) == 0.0


def test_logsum_validation():
    with pytest.raises(ValueError):
        LogSumProblem(rows=np.zeros((3, 2)), targets=np.zeros(2), radius=1.0)
    with pytest.raises(ValueError):
        LogSumProblem(rows=np.zeros((3, 2)), targets=np.zeros(3), radius=0.0)
    with pytest.raises(ValueError):
        generate_logsum_instance(0, 4, 1.0)
    with pytest.raises(ValueError):
        generate_logsum_instance(4, 4, -1.0)


def test_logsum_save_load_round_trip(tmp_path):
    p = generate_logsum_instance(5, 7, 1.5, seed=9)
    path = tmp_path / "instance.txt"
    save_logsum_instance(p, path)
    q = load_logsum_instance(path)
    assert np.array_equal(p.rows, q.rows)          # %.17g round-trips doubles
    assert np.array_equal(p.targets, q.targets)
    assert np.array_equal(p.x_true, q.x_true)
    assert q.radius == p.radius

    bare = LogSumProblem(rows=p.rows, targets=p.targets, radius=p.radius)
    save_logsum_instance(bare, path)
    assert load_logsum_instance(path).x_true is None

    path.write_text("quadratic 3 2 1.0\n")
    with pytest.raises(ValueError):
        load_logsum_instance(path)


def test_sample_l1_ball_feasible_and_spread():
    rng = np.random.default_rng(21)
    samples = np.array([sample_l1_ball(rng, 4, 2.0) for _ in range(3000)])
    norms = np.abs(samples).sum(axis=1)
    assert norms.max() <= 2.0 * (1.0 + 1e-12)
    assert norms.max() > 1.9           # reaches near the boundary
    assert norms.min() < 0.5           # and the interior
    assert np.abs(samples.mean(axis=0)).max() < 0.1  # roughly centered


# -------------------------------------------------------------- quadratic


def test_quadratic_instance_constants():
    p = generate_quadratic_instance(16, conditioning=3.0, seed=8)
    sigma = np.linalg.svd(p.operator, compute_uv=False)
    assert sigma[0] == pytest.approx(1.0, abs=1e-12)
    assert sigma[0] / sigma[-1] == pytest.approx(3.0, rel=1e-10)
    assert p.lipschitz == pytest.approx(1.0, abs=1e-9)
    assert p.value(p.x_star) == pytest.approx(0.0, abs=1e-24)
    assert np.linalg.norm(p.gradient(p.x_star)) <= 1e-12
    assert p.f_star == 0.0
    assert p.f_lower == p.f_star
    assert p.convex


def test_quadratic_value_gradient_consistency():
    p = generate_quadratic_instance(5, conditioning=4.0, seed=3)
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = rng.standard_normal(5)
        fd = finite_difference_gradient(p.value, x)
        assert np.allclose(p.gradient(x), fd, atol=1e-7)
        assert p.value(x) >= p.f_star


def test_quadratic_reproducible_and_validated():
    a = generate_quadratic_instance(4, conditioning=2.0, seed=1)
    b = generate_quadratic_instance(4, conditioning=2.0, seed=1)
    assert np.array_equal(a.operator, b.operator)
    assert np.array_equal(a.x_star, b.x_star)
    with pytest.raises(ValueError):
        generate_quadratic_instance(0)
    with pytest.raises(ValueError):
        generate_quadratic_instance(4, conditioning=0.5)
    single = generate_quadratic_instance(1, conditioning=10.0, seed=0)
    assert single.lipschitz == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------------ power


def test_holder_power_hand_values():
    p = HolderPowerProblem(centers=np.zeros(1), exponent=0.5, holder_constant=2.0)
    # |4|^1.5 / 1.5 and gradient sign(4)*|4|^0.5
    assert p.value(np.array([4.0])) == pytest.approx(16.0 / 3.0, rel=1e-15)
    assert p.gradient(np.array([4.0]))[0] == pytest.approx(2.0, abs=1e-15)
    assert p.value(p.centers) == 0.0
    assert p.convex
    assert p.f_lower == 0.0
    assert p.lipschitz == 2.0
    with pytest.raises(ValueError):
        HolderPowerProblem(centers=np.zeros(2), exponent=0.0, holder_constant=1.0)
    with pytest.raises(ValueError):
        HolderPowerProblem(centers=np.zeros(2), exponent=0.5, holder_constant=0.0)


def test_holder_power_gradient_matches_finite_differences():
    p = generate_holder_instance(4, 0.7, seed=2)
    rng = np.random.default_rng(14)
    for _ in range(5):
        # keep probes away from the centers, where the gradient is nonsmooth
        x = p.centers + np.where(rng.standard_normal(4) > 0, 1.0, -1.0) * rng.uniform(0.5, 2.0, 4)
        fd = finite_difference_gradient(p.value, x)
        assert np.allclose(p.gradient(x), fd, atol=1e-6)


def test_holder_constant_certified_on_fresh_pairs():
    p = generate_holder_instance(3, 0.5, seed=11)
    rng = np.random.default_rng(99)
    xs = rng.uniform(-4.0, 4.0, size=(2000, 3))
    ys = rng.uniform(-4.0, 4.0, size=(2000, 3))
    for x, y in zip(xs, ys):
        lhs = np.linalg.norm(p.gradient(x) - p.gradient(y))
        assert lhs <= p.holder_constant * np.linalg.norm(x - y) ** 0.5

    smooth = generate_holder_instance(3, 1.0, seed=11)
    assert smooth.holder_constant == 1.0
    with pytest.raises(ValueError):
        generate_holder_instance(3, 0.0)
    with pytest.raises(ValueError):
        generate_holder_instance(3, 0.5, box=(2.0, 2.0))


def test_holder_function_view_delegates():
    p = generate_holder_instance(3, 0.6, seed=12)
    view = p.as_holder_function()
    x = np.array([0.3, -1.0, 2.0])
    assert view.value(x) == p.value(x)
    assert np.array_equal(view.subgradient(x), p.gradient(x))
    assert view.exponent == p.exponent
    assert view.holder_constant == p.holder_constant
    assert view.convex
