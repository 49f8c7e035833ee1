import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ttolab.inner import (
    InnerFunction, arg_branch, boundary_deriv_mod, complex_derivative, evaluate, frostman_shift,
    make_blaschke, monomial, sublevel_probe,
)

from conftest import random_theta

GRID = np.exp(2j * np.pi * np.arange(4096) / 4096)


def test_monomial_from_zeros():
    th = make_blaschke([0, 0, 0])
    assert th.degree == 3
    z = np.array([0.5, 0.3 - 0.2j, 1j])
    np.testing.assert_allclose(th(z), z**3, atol=1e-15)


def test_single_factor_values():
    th = make_blaschke([0.5])
    assert abs(th(0.5)) < 1e-15
    assert th(1.0) == pytest.approx(1.0, abs=1e-15)
    assert abs(th(1j)) == pytest.approx(1.0, abs=1e-15)


def test_value_at_origin_is_minus_zero():
    assert make_blaschke([0.9])(0.0) == pytest.approx(-0.9, abs=1e-15)


def test_value_at_origin_two_zeros():
    # front * prod(-a_k), multiplied out by hand
    val = make_blaschke([0.3 + 0.4j, -0.2])(0.0)
    assert val == pytest.approx(-0.06 - 0.08j, abs=1e-15)


def test_eval_examples():
    assert monomial(3)(0.5) == pytest.approx(0.125, abs=1e-15)
    assert make_blaschke([0.5])(1.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("zeros", [[1.0], [0.999999999999999], [2j], [0.3, -1.0]])
def test_rejects_zeros_on_or_outside_circle(zeros):
    with pytest.raises(ValueError, match="inside"):
        make_blaschke(zeros)


def test_rejects_bad_front():
    with pytest.raises(ValueError):
        make_blaschke([0.1], front=1.01)


def test_rejects_degree_above_cap():
    with pytest.raises(ValueError):
        make_blaschke(np.zeros(257))


def test_rejects_points_outside_disk():
    with pytest.raises(ValueError):
        evaluate(monomial(2), 1.1)


def test_boundary_unit_modulus(rng):
    for deg in (1, 5, 12):
        th = random_theta(rng, deg, rmax=0.95)
        assert np.max(np.abs(np.abs(th(GRID)) - 1)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 0.97), st.floats(0, 2 * np.pi)), min_size=1, max_size=10))
def test_boundary_modulus_property(polar):
    th = make_blaschke([r * np.exp(1j * a) for r, a in polar])
    assert np.max(np.abs(np.abs(th(GRID[::8])) - 1)) <= 1e-12


def test_deriv_mod_examples():
    assert boundary_deriv_mod(monomial(7), np.exp(0.3j)) == pytest.approx(7.0, rel=1e-14)
    th = make_blaschke([0.5])
    assert boundary_deriv_mod(th, 1.0) == pytest.approx(3.0, rel=1e-14)
    assert boundary_deriv_mod(th, -1.0) == pytest.approx(1 / 3, rel=1e-14)


def test_deriv_mod_matches_finite_difference_of_argument(rng):
    th = random_theta(rng, 6)
    x = rng.uniform(0, 2 * np.pi, size=20)
    h = 1e-5
    fd = np.angle(th(np.exp(1j * (x + h))) / th(np.exp(1j * (x - h)))) / (2 * h)
    np.testing.assert_allclose(boundary_deriv_mod(th, np.exp(1j * x)), fd, rtol=1e-6)


def test_deriv_mod_is_modulus_of_complex_derivative(rng):
    th = random_theta(rng, 5)
    t = np.exp(1j * rng.uniform(0, 2 * np.pi, 10))
    np.testing.assert_allclose(np.abs(complex_derivative(th, t)), boundary_deriv_mod(th, t), rtol=1e-12)


def test_arg_branch_monomial():
    psi = arg_branch(monomial(2))
    x = np.linspace(-3, 9, 50)
    np.testing.assert_allclose(psi(x) - 2 * x, psi(0.0), atol=1e-13)


def test_arg_branch_convention(rng):
    th = random_theta(rng, 4)
    psi = arg_branch(th)
    x = rng.uniform(0, 2 * np.pi, 30)
    np.testing.assert_allclose(th(np.exp(1j * x)), th.front * np.exp(1j * psi(x)), atol=1e-12)
    assert psi(0.0) == pytest.approx(np.angle(th(1.0) / th.front), abs=1e-14)


def test_arg_branch_cross_oracles():
    th = make_blaschke([0.5])
    psi = arg_branch(th)
    direct = psi(np.pi) - psi(0.0)
    assert psi.quad_increment(0.0, np.pi) == pytest.approx(direct, abs=1e-9)
    assert psi.unwrapped_increment(0.0, np.pi) == pytest.approx(direct, abs=1e-9)


def test_arg_branch_winding_and_monotone(rng):
    for deg in (1, 3, 9):
        th = random_theta(rng, deg, rmax=0.97)
        psi = arg_branch(th)
        x = rng.uniform(-5, 5, 10)
        np.testing.assert_allclose(psi(x + 2 * np.pi) - psi(x), 2 * np.pi * deg, atol=1e-10)
        xs = np.linspace(0, 2 * np.pi, 5000)
        assert np.all(np.diff(psi(xs)) > 0)


def test_arg_branch_derivative_matches_quadrature(rng):
    th = random_theta(rng, 5, rmax=0.95)
    psi = arg_branch(th)
    assert psi.quad_increment(0.4, 2.9) == pytest.approx(psi(2.9) - psi(0.4), abs=1e-9)


def test_frostman_zero_shift_keeps_theta(rng):
    th = random_theta(rng, 4)
    Th = frostman_shift(th, 0.0)
    np.testing.assert_allclose(Th(GRID), th(GRID), atol=1e-10)


def test_frostman_moebius():
    Th = frostman_shift(monomial(1), 0.5)
    np.testing.assert_allclose(Th.zeros, [0.5], atol=1e-14)


def test_frostman_square_roots():
    Th = frostman_shift(monomial(2), 0.25)
    np.testing.assert_allclose(np.sort(Th.zeros.real), [-0.5, 0.5], atol=1e-14)
    np.testing.assert_allclose(Th.zeros.imag, 0, atol=1e-14)


def test_frostman_at_theta0_vanishes_at_origin(rng):
    th = random_theta(rng, 6)
    Th = frostman_shift(th, th(0.0))
    assert abs(Th(0.0)) < 1e-12
    # boundary identity Theta = (theta - w)/(1 - conj(w) theta)
    w = th(0.0)
    np.testing.assert_allclose(Th(GRID), (th(GRID) - w) / (1 - np.conj(w) * th(GRID)), atol=1e-10)


def test_frostman_involution(rng):
    th = random_theta(rng, 5)
    w = 0.3 - 0.4j
    back = frostman_shift(frostman_shift(th, w), -w)
    np.testing.assert_allclose(back(GRID), th(GRID), atol=1e-8)


def test_frostman_rejects_outside():
    with pytest.raises(ValueError):
        frostman_shift(monomial(2), 1.0)


@pytest.mark.parametrize("zeros, eps, expected", [([0.0], 0.5, 1), ([0, 0], 0.5, 1), ([0.9, -0.9], 0.01, 2)])
def test_sublevel_probe(zeros, eps, expected):
    assert sublevel_probe(make_blaschke(zeros), eps) == expected


def test_sublevel_disk_matches_raster_oracle():
    # {|z|^2 < 0.5} is one disk; brute-force count agrees with the label count
    n = 201
    xs = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(xs, xs)
    assert np.any(X**2 + Y**2 < np.sqrt(0.5) ** 2)
    assert sublevel_probe(monomial(2), 0.5, n) == 1


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2])
def test_sublevel_rejects_eps(eps):
    with pytest.raises(ValueError):
        sublevel_probe(monomial(1), eps)


def test_serialization_round_trip(rng):
    th = random_theta(rng, 3)
    d = json.loads(th.to_json())
    assert set(d) == {"zeros", "front"}
    back = InnerFunction.from_dict(d)
    np.testing.assert_array_equal(back.zeros, th.zeros)
    assert back.front == th.front
    assert back.theta_id == th.theta_id
    assert monomial(3).theta_id != monomial(4).theta_id


def test_squared_doubles_zeros(rng):
    th = random_theta(rng, 3)
    np.testing.assert_allclose(th.squared()(GRID), th(GRID) ** 2, atol=1e-12)
