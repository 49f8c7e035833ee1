import json

import numpy as np
import pytest

from ttolab.clark import (
    ClarkData, clark_gram, clark_isometry_check, clark_measure, clark_union_partition, herglotz_mass,
    interlaces,
)
from ttolab.inner import arg_branch, boundary_deriv_mod, make_blaschke, monomial, polynomial_parts
from ttolab.modelspace import build_space, repro_kernel

from conftest import random_coef, random_theta


def roots_oracle(theta, alpha):
    """Solutions of theta = alpha from the polynomial front*P - alpha*Q (no use of psi)."""
    P, Q = polynomial_parts(theta)
    r = np.roots(theta.front * P - alpha * Q)
    return np.sort(np.mod(np.angle(r), 2 * np.pi))


def test_monomial_roots_of_unity():
    C = clark_measure(monomial(5), 1.0)
    np.testing.assert_allclose(C.angles, 2 * np.pi * np.arange(5) / 5, atol=1e-12)
    np.testing.assert_allclose(C.weights, 0.2, atol=1e-14)
    assert C.weights.sum() == pytest.approx(1.0, abs=1e-14)


def test_single_zero_atom():
    C = clark_measure(make_blaschke([0.5]), 1.0)
    np.testing.assert_allclose(np.exp(1j * C.angles), [1.0], atol=1e-12)
    np.testing.assert_allclose(C.weights, [1 / 3], atol=1e-12)


def test_atoms_match_polynomial_roots(rng):
    for deg in (1, 4, 10):
        th = random_theta(rng, deg)
        alpha = np.exp(2j * np.pi * rng.uniform())
        C = clark_measure(th, alpha)
        np.testing.assert_allclose(C.angles, roots_oracle(th, alpha), atol=1e-9)
        assert np.max(np.abs(th(C.points) - alpha)) <= 1e-10
        np.testing.assert_allclose(C.weights, 1 / boundary_deriv_mod(th, C.points), rtol=1e-10)


def test_herglotz_mass_over_alphas(rng):
    th = random_theta(rng, 7)
    w0 = th(0.0)
    for alpha in np.exp(2j * np.pi * np.arange(8) / 8 + 0.1j):
        C = clark_measure(th, alpha)
        assert C.weights.sum() == pytest.approx(((alpha + w0) / (alpha - w0)).real, abs=1e-9)
        assert herglotz_mass(th, alpha) == pytest.approx(C.weights.sum(), abs=1e-9)


def test_rejects_non_unimodular_alpha():
    with pytest.raises(ValueError):
        clark_measure(monomial(2), 0.5)


def test_isometry_monomial_exact():
    M = build_space(monomial(6))
    assert clark_isometry_check(M, clark_measure(M.theta, 1.0)) <= 1e-12


def test_isometry_random(rng):
    M = build_space(random_theta(rng, 6))
    C = clark_measure(M.theta, 1j)
    assert clark_isometry_check(M, C) <= 1e-9
    f, g = (M.element(random_coef(rng, 6)) for _ in range(2))
    clark_sum = np.sum(C.weights * f(C.points) * np.conj(g(C.points)))
    assert clark_sum == pytest.approx(M.inner(f.samples, g.samples), abs=1e-9 * f.norm * g.norm)


def test_normalized_kernels_orthonormal(rng):
    M = build_space(random_theta(rng, 6))
    C = clark_measure(M.theta, -1.0)
    K = np.stack([repro_kernel(M, t).coef for t in C.points], axis=1)
    K /= np.linalg.norm(K, axis=0)
    assert np.max(np.abs(K.conj().T @ K - np.eye(6))) <= 1e-9


def test_gram_is_identity(rng):
    M = build_space(random_theta(rng, 4))
    np.testing.assert_allclose(clark_gram(M, clark_measure(M.theta, 1.0)), np.eye(4), atol=1e-9)


def test_interlacing(rng):
    th = random_theta(rng, 8)
    a = clark_measure(th, 1.0)
    for beta in (-1.0, 1j, np.exp(0.3j)):
        assert interlaces(a, clark_measure(th, beta))
    # a set never interlaces with itself
    assert not interlaces(a, a)


def test_partition_monomial_square():
    part = clark_union_partition(monomial(2))
    np.testing.assert_allclose(part.angles, np.pi / 2 * np.arange(4), atol=1e-12)
    np.testing.assert_allclose(np.diff(np.append(part.angles, 2 * np.pi)), np.pi / 2, atol=1e-12)
    assert part.a_emp == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 3, 8])
def test_partition_monomial_flat_derivative(n):
    assert clark_union_partition(monomial(n)).a_emp == pytest.approx(1.0, abs=1e-12)


def test_partition_psi_gaps():
    th = make_blaschke([0.5, -0.5])
    part = clark_union_partition(th)
    assert len(part.angles) == 4
    np.testing.assert_allclose(part.half_psi_gaps, np.pi / 2, atol=1e-9)
    # independent check through the argument branch
    psi = arg_branch(th)
    vals = psi(np.append(part.angles, part.angles[0] + 2 * np.pi))
    np.testing.assert_allclose(np.diff(vals), np.pi, atol=1e-9)


def test_partition_random_gaps_and_ratio(rng):
    th = random_theta(rng, 9, rmax=0.8)
    part = clark_union_partition(th)
    assert len(part.angles) == 18
    np.testing.assert_allclose(part.half_psi_gaps, np.pi / 2, atol=1e-9)
    assert part.a_emp >= 1
    grid = part.arc_grid(32)
    assert grid.shape == (18, 32)
    np.testing.assert_allclose(grid[:, 0], part.angles)


def test_clark_serialization(rng):
    th = random_theta(rng, 3)
    C = clark_measure(th, np.exp(0.7j))
    d = json.loads(C.to_json())
    assert set(d) == {"alpha", "atoms"}
    back = ClarkData.from_dict(th, d)
    np.testing.assert_array_equal(back.angles, C.angles)
    np.testing.assert_array_equal(back.weights, C.weights)
    assert back.alpha == C.alpha
