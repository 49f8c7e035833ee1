import json

import numpy as np
import pytest

from ttolab.errors import ToleranceError
from ttolab.inner import make_blaschke, monomial
from ttolab.modelspace import build_space, conj_kernel, repro_kernel
from ttolab.tto import Symbol, tto_from_symbol
from ttolab.xspace import XElement
from ttolab.factor import (
    dyakonov_root, factorize4, majorant_clark, random_xa_element, winding_number, xnorm_bounds,
)

from conftest import random_coef, random_theta


def test_root_of_one_plus_z_squared():
    M = build_space(monomial(2))
    z = M.grid
    out = dyakonov_root(M, np.abs(1 + z) ** 2, full_output=True)
    g = out.g
    phase = g.coef[0] / abs(g.coef[0])
    np.testing.assert_allclose(g.coef / phase, [1, 1], atol=1e-7)
    assert out.modulus_error <= 1e-6


def test_root_of_constant():
    M = build_space(monomial(3))
    g = dyakonov_root(M, np.ones(M.grid_size))
    assert abs(abs(g.coef[0]) - 1) <= 1e-10
    assert np.max(np.abs(g.coef[1:])) <= 1e-10


def test_root_of_kernel_modulus():
    M = build_space(make_blaschke([0.5, -0.5]))
    k = repro_kernel(M, 0.3 + 0.2j)
    g = dyakonov_root(M, np.abs(k.samples) ** 2)
    ratio = g.samples / k.samples
    # k_lambda has no zeros in the disc, so g is a unimodular multiple of it
    np.testing.assert_allclose(np.abs(ratio), 1, atol=1e-7)
    assert np.ptp(np.angle(ratio)) <= 1e-6


def test_root_is_outer(rng):
    M = build_space(random_theta(rng, 6))
    x = M.element(random_coef(rng, 6))
    g = dyakonov_root(M, np.abs(x.samples) ** 2)
    assert winding_number(g) == 0
    np.testing.assert_allclose(np.abs(g.samples) ** 2, np.abs(x.samples) ** 2, atol=1e-7 * np.abs(x.samples).max() ** 2)


def test_root_rejects_negative_and_foreign():
    M = build_space(monomial(2))
    with pytest.raises(ValueError):
        dyakonov_root(M, -np.ones(M.grid_size))
    with pytest.raises(ToleranceError):
        dyakonov_root(M, 2 + np.cos(5 * np.angle(M.grid)))


def test_majorant_dominates(rng):
    M = build_space(random_theta(rng, 6, origin=True))
    h = XElement(M, random_coef(rng, 11)).real_part()
    maj = majorant_clark(M, h)
    t = np.exp(1j * np.linspace(0, 2 * np.pi, 20000))
    assert np.min(maj.g(t).real - np.abs(h(t).real)) >= -1e-9 * np.abs(h.samples).max()
    assert maj.c_rep >= 1


def test_majorant_of_zero():
    M = build_space(monomial(3))
    maj = majorant_clark(M, np.zeros(M.grid_size))
    assert maj.g.is_zero() or np.max(np.abs(maj.g.samples)) == 0


def test_majorant_rejects_complex(rng):
    M = build_space(monomial(3))
    with pytest.raises(ValueError):
        majorant_clark(M, XElement(M, random_coef(rng, 5)).samples * 1j + 0.5)


def test_volberg_example():
    M = build_space(monomial(9))
    f = M.grid**9
    res = factorize4(M, f)
    assert res.residual_rel <= 1e-6
    assert len(res.pairs) <= 4
    assert res.ratio < 50


def test_product_of_members(rng):
    M = build_space(random_theta(rng, 5, origin=True))
    x, y = M.element(random_coef(rng, 5)), M.element(random_coef(rng, 5))
    res = factorize4(M, x.samples * y.samples)
    assert res.residual_rel <= 1e-6
    assert len(res.pairs) <= 4
    recon = sum(a.samples * b.samples for a, b in res.pairs)
    np.testing.assert_allclose(recon, x.samples * y.samples, atol=1e-5 * np.abs(x.samples * y.samples).max())


def test_kernel_times_conjugate_kernel():
    M = build_space(make_blaschke([0, 0.4, -0.3j]))
    lam = 0.2 + 0.3j
    k, kt = repro_kernel(M, lam), conj_kernel(M, lam)
    res = factorize4(M, k.samples * kt.samples)
    assert res.residual_rel <= 1e-8


def test_crofoot_route(rng):
    M = build_space(random_theta(rng, 4))
    f = random_xa_element(M, rng)
    res = factorize4(M, f)
    assert res.route == "crofoot"
    assert res.residual_rel <= 1e-6
    assert len(res.pairs) <= 4


@pytest.mark.parametrize("degree", [1, 3, 7])
def test_random_xa(rng, degree):
    M = build_space(random_theta(rng, degree, origin=True))
    res = factorize4(M, random_xa_element(M, rng))
    assert res.residual_rel <= 1e-6
    assert 1 <= len(res.pairs) <= 4
    assert res.constant >= res.f_l1 * (1 - 1e-9)


def test_zero_function():
    M = build_space(monomial(3))
    res = factorize4(M, np.zeros(M.grid_size))
    assert res.pairs == [] and res.constant == 0.0


def test_nonmember_rejected():
    M = build_space(monomial(3))
    with pytest.raises(ToleranceError, match="factorize4.membership"):
        factorize4(M, M.grid**7)


def test_serialization(rng):
    M = build_space(monomial(4))
    res = factorize4(M, M.grid**4)
    d = json.loads(json.dumps(res.to_dict()))
    assert set(d) == {"pairs", "constant", "residual_rel", "f_l1", "route"}
    assert "timings" in res.to_dict(include_timings=True)


def test_xnorm_of_rank_one(rng):
    M = build_space(random_theta(rng, 4, origin=True))
    x = M.element(random_coef(rng, 4))
    x = x * (1 / x.norm)
    b = xnorm_bounds(M, np.abs(x.samples) ** 2)
    assert b.lower == pytest.approx(1.0, abs=1e-9)
    assert b.lower <= b.upper * (1 + 1e-9)


def test_xnorm_bounds_ordered(rng):
    M = build_space(random_theta(rng, 5, origin=True))
    h = XElement(M, random_coef(rng, 9)).samples
    b = xnorm_bounds(M, h)
    assert np.mean(np.abs(h)) <= b.lower * (1 + 1e-12)
    assert b.lower <= b.upper * (1 + 1e-9)


def test_duality_pairing_consistent(rng):
    # sum (A_phi x_k, y_k) over the pairs of h equals the integral of phi h
    M = build_space(random_theta(rng, 4, origin=True))
    h = XElement(M, random_coef(rng, 7)).samples
    b = xnorm_bounds(M, h)
    recon = sum(x.samples * np.conj(y.samples) for x, y in b.h_pairs)
    np.testing.assert_allclose(recon, h, atol=1e-5 * np.abs(h).max())
    for _ in range(3):
        phi = Symbol.fourier(random_coef(rng, 7))
        A = tto_from_symbol(M, phi, check=False)
        pairing = sum(np.vdot(y.coef, A.matrix @ x.coef) for x, y in b.h_pairs)
        direct = np.mean(phi.samples(M.grid) * h)
        assert abs(pairing - direct) <= 1e-5 * np.mean(np.abs(h))
