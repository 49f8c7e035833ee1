"""Finite Blaschke products and their boundary geometry."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy import integrate, ndimage

from .errors import ToleranceError

ZERO_MARGIN = 1e-12
MAX_DEGREE = 256


@dataclass(frozen=True, eq=False)
class InnerFunction:
    """theta(z) = front * prod_k (z - a_k) / (1 - conj(a_k) z)."""

    zeros: np.ndarray
    front: complex = 1.0

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def __call__(self, z):
        return evaluate(self, z)

    def to_dict(self):
        return {
            "zeros": [[float(a.real), float(a.imag)] for a in self.zeros],
            "front": [float(self.front.real), float(self.front.imag)],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        zeros = [complex(re, im) for re, im in d["zeros"]]
        return make_blaschke(zeros, complex(*d["front"]))

    @property
    def theta_id(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def squared(self) -> "InnerFunction":
        return make_blaschke(np.concatenate([self.zeros, self.zeros]), self.front**2)

    def __repr__(self):
        return f"InnerFunction(degree={self.degree}, id={self.theta_id})"


def make_blaschke(zeros, front=1.0) -> InnerFunction:
    zeros = np.atleast_1d(np.asarray(zeros, dtype=complex)).ravel()
    front = complex(front)
    if len(zeros) > MAX_DEGREE:
        raise ValueError(f"degree {len(zeros)} exceeds cap {MAX_DEGREE}")
    if np.any(np.abs(zeros) >= 1 - ZERO_MARGIN):
        raise ValueError("zero not strictly inside disk")
    if abs(abs(front) - 1) > 1e-14:
        raise ValueError(f"front constant must be unimodular, got |front|={abs(front)!r}")
    zeros.setflags(write=False)
    return InnerFunction(zeros, front)


def monomial(n: int) -> InnerFunction:
    return make_blaschke(np.zeros(n), 1.0)


def evaluate(theta: InnerFunction, z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1 + 1e-12):
        raise ValueError("evaluation point outside the closed disk")
    out = np.full(z.shape, theta.front, dtype=complex)
    for a in theta.zeros:
        out = out * (z - a) / (1 - np.conj(a) * z)
    return out[()] if out.ndim == 0 else out


def log_derivative(theta: InnerFunction, z):
    """theta'/theta at z (z not a zero of theta)."""
    z = np.asarray(z, dtype=complex)
    a = theta.zeros[:, None] if z.ndim else theta.zeros
    terms = 1 / (z - a) + np.conj(a) / (1 - np.conj(a) * z)
    return terms.sum(axis=0)


def complex_derivative(theta: InnerFunction, z):
    """theta'(z) by the product rule; valid at the zeros of theta too."""
    z = np.asarray(z, dtype=complex)
    zs = np.atleast_1d(z)
    n = theta.degree
    fac = (zs[:, None] - theta.zeros) / (1 - np.conj(theta.zeros) * zs[:, None])
    dfac = (1 - np.abs(theta.zeros) ** 2) / (1 - np.conj(theta.zeros) * zs[:, None]) ** 2
    out = np.zeros(len(zs), dtype=complex)
    for k in range(n):
        others = np.prod(np.delete(fac, k, axis=1), axis=1)
        out += dfac[:, k] * others
    out *= theta.front
    return out.reshape(z.shape)[()] if z.ndim == 0 else out.reshape(z.shape)


def second_derivative(theta: InnerFunction, z):
    z = np.asarray(z, dtype=complex)
    a = theta.zeros[:, None] if z.ndim else theta.zeros
    L = (1 / (z - a) + np.conj(a) / (1 - np.conj(a) * z)).sum(axis=0)
    dL = (-1 / (z - a) ** 2 + np.conj(a) ** 2 / (1 - np.conj(a) * z) ** 2).sum(axis=0)
    return evaluate(theta, z) * (L**2 + dL)


def boundary_deriv_mod(theta: InnerFunction, t):
    """|theta'(t)| on the circle: sum_k (1 - |a_k|^2) / |t - a_k|^2."""
    t = np.asarray(t, dtype=complex)
    a = theta.zeros[:, None] if t.ndim else theta.zeros
    return ((1 - np.abs(a) ** 2) / np.abs(t - a) ** 2).sum(axis=0)


@dataclass(frozen=True, eq=False)
class ArgBranch:
    """Continuous increasing psi with theta(e^{ix}) = front * e^{i psi(x)}.

    Each Moebius factor contributes x + 2 arg(1 - a e^{-ix}); the second
    term never crosses the branch cut since Re(1 - a e^{-ix}) > 0, so the
    sum is continuous on the whole real line.
    """

    theta: InnerFunction
    x0: float = 0.0
    offset: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a = self.theta.zeros[:, None] if x.ndim else self.theta.zeros
        raw = (x + 2 * np.angle(1 - a * np.exp(-1j * x))).sum(axis=0)
        return raw + self.offset

    def derivative(self, x):
        return boundary_deriv_mod(self.theta, np.exp(1j * np.asarray(x, dtype=float)))

    def quad_increment(self, x0, x1, tol=1e-10):
        """psi(x1) - psi(x0) by adaptive quadrature of |theta'|."""
        return _quad(self.theta, x0, x1, tol)

    def unwrapped_increment(self, x0, x1, samples=4096):
        """psi(x1) - psi(x0) by unwrapping arg(theta) along a fine path."""
        xs = np.linspace(x0, x1, samples)
        ph = np.unwrap(np.angle(evaluate(self.theta, np.exp(1j * xs)) / self.theta.front))
        return ph[-1] - ph[0]


def _quad(theta, x0, x1, tol):
    # split into pieces so that peaked integrands (zeros near the circle) converge
    edges = np.linspace(x0, x1, 4 * max(theta.degree, 1) + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(
            lambda s: float(boundary_deriv_mod(theta, np.exp(1j * s))),
            lo, hi, epsabs=tol / len(edges), epsrel=tol, limit=200,
        )
        if err > tol:
            raise ToleranceError("arg_branch.quadrature", f"error estimate {err:.2e} on [{lo}, {hi}]")
        total += val
    return total


def arg_branch(theta: InnerFunction) -> ArgBranch:
    if theta.degree < 1:
        raise ValueError("argument branch needs degree >= 1")
    psi0 = float(np.angle(evaluate(theta, 1.0) / theta.front))
    raw0 = float(ArgBranch(theta)(0.0))
    # the raw and principal values differ by a multiple of 2 pi
    offset = 2 * np.pi * np.round((psi0 - raw0) / (2 * np.pi))
    return ArgBranch(theta, 0.0, float(offset))


def polynomial_parts(theta: InnerFunction):
    """Coefficients (highest first) of P, Q with theta = front * P / Q.

    P(z) = prod (z - a_k), Q(z) = prod (1 - conj(a_k) z).
    """
    P = np.poly(theta.zeros) if theta.degree else np.array([1.0 + 0j])
    Q = np.array([1.0 + 0j])
    for a in theta.zeros:
        Q = np.polymul(Q, np.array([-np.conj(a), 1.0]))
    return np.asarray(P, dtype=complex), Q


def frostman_shift(theta: InnerFunction, w: complex) -> InnerFunction:
    """(theta - w) / (1 - conj(w) theta) as a Blaschke product of the same degree."""
    w = complex(w)
    if abs(w) >= 1:
        raise ValueError("Frostman parameter must satisfy |w| < 1")
    if w == 0:
        # keep the zero order so that bases built from the list coincide
        return make_blaschke(theta.zeros, theta.front)
    P, Q = polynomial_parts(theta)
    num = theta.front * P - w * np.concatenate([np.zeros(len(P) - len(Q)), Q])
    roots = np.roots(num) if theta.degree else np.array([], dtype=complex)
    roots = np.asarray(roots, dtype=complex)
    for _ in range(3):
        # Newton polish on theta(z) = w
        roots = _inside(roots)
        roots = roots - (evaluate(theta, roots) - w) / complex_derivative(theta, roots)
    roots = _inside(roots)
    resid = np.max(np.abs(evaluate(theta, roots) - w)) if theta.degree else 0.0
    if resid > 1e-8:
        raise ToleranceError("frostman_shift.root_residual", f"|theta(root) - w| = {resid:.2e}")
    unnorm = make_blaschke(roots, 1.0)
    t0 = 1.0 + 0j
    th0 = evaluate(theta, t0)
    target = (th0 - w) / (1 - np.conj(w) * th0)
    ratio = target / evaluate(unnorm, t0)
    return make_blaschke(roots, ratio / abs(ratio))


def _inside(z):
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    lim = 1 - 2 * ZERO_MARGIN
    return np.where(r > lim, z / np.maximum(r, 1e-300) * lim, z)


def sublevel_probe(theta: InnerFunction, eps: float, grid_res: int = 1001) -> int:
    """Count 4-connected components of {|theta| < eps} rasterized over the disk."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    xs = np.linspace(-1, 1, grid_res)
    X, Y = np.meshgrid(xs, xs)
    Z = X + 1j * Y
    inside = np.abs(Z) < 1
    vals = np.ones(Z.shape)
    vals[inside] = np.abs(evaluate(theta, Z[inside]))
    mask = inside & (vals < eps)
    _, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(2, 1))
    return int(count)
