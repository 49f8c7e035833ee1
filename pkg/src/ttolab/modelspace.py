"""Concrete model spaces K_theta = H^2 minus theta H^2 for finite Blaschke products.

Elements are stored as coefficient vectors in the Takenaka-Malmquist basis
built from the zero list; boundary samples on an equispaced grid connect the
coefficient picture with the DFT picture.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ToleranceError
from .inner import InnerFunction, complex_derivative, evaluate, second_derivative

DEFAULT_GRID = 4096


def tm_basis(zeros, z):
    """Takenaka-Malmquist functions b_k evaluated at points z; shape (len(z), n)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    a = np.asarray(zeros, dtype=complex)
    n = len(a)
    out = np.empty((len(z), n), dtype=complex)
    prefix = np.ones(len(z), dtype=complex)
    for k in range(n):
        den = 1 - np.conj(a[k]) * z
        out[:, k] = np.sqrt(1 - abs(a[k]) ** 2) / den * prefix
        prefix = prefix * (z - a[k]) / den
    return out


def analytic_tail(samples) -> float:
    """Largest |Fourier coefficient| over the negative frequencies of grid samples."""
    samples = np.asarray(samples)
    N = samples.shape[0]
    c = np.fft.fft(samples, axis=0) / N
    return float(np.max(np.abs(c[N // 2:]))) if N else 0.0


def riesz_projection(samples):
    """P_+ on grid samples: keep the non-negative frequencies."""
    samples = np.asarray(samples, dtype=complex)
    N = samples.shape[0]
    c = np.fft.fft(samples, axis=0)
    c[N // 2:] = 0
    return np.fft.ifft(c, axis=0)


@dataclass(frozen=True, eq=False)
class ModelSpace:
    theta: InnerFunction
    grid_size: int
    grid: np.ndarray = field(repr=False)
    basis_samples: np.ndarray = field(repr=False)

    @property
    def degree(self) -> int:
        return self.theta.degree

    @cached_property
    def theta_samples(self):
        return evaluate(self.theta, self.grid)

    def basis_at(self, z):
        return tm_basis(self.theta.zeros, z)

    def inner(self, f, g) -> complex:
        """(f, g) in L^2(m) by the grid rule."""
        return complex(np.mean(np.asarray(f) * np.conj(g)))

    def element(self, coef) -> "KFun":
        coef = np.asarray(coef, dtype=complex).reshape(self.degree)
        return KFun(self, coef)

    def gram(self):
        B = self.basis_samples
        return B.conj().T @ B / self.grid_size

    @cached_property
    def restricted_shift(self):
        """Matrix of S_theta = A_z in the basis."""
        B = self.basis_samples
        return B.conj().T @ (self.grid[:, None] * B) / self.grid_size


@dataclass(frozen=True, eq=False)
class KFun:
    space: ModelSpace
    coef: np.ndarray

    @property
    def samples(self):
        return self.space.basis_samples @ self.coef

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coef))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        vals = self.space.basis_at(z) @ self.coef
        return vals[0] if z.ndim == 0 else vals.reshape(z.shape)

    def __add__(self, other):
        return KFun(self.space, self.coef + other.coef)

    def __sub__(self, other):
        return KFun(self.space, self.coef - other.coef)

    def __mul__(self, c):
        return KFun(self.space, self.coef * complex(c))

    __rmul__ = __mul__

    def to_dict(self):
        return {
            "theta_id": self.space.theta.theta_id,
            "coef": [[float(c.real), float(c.imag)] for c in self.coef],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, space: ModelSpace, d):
        if d["theta_id"] != space.theta.theta_id:
            raise ValueError("KFun belongs to a different inner function")
        return space.element([complex(re, im) for re, im in d["coef"]])


def build_space(theta: InnerFunction, grid_size: int = DEFAULT_GRID) -> ModelSpace:
    n = theta.degree
    if n < 1:
        raise ValueError("model space needs degree >= 1")
    if grid_size & (grid_size - 1) or grid_size < 8 * n:
        raise ValueError(f"grid_size must be a power of two >= 8*degree, got {grid_size}")
    grid = np.exp(2j * np.pi * np.arange(grid_size) / grid_size)
    M = ModelSpace(theta, grid_size, grid, tm_basis(theta.zeros, grid))
    dev = np.max(np.abs(M.gram() - np.eye(n)))
    if dev > 1e-8:
        raise ToleranceError("build_space.gram", f"Gram deviation {dev:.2e}; grid too coarse")
    return M


def project(M: ModelSpace, samples) -> KFun:
    """Orthogonal projection P_theta of an L^2 grid function onto K_theta."""
    samples = np.asarray(samples, dtype=complex)
    return KFun(M, M.basis_samples.conj().T @ samples / M.grid_size)


def project_formula(M: ModelSpace, samples):
    """P_+ f - theta P_+(conj(theta) f), evaluated on the grid by DFT truncation."""
    samples = np.asarray(samples, dtype=complex)
    th = M.theta_samples
    return riesz_projection(samples) - th * riesz_projection(np.conj(th) * samples)


def projection_residual(M: ModelSpace, samples) -> float:
    """L^2 distance from grid samples to K_theta."""
    samples = np.asarray(samples, dtype=complex)
    f = project(M, samples)
    return float(np.sqrt(np.mean(np.abs(samples - f.samples) ** 2)))


def repro_kernel(M: ModelSpace, lam) -> KFun:
    """k_lam = (1 - conj(theta(lam)) theta) / (1 - conj(lam) z)."""
    lam = complex(lam)
    if abs(lam) > 1 + 1e-12:
        raise ValueError("kernel point outside the closed disk")
    return KFun(M, np.conj(M.basis_at(lam)[0]))


def conj_kernel(M: ModelSpace, lam) -> KFun:
    """(theta(z) - theta(lam)) / (z - lam), projected from boundary samples.

    Near the removable singularity the difference quotient is replaced by its
    second-order Taylor expansion at lam.
    """
    lam = complex(lam)
    if abs(lam) > 1 + 1e-12:
        raise ValueError("kernel point outside the closed disk")
    t = M.grid
    th_lam = evaluate(M.theta, lam)
    diff = t - lam
    close = np.abs(diff) < 1e-5
    vals = np.empty_like(t)
    far = ~close
    vals[far] = (M.theta_samples[far] - th_lam) / diff[far]
    if close.any():
        d1 = complex_derivative(M.theta, lam)
        d2 = second_derivative(M.theta, lam)
        vals[close] = d1 + 0.5 * d2 * diff[close]
    return project(M, vals)


def involution(f: KFun, tol: float = 1e-9) -> KFun:
    """The antilinear isometry f -> conj(z) theta conj(f)."""
    M = f.space
    vals = np.conj(M.grid) * M.theta_samples * np.conj(f.samples)
    g = project(M, vals)
    resid = float(np.sqrt(np.mean(np.abs(vals - g.samples) ** 2)))
    if resid > tol * max(f.norm, 1e-300) and f.norm > 0:
        raise ToleranceError("involution.projection", f"residual {resid:.2e}")
    return g
