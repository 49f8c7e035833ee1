"""Elements of X = span{x conj(y) : x, y in K_theta} in closed form.

Every element of K_theta is p/Q with Q(z) = prod (1 - conj(a_k) z) and
deg p < n, so on the circle an element of X equals L(z) / |Q(z)|^2 with L a
Laurent polynomial of degree at most n - 1. Storing L makes evaluation at
arbitrary boundary points exact, which the majorant and the outer root need.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ToleranceError
from .inner import polynomial_parts
from .modelspace import KFun, ModelSpace


def denominator(theta, z):
    _, Q = polynomial_parts(theta)
    return np.polyval(Q, z)


def unit_grid(size):
    return np.exp(2j * np.pi * np.arange(size) / size)


@dataclass(frozen=True, eq=False)
class XElement:
    space: ModelSpace
    laurent: np.ndarray     # coefficients of z^m, m = -(n-1)..(n-1)

    @property
    def order(self) -> int:
        return self.space.degree - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=complex)
        m = np.arange(-self.order, self.order + 1)
        L = (self.laurent[None, :] * t.ravel()[:, None] ** m[None, :]).sum(axis=1)
        return (L / np.abs(denominator(self.space.theta, t.ravel())) ** 2).reshape(t.shape)

    def on_grid(self, size):
        """Samples on the size-point equispaced grid, via one inverse FFT."""
        d = self.order
        if size <= 2 * d:
            raise ValueError("grid too coarse for this element")
        c = np.zeros(size, dtype=complex)
        c[:d + 1] = self.laurent[d:]
        if d:
            c[-d:] = self.laurent[:d]
        L = np.fft.ifft(c) * size
        return L / np.abs(denominator(self.space.theta, unit_grid(size))) ** 2

    @property
    def samples(self):
        return self.on_grid(self.space.grid_size)

    def conj(self):
        return XElement(self.space, np.conj(self.laurent[::-1]))

    def real_part(self):
        return XElement(self.space, 0.5 * (self.laurent + np.conj(self.laurent[::-1])))

    def imag_part(self):
        return XElement(self.space, -0.5j * (self.laurent - np.conj(self.laurent[::-1])))

    def __add__(self, other):
        return XElement(self.space, self.laurent + other.laurent)

    def __sub__(self, other):
        return XElement(self.space, self.laurent - other.laurent)

    def __mul__(self, c):
        return XElement(self.space, self.laurent * c)

    __rmul__ = __mul__

    def l1_norm(self, size=None) -> float:
        size = size or self.space.grid_size
        return float(np.mean(np.abs(self.on_grid(size))))

    def is_zero(self) -> bool:
        return not np.any(self.laurent)


def x_from_samples(M: ModelSpace, samples, tol: float = 1e-8, name="x_membership") -> XElement:
    """Recover the Laurent form of grid samples; raise if they are not in X.

    The membership residual is the relative L^1 distance between the samples
    and their truncated Laurent reconstruction.
    """
    samples = np.asarray(samples, dtype=complex)
    N = M.grid_size
    d = M.degree - 1
    L = samples * np.abs(denominator(M.theta, M.grid)) ** 2
    c = np.fft.fft(L) / N
    laurent = np.concatenate([c[N - d:] if d else c[:0], c[:d + 1]])
    x = XElement(M, laurent)
    scale = float(np.mean(np.abs(samples)))
    if scale > 0:
        resid = float(np.mean(np.abs(x.samples - samples))) / scale
        if resid > tol:
            raise ToleranceError(name, f"relative distance to X is {resid:.2e}")
    return x


def x_from_pair(x: KFun, y: KFun) -> XElement:
    """x conj(y) as an element of X."""
    M = x.space
    return x_from_samples(M, x.samples * np.conj(y.samples))
