"""Clark measures of finite Blaschke products."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceError
from .inner import InnerFunction, arg_branch, boundary_deriv_mod, evaluate
from .modelspace import ModelSpace

BISECTION_STEPS = 60
ANGLE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ClarkData:
    alpha: complex
    angles: np.ndarray
    weights: np.ndarray
    theta: InnerFunction

    @property
    def points(self):
        return np.exp(1j * self.angles)

    def to_dict(self):
        return {
            "alpha": [float(self.alpha.real), float(self.alpha.imag)],
            "atoms": [{"angle": float(x), "weight": float(w)}
                      for x, w in zip(self.angles, self.weights)],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, theta, d):
        return cls(complex(*d["alpha"]),
                   np.array([a["angle"] for a in d["atoms"]]),
                   np.array([a["weight"] for a in d["atoms"]]),
                   theta)


def herglotz_mass(theta: InnerFunction, alpha) -> float:
    w = evaluate(theta, 0.0)
    return float(((alpha + w) / (alpha - w)).real)


def _solve_psi(theta, targets):
    """Bisection for psi(x) = target on [0, 2 pi], vectorised over targets."""
    psi = arg_branch(theta)
    lo = np.zeros(len(targets))
    hi = np.full(len(targets), 2 * np.pi)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        below = psi(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= ANGLE_TOL):
            break
    if np.any(hi - lo > ANGLE_TOL):
        raise ToleranceError("clark_measure.bisection", "bracket wider than 1e-12 after 60 steps")
    x = 0.5 * (lo + hi)
    # one Newton step inside the final bracket removes the last bisection digits
    step = x - (psi(x) - targets) / psi.derivative(x)
    return np.where((step >= lo - ANGLE_TOL) & (step <= hi + ANGLE_TOL), step, x)


def clark_measure(theta: InnerFunction, alpha) -> ClarkData:
    alpha = complex(alpha)
    if abs(abs(alpha) - 1) > 1e-12:
        raise ValueError("alpha must be unimodular")
    n = theta.degree
    psi = arg_branch(theta)
    psi0 = float(psi(0.0))
    beta = float(np.angle(alpha / theta.front))
    m0 = np.ceil((psi0 - beta) / (2 * np.pi))
    targets = beta + 2 * np.pi * (m0 + np.arange(n))
    angles = _solve_psi(theta, targets) % (2 * np.pi)
    angles = np.sort(angles)
    pts = np.exp(1j * angles)
    weights = 1.0 / boundary_deriv_mod(theta, pts)

    miss = np.max(np.abs(evaluate(theta, pts) - alpha)) if n else 0.0
    if miss > 1e-10:
        raise ToleranceError("clark_measure.atoms", f"|theta(t) - alpha| = {miss:.2e}")
    mass_err = abs(weights.sum() - herglotz_mass(theta, alpha))
    if mass_err > 1e-9:
        raise ToleranceError("clark_measure.herglotz", f"mass mismatch {mass_err:.2e}")
    return ClarkData(alpha, angles, weights, theta)


def clark_gram(M: ModelSpace, C: ClarkData):
    Bt = M.basis_at(C.points)
    return Bt.T @ (C.weights[:, None] * Bt.conj())


def clark_isometry_check(M: ModelSpace, C: ClarkData) -> float:
    """Max deviation of the discrete Clark sum from the K_theta inner product on basis pairs."""
    G = clark_gram(M, C)
    return float(np.max(np.abs(G - np.eye(M.degree))))


def interlaces(C1: ClarkData, C2: ClarkData) -> bool:
    """True if the two atom sets strictly alternate around the circle."""
    tags = np.concatenate([np.zeros(len(C1.angles)), np.ones(len(C2.angles))])
    order = np.argsort(np.concatenate([C1.angles, C2.angles]))
    seq = tags[order]
    return bool(np.all(seq != np.roll(seq, 1)))


@dataclass(frozen=True, eq=False)
class ClarkPartition:
    """Merged support of sigma_1 and sigma_{-1}, sorted by angle.

    Arc n is the closed arc from angles[n] to angles[n+1] (the last one wraps
    around). ``half_psi_gaps`` are increments of psi/2, the branch with
    theta = e^{2 i psi} up to the front constant.
    """

    angles: np.ndarray
    half_psi_gaps: np.ndarray
    arc_ratios: np.ndarray
    a_emp: float

    @property
    def points(self):
        return np.exp(1j * self.angles)

    def arc_grid(self, per_arc: int):
        """(number of arcs, per_arc) array of angles covering every arc, endpoints included."""
        ends = np.append(self.angles[1:], self.angles[0] + 2 * np.pi)
        s = np.linspace(0, 1, per_arc)
        return self.angles[:, None] + (ends - self.angles)[:, None] * s[None, :]


def clark_union_partition(theta: InnerFunction, samples_per_arc: int = 32) -> ClarkPartition:
    if theta.degree < 1:
        raise ValueError("partition needs degree >= 1")
    a = clark_measure(theta, 1.0).angles
    b = clark_measure(theta, -1.0).angles
    angles = np.sort(np.concatenate([a, b]))
    psi = arg_branch(theta)
    vals = psi(angles)
    ends = np.append(vals[1:], psi(angles[0] + 2 * np.pi))
    gaps = 0.5 * (ends - vals)
    part = ClarkPartition(angles, gaps, np.empty(0), 0.0)
    xs = part.arc_grid(samples_per_arc)
    d = boundary_deriv_mod(theta, np.exp(1j * xs.ravel())).reshape(xs.shape)
    ratios = d.max(axis=1) / d.min(axis=1)
    return ClarkPartition(angles, gaps, ratios, float(ratios.max()))
