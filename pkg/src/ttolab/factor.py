"""Outer square roots, Clark-grid majorants and four-term factorizations in K_theta."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clark import ClarkPartition, clark_union_partition
from .errors import ToleranceError
from .inner import boundary_deriv_mod, evaluate
from .modelspace import KFun, ModelSpace, analytic_tail, involution, project
from .tto import crofoot_map, tto_space_basis
from .xspace import XElement, denominator, unit_grid, x_from_samples

FLOOR = 1e-14


@dataclass
class OuterRoot:
    g: KFun
    modulus_error: float        # || |g|^2 - f ||_1 / ||f||_1 on the model grid
    membership_residual: float  # relative distance of g's samples to K_theta
    floored_fraction: float
    dft_tail: float             # coefficient tail of the raw DFT root beyond degree n-1


def dyakonov_root(M: ModelSpace, f, oversample: int = 16, full_output: bool = False):
    """Outer g in K_theta with |g|^2 = f for a nonnegative f in X.

    The outer function exp(u + i u~), u = log(f)/2, is built from the DFT of
    u on a grid ``oversample`` times finer than the model grid; f is first put
    in its exact Laurent form so the finer samples carry no interpolation error.
    """
    f = np.asarray(f)
    if np.iscomplexobj(f):
        if np.max(np.abs(f.imag)) > 1e-10 * max(np.max(np.abs(f)), 1e-300):
            raise ValueError("dyakonov_root needs real samples")
        f = f.real
    fmax = float(np.max(f))
    if fmax <= 0:
        raise ValueError("f is identically zero")
    if f.min() < -1e-9 * fmax:
        raise ValueError(f"f is not nonnegative (min {f.min():.3e})")
    l1 = float(np.mean(np.abs(f)))
    tail = analytic_tail(np.conj(M.grid) * M.theta_samples * f)
    if tail > 1e-8 * l1:
        raise ToleranceError("dyakonov_root.h1_membership", f"negative-frequency tail {tail:.2e}")
    xf = x_from_samples(M, f, tol=1e-8, name="dyakonov_root.x_membership")

    size = M.grid_size * oversample
    F = xf.on_grid(size).real
    floor = FLOOR * F.max()
    floored = F < floor
    frac = float(floored.mean())
    if frac > 0.01:
        raise ToleranceError("dyakonov_root.flooring", f"{100 * frac:.1f}% of the grid floored; ill-conditioned")
    u = 0.5 * np.log(np.maximum(F, floor))
    c = np.fft.fft(u)
    c[1:size // 2] *= 2
    c[size // 2:] = 0
    G = np.exp(np.fft.ifft(c))
    # G Q is a polynomial of degree < n when G is in K_theta
    n = M.degree
    Qf = denominator(M.theta, unit_grid(size))
    coeffs = np.fft.fft(G * Qf) / size
    dft_tail = float(np.linalg.norm(coeffs[n:]) / np.linalg.norm(coeffs))
    p = _wilson_polish(coeffs[:n], xf.laurent[n - 1:])
    vals = np.polyval(p[::-1], M.grid) / denominator(M.theta, M.grid)
    g = project(M, vals)
    resid = float(np.linalg.norm(g.samples - vals) / np.linalg.norm(vals))
    if resid > 1e-7:
        raise ToleranceError("dyakonov_root.k_membership", f"projection residual {resid:.2e}")
    mismatch = np.abs(np.abs(g.samples) ** 2 - f)
    mod_err = float(np.mean(mismatch) / l1)
    coarse_floored = f < floor
    point_err = float(np.max(mismatch[~coarse_floored]) / fmax)
    if mod_err > 1e-6 or point_err > 1e-7:
        raise ToleranceError("dyakonov_root.modulus",
                             f"|| |g|^2 - f ||_1 relative {mod_err:.2e}, pointwise {point_err:.2e}")
    if full_output:
        return OuterRoot(g, mod_err, resid, frac, dft_tail)
    return g


def _autocorr(p):
    n = len(p)
    return np.array([np.dot(p[m:], np.conj(p[:n - m])) for m in range(n)])


def _wilson_polish(p, target, max_iter=100):
    """Newton iteration on the coefficients of p for |p|^2 = sum target_m z^m on the circle.

    ``target`` holds the Laurent coefficients m = 0..n-1. Started from the DFT
    root the iteration stays on the outer solution; it is quadratic for zeros
    off the circle and still linear when the data vanish on the circle, where
    the floored logarithm leaves the DFT root visibly inaccurate.
    """
    p = np.array(p, dtype=complex)
    n = len(p)
    scale = np.linalg.norm(target)
    best, best_err = p.copy(), np.linalg.norm(target - _autocorr(p))
    stall = 0
    for _ in range(max_iter):
        r = target - _autocorr(p)
        if np.linalg.norm(r) <= 1e-15 * scale:
            break
        A = np.zeros((n, n), dtype=complex)   # coefficient of delta_j in row m
        B = np.zeros((n, n), dtype=complex)   # coefficient of conj(delta_j) in row m
        for m in range(n):
            A[m, m:] = np.conj(p[:n - m])
            B[m, :n - m] = p[m:]
        S, D = A + B, A - B
        J = np.block([[S.real, -D.imag], [S.imag, D.real]])
        step = np.linalg.lstsq(J, np.concatenate([r.real, r.imag]), rcond=None)[0]
        p = p + step[:n] + 1j * step[n:]
        err = np.linalg.norm(target - _autocorr(p))
        if err < best_err * (1 - 1e-3):
            best, best_err, stall = p.copy(), err, 0
        else:
            stall += 1
            if stall >= 5:
                break
    return best


def winding_number(g: KFun, radius: float = 0.99, samples: int = 4096) -> int:
    """Zeros of g inside |z| < radius by the argument principle."""
    z = radius * unit_grid(samples)
    vals = g(np.append(z, z[0]))
    ph = np.unwrap(np.angle(vals))
    return int(np.round((ph[-1] - ph[0]) / (2 * np.pi)))


@dataclass
class Majorant:
    g: XElement
    partition: ClarkPartition
    arc_sup: np.ndarray
    D: float
    c_rep: float
    oversample: int


def majorant_clark(M: ModelSpace, h, D: float | None = None, per_arc: int = 32) -> Majorant:
    """g = D sum c_n |k_{t_n}|^2 / |theta'(t_n)|^2 >= |h| over the sigma_1 and sigma_{-1} atoms.

    c_n is the maximum of |h| over arc n sampled at ``per_arc`` points; one
    retry with four times more points is made if majorization fails.
    """
    if not isinstance(h, XElement):
        h = np.asarray(h)
        if np.iscomplexobj(h) and np.max(np.abs(h.imag)) > 1e-10 * max(np.max(np.abs(h)), 1e-300):
            raise ValueError("majorant_clark needs a real-valued element")
        h = x_from_samples(M, np.real(h), tol=1e-8, name="majorant_clark.x_membership")
    part = clark_union_partition(M.theta)
    if D is None:
        D = 1.01 * max(1.0, np.pi**2 * part.a_emp**2 / 4)
    tn = part.points
    kern = np.abs(M.basis_samples @ np.conj(M.basis_at(tn)).T) ** 2   # |k_{t_n}|^2 on the grid
    scale = D / boundary_deriv_mod(M.theta, tn) ** 2
    habs = np.abs(h.samples.real)
    hmax = float(habs.max()) if habs.size else 0.0

    for oversample in (1, 4):
        xs = part.arc_grid(per_arc * oversample)
        pts = np.exp(1j * xs)
        c = np.abs(h(pts).real).max(axis=1)
        g_samples = kern @ (scale * c)
        g = x_from_samples(M, g_samples, tol=1e-8, name="majorant_clark.g_membership")
        slack_grid = float(np.min(g.samples.real - habs))
        slack_arcs = float(np.min(g(pts).real - np.abs(h(pts).real)))
        if min(slack_grid, slack_arcs) >= -1e-9 * hmax:
            break
    else:
        raise ToleranceError("majorant_clark.majorization",
                             f"g - |h| reaches {min(slack_grid, slack_arcs):.2e}")
    hl1 = float(np.mean(habs))
    c_rep = float(np.mean(g.samples.real)) / hl1 if hl1 > 0 else 0.0
    return Majorant(g, part, c, float(D), c_rep, oversample)


@dataclass
class FactorizationResult:
    pairs: list
    constant: float
    residual_rel: float
    f_l1: float
    route: str = "direct"
    timings: dict = field(default_factory=dict)
    pieces_l1: list = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return self.constant / self.f_l1 if self.f_l1 else 0.0

    def to_dict(self, include_timings: bool = False):
        d = {
            "pairs": [{"x": x.to_dict(), "y": y.to_dict()} for x, y in self.pairs],
            "constant": self.constant,
            "residual_rel": self.residual_rel,
            "f_l1": self.f_l1,
            "route": self.route,
        }
        if include_timings:
            d["timings"] = self.timings
        return d


def _is_nonneg(u: XElement, sign: float, fine: int) -> bool:
    vals = sign * u.on_grid(fine).real
    return float(vals.min()) >= -1e-12 * float(np.abs(vals).max())


def factorize4(M: ModelSpace, f, tol: float = 1e-6) -> FactorizationResult:
    """f = sum_{k<=4} x_k y_k with x_k, y_k in K_theta for f in H^1 cap conj(z) theta^2 conj(H^1).

    h = z conj(theta) f lies in X; its real and imaginary parts are split
    into nonnegative halves with the Clark majorant (skipped when a part is
    already of one sign), each half is written |G|^2 with an outer G, and
    f = sum zeta G * (conj(z) theta conj(G)).
    """
    f = np.asarray(f, dtype=complex)
    f_l1 = float(np.mean(np.abs(f)))
    if f_l1 == 0:
        return FactorizationResult([], 0.0, 0.0, 0.0)
    w = complex(evaluate(M.theta, 0.0))
    if abs(w) > 1e-12:
        return _factorize_via_crofoot(M, f, w, tol)

    timings = {}
    t0 = time.perf_counter()
    h = x_from_samples(M, M.grid * np.conj(M.theta_samples) * f, tol=1e-8, name="factorize4.membership")
    timings["membership"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fine = 8 * M.grid_size
    pieces = []
    for signs, part in (((1, -1), h.real_part()), ((1j, -1j), h.imag_part())):
        if np.max(np.abs(part.laurent)) <= 1e-15 * np.max(np.abs(h.laurent)):
            continue
        if _is_nonneg(part, 1, fine):
            pieces.append((signs[0], part))
        elif _is_nonneg(part, -1, fine):
            pieces.append((signs[1], -1 * part))
        else:
            maj = majorant_clark(M, part)
            pieces.append((signs[0], 0.5 * (maj.g + part)))
            pieces.append((signs[1], 0.5 * (maj.g - part)))
    timings["majorant"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pairs = []
    for zeta, u in pieces:
        G = dyakonov_root(M, u.samples.real)
        pairs.append((G * zeta, involution(G, tol=1e-7)))
    timings["roots"] = time.perf_counter() - t0

    recon = sum(x.samples * y.samples for x, y in pairs)
    residual = float(np.mean(np.abs(f - recon)) / f_l1)
    constant = float(sum(x.norm * y.norm for x, y in pairs))
    if residual > tol:
        raise ToleranceError("factorize4.residual", f"relative L1 residual {residual:.2e}")
    return FactorizationResult(pairs, constant, residual, f_l1, "direct", timings,
                               [u.l1_norm() for _, u in pieces])


def _factorize_via_crofoot(M, f, w, tol):
    cm = crofoot_map(M, w)
    # products transform as (Ux)(Uy) = (1 - |w|^2) x y / (1 - conj(w) theta)^2
    F = (1 - abs(w) ** 2) * f / (1 - np.conj(w) * M.theta_samples) ** 2
    sub = factorize4(cm.target, F, tol)
    pairs = [(cm.backward(x), cm.backward(y)) for x, y in sub.pairs]
    recon = sum(x.samples * y.samples for x, y in pairs)
    f_l1 = float(np.mean(np.abs(f)))
    residual = float(np.mean(np.abs(f - recon)) / f_l1)
    if residual > tol:
        raise ToleranceError("factorize4.residual", f"relative L1 residual {residual:.2e} after Crofoot transfer")
    constant = float(sum(x.norm * y.norm for x, y in pairs))
    return FactorizationResult(pairs, constant, residual, f_l1, "crofoot", sub.timings, sub.pieces_l1)


def random_xa_element(M: ModelSpace, rng) -> np.ndarray:
    """Grid samples of conj(z) theta h for a random h in X (so an element of X_a)."""
    d = M.degree - 1
    lau = rng.normal(size=2 * d + 1) + 1j * rng.normal(size=2 * d + 1)
    h = XElement(M, lau)
    return np.conj(M.grid) * M.theta_samples * h.samples


def empirical_factor_constant(M: ModelSpace, rng, trials: int = 3) -> float:
    """max of constant / ||f||_1 over random f in X_a."""
    best = 1.0
    for _ in range(trials):
        res = factorize4(M, random_xa_element(M, rng))
        best = max(best, res.ratio)
    return best


@dataclass
class XNormBounds:
    lower: float
    upper: float
    factorization: FactorizationResult
    h_pairs: list


def xnorm_bounds(M: ModelSpace, h, basis=None) -> XNormBounds:
    """Two-sided bounds on ||h||_X.

    upper: the constant of a four-term factorization of conj(z) theta h.
    lower: |Phi_A(h)| / ||A|| over the T(theta) basis, the identity and the
    symbol conj(sgn h), plus ||h||_1.
    """
    h = np.asarray(h, dtype=complex)
    x_from_samples(M, h, tol=1e-8, name="xnorm_bounds.x_membership")
    res = factorize4(M, np.conj(M.grid) * M.theta_samples * h)
    h_pairs = [(x, involution(y, tol=1e-7)) for x, y in res.pairs]
    lower = float(np.mean(np.abs(h)))
    if basis is None:
        basis = tto_space_basis(M)
    candidates = [A.matrix for A in basis] + [np.eye(M.degree)]
    for A in candidates:
        nrm = np.linalg.norm(A, 2)
        if nrm == 0:
            continue
        phi = sum(np.vdot(y.coef, A @ x.coef) for x, y in h_pairs)
        lower = max(lower, abs(phi) / nrm)
    return XNormBounds(lower, res.constant, res, h_pairs)
