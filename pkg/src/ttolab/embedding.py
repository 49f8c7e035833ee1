"""Carleson-type embeddings K_theta -> L^2(mu) and their constants."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, asdict

import numpy as np

from .clark import clark_measure
from .errors import ToleranceError
from .inner import boundary_deriv_mod, evaluate
from .modelspace import KFun, ModelSpace, build_space, project, repro_kernel
from .tto import BoundaryMeasure


def _require_nonnegative(mu: BoundaryMeasure):
    if not mu.is_nonnegative(tol=1e-14):
        raise ValueError("embedding needs a nonnegative measure")


def measure_nodes(M: ModelSpace, mu: BoundaryMeasure):
    """Points and nonnegative weights carrying mu: atoms first, then grid nodes of the density."""
    _require_nonnegative(mu)
    pts = [mu.points]
    wts = [mu.weights.real]
    if mu.density is not None:
        dens = mu.density.real
        keep = dens > 0
        pts.append(M.grid[keep])
        wts.append(dens[keep] / M.grid_size)
    return np.concatenate(pts), np.concatenate(wts)


def embedding_matrix(M: ModelSpace, mu: BoundaryMeasure):
    """J with rows sqrt(weight) * (b_1(p), ..., b_n(p)); J^* J is the Gram matrix in L^2(mu)."""
    pts, wts = measure_nodes(M, mu)
    return np.sqrt(wts)[:, None] * M.basis_at(pts)


def embedding_norm(M: ModelSpace, mu: BoundaryMeasure) -> float:
    J = embedding_matrix(M, mu)
    return float(np.linalg.svd(J, compute_uv=False)[0]) if J.size else 0.0


def rayleigh_crosscheck(J, trials=1000, power_steps=3, seed=0):
    """Best ||Jv|| over random unit vectors, each sharpened by a few power steps on J^*J."""
    rng = np.random.default_rng(seed)
    n = J.shape[1]
    V = rng.normal(size=(n, trials)) + 1j * rng.normal(size=(n, trials))
    V /= np.linalg.norm(V, axis=0)
    G = J.conj().T @ J
    for _ in range(power_steps):
        V = G @ V
        V /= np.maximum(np.linalg.norm(V, axis=0), 1e-300)
    return float(np.max(np.linalg.norm(J @ V, axis=0)))


def commutator_check(M: ModelSpace, mu: BoundaryMeasure) -> float:
    """Frobenius mismatch in M_z J - J A_z = (., conj(z) theta) theta."""
    if abs(evaluate(M.theta, 0.0)) > 1e-12:
        raise ValueError("commutator identity is stated for theta(0) = 0; route through crofoot_map")
    pts, wts = measure_nodes(M, mu)
    circle = np.abs(np.abs(pts) - 1) <= 1e-10
    off = np.max(np.abs(np.abs(evaluate(M.theta, pts[circle])) - 1), initial=0.0)
    if off > 1e-10:
        raise ToleranceError("commutator.unimodular", f"||theta| - 1| = {off:.2e} at boundary atoms")
    sq = np.sqrt(wts)
    J = sq[:, None] * M.basis_at(pts)
    lhs = pts[:, None] * J - J @ M.restricted_shift
    ztheta = project(M, np.conj(M.grid) * M.theta_samples).coef
    rhs = np.outer(sq * evaluate(M.theta, pts), np.conj(ztheta))
    return float(np.linalg.norm(lhs - rhs))


@dataclass
class AbelTable:
    radii: np.ndarray
    errors: np.ndarray          # ||g_r - Jg|| in L^2(mu)
    dilated_norms: np.ndarray   # ||g_r|| in L^2(mu)
    trace_norm: float           # ||Jg||
    uniform_bound: float        # 2 ||J|| ||g||_2

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.errors) <= 1e-15 * max(self.errors.max(), 1)))

    @property
    def trace_bound_holds(self) -> bool:
        return bool(np.all(self.dilated_norms <= 2 * self.trace_norm * (1 + 1e-12) + 1e-15))

    @property
    def uniform_bound_holds(self) -> bool:
        return bool(np.all(self.dilated_norms <= self.uniform_bound * (1 + 1e-12)))


def abel_means_check(M: ModelSpace, mu: BoundaryMeasure, g: KFun, radii) -> AbelTable:
    """Distances ||g_r - Jg|| in L^2(mu) for the dilations g_r(z) = g(rz)."""
    if abs(evaluate(M.theta, 0.0)) > 1e-12:
        raise ValueError("Abel means check assumes theta(0) = 0")
    pts, wts = measure_nodes(M, mu)
    boundary = g(pts)
    radii = np.asarray(radii, dtype=float)
    errs, norms = [], []
    for r in radii:
        dil = g(r * pts)
        errs.append(np.sqrt(np.sum(wts * np.abs(dil - boundary) ** 2)))
        norms.append(np.sqrt(np.sum(wts * np.abs(dil) ** 2)))
    trace = float(np.sqrt(np.sum(wts * np.abs(boundary) ** 2)))
    return AbelTable(radii, np.array(errs), np.array(norms), trace,
                     2 * embedding_norm(M, mu) * g.norm)


@dataclass
class EmbeddingReport:
    theta_id: str
    measure_id: str
    n: int
    c2_theta: float
    c2_theta2: float
    c1_lower: float
    pp_ratio: float
    c1_upper: float

    @property
    def c2_ratio(self) -> float:
        return self.c2_theta2 / self.c2_theta if self.c2_theta else float("nan")


CSV_COLUMNS = ["theta_id", "measure_id", "n", "c2_theta", "c2_theta2", "c1_lower", "pp_ratio", "c1_upper"]


def block_constants(M2: ModelSpace, mu: BoundaryMeasure, n: int):
    """Embedding constants of K_theta and theta K_theta inside K_{theta^2}."""
    J = embedding_matrix(M2, mu)
    s = [np.linalg.svd(J[:, sl], compute_uv=False)[0] if J.size else 0.0
         for sl in (slice(0, n), slice(n, 2 * n))]
    return float(s[0]), float(s[1])


def product_lower_bound(M: ModelSpace, mu: BoundaryMeasure, rng, pairs=500):
    """max of integral |x||y| d mu over random unit pairs, normalized kernels at atoms
    and x = y = the top right singular vector of J."""
    pts, wts = measure_nodes(M, mu)
    Bp = M.basis_at(pts)
    n = M.degree
    X = rng.normal(size=(n, pairs)) + 1j * rng.normal(size=(n, pairs))
    Y = rng.normal(size=(n, pairs)) + 1j * rng.normal(size=(n, pairs))
    X /= np.linalg.norm(X, axis=0)
    Y /= np.linalg.norm(Y, axis=0)
    best = float(np.max(wts @ (np.abs(Bp @ X) * np.abs(Bp @ Y)))) if len(wts) else 0.0
    if len(wts):
        v = np.linalg.svd(np.sqrt(wts)[:, None] * Bp)[2][0].conj()
        best = max(best, float(wts @ np.abs(Bp @ v) ** 2))
    for p in mu.points[np.abs(mu.points) > 1 - 1e-12]:
        k = repro_kernel(M, p).coef
        k /= np.linalg.norm(k)
        best = max(best, float(wts @ np.abs(Bp @ k) ** 2))
    return best


def plancherel_polya_ratio(M: ModelSpace, rng, trials=100, alpha=1.0):
    """max over random f = x conj(y) of sum_n |f(s_n)| / |theta'(u_n)| divided by ||f||_1,
    with s_n = u_n the midpoints of the arcs of the Clark support."""
    C = clark_measure(M.theta, alpha)
    ang = C.angles
    ends = np.append(ang[1:], ang[0] + 2 * np.pi)
    mids = np.exp(0.5j * (ang + ends))
    dmod = boundary_deriv_mod(M.theta, mids)
    Bm = M.basis_at(mids)
    B = M.basis_samples
    n = M.degree
    best = 0.0
    for _ in range(trials):
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        y = rng.normal(size=n) + 1j * rng.normal(size=n)
        f_mid = (Bm @ x) * np.conj(Bm @ y)
        l1 = np.mean(np.abs((B @ x) * np.conj(B @ y)))
        best = max(best, float(np.sum(np.abs(f_mid) / dmod) / l1))
    return best


def constants_dashboard(M: ModelSpace, measures, seed=0, factor_trials=3, pairs=500, pp_trials=100):
    """One EmbeddingReport per named measure; ``measures`` maps measure_id -> BoundaryMeasure.

    Densities must live on M's grid; the theta^2 space reuses the same grid.
    """
    from .factor import empirical_factor_constant

    rng = np.random.default_rng(seed)
    n = M.degree
    M2 = build_space(M.theta.squared(), M.grid_size)
    k_emp = empirical_factor_constant(M, rng, trials=factor_trials)
    pp = plancherel_polya_ratio(M, rng, trials=pp_trials)
    reports = []
    for mid, mu in measures.items():
        c2 = embedding_norm(M, mu)
        c2sq = embedding_norm(M2, mu)
        if c2**2 > c2sq**2 * (1 + 1e-9) + 1e-12:
            raise ToleranceError("dashboard.inclusion", f"c2(theta)={c2:.6g} > c2(theta^2)={c2sq:.6g}")
        lower = product_lower_bound(M, mu, rng, pairs)
        if lower > c2**2 + 1e-12 * max(1, c2**2):
            raise ToleranceError("dashboard.cauchy_schwarz", f"c1_lower={lower:.6g} > c2^2={c2**2:.6g}")
        reports.append(EmbeddingReport(M.theta.theta_id, str(mid), n, c2, c2sq, lower, pp, k_emp * c2**2))
    return reports


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        row = asdict(r)
        w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
