"""Truncated Toeplitz operators as matrices in the Takenaka-Malmquist basis."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .clark import clark_measure
from .errors import ToleranceError
from .inner import InnerFunction, evaluate, frostman_shift
from .modelspace import KFun, ModelSpace, build_space, conj_kernel, project, repro_kernel


def _pairs(z):
    return [[float(c.real), float(c.imag)] for c in np.ravel(z)]


def _unpairs(rows):
    return np.array([complex(re, im) for re, im in rows], dtype=complex)


@dataclass(frozen=True)
class Symbol:
    """An L^infinity symbol given either by Fourier coefficients or by grid samples.

    For the ``fourier`` kind ``data[k + K]`` is the coefficient of z^k,
    k = -K..K.
    """

    kind: str
    data: np.ndarray = field(repr=False)

    @classmethod
    def fourier(cls, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if len(coeffs) % 2 != 1:
            raise ValueError("Fourier symbol needs an odd-length coefficient vector -K..K")
        return cls("fourier", coeffs)

    @classmethod
    def grid(cls, samples):
        return cls("grid", np.asarray(samples, dtype=complex))

    @property
    def half_width(self) -> int:
        return (len(self.data) - 1) // 2

    def samples(self, grid):
        if self.kind == "grid":
            if len(self.data) != len(grid):
                raise ValueError("grid symbol has the wrong number of samples")
            return self.data
        K = self.half_width
        if K > len(grid) // 4:
            raise ValueError(f"Fourier support {K} exceeds grid_size/4")
        out = np.zeros(len(grid), dtype=complex)
        for j, c in enumerate(self.data):
            if c != 0:
                out += c * grid ** (j - K)
        return out


@dataclass(frozen=True, eq=False)
class BoundaryMeasure:
    """Finite complex measure: atoms at points of the closed disk plus an
    optional density (with respect to normalized arclength) on the model grid."""

    points: np.ndarray
    weights: np.ndarray
    density: np.ndarray | None = None

    @classmethod
    def atoms(cls, points, weights, density=None):
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        weights = np.atleast_1d(np.asarray(weights, dtype=complex))
        if points.shape != weights.shape:
            raise ValueError("points and weights differ in length")
        if np.any(np.abs(points) > 1 + 1e-12):
            raise ValueError("measure atoms must lie in the closed disk")
        if density is not None:
            density = np.asarray(density, dtype=complex)
        return cls(points, weights, density)

    @classmethod
    def lebesgue(cls, grid_size, scale=1.0):
        return cls(np.zeros(0, complex), np.zeros(0, complex), np.full(grid_size, scale, dtype=complex))

    @classmethod
    def from_clark(cls, C):
        return cls(C.points, C.weights.astype(complex), None)

    def total_variation(self) -> float:
        tv = float(np.abs(self.weights).sum())
        if self.density is not None:
            tv += float(np.mean(np.abs(self.density)))
        return tv

    def is_nonnegative(self, tol=0.0) -> bool:
        ok = np.all(np.abs(self.weights.imag) <= tol) and np.all(self.weights.real >= -tol)
        if self.density is not None:
            ok = ok and np.all(np.abs(self.density.imag) <= tol) and np.all(self.density.real >= -tol)
        return bool(ok)

    def scaled(self, atom_factor, density_factor=None):
        """Multiply the measure by a function given at the atoms and on the grid."""
        dens = None
        if self.density is not None:
            dens = self.density * density_factor
        return BoundaryMeasure(self.points, self.weights * atom_factor, dens)

    def __add__(self, other):
        if self.density is None:
            dens = other.density
        elif other.density is None:
            dens = self.density
        else:
            dens = self.density + other.density
        return BoundaryMeasure(np.concatenate([self.points, other.points]),
                               np.concatenate([self.weights, other.weights]), dens)

    def to_dict(self):
        atoms = []
        for p, c in zip(self.points, self.weights):
            atom = {"angle": float(np.angle(p)), "weight": [float(c.real), float(c.imag)]}
            if abs(abs(p) - 1) > 1e-15:
                atom["radius"] = float(abs(p))
            atoms.append(atom)
        return {"atoms": atoms,
                "density": None if self.density is None else _pairs(self.density)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        pts = np.array([a.get("radius", 1.0) * np.exp(1j * a["angle"]) for a in d["atoms"]], dtype=complex)
        w = np.array([complex(*a["weight"]) for a in d["atoms"]], dtype=complex)
        dens = None if d.get("density") is None else _unpairs(d["density"])
        return cls(pts, w, dens)


@dataclass(frozen=True, eq=False)
class TTOperator:
    space: ModelSpace
    matrix: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2)) if self.matrix.size else 0.0

    def apply(self, f: KFun) -> KFun:
        return KFun(self.space, self.matrix @ f.coef)

    def __add__(self, other):
        return TTOperator(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        return TTOperator(self.space, self.matrix - other.matrix)

    def __mul__(self, c):
        return TTOperator(self.space, self.matrix * complex(c))

    __rmul__ = __mul__

    def to_dict(self):
        n = self.matrix.shape[0]
        return {"theta_id": self.space.theta.theta_id, "n": n, "matrix": _pairs(self.matrix)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, space, d):
        if d["theta_id"] != space.theta.theta_id:
            raise ValueError("operator belongs to a different inner function")
        n = d["n"]
        return cls(space, _unpairs(d["matrix"]).reshape(n, n))


def _compress(M: ModelSpace, phi_samples):
    B = M.basis_samples
    return B.conj().T @ (phi_samples[:, None] * B) / M.grid_size


def tto_from_symbol(M: ModelSpace, phi, check=True) -> TTOperator:
    """A_phi with (A_phi)_{ij} = mean(phi b_j conj(b_i)) on the grid."""
    if isinstance(phi, Symbol):
        vals = phi.samples(M.grid)
    else:
        vals = np.asarray(phi, dtype=complex)
    A = TTOperator(M, _compress(M, vals))
    if check:
        bound = float(np.max(np.abs(vals)))
        if A.norm > bound * (1 + 1e-9) + 1e-12:
            raise ToleranceError("tto_from_symbol.norm", f"|A|={A.norm:.6g} exceeds max|phi|={bound:.6g}")
    return A


def tto_from_measure(M: ModelSpace, mu: BoundaryMeasure) -> TTOperator:
    """A_mu with (A_mu f, g) = integral of f conj(g) d mu."""
    Bt = M.basis_at(mu.points)
    A = Bt.conj().T @ (mu.weights[:, None] * Bt)
    if mu.density is not None:
        A = A + _compress(M, mu.density)
    return TTOperator(M, A)


def _shift_domain(M: ModelSpace):
    """Orthonormal basis (columns) of {f in K_theta: zf in K_theta} and its image under S_theta."""
    n = M.degree
    kt0 = conj_kernel(M, 0.0).coef
    # W is the orthogonal complement of conj(z)(theta - theta(0)) in K_theta
    u, _, _ = np.linalg.svd(kt0[:, None], full_matrices=True)
    W = u[:, 1:]
    return W, M.restricted_shift @ W if n > 1 else W


def sarason_test(A: TTOperator) -> float:
    """Scaled residual max |(A f, g) - (A zf, zg)| over a basis of the shift domain.

    Zero exactly when A is a truncated Toeplitz operator; every 1x1 matrix
    passes since the shift domain is trivial.
    """
    M = A.space
    if M.degree == 1:
        return 0.0
    nrm = A.norm
    if nrm == 0:
        return 0.0
    W, SW = _shift_domain(M)
    R = W.conj().T @ A.matrix @ W - SW.conj().T @ A.matrix @ SW
    return float(np.max(np.abs(R)) / nrm)


def sarason_constraints(M: ModelSpace):
    """Matrix C with C vec(A) = 0 exactly for A in T(theta); vec is column-major."""
    n = M.degree
    if n == 1:
        return np.zeros((0, 1), dtype=complex)
    W, SW = _shift_domain(M)
    return np.kron(W.T, W.conj().T) - np.kron(SW.T, SW.conj().T)


def tto_space_basis(M: ModelSpace, min_gap: float = 1e6, full_output=False):
    """Frobenius-orthonormal basis of T(theta) as the null space of the Sarason constraints.

    The rank gap compares the smallest kept singular value with the numerical
    noise floor (largest discarded value, or eps * s_max * n^2 when the
    constraint matrix has full row rank).
    """
    n = M.degree
    C = sarason_constraints(M)
    if C.shape[0] == 0:
        basis = [TTOperator(M, np.eye(1, dtype=complex))]
        return (basis, np.inf) if full_output else basis
    _, s, Vh = np.linalg.svd(C, full_matrices=True)
    s_all = np.concatenate([s, np.zeros(n * n - len(s))])
    floor = np.finfo(float).eps * s[0] * n * n
    rank = int(np.sum(s_all > floor * 1e3))
    kept_min = s_all[rank - 1]
    discarded = max(s_all[rank] if rank < len(s_all) else 0.0, floor)
    gap = kept_min / discarded
    if gap < min_gap:
        raise ToleranceError("tto_space_basis.rank_gap", f"singular-value gap {gap:.2e} < {min_gap:.0e}")
    null = Vh[rank:].conj()
    basis = [TTOperator(M, v.reshape(n, n, order="F")) for v in null]
    if len(basis) != 2 * n - 1:
        raise ToleranceError("tto_space_basis.dimension", f"found {len(basis)}, expected {2 * n - 1}")
    return (basis, gap) if full_output else basis


@dataclass(frozen=True, eq=False)
class StandardSymbol:
    plus: KFun
    minus: KFun
    residual: float

    def samples(self):
        return self.plus.samples + np.conj(self.minus.samples)


def standard_symbol(A: TTOperator, tol: float = 1e-8) -> StandardSymbol:
    """phi_+ + conj(phi_-) with phi_+-, in K_theta and phi_-(0) = 0 representing A."""
    M = A.space
    n = M.degree
    b0 = M.basis_at(0.0)[0]
    # complex basis of {v : sum v_k b_k(0) = 0}
    _, _, vh = np.linalg.svd(b0[None, :], full_matrices=True)
    Z = vh[1:].conj().T
    B = M.basis_samples
    cols = [_compress(M, B[:, k]).ravel() for k in range(n)]
    minus_funcs = B @ Z
    cols += [_compress(M, np.conj(minus_funcs[:, l])).ravel() for l in range(Z.shape[1])]
    D = np.stack(cols, axis=1)
    sol, *_ = np.linalg.lstsq(D, A.matrix.ravel(), rcond=None)
    p, r = sol[:n], sol[n:]
    # the map is complex-linear in conj(phi_-) coefficients
    minus = KFun(M, Z @ np.conj(r))
    plus = KFun(M, p)
    rebuilt = (D @ sol).reshape(n, n)
    residual = float(np.linalg.norm(rebuilt - A.matrix))
    if residual > tol:
        raise ToleranceError("standard_symbol.residual", f"Frobenius mismatch {residual:.2e}; A not in T(theta)")
    return StandardSymbol(plus, minus, residual)


def rank_one(M: ModelSpace, lam) -> TTOperator:
    """T_lam = (., k_lam) conj-kernel_lam."""
    lam = complex(lam)
    if abs(lam) >= 1:
        raise ValueError("rank-one family needs |lam| < 1")
    k = repro_kernel(M, lam).coef
    kt = conj_kernel(M, lam).coef
    return TTOperator(M, np.outer(kt, np.conj(k)))


def dirac_operator(M: ModelSpace, t) -> TTOperator:
    """A_delta_t = (., k_t) k_t."""
    k = repro_kernel(M, t).coef
    return TTOperator(M, np.outer(k, np.conj(k)))


@dataclass(frozen=True, eq=False)
class CrofootMap:
    source: ModelSpace
    target: ModelSpace
    w: complex
    U: np.ndarray

    def conjugate(self, A: TTOperator) -> TTOperator:
        return TTOperator(self.target, self.U @ A.matrix @ self.U.conj().T)

    def pullback(self, A: TTOperator) -> TTOperator:
        return TTOperator(self.source, self.U.conj().T @ A.matrix @ self.U)

    def forward(self, f: KFun) -> KFun:
        return KFun(self.target, self.U @ f.coef)

    def backward(self, f: KFun) -> KFun:
        return KFun(self.source, self.U.conj().T @ f.coef)

    def density_factor(self, z):
        """(1 - |w|^2) / |1 - conj(w) theta(z)|^2, the weight carrying quasisymbols back."""
        th = evaluate(self.source.theta, z)
        return (1 - abs(self.w) ** 2) / np.abs(1 - np.conj(self.w) * th) ** 2

    def pull_measure(self, mu: BoundaryMeasure) -> BoundaryMeasure:
        dens = None if mu.density is None else self.density_factor(self.source.grid)
        return mu.scaled(self.density_factor(mu.points), dens)


def crofoot_map(M: ModelSpace, w=None, tol: float = 1e-8) -> CrofootMap:
    """Unitary f -> sqrt(1-|w|^2) f / (1 - conj(w) theta) from K_theta onto K_Theta."""
    w = evaluate(M.theta, 0.0) if w is None else complex(w)
    if abs(w) >= 1:
        raise ValueError("Crofoot parameter must satisfy |w| < 1")
    Theta = frostman_shift(M.theta, w)
    target = build_space(Theta, M.grid_size)
    mult = np.sqrt(1 - abs(w) ** 2) / (1 - np.conj(w) * M.theta_samples)
    U = target.basis_samples.conj().T @ (mult[:, None] * M.basis_samples) / M.grid_size
    dev = float(np.max(np.abs(U.conj().T @ U - np.eye(M.degree))))
    if dev > tol:
        raise ToleranceError("crofoot.unitarity", f"|U*U - I| = {dev:.2e}")
    return CrofootMap(M, target, w, U)


def crofoot_conjugate(A: TTOperator, w=None) -> TTOperator:
    return crofoot_map(A.space, w).conjugate(A)


@dataclass(frozen=True, eq=False)
class QuasisymbolFit:
    measure: BoundaryMeasure
    residual: float
    support: str


def _kernel_generators(M: ModelSpace, points):
    V = np.conj(M.basis_at(points))
    return np.einsum("pi,pj->pij", V, V.conj())


def _realify(mats):
    flat = mats.reshape(mats.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1).T


def nonneg_quasisymbol(A: TTOperator, tol: float = 1e-7, refine: bool = True) -> QuasisymbolFit:
    """Nonnegative measure mu with A_mu = A for a positive semidefinite TTO, theta(0) = 0.

    First attempt: NNLS over the atoms of sigma_1 and sigma_{-1} plus a
    uniform density. If that cone misses A, the support is enlarged with
    further Clark grids and the active atoms are moved continuously
    (Gauss-Newton on angles and square-root weights) until the moment
    residual drops below ``tol``.
    """
    M = A.space
    n = M.degree
    if abs(evaluate(M.theta, 0.0)) > 1e-12:
        raise ValueError("nonneg_quasisymbol expects theta(0) = 0; route through crofoot_map first")
    if np.max(np.abs(A.matrix - A.matrix.conj().T)) > 1e-10 * max(A.norm, 1):
        raise ValueError("operator is not Hermitian")
    if np.linalg.eigvalsh(A.matrix).min() < -1e-10 * max(A.norm, 1):
        raise ValueError("operator is not positive semidefinite")
    target = np.concatenate([A.matrix.ravel().real, A.matrix.ravel().imag])

    def fit(alphas):
        pts = np.concatenate([clark_measure(M.theta, a).points for a in alphas])
        G = _kernel_generators(M, pts)
        mats = np.concatenate([G, np.eye(n, dtype=complex)[None]], axis=0)
        w, res = optimize.nnls(_realify(mats), target, maxiter=50 * mats.shape[0])
        return pts, w, res

    pts, w, res = fit([1.0, -1.0])
    support = "clark(+1,-1)+uniform"
    if res > tol and refine:
        for k in (2, 3, 4, 5):
            alphas = np.exp(1j * np.pi * np.arange(2**k) / 2 ** (k - 1))
            pts, w, res = fit(alphas)
            support = f"clark({2**k} grids)+uniform"
            if res <= tol:
                break
        if res > tol:
            pts, w, res = _refine_atoms(M, A, pts, w)
            support += "+moved atoms"
    mu = BoundaryMeasure(pts[w[:-1] > 0], w[:-1][w[:-1] > 0].astype(complex),
                         np.full(M.grid_size, w[-1], dtype=complex) if w[-1] > 0 else None)
    residual = float(np.linalg.norm(tto_from_measure(M, mu).matrix - A.matrix))
    if residual > tol:
        raise ToleranceError("nonneg_quasisymbol.nnls", f"moment residual {residual:.2e} on support {support}")
    return QuasisymbolFit(mu, residual, support)


def _refine_atoms(M, A, pts, w):
    n = M.degree
    active = np.flatnonzero(w[:-1] > 1e-14 * max(w.max(), 1))
    x0 = np.angle(pts[active])
    s0 = np.sqrt(w[active])
    c0 = np.sqrt(max(w[-1], 0.0))
    target = np.concatenate([A.matrix.ravel().real, A.matrix.ravel().imag])
    m = len(active)

    def resid(v):
        x, s, c = v[:m], v[m:2 * m], v[-1]
        G = _kernel_generators(M, np.exp(1j * x))
        mat = np.einsum("p,pij->ij", s**2, G) + c**2 * np.eye(n)
        r = mat.ravel()
        return np.concatenate([r.real, r.imag]) - target

    sol = optimize.least_squares(resid, np.concatenate([x0, s0, [c0]]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    x, s, c = sol.x[:m], sol.x[m:2 * m], sol.x[-1]
    return np.exp(1j * x), np.append(s**2, c**2), float(np.linalg.norm(sol.fun))
