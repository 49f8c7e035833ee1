"""Band-limited functions on the line: cardinal series, majorants and four-term factorizations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ToleranceError

LINE_POINTS = 2**16
FLOOR = 1e-14


def _sinc_kernel(x):
    return np.sinc(x)


def _fejer_kernel(x):
    # sin^2(pi x / 2) / x^2, which is >= 1 on [0, 1] and integrates to pi^2 / 2
    return (np.pi / 2) ** 2 * np.sinc(x / 2) ** 2


KERNELS = {"sinc": _sinc_kernel, "fejer": _fejer_kernel}


@dataclass(frozen=True, eq=False)
class PWFunction:
    """f(t) = sum_j coef[j] K(t - (start + j)) with K the sinc or Fejer kernel.

    Both kernels have spectrum in [-pi, pi]; with the sinc kernel coef holds
    the integer samples of f. ``window`` is the half-width N of the region of
    interest [-N, N].
    """

    coef: np.ndarray
    start: int
    window: int
    kernel: str = "sinc"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")

    @property
    def nodes(self):
        return self.start + np.arange(len(self.coef))

    def __call__(self, t, chunk=2048):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        nodes = self.nodes
        out = np.empty(flat.shape, dtype=np.result_type(self.coef, float))
        for i in range(0, len(flat), chunk):
            out[i:i + chunk] = self._eval(flat[i:i + chunk], nodes)
        return out.reshape(t.shape)

    def _eval(self, t, nodes):
        # the kernels factor as (trig in t) x (rational in t - n), which avoids
        # evaluating sin on the full (points x nodes) array
        D = t[:, None] - nodes[None, :]
        close = np.abs(D) < 1e-6
        D[close] = 1.0
        if self.kernel == "sinc":
            sign = np.where(nodes % 2 == 0, 1.0, -1.0)
            val = np.sin(np.pi * t) / np.pi * ((1 / D) @ (sign * self.coef))
        else:
            even = nodes % 2 == 0
            R = 1 / D**2
            val = (np.sin(np.pi * t / 2) ** 2 * (R[:, even] @ self.coef[even])
                   + np.cos(np.pi * t / 2) ** 2 * (R[:, ~even] @ self.coef[~even]))
        rows = np.flatnonzero(close.any(axis=1))
        if rows.size:
            K = KERNELS[self.kernel]
            val[rows] = K(t[rows, None] - nodes[None, :]) @ self.coef
        return val

    def tail_energy(self) -> float:
        """Share of coefficient energy carried by nodes outside [-window, window]."""
        e = np.abs(self.coef) ** 2
        total = e.sum()
        if total == 0:
            return 0.0
        outside = (self.nodes < -self.window) | (self.nodes > self.window)
        return float(e[outside].sum() / total)

    def is_zero(self) -> bool:
        return not np.any(self.coef)

    def to_dict(self):
        c = np.asarray(self.coef)
        return {"kernel": self.kernel, "start": int(self.start), "window": int(self.window),
                "coef": [[float(v.real), float(v.imag)] for v in c.astype(complex)]}


def random_pw(rng, window: int = 32) -> PWFunction:
    """Random real f in PW^1: integer samples on [-N, N] with alternating sum zero.

    The alternating-sum condition cancels the 1/t tail of the cardinal series,
    so f is integrable.
    """
    j = np.arange(-window, window + 1)
    c = rng.normal(size=j.size)
    s = (-1.0) ** j
    c -= s * (s @ c) / j.size
    return PWFunction(c, -window, window, "sinc")


def line_grid(window: int, points: int = LINE_POINTS):
    L = 4 * window
    return np.linspace(-L, L, points, endpoint=False)


@dataclass
class PWMajorant:
    g: PWFunction
    arc_sup: np.ndarray
    ratio: float                 # ||g||_1 / ||f||_1
    check_slack: float           # min over check points of g - |f|


def pw_majorant(f: PWFunction, per_unit: int = 64) -> PWMajorant:
    """g = sum_n c_n sin^2(pi(t-n)/2)/(t-n)^2 with c_n the max of |f| on [n, n+1], n in [-4N, 4N)."""
    N = f.window
    L = 4 * N
    n = np.arange(-L, L)
    if f.is_zero():
        return PWMajorant(PWFunction(np.zeros(n.size), -L, N, "fejer"), np.zeros(n.size), 0.0, 0.0)
    for oversample in (1, 4):
        m = per_unit * oversample
        s = np.linspace(0, 1, m + 1)
        pts = n[:, None] + s[None, :]
        c = np.abs(np.real(f(pts))).max(axis=1)
        g = PWFunction(c, -L, N, "fejer")
        check = np.linspace(-N, N, 2 * N * 16 + 1)   # 16 points per unit
        slack = float(np.min(g(check) - np.abs(np.real(f(check)))))
        if slack >= -1e-9 * c.max():
            break
    else:
        raise ToleranceError("pw_majorant.majorization", f"g - |f| reaches {slack:.2e}")
    t = line_grid(N)
    dt = t[1] - t[0]
    f_l1 = float(np.sum(np.abs(np.real(f(t)))) * dt)
    g_l1 = float(c.sum() * np.pi**2 / 2)
    return PWMajorant(g, c, g_l1 / f_l1, slack)


def _line_outer_root(F, t):
    """Outer function in the upper half-plane with |O|^2 = F on the line grid, times e^{-i pi t/2}."""
    floor = FLOOR * F.max()
    floored = F < floor
    if floored.mean() > 0.01:
        raise ToleranceError("pw_factorize.flooring", "more than 1% of the line grid floored")
    c = np.fft.fft(0.5 * np.log(np.maximum(F, floor)))
    size = len(F)
    c[1:size // 2] *= 2
    c[size // 2:] = 0
    return np.exp(np.fft.ifft(c) - 0.5j * np.pi * t)


def band_leakage(G, t, half_band=np.pi / 2) -> float:
    """Share of the discrete spectral energy of G outside [-half_band, half_band]."""
    xi = 2 * np.pi * np.fft.fftfreq(len(t), d=t[1] - t[0])
    S = np.abs(np.fft.fft(G)) ** 2
    return float(S[np.abs(xi) > half_band * (1 + 1e-12)].sum() / S.sum())


@dataclass
class PWFactorization:
    grid: np.ndarray
    pairs: list                  # (x, y) samples on the line grid, both in PW^2 with band pi/2
    constant: float              # sum ||x_k||_2 ||y_k||_2
    residual_rel: float          # || f - sum x_k y_k ||_1 / ||f||_1 over [-N, N]
    f_l1: float
    majorant_ratios: list = field(default_factory=list)
    leakage: float = 0.0         # worst spectral energy share of a factor outside [-pi/2, pi/2]

    @property
    def ratio(self) -> float:
        return self.constant / self.f_l1 if self.f_l1 else 0.0


def pw_factorize(f: PWFunction, tol: float = 1e-4) -> PWFactorization:
    """f = sum_{k<=4} x_k y_k with x_k, y_k band-limited to [-pi/2, pi/2]."""
    N = f.window
    t = line_grid(N)
    dt = t[1] - t[0]
    if f.is_zero():
        return PWFactorization(t, [], 0.0, 0.0, 0.0)
    vals = f(t).astype(complex)
    inside = np.abs(t) <= N
    f_l1 = float(np.sum(np.abs(vals[inside])) * dt)

    pieces, ratios = [], []
    for signs, part in (((1, -1), vals.real), ((1j, -1j), vals.imag)):
        if np.max(np.abs(part)) <= 1e-15 * np.max(np.abs(vals)):
            continue
        if part.min() >= -1e-12 * np.abs(part).max():
            pieces.append((signs[0], part))
        elif part.max() <= 1e-12 * np.abs(part).max():
            pieces.append((signs[1], -part))
        else:
            coef = np.real(f.coef) if signs[0] == 1 else np.imag(f.coef)
            maj = pw_majorant(PWFunction(coef, f.start, N, f.kernel))
            ratios.append(maj.ratio)
            g = maj.g(t)
            pieces.append((signs[0], 0.5 * (g + part)))
            pieces.append((signs[1], 0.5 * (g - part)))

    pairs = []
    leak = 0.0
    for zeta, u in pieces:
        G = _line_outer_root(np.maximum(u, 0), t)
        leak = max(leak, band_leakage(G, t))
        pairs.append((zeta * G, np.conj(G)))
    recon = sum(x * y for x, y in pairs)
    residual = float(np.sum(np.abs(vals - recon)[inside]) * dt / f_l1)
    if residual > tol:
        raise ToleranceError("pw_factorize.residual", f"relative L1 residual {residual:.2e} on the window")
    constant = float(sum(np.sqrt(np.sum(np.abs(x) ** 2) * dt * np.sum(np.abs(y) ** 2) * dt)
                         for x, y in pairs))
    return PWFactorization(t, pairs, constant, residual, f_l1, ratios, leak)
