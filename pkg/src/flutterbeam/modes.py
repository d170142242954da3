"""
In-vacuo Euler-Bernoulli modes for the C, H and CF configurations.

Clamped shapes (C and CF) are written as

    s_n(x) = c_n [ (cos kx - cosh kx) - C_n (sin kx - sinh kx) ]

with C_n > 0 (C_2 ~ 1.0185 for the cantilever), and evaluated in the equivalent form

    c_n [ cos kx - C_n sin kx - (1 - C_n)/2 e^{kx} - (1 + C_n)/2 e^{-kx} ]

where 1 - C_n is computed from a cancellation-free expression. Hinged shapes are
c_n sin(n pi x / L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import BracketingFailure, NormalizationFailure
from .params import BeamParams, BoundaryConfig, Config

MAX_CLAMPED_MODES = 10
DEFAULT_QUADRATURE = 4096


def characteristic_residual(config: BoundaryConfig, z: float, scaled: bool = True) -> float:
    """Residual of the characteristic equation at z = kappa*L.

    By default the equation is divided by cosh z (see ``stable_residual``), which
    keeps the value O(1) near roots at large z. ``scaled=False`` gives the raw
    products sin z sinh z, cos z cosh z - 1 and cos z cosh z + 1.
    """
    if z < 0:
        raise ValueError("z >= 0")
    if scaled:
        return stable_residual(config, z)
    kind = _kind(config)
    if kind is Config.H:
        return math.sin(z) * math.sinh(z)
    if kind is Config.C:
        return math.cos(z) * math.cosh(z) - 1.0
    return math.cos(z) * math.cosh(z) + 1.0


def stable_residual(config: BoundaryConfig, z: float) -> float:
    """Characteristic residual divided by cosh(z): cos z -/+ sech z. Safe for large z."""
    kind = _kind(config)
    if kind is Config.H:
        return math.sin(z)
    sech = 1.0 / math.cosh(z) if z < 700 else 0.0
    return math.cos(z) - sech if kind is Config.C else math.cos(z) + sech


def _stable_residual_dz(kind: Config, z: float) -> float:
    sech = 1.0 / math.cosh(z) if z < 700 else 0.0
    dsech = -sech * math.tanh(z)
    if kind is Config.H:
        return math.cos(z)
    return -math.sin(z) - dsech if kind is Config.C else -math.sin(z) + dsech


def solve_characteristic_roots(config: BoundaryConfig, N: int) -> list:
    """First N positive roots kappa_n*L of the characteristic equation.

    Roots of cos z = sech z (C) lie in (n pi, (n+1) pi); roots of
    cos z = -sech z (CF) lie in ((n-1) pi, n pi). Each window is bisected and
    the result polished with one Newton step.
    """
    kind = _kind(config)
    if N < 1:
        raise ValueError("N >= 1")
    if kind is Config.H:
        return [n * math.pi for n in range(1, N + 1)]
    if N > MAX_CLAMPED_MODES:
        raise ValueError(f"N <= {MAX_CLAMPED_MODES} for clamped configurations")
    offset = 0 if kind is Config.C else -1
    roots = []
    for n in range(1, N + 1):
        lo, hi = (n + offset) * math.pi, (n + 1 + offset) * math.pi
        roots.append(_bisect_root(kind, lo, hi))
    return roots


def _bisect_root(kind: Config, lo: float, hi: float) -> float:
    f = lambda z: _stable_residual_kind(kind, z)
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if flo * fhi > 0:
        raise BracketingFailure(f"no sign change of the characteristic equation in [{lo}, {hi}]")
    a, b, fa = lo, hi, flo
    while b - a > 1e-13 * max(1.0, b):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            a = b = m
            break
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    z = 0.5 * (a + b)
    dz = _stable_residual_dz(kind, z)
    if dz != 0.0:
        znew = z - f(z) / dz
        if lo < znew < hi and abs(f(znew)) <= abs(f(z)):
            z = znew
    return z


def _stable_residual_kind(kind: Config, z: float) -> float:
    return stable_residual(BoundaryConfig(kind), z)


def _kind(config) -> Config:
    return config.kind if isinstance(config, BoundaryConfig) else Config(config)


@dataclass(frozen=True)
class ModeEntry:
    n: int
    kappa_L: float
    kappa: float
    Cn: float
    cn: float
    omega: float
    # 1 - Cn from the cancellation-free formula (clamped shapes only)
    one_minus_Cn: float = 0.0


@dataclass(frozen=True)
class ModeBasis:
    config: BoundaryConfig
    L: float
    D: float
    entries: tuple

    @property
    def N(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __call__(self, n, x, deriv=0):
        return eval_mode(self, n, x, deriv)


def _shape(kind: Config, z: float, Cn: float, omc: float, L: float, x, deriv: int):
    """Unnormalized shape (or derivative) at x, with kappa = z/L."""
    kappa = z / L
    th = kappa * np.asarray(x, dtype=float)
    phase = deriv * math.pi / 2
    if kind is Config.H:
        return kappa**deriv * np.sin(th + phase)
    a = 0.5 * omc
    b = 0.5 * (1.0 + Cn)
    val = (np.cos(th + phase) - Cn * np.sin(th + phase)
           - a * np.exp(th) - b * (-1) ** deriv * np.exp(-th))
    return kappa**deriv * val


def _clamped_coefficients(kind: Config, z: float):
    s, c = math.sin(z), math.cos(z)
    e = math.exp(-z)
    if kind is Config.C:
        den = s - math.sinh(z)
        Cn = (c - math.cosh(z)) / den
        omc = (s - c + e) / den
    else:
        den = s + math.sinh(z)
        Cn = (c + math.cosh(z)) / den
        omc = (s - c - e) / den
    return Cn, omc


def build_mode_basis(config: BoundaryConfig, params: BeamParams, N: int,
                     quadrature_points: int = DEFAULT_QUADRATURE) -> ModeBasis:
    """In-vacuo eigenpairs with L2(0, L)-normalized shapes, c_n > 0."""
    kind = _kind(config)
    L, D = float(params.L), float(params.D)
    roots = solve_characteristic_roots(config, N)
    x = np.linspace(0.0, L, quadrature_points + 1)
    entries = []
    for n, z in enumerate(roots, start=1):
        if kind is Config.H:
            Cn, omc = 0.0, 0.0
        else:
            Cn, omc = _clamped_coefficients(kind, z)
        sq = simpson(_shape(kind, z, Cn, omc, L, x, 0) ** 2, x=x)
        if not sq > 1e-300:
            raise NormalizationFailure(f"mode {n} has vanishing L2 norm")
        kappa = z / L
        entries.append(ModeEntry(n=n, kappa_L=z, kappa=kappa, Cn=Cn, cn=1.0 / math.sqrt(sq),
                                 omega=math.sqrt(D) * kappa**2, one_minus_Cn=omc))
    return ModeBasis(BoundaryConfig(kind, config.cf_free_end) if isinstance(config, BoundaryConfig)
                     else BoundaryConfig(kind), L, D, tuple(entries))


def eval_mode(basis: ModeBasis, n: int, x, deriv: int = 0):
    """s_n or one of its derivatives (deriv in 0..4) at x in [0, L]."""
    if not 1 <= n <= basis.N:
        raise IndexError(f"mode index {n} outside 1..{basis.N}")
    if deriv not in (0, 1, 2, 3, 4):
        raise ValueError("deriv in 0..4")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < -1e-12 * basis.L) or np.any(xa > basis.L * (1 + 1e-12)):
        raise ValueError("x outside [0, L]")
    e = basis.entries[n - 1]
    out = e.cn * _shape(basis.config.kind, e.kappa_L, e.Cn, e.one_minus_Cn, basis.L, xa, deriv)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class OverlapMatrix:
    """S[m, n] = (d/dx s_{m+1}, s_{n+1}) over (0, L) (zero-based storage)."""

    S: np.ndarray
    boundary_values: np.ndarray  # s_n(L); all zero for the panels
    error_estimate: float = 0.0


def hinged_overlap_closed_form(N: int, L: float) -> np.ndarray:
    """(2mn/L)(1 - (-1)^(m+n))/(n^2 - m^2) off the diagonal, zero on it."""
    S = np.zeros((N, N))
    for m in range(1, N + 1):
        for n in range(1, N + 1):
            if m != n:
                S[m - 1, n - 1] = 2.0 * m * n / L * (1 - (-1) ** (m + n)) / (n * n - m * m)
    return S


def sample_modes(basis: ModeBasis, x, deriv: int = 0) -> np.ndarray:
    """Array of shape (N, len(x))."""
    return np.array([eval_mode(basis, n, x, deriv) for n in range(1, basis.N + 1)])


def quadrature_overlap(basis: ModeBasis, quadrature_points: int = DEFAULT_QUADRATURE):
    """Composite Simpson overlap matrix and a Richardson error estimate."""
    def simpson_S(npts):
        x = np.linspace(0.0, basis.L, npts + 1)
        ds = sample_modes(basis, x, 1)
        s = sample_modes(basis, x, 0)
        return simpson(ds[:, None, :] * s[None, :, :], x=x, axis=-1)

    S = simpson_S(quadrature_points)
    coarse = simpson_S(quadrature_points // 2)
    return S, float(np.max(np.abs(S - coarse)) / 15.0)


def overlap_matrix(basis: ModeBasis, quadrature_points: int = DEFAULT_QUADRATURE) -> OverlapMatrix:
    if quadrature_points < 512:
        raise ValueError("quadrature_points >= 512")
    if quadrature_points % 2:
        quadrature_points += 1
    kind = basis.config.kind
    if kind is Config.H:
        return OverlapMatrix(hinged_overlap_closed_form(basis.N, basis.L), np.zeros(basis.N), 0.0)
    S, err = quadrature_overlap(basis, quadrature_points)
    if kind is Config.C:
        bv = np.zeros(basis.N)
    else:
        bv = np.array([eval_mode(basis, n, basis.L) for n in range(1, basis.N + 1)])
    return OverlapMatrix(S, bv, err)


def gram_matrix(basis: ModeBasis, quadrature_points: int = DEFAULT_QUADRATURE) -> np.ndarray:
    x = np.linspace(0.0, basis.L, quadrature_points + 1)
    s = sample_modes(basis, x)
    return simpson(s[:, None, :] * s[None, :, :], x=x, axis=-1)
