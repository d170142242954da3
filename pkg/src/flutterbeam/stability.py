"""
Modal flutter analysis.

Substituting w = e^{lambda t} sum_j a_j s_j(x) into the linear piston-theoretic beam
and projecting onto the in-vacuo modes gives the quadratic eigenproblem

    (lambda^2 I + k lambda I + K) a = 0,   K_mm = D kappa_m^4,  K_mn = beta U (s_n', s_m).

With the harmonic ansatz e^{-i omega t} this is the determinant condition
det A(omega) = 0, lambda = -i omega, so Im(omega) = Re(lambda) is the growth rate.
The problem is solved through the companion linearization [[0, I], [-K, -k I]].
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, EigenSolveFailure, FlutterBeamError, NoInstabilityInRange
from .modes import ModeBasis, OverlapMatrix, build_mode_basis, overlap_matrix
from .params import BeamParams, BoundaryConfig, require_valid

log = logging.getLogger(__name__)

DEFAULT_N = 6
RELATIVE_GROWTH_TOL = 1e-6
SCAN_STEPS = 64


@dataclass(frozen=True)
class QepProblem:
    N: int
    k: float
    K: np.ndarray
    omega1: float  # lowest in-vacuo frequency, sets the growth tolerance scale


@dataclass(frozen=True)
class ModalSpectrum:
    lambdas: np.ndarray
    vectors: np.ndarray
    omega1: float

    @property
    def omegas(self) -> np.ndarray:
        """Harmonic-ansatz frequencies, omega = i lambda."""
        return 1j * self.lambdas

    @property
    def max_growth(self) -> float:
        return float(np.max(self.lambdas.real))

    @property
    def dominant_frequency(self) -> float:
        return float(abs(self.lambdas[np.argmax(self.lambdas.real)].imag))


class Verdict(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    growth: float
    frequency: float

    @property
    def unstable(self) -> bool:
        return self.verdict is Verdict.UNSTABLE


@dataclass(frozen=True)
class UcritResult:
    u_crit: float
    bracket: tuple
    spectrum_at_crit: ModalSpectrum
    omega_crit: float


def assemble_qep(basis: ModeBasis, overlaps: OverlapMatrix, params: BeamParams,
                 keep_diagonal: bool = False) -> QepProblem:
    """Stiffness matrix of the projected problem.

    ``keep_diagonal`` adds the Galerkin self-coupling beta U (s_m', s_m), which is
    nonzero only for CF; by default the diagonal holds D kappa_m^4 alone.
    """
    N = basis.N
    S = np.asarray(overlaps.S)
    if S.shape != (N, N):
        raise DimensionMismatch(f"overlap matrix {S.shape} does not match basis size {N}")
    if abs(basis.L - params.L) > 1e-12 * params.L or abs(basis.D - params.D) > 1e-12 * params.D:
        raise DimensionMismatch("basis built for different L or D than params")
    kap4 = np.array([e.kappa**4 for e in basis.entries])
    flow = params.beta * params.U * S.T
    if not keep_diagonal:
        flow = flow - np.diag(np.diag(flow))
    K = np.diag(params.D * kap4) + flow
    return QepProblem(N=N, k=params.k, K=K, omega1=basis.entries[0].omega)


def solve_qep(problem: QepProblem) -> ModalSpectrum:
    N, K, k = problem.N, problem.K, problem.k
    A = np.zeros((2 * N, 2 * N))
    A[:N, N:] = np.eye(N)
    A[N:, :N] = -K
    A[N:, N:] = -k * np.eye(N)
    try:
        lam, V = linalg.eig(A)
    except linalg.LinAlgError as exc:
        raise EigenSolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigenSolveFailure("non-finite eigenvalues")
    vecs = V[:N, :]
    norms = np.linalg.norm(vecs, axis=0)
    vecs = vecs / np.where(norms > 0, norms, 1.0)
    kn = max(np.linalg.norm(K, 2), k * k, 1e-300)
    for j, l in enumerate(lam):
        r = (l * l + k * l) * vecs[:, j] + K @ vecs[:, j]
        if np.linalg.norm(r) > 1e-8 * kn:
            raise EigenSolveFailure(f"eigenpair {j} residual {np.linalg.norm(r):.3e}")
    order = np.lexsort((lam.imag, -lam.real))
    return ModalSpectrum(lam[order], vecs[:, order], problem.omega1)


def default_tol(spectrum: ModalSpectrum) -> float:
    return RELATIVE_GROWTH_TOL * spectrum.omega1


def classify(spectrum: ModalSpectrum, tol: Optional[float] = None) -> StabilityVerdict:
    tol = default_tol(spectrum) if tol is None else tol
    g = spectrum.max_growth
    v = Verdict.UNSTABLE if g > tol else Verdict.STABLE
    return StabilityVerdict(v, g, spectrum.dominant_frequency)


class ModalModel:
    """Caches the basis and overlaps for one configuration, L, D and truncation."""

    def __init__(self, config: BoundaryConfig, params: BeamParams, N: int = DEFAULT_N,
                 keep_diagonal: bool = False):
        self.config = config
        self.N = N
        self.keep_diagonal = keep_diagonal
        self.basis = build_mode_basis(config, params, N)
        self.overlaps = overlap_matrix(self.basis)

    def spectrum(self, params: BeamParams) -> ModalSpectrum:
        require_valid(params, self.config)
        return solve_qep(assemble_qep(self.basis, self.overlaps, params, self.keep_diagonal))


def modal_spectrum(config: BoundaryConfig, params: BeamParams, N: int = DEFAULT_N) -> ModalSpectrum:
    return ModalModel(config, params, N).spectrum(params)


def find_ucrit(config: BoundaryConfig, params_base: BeamParams, u_range: Sequence[float],
               tol: float = 1e-4, N: int = DEFAULT_N, model: Optional[ModalModel] = None,
               growth_tol: Optional[float] = None) -> UcritResult:
    """Lowest flow speed in ``u_range`` at which the modal spectrum turns unstable.

    A uniform 64-step scan locates the first stable-to-unstable transition, which
    is then bisected to width ``tol``. Growth rates within ``growth_tol`` of zero
    (default 1e-6 omega_1) count as stable, so undamped problems with purely
    imaginary spectra are handled.
    """
    u_lo, u_hi = float(u_range[0]), float(u_range[1])
    if not u_hi > u_lo:
        raise ValueError("u_range must be increasing")
    model = model or ModalModel(config, params_base, N)

    def excess(u):
        sp = model.spectrum(params_base.with_(U=u))
        gt = default_tol(sp) if growth_tol is None else growth_tol
        return sp.max_growth - gt, sp

    g_lo, _ = excess(u_lo)
    if g_lo > 0:
        raise ValueError(f"configuration already unstable at U={u_lo}")
    step = (u_hi - u_lo) / SCAN_STEPS
    a = u_lo
    b = None
    for i in range(1, SCAN_STEPS + 1):
        u = u_lo + i * step if i < SCAN_STEPS else u_hi
        if excess(u)[0] > 0:
            b = u
            break
        a = u
    if b is None:
        raise NoInstabilityInRange(f"no instability for U in [{u_lo}, {u_hi}]")
    while b - a > tol:
        m = 0.5 * (a + b)
        if excess(m)[0] > 0:
            b = m
        else:
            a = m
    u_c = 0.5 * (a + b)
    sp = model.spectrum(params_base.with_(U=b))
    return UcritResult(u_crit=u_c, bracket=(a, b), spectrum_at_crit=sp,
                       omega_crit=sp.dominant_frequency)


SWEEP_AXES = ("L", "beta", "k0")


@dataclass
class SweepPoint:
    value: float
    result: Optional[UcritResult] = None
    error: Optional[str] = None

    @property
    def u_crit(self) -> Optional[float]:
        return None if self.result is None else self.result.u_crit


@dataclass
class SweepCurve:
    config: BoundaryConfig
    axis: str
    points: list = field(default_factory=list)

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def u_crits(self) -> np.ndarray:
        """U_crit per point, NaN where no instability was found."""
        return np.array([np.nan if p.u_crit is None else p.u_crit for p in self.points])


def _sweep_point(config, params_base, axis, value, u_range, tol, N, shared_model):
    try:
        params = params_base.with_(**{axis: float(value)})
        model = shared_model if axis != "L" else None
        return SweepPoint(float(value), find_ucrit(config, params, u_range, tol, N, model=model))
    except (FlutterBeamError, ValueError) as exc:
        return SweepPoint(float(value), None, f"{type(exc).__name__}: {exc}")


def sweep_ucrit(config: BoundaryConfig, params_base: BeamParams, axis: str, values: Sequence[float],
                u_range: Sequence[float], tol: float = 1e-4, N: int = DEFAULT_N,
                parallelism: int = 1) -> SweepCurve:
    """U_crit along one parameter axis; failed points are kept with their error."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    shared = ModalModel(config, params_base, N) if axis != "L" else None
    args = [(config, params_base, axis, v, u_range, tol, N, shared) for v in values]
    if parallelism > 1:
        with ThreadPoolExecutor(parallelism) as pool:
            pts = list(pool.map(lambda a: _sweep_point(*a), args))
    else:
        pts = [_sweep_point(*a) for a in args]
    return SweepCurve(config, axis, pts)
