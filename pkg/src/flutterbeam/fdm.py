"""
Method-of-lines finite differences for the extensible piston-theoretic beam.

Second-order central stencils on a uniform grid with two ghost nodes per side.
The Dirichlet nodes are removed from the unknowns; the remaining system

    w' = v,    v' = -D d4 w - (b1 - b2 N(w)) d2 w - k0 v - beta (v + U d1 w)

is integrated with an implicit Runge-Kutta method (Radau IIA). For a frozen
coefficient b1 - b2 N the spatial operator is linear, so it is assembled once as
two sparse matrices and the Jacobian handed to the integrator freezes (lags) the
coefficient; the right-hand side itself always uses N of the current iterate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .errors import FlutterBeamError, InvalidResolution, MissingBasis
from .modes import ModeBasis, eval_mode
from .params import BeamParams, BoundaryConfig, Config, FreeEnd, IDKind, InitialData, require_valid

log = logging.getLogger(__name__)

MIN_NODES = 32
BLOWUP_AMPLITUDE = 1e12
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-8


class StepSizeUnderflow(FlutterBeamError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class Grid:
    M: int
    L: float

    @property
    def h(self) -> float:
        return self.L / (self.M - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.M)

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.M, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


def build_grid(L: float, M: int) -> Grid:
    if int(M) != M or M < MIN_NODES:
        raise InvalidResolution(f"M must be an integer >= {MIN_NODES}, got {M}")
    if not L > 0:
        raise InvalidResolution("L > 0")
    return Grid(int(M), float(L))


def default_resolution(L: float) -> int:
    return 512 if L > 10 else 128


@dataclass
class BeamState:
    t: float
    w: np.ndarray
    v: np.ndarray


def dirichlet_nodes(config: BoundaryConfig, M: int) -> list:
    if config.kind is Config.CF:
        return [0]
    return [0, M - 1]


def sample_initial(data: InitialData, grid: Grid, config: BoundaryConfig,
                   basis: Optional[ModeBasis] = None) -> BeamState:
    """Nodal initial state; Dirichlet values are forced to zero exactly."""
    x = grid.x
    if data.kind is IDKind.MODE:
        if basis is None:
            raise MissingBasis("mode initial data needs a ModeBasis")
        if basis.config.kind is not config.kind:
            raise MissingBasis("basis configuration does not match")
        if data.n > basis.N:
            raise MissingBasis(f"basis has {basis.N} modes, mode {data.n} requested")
        w = np.asarray(eval_mode(basis, data.n, np.clip(x * basis.L / grid.L, 0, basis.L)), float)
        v = np.zeros_like(w)
    else:
        w, v = data.profiles(config, x / grid.L)
        w, v = np.array(w, float), np.array(v, float)
    for i in dirichlet_nodes(config, grid.M):
        w[i] = 0.0
        v[i] = 0.0
    return BeamState(0.0, w, v)


def norm_wx_sq(w: np.ndarray, grid: Grid) -> float:
    """Discrete integral of w_x^2: h * sum of squared forward differences.

    This is the midpoint rule for the difference quotients on the staggered
    grid; it is the quadrature for which the semi-discrete nonlinear energy is
    an exact invariant of the in-vacuo scheme. Accepts a BeamState or nodal values.
    """
    if isinstance(w, BeamState):
        w = w.w
    d = np.diff(np.asarray(w, float), axis=0) / grid.h
    return float(grid.h * np.sum(d * d, axis=0)) if d.ndim == 1 else grid.h * np.sum(d * d, axis=0)


def norm_wx_sq_trapezoid(w: np.ndarray, grid: Grid) -> float:
    """Trapezoid rule on central differences, one-sided second order at the ends."""
    wx = np.gradient(w, grid.h, edge_order=2)
    return float(np.sum(grid.weights * wx * wx))


def apply_ghosts(config: BoundaryConfig, w: np.ndarray, coeff: float, h: float, D: float = 1.0):
    """Extend nodal values (axis 0) with two ghost nodes on each side.

    Panel ends reflect evenly (clamped, w_x = 0) or oddly (hinged, w_xx = 0).
    The CF free end satisfies w_xx(L) = 0 and D w_xxx(L) + coeff w_x(L) = 0 with the
    5-point third difference and the central first difference; the linear
    variant uses coeff = 0 in that condition.
    """
    w = np.asarray(w, dtype=float)
    M = w.shape[0]
    ext = np.empty((M + 4,) + w.shape[1:])
    ext[2:M + 2] = w
    kind = config.kind
    sign = -1.0 if kind is Config.H else 1.0
    ext[1] = sign * w[1]
    ext[0] = sign * w[2]
    if kind is Config.CF:
        c = coeff if config.cf_free_end is FreeEnd.PHYSICAL_NONLINEAR else 0.0
        wM = 2.0 * w[M - 1] - w[M - 2]
        ext[M + 2] = wM
        ext[M + 3] = 2.0 * wM - 2.0 * w[M - 2] + w[M - 3] - (c * h * h / D) * (wM - w[M - 2])
    else:
        ext[M + 2] = sign * w[M - 2]
        ext[M + 3] = sign * w[M - 3]
    return ext


def _stencils(ext: np.ndarray, h: float):
    """d1, d2, d4 at the M real nodes from the ghost-extended array."""
    c = ext[2:-2]
    lm1, lp1 = ext[1:-3], ext[3:-1]
    lm2, lp2 = ext[:-4], ext[4:]
    d1 = (lp1 - lm1) / (2 * h)
    d2 = (lp1 - 2 * c + lm1) / (h * h)
    d4 = (lm2 - 4 * lm1 + 6 * c - 4 * lp1 + lp2) / h**4
    return d1, d2, d4


def second_derivative(config: BoundaryConfig, w: np.ndarray, grid: Grid, coeff: float = 0.0,
                      D: float = 1.0) -> np.ndarray:
    """Ghost-closed 3-point w_xx at every node."""
    return _stencils(apply_ghosts(config, w, coeff, grid.h, D), grid.h)[1]


def first_derivative(config: BoundaryConfig, w: np.ndarray, grid: Grid, coeff: float = 0.0,
                     D: float = 1.0) -> np.ndarray:
    return _stencils(apply_ghosts(config, w, coeff, grid.h, D), grid.h)[0]


def rhs(state: BeamState, grid: Grid, params: BeamParams, config: BoundaryConfig):
    """(dw, dv) at every node; Dirichlet rows are zero."""
    w, v = np.asarray(state.w, float), np.asarray(state.v, float)
    coeff = params.b1 - params.b2 * norm_wx_sq(w, grid)
    d1, d2, d4 = _stencils(apply_ghosts(config, w, coeff, grid.h, params.D), grid.h)
    dv = -params.D * d4 - params.k0 * v - coeff * d2 - params.beta * (v + params.U * d1)
    dw = v.copy()
    for i in dirichlet_nodes(config, grid.M):
        dw[i] = 0.0
        dv[i] = 0.0
    return dw, dv


class SpatialOperator:
    """Sparse form of the spatial right-hand side on the free nodes.

    acceleration = (A0 + coeff * A1) w - k v, with coeff = b1 - b2 N(w).
    """

    def __init__(self, grid: Grid, params: BeamParams, config: BoundaryConfig):
        self.grid, self.params, self.config = grid, params, config
        M = grid.M
        fixed = set(dirichlet_nodes(config, M))
        self.free = np.array([i for i in range(M) if i not in fixed])
        n = len(self.free)
        probe = np.zeros((M, n))
        probe[self.free, np.arange(n)] = 1.0
        h, D = grid.h, params.D

        def accel(coeff_int, coeff_bc):
            d1, d2, d4 = _stencils(apply_ghosts(config, probe, coeff_bc, h, D), h)
            return (-D * d4 - coeff_int * d2 - params.beta * params.U * d1)[self.free]

        base = accel(0.0, 0.0)
        self.A0 = sparse.csr_matrix(np.where(np.abs(base) > 0, base, 0.0))
        unit = accel(1.0, 1.0) - base
        self.A1 = sparse.csr_matrix(np.where(np.abs(unit) > 0, unit, 0.0))
        self.k = params.k

    def expand(self, w_free: np.ndarray) -> np.ndarray:
        w = np.zeros((self.grid.M,) + w_free.shape[1:])
        w[self.free] = w_free
        return w

    def coefficient(self, w_free: np.ndarray) -> float:
        return self.params.b1 - self.params.b2 * norm_wx_sq(self.expand(w_free), self.grid)

    def ode_rhs(self, t, y):
        n = len(self.free)
        w, v = y[:n], y[n:]
        c = self.coefficient(w) if self.params.b2 != 0 else self.params.b1
        acc = self.A0 @ w + c * (self.A1 @ w) - self.k * v
        return np.concatenate([v, acc])

    def jacobian(self, t, y):
        n = len(self.free)
        c = self.coefficient(y[:n]) if self.params.b2 != 0 else self.params.b1
        return sparse.bmat([[None, sparse.identity(n)],
                            [self.A0 + c * self.A1, -self.k * sparse.identity(n)]], format="csc")


def observable(config: BoundaryConfig, w: np.ndarray, grid: Grid):
    """Midpoint displacement for panels (cubic interpolation if L/2 is not a node), tip for CF."""
    if config.kind is Config.CF:
        return w[grid.M - 1]
    s = 0.5 * (grid.M - 1)
    i = int(math.floor(s))
    if s == i:
        return w[i]
    idx = np.array([i - 1, i, i + 1, i + 2])
    xs = idx.astype(float)
    wts = []
    for j, xj in enumerate(xs):
        others = np.delete(xs, j)
        wts.append(np.prod((s - others) / (xj - others)))
    return np.tensordot(np.array(wts), w[idx], axes=(0, 0))


@dataclass
class Trajectory:
    config: BoundaryConfig
    params: BeamParams
    grid: Grid
    t: np.ndarray
    w: np.ndarray  # (samples, M)
    v: np.ndarray
    diverged: bool = False
    message: str = ""
    nfev: int = 0
    _energies: Optional[object] = field(default=None, repr=False)

    @property
    def observable(self) -> np.ndarray:
        return np.asarray(observable(self.config, self.w.T, self.grid))

    def state(self, i: int) -> BeamState:
        return BeamState(float(self.t[i]), self.w[i], self.v[i])

    @property
    def final(self) -> BeamState:
        return self.state(len(self.t) - 1)

    def energies(self):
        """Energy trace (cached); see diagnostics.energy_trace."""
        if self._energies is None:
            from .diagnostics import energy_trace
            self._energies = energy_trace(self)
        return self._energies


def integrate(state0: BeamState, params: BeamParams, config: BoundaryConfig, grid: Grid, T: float,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL, sample_dt: float = 0.01,
              method: str = "Radau", blowup: float = BLOWUP_AMPLITUDE,
              raise_on_failure: bool = False) -> Trajectory:
    """Integrate from ``state0`` to time T, sampling every ``sample_dt``.

    Unstable runs stop early once max|w| exceeds ``blowup`` or the step size
    underflows; the partial trajectory is returned with ``diverged=True``.
    """
    require_valid(params, config)
    if abs(grid.L - params.L) > 1e-12 * params.L:
        raise ValueError("grid length differs from params.L")
    op = SpatialOperator(grid, params, config)
    y0 = np.concatenate([np.asarray(state0.w, float)[op.free], np.asarray(state0.v, float)[op.free]])
    n = len(op.free)
    t0 = float(state0.t)
    nsamp = int(math.floor((T - t0) / sample_dt + 1e-9)) + 1
    t_eval = t0 + sample_dt * np.arange(nsamp)

    def too_big(t, y):
        return np.max(np.abs(y[:n])) - blowup
    too_big.terminal = True

    kwargs = dict(method=method, t_eval=t_eval, rtol=rtol, atol=atol, events=too_big)
    if method in ("Radau", "BDF", "LSODA"):
        kwargs["jac"] = op.jacobian
    sol = solve_ivp(op.ode_rhs, (t0, t_eval[-1]), y0, **kwargs)
    diverged = sol.status == 1 or sol.status == -1
    msg = ""
    W = op.expand(sol.y[:n]).T
    V = op.expand(sol.y[n:]).T
    if sol.status == 1:
        msg = f"blow-up: max|w| > {blowup:g} at t={sol.t_events[0][0]:.6g}"
    elif sol.status == -1:
        last = np.max(np.abs(W[-1])) if len(W) else float("nan")
        msg = f"integration failed ({sol.message}); last max|w|={last:.3e}"
    traj = Trajectory(config, params, grid, sol.t, W, V, diverged, msg, sol.nfev)
    if sol.status == -1:
        log.warning(msg)
        if raise_on_failure:
            raise StepSizeUnderflow(msg, traj)
    return traj


def simulate(config: BoundaryConfig, params: BeamParams, initial: InitialData, T: float,
             M: Optional[int] = None, basis: Optional[ModeBasis] = None, **kwargs) -> Trajectory:
    """Convenience wrapper: grid, initial sampling and integration in one call."""
    from .modes import build_mode_basis

    grid = build_grid(params.L, M or default_resolution(params.L))
    if initial.kind is IDKind.MODE and basis is None:
        basis = build_mode_basis(config, params, max(initial.n, 1))
    state0 = sample_initial(initial, grid, config, basis)
    return integrate(state0, params, config, grid, T, **kwargs)
