"""
Energies and regime descriptors for simulated trajectories.

Discrete norms use trapezoid weights with the ghost-closed 3-point second
difference, and the forward-difference sum for ||w_x||^2 (fdm.norm_wx_sq). With
these choices the semi-discrete linear energy identity holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import InsufficientPeaks, NonpositiveEnergy
from .fdm import BeamState, Grid, Trajectory, first_derivative, norm_wx_sq, second_derivative
from .params import BeamParams, BoundaryConfig

LCO_PEAKS = 10
LCO_THRESHOLD = 0.02
LCO_MIN_PEAKS = 4


@dataclass(frozen=True)
class EnergySample:
    t: float
    E: float
    Pi: float
    scriptE: float
    Ehat: float


@dataclass(frozen=True)
class EnergyTrace:
    t: np.ndarray
    E: np.ndarray
    Pi: np.ndarray
    scriptE: np.ndarray
    Ehat: np.ndarray

    def __len__(self):
        return len(self.t)

    def samples(self) -> list:
        return [EnergySample(*map(float, row))
                for row in zip(self.t, self.E, self.Pi, self.scriptE, self.Ehat)]

    def plateau(self, fraction: float = 0.25, which: str = "scriptE") -> float:
        """Mean of an energy over the last ``fraction`` of the record."""
        vals = getattr(self, which)
        start = int(len(vals) * (1 - fraction))
        return float(np.mean(vals[start:]))


def _energy_arrays(w, v, grid: Grid, params: BeamParams, config: BoundaryConfig):
    wt = grid.weights
    g = second_derivative(config, w, grid, D=params.D)
    if g.ndim == 1:
        E = 0.5 * (params.D * np.sum(wt * g * g) + np.sum(wt * v * v))
    else:
        E = 0.5 * (params.D * np.sum(wt[:, None] * g * g, axis=0) + np.sum(wt[:, None] * v * v, axis=0))
    N = norm_wx_sq(w, grid)
    Pi = 0.25 * (params.b2 * N * N - 2.0 * params.b1 * N)
    return E, Pi, E + Pi, E + 0.25 * params.b2 * N * N


def energies(state: BeamState, grid: Grid, params: BeamParams, config: BoundaryConfig) -> EnergySample:
    E, Pi, sE, Eh = _energy_arrays(np.asarray(state.w, float), np.asarray(state.v, float),
                                   grid, params, config)
    return EnergySample(float(state.t), float(E), float(Pi), float(sE), float(Eh))


def energy_trace(traj: Trajectory) -> EnergyTrace:
    E, Pi, sE, Eh = _energy_arrays(traj.w.T, traj.v.T, traj.grid, traj.params, traj.config)
    return EnergyTrace(np.asarray(traj.t), *(np.atleast_1d(a) for a in (E, Pi, sE, Eh)))


def energy_identity_residual(traj: Trajectory) -> np.ndarray:
    """E(t) + k int ||w_t||^2 + beta U int (w_x, w_t) - E(0) along a linear run."""
    p, grid = traj.params, traj.grid
    wt = grid.weights[:, None]
    W, V = traj.w.T, traj.v.T
    wx = first_derivative(traj.config, W, grid, D=p.D)
    diss = np.sum(wt * V * V, axis=0)
    flux = np.sum(wt * wx * V, axis=0)
    E = traj.energies().E
    return (E + p.k * cumulative_trapezoid(diss, traj.t, initial=0.0)
            + p.beta * p.U * cumulative_trapezoid(flux, traj.t, initial=0.0) - E[0])


def fit_growth_rate(trace, window: Optional[Sequence[float]] = None) -> float:
    """Amplitude growth rate: half the least-squares slope of log E over ``window``."""
    if isinstance(trace, EnergyTrace):
        t, E = trace.t, trace.E
    else:
        t = np.array([s.t for s in trace])
        E = np.array([s.E for s in trace])
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, E = t[sel], E[sel]
    if len(t) < 16:
        raise ValueError(f"need at least 16 samples in the window, got {len(t)}")
    if np.any(~(E > 0)):
        raise NonpositiveEnergy("energy must be positive throughout the fit window")
    slope = np.polyfit(t, np.log(E), 1)[0]
    return float(slope / 2.0)


@dataclass(frozen=True)
class LcoReport:
    converged: bool
    amplitude: float
    period: float
    relative_spread: float
    n_peaks: int
    conclusive: bool


def find_peaks(t: np.ndarray, y: np.ndarray):
    """Local maxima from sign changes of the discrete slope, refined by a parabola
    through the three samples around each maximum. Returns (times, values)."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    dy = np.diff(y)
    idx = np.where((dy[:-1] > 0) & (dy[1:] <= 0))[0] + 1
    y0, y1, y2 = y[idx - 1], y[idx], y[idx + 1]
    denom = y0 - 2 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(denom != 0, 0.5 * (y0 - y2) / denom, 0.0)
    off = np.clip(off, -0.5, 0.5)
    dt = t[idx + 1] - t[idx]
    tp = t[idx] + off * dt
    yp = y1 - 0.25 * (y0 - y2) * off
    return tp, yp


def detect_lco(t, y, transient_cut: float = 0.5, n_peaks: int = LCO_PEAKS,
               threshold: float = LCO_THRESHOLD) -> LcoReport:
    """Amplitude/period statistics of the last ``n_peaks`` maxima after the transient.

    ``transient_cut`` is the discarded fraction of the time span. Converged means
    both amplitude and period vary by less than ``threshold`` (relative std).
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    t_cut = t[0] + transient_cut * (t[-1] - t[0])
    sel = t >= t_cut
    tp, yp = find_peaks(t[sel], y[sel])
    if len(tp) < LCO_MIN_PEAKS:
        raise InsufficientPeaks(f"{len(tp)} peaks after the transient cut")
    tp, yp = tp[-(n_peaks + 1):], yp[-(n_peaks + 1):]
    amps = np.abs(yp[1:])
    periods = np.diff(tp)
    amp, per = float(np.mean(amps)), float(np.mean(periods))
    spread_a = float(np.std(amps) / amp) if amp > 0 else np.inf
    spread_p = float(np.std(periods) / per) if per > 0 else np.inf
    spread = max(spread_a, spread_p)
    conclusive = len(find_peaks(t[sel], y[sel])[0]) >= 20
    return LcoReport(bool(spread < threshold and conclusive), amp, per, spread, len(amps), conclusive)


@dataclass(frozen=True)
class SteadyStateReport:
    is_steady: bool
    profile: np.ndarray
    residual: float
    profile_change: float


def detect_steady(traj: Trajectory, tol: float = 1e-6, window: float = 0.1) -> SteadyStateReport:
    """Steady if the final max|w_t| < tol and the profile moved by less than
    tol * max(1, max|w|) over the last ``window`` fraction of the run."""
    n = len(traj.t)
    start = min(n - 1, int(n * (1 - window)))
    w_end = traj.w[-1]
    resid = float(np.max(np.abs(traj.v[-1])))
    change = float(np.max(np.abs(w_end - traj.w[start])))
    scale = max(1.0, float(np.max(np.abs(w_end))))
    steady = resid < tol and change < tol * scale and not traj.diverged
    return SteadyStateReport(bool(steady), w_end.copy(), resid, change)


def profile_distance(a: np.ndarray, b: np.ndarray, allow_sign_flip: bool = False) -> float:
    """Relative max-norm distance between two profiles (optionally up to sign)."""
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    d = float(np.max(np.abs(a - b))) / scale
    if allow_sign_flip:
        d = min(d, float(np.max(np.abs(a + b))) / scale)
    return d
