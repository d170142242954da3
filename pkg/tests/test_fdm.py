import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigs

from flutterbeam.diagnostics import energy_identity_residual
from flutterbeam.errors import InvalidResolution, MissingBasis
from flutterbeam.fdm import (BeamState, SpatialOperator, StepSizeUnderflow, apply_ghosts, build_grid,
                             integrate, norm_wx_sq, norm_wx_sq_trapezoid, observable, rhs,
                             sample_initial, simulate)
from flutterbeam.modes import build_mode_basis, eval_mode
from flutterbeam.params import BeamParams, BoundaryConfig, InitialData

C, H, CF = (BoundaryConfig(k) for k in ("C", "H", "CF"))
CFL = BoundaryConfig.parse("CF-linear")
VACUO = BeamParams(beta=0.0)


def test_grid_examples():
    assert build_grid(1.0, 101).h == pytest.approx(0.01)
    g = build_grid(300.0, 301)
    assert g.h == 1.0 and g.x[-1] == 300.0
    with pytest.raises(InvalidResolution):
        build_grid(1.0, 2)
    assert build_grid(1.0, 33).weights.sum() == pytest.approx(1.0)


def test_sample_initial():
    g = build_grid(1.0, 101)
    s = sample_initial(InitialData.polynomial(), g, CF)
    assert s.w[-1] == pytest.approx(1.0) and s.w[0] == 0.0
    z = sample_initial(InitialData.zero(), g, C)
    assert not z.w.any() and not z.v.any()
    e = sample_initial(InitialData.elementary(12), g, CF)
    assert np.allclose(e.v, 12 * g.x)
    with pytest.raises(MissingBasis):
        sample_initial(InitialData.mode(1), g, C)
    with pytest.raises(MissingBasis):
        sample_initial(InitialData.mode(3), g, C, build_mode_basis(C, BeamParams(), 2))
    m = sample_initial(InitialData.mode(1), g, C, build_mode_basis(C, BeamParams(), 1))
    assert m.w[0] == 0.0 and m.w[-1] == 0.0 and np.abs(m.w).max() > 1


def test_norm_wx_sq_examples():
    g = build_grid(1.0, 101)
    assert norm_wx_sq(np.zeros(101), g) == 0.0
    assert abs(norm_wx_sq(g.x.copy(), g) - 1.0) < 1e-10
    assert norm_wx_sq(BeamState(0.0, g.x.copy(), np.zeros(101)), g) == norm_wx_sq(g.x.copy(), g)
    errs, errs_t = [], []
    for M in (101, 201):
        gg = build_grid(1.0, M)
        errs.append(abs(norm_wx_sq(np.sin(np.pi * gg.x), gg) - np.pi**2 / 2))
        errs_t.append(abs(norm_wx_sq_trapezoid(np.sin(np.pi * gg.x), gg) - np.pi**2 / 2))
    assert errs[0] < 10 * 0.01**2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs_t[0] < 20 * 0.01**2
    assert errs_t[0] / errs_t[1] == pytest.approx(4.0, rel=0.1)


def test_ghost_reflections():
    w = np.array([0.0, 0.3, 0.5, 0.7, 0.1, 0.0])
    assert apply_ghosts(H, w, 0.0, 0.1)[1] == pytest.approx(-0.3)
    assert apply_ghosts(C, w, 0.0, 0.1)[1] == pytest.approx(0.3)
    ext = apply_ghosts(C, w, 0.0, 0.1)
    assert ext[-2] == pytest.approx(w[-2]) and ext[-1] == pytest.approx(w[-3])


def test_cantilever_ghosts_satisfy_discrete_conditions():
    rng = np.random.default_rng(1)
    h, D = 0.05, 2.0
    w = rng.normal(size=21)
    w[0] = 0.0
    for coeff in (0.0, -3.7, 5.0):
        e = apply_ghosts(CF, w, coeff, h, D)
        M = len(w)
        wm2, wm1, wL, wp1, wp2 = e[M - 1], e[M], e[M + 1], e[M + 2], e[M + 3]
        assert abs((wp1 - 2 * wL + wm1) / h**2) < 1e-9
        d3 = (wp2 - 2 * wp1 + 2 * wm1 - wm2) / (2 * h**3)
        d1 = (wp1 - wm1) / (2 * h)
        assert abs(D * d3 + coeff * d1) < 1e-7 * max(1.0, abs(D * d3))
    # no load: the physical closure reduces to the standard free end
    assert np.array_equal(apply_ghosts(CF, w, 0.0, h, D), apply_ghosts(CFL, w, 7.0, h, D))


def test_rhs_zero_state():
    g = build_grid(1.0, 64)
    dw, dv = rhs(BeamState(0.0, np.zeros(64), np.zeros(64)), g, BeamParams(U=10, b1=3, b2=1), CF)
    assert not dw.any() and not dv.any()


def test_rhs_eigenrelation_second_order():
    errs = []
    for M in (65, 129):
        g = build_grid(1.0, M)
        b = build_mode_basis(H, BeamParams(), 1)
        w = eval_mode(b, 1, g.x)
        _, dv = rhs(BeamState(0.0, w, np.zeros(M)), g, BeamParams(beta=0.0), H)
        k4 = b.entries[0].kappa ** 4
        errs.append(np.max(np.abs(dv + k4 * w)) / np.max(np.abs(k4 * w)))
    assert errs[0] < 1e-2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_rhs_flow_parity():
    g = build_grid(1.0, 101)
    w = np.sin(2 * np.pi * g.x) ** 3  # odd about x = 1/2, zero slope at both ends
    p = BeamParams(beta=1.0, U=5.0)
    _, dv_flow = rhs(BeamState(0.0, w, np.zeros(101)), g, p, C)
    _, dv_none = rhs(BeamState(0.0, w, np.zeros(101)), g, p.with_(U=0.0), C)
    flow = dv_flow - dv_none
    assert np.allclose(flow[1:-1], flow[1:-1][::-1], atol=1e-10)


@pytest.mark.parametrize("cfg", [C, H, CF, CFL])
def test_sparse_operator_matches_reference_rhs(cfg):
    g = build_grid(1.0, 40)
    p = BeamParams(beta=0.7, U=3.0, k0=0.2, b1=4.0, b2=2.5)
    rng = np.random.default_rng(0)
    w, v = rng.normal(size=40), rng.normal(size=40)
    w[0] = v[0] = 0.0
    if cfg.kind.value != "CF":
        w[-1] = v[-1] = 0.0
    op = SpatialOperator(g, p, cfg)
    y = np.concatenate([w[op.free], v[op.free]])
    out = op.ode_rhs(0.0, y)
    dw, dv = rhs(BeamState(0.0, w, v), g, p, cfg)
    n = len(op.free)
    assert np.allclose(out[:n], dw[op.free])
    assert np.allclose(out[n:], dv[op.free], rtol=1e-10, atol=1e-8)


def test_second_order_frequency_convergence():
    errs = []
    for M in (33, 65, 129):
        op = SpatialOperator(build_grid(1.0, M), VACUO, H)
        lam = eigs(op.A0.tocsc(), k=1, sigma=0, return_eigenvectors=False)
        errs.append(abs(math.sqrt(-lam[0].real) - math.pi**2) / math.pi**2)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_observable_midpoint_interpolation():
    g = build_grid(1.0, 128)  # even node count: L/2 falls between nodes
    w = np.sin(np.pi * g.x)
    assert observable(H, w, g) == pytest.approx(1.0, abs=1e-6)
    assert observable(CF, g.x**2, g) == 1.0


def test_single_mode_in_vacuo_waveform():
    b = build_mode_basis(H, BeamParams(), 1)
    om = b.entries[0].omega
    T = 10 * 2 * math.pi / om
    tr = simulate(H, VACUO, InitialData.mode(1), T, M=256, basis=b, sample_dt=T / 2000,
                  rtol=1e-7, atol=1e-7)
    exact = eval_mode(b, 1, 0.5) * np.cos(om * tr.t)
    err = np.max(np.abs(tr.observable - exact)) / eval_mode(b, 1, 0.5)
    assert err < 1e-3


def test_single_mode_energy_at_default_tolerances():
    b = build_mode_basis(H, BeamParams(), 1)
    T = 10 * 2 * math.pi / b.entries[0].omega
    tr = simulate(H, VACUO, InitialData.mode(1), T, basis=b, sample_dt=T / 1000)
    assert tr.grid.M == 128
    E = tr.energies().E
    assert np.max(np.abs(E / E[0] - 1)) < 1e-6


@pytest.mark.slow
def test_linear_energy_identity():
    p = BeamParams(beta=1.0, U=50.0, k0=0.5)
    tr = simulate(C, p, InitialData.polynomial(), 0.5, M=64, sample_dt=1e-4)
    res = energy_identity_residual(tr)
    E0 = tr.energies().E[0]
    assert np.max(np.abs(res)) < 1e-4 * E0


@pytest.mark.slow
def test_nonlinear_cantilever_energy_conserved():
    p = BeamParams(beta=0.0, b2=1.0, b1=2.0)
    tr = simulate(CF, p, InitialData.polynomial(), 1.0, M=48, sample_dt=0.01)
    sE = tr.energies().scriptE
    assert np.max(np.abs(sE / sE[0] - 1)) < 1e-4


def test_blowup_flagged_not_raised():
    p = BeamParams(U=3000.0)
    tr = simulate(H, p, InitialData.polynomial(), 50.0, M=40, sample_dt=0.01, blowup=1e3)
    assert tr.diverged and "blow-up" in tr.message
    assert tr.t[-1] < 50.0
    assert np.all(np.diff(tr.t) > 0)


def test_step_failure_reports(monkeypatch):
    import flutterbeam.fdm as F

    class Sol:
        status, message, nfev = -1, "Required step size is less than spacing between numbers.", 5
        t = np.array([0.0])

    def fake(fun, span, y0, **kw):
        s = Sol()
        s.y = y0[:, None]
        return s

    monkeypatch.setattr(F, "solve_ivp", fake)
    g = build_grid(1.0, 33)
    st = sample_initial(InitialData.polynomial(), g, H)
    tr = integrate(st, BeamParams(), H, g, 1.0)
    assert tr.diverged and "last max|w|" in tr.message
    with pytest.raises(StepSizeUnderflow) as ei:
        integrate(st, BeamParams(), H, g, 1.0, raise_on_failure=True)
    assert ei.value.trajectory is not None
