import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flutterbeam.errors import InvalidParams
from flutterbeam.params import (BeamParams, BoundaryConfig, Config, FreeEnd, IDKind, InitialData,
                                require_valid, validate_params)

C = BoundaryConfig("C")
CF = BoundaryConfig("CF")


def test_reference_params_validate():
    p = BeamParams(D=1, L=1, beta=1, U=150, k0=0, b1=0, b2=1)
    assert validate_params(p, C).ok


def test_negative_b2_rejected():
    rep = validate_params(BeamParams(b2=-1), C)
    assert not rep.ok
    assert [v.field for v in rep.violations] == ["b2"]
    assert "b2 >= 0" in rep.violations[0].message


def test_damping_floor():
    rep = validate_params(BeamParams(beta=1, k0=-2), C)
    assert any("k = k0+beta >= 0" in v.message for v in rep.violations)
    assert validate_params(BeamParams(beta=1, k0=-1), C).ok


@pytest.mark.parametrize("field", ["alpha", "k1", "p0"])
def test_fixed_zero_terms(field):
    rep = validate_params(BeamParams(**{field: 0.1}), C)
    assert [v.field for v in rep.violations] == [field]


def test_nonfinite_rejected():
    assert not validate_params(BeamParams(U=math.nan), C).ok
    with pytest.raises(InvalidParams):
        require_valid(BeamParams(D=math.inf), C)


def test_total_damping():
    assert BeamParams(beta=1.2e-4, k0=1e-3).k == pytest.approx(1.12e-3)


def test_cf_free_end_normalized_off_cf():
    assert BoundaryConfig("C", FreeEnd.LINEAR_NONPHYSICAL).cf_free_end is FreeEnd.PHYSICAL_NONLINEAR
    assert BoundaryConfig.parse("CF-linear").cf_free_end is FreeEnd.LINEAR_NONPHYSICAL
    assert BoundaryConfig.parse("cf").kind is Config.CF


def test_params_roundtrip():
    p = BeamParams(D=23.9, L=300, beta=1.2e-4, U=5, k0=0.1, b1=-2, b2=3)
    assert BeamParams.from_dict(p.to_dict()) == p
    assert set(p.to_dict()) == {"d", "l", "beta", "u", "k0", "b1", "b2"}


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(D=finite, L=finite, beta=finite, U=finite, k0=finite, b1=finite, b2=finite)
def test_validation_is_pure_and_sound(D, L, beta, U, k0, b1, b2):
    p = BeamParams(D=D, L=L, beta=beta, U=U, k0=k0, b1=b1, b2=b2)
    r1, r2 = validate_params(p, C), validate_params(p, C)
    assert r1 == r2
    invariants = D > 0 and L > 0 and beta >= 0 and U >= 0 and b2 >= 0 and k0 + beta >= 0
    assert r1.ok == invariants


def test_polynomial_profiles():
    x = np.linspace(0, 1, 11)
    w0, w1 = InitialData.polynomial().profiles(CF, x)
    assert w0[-1] == pytest.approx(1.0)
    assert np.all(w1 == 0)
    w0, _ = InitialData.polynomial().profiles(C, x)
    assert np.allclose(w0, x**3 * (1 - x) ** 3)


def test_elementary_and_sine_profiles():
    x = np.linspace(0, 1, 11)
    w0, w1 = InitialData.elementary(13).profiles(CF, x)
    assert np.all(w0 == 0) and np.allclose(w1, 13 * x)
    _, w1 = InitialData.elementary().profiles(BoundaryConfig("H"), x)
    assert np.allclose(w1, x * (1 - x))
    w0, w1 = InitialData.sine(0.1).profiles(BoundaryConfig("H"), x)
    assert np.allclose(w0, 0.1 * np.sin(2 * np.pi * x)) and np.allclose(w1, x * (1 - x))


def test_initial_data_constraints():
    with pytest.raises(ValueError):
        InitialData.mode(6)
    with pytest.raises(ValueError):
        InitialData.sine(-1)
    for ic in (InitialData.mode(2), InitialData.polynomial(), InitialData.elementary(12),
               InitialData.sine(1e-3), InitialData.zero()):
        assert InitialData.from_dict(ic.to_dict()) == ic
    assert InitialData.custom(lambda x: x, lambda x: x).kind is IDKind.CUSTOM
