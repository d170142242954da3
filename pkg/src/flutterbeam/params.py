"""
Shared model vocabulary: boundary configurations, beam coefficients, initial data.

All types here are frozen dataclasses. The model solved throughout the package is

    w_tt + D w_xxxx + k0 w_t + [b1 - b2 ||w_x||^2] w_xx = -beta (w_t + U w_x)

on (0, L) with no rotational inertia, no square-root damping and no static load.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParams


class Config(str, enum.Enum):
    C = "C"     # clamped-clamped panel
    H = "H"     # hinged-hinged panel
    CF = "CF"   # clamped at the leading edge, free at the trailing edge


class FreeEnd(str, enum.Enum):
    PHYSICAL_NONLINEAR = "PhysicalNonlinear"
    LINEAR_NONPHYSICAL = "LinearNonPhysical"


@dataclass(frozen=True)
class BoundaryConfig:
    kind: Config = Config.C
    cf_free_end: FreeEnd = FreeEnd.PHYSICAL_NONLINEAR

    def __post_init__(self):
        object.__setattr__(self, "kind", Config(self.kind))
        end = FreeEnd(self.cf_free_end)
        if self.kind is not Config.CF:
            end = FreeEnd.PHYSICAL_NONLINEAR
        object.__setattr__(self, "cf_free_end", end)

    @classmethod
    def parse(cls, text: str) -> "BoundaryConfig":
        """Accept ``C``, ``H``, ``CF`` or ``CF-linear``."""
        t = text.strip()
        if t.upper() in ("CF-LINEAR", "CF_LINEAR", "CFL"):
            return cls(Config.CF, FreeEnd.LINEAR_NONPHYSICAL)
        return cls(Config(t.upper()))

    @property
    def label(self) -> str:
        if self.kind is Config.CF and self.cf_free_end is FreeEnd.LINEAR_NONPHYSICAL:
            return "CF-linear"
        return self.kind.value


@dataclass(frozen=True)
class BeamParams:
    """Scalar model coefficients.

    ``alpha``, ``k1`` and ``p0`` exist only so the fixed-zero invariants are
    explicit; validation rejects anything else.
    """

    D: float = 1.0
    L: float = 1.0
    beta: float = 1.0
    U: float = 0.0
    k0: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    alpha: float = 0.0
    k1: float = 0.0
    p0: float = 0.0

    @property
    def k(self) -> float:
        """Total linear damping, imposed plus flow."""
        return self.k0 + self.beta

    def with_(self, **changes) -> "BeamParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"d": self.D, "l": self.L, "beta": self.beta, "u": self.U,
                "k0": self.k0, "b1": self.b1, "b2": self.b2}

    @classmethod
    def from_dict(cls, d: dict) -> "BeamParams":
        keys = {"d": "D", "l": "L", "beta": "beta", "u": "U",
                "k0": "k0", "b1": "b1", "b2": "b2"}
        return cls(**{keys[k]: float(v) for k, v in d.items() if k in keys})


@dataclass(frozen=True)
class Violation:
    field: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_params(params: BeamParams, config: BoundaryConfig) -> ValidationReport:
    """Check every BeamParams invariant; never raises, never mutates."""
    out = []

    def bad(name, msg):
        out.append(Violation(name, msg))

    for f in fields(params):
        v = getattr(params, f.name)
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            bad(f.name, "must be a finite real number")
    if out:
        return ValidationReport(tuple(out))
    if not params.D > 0:
        bad("D", "D > 0")
    if not params.L > 0:
        bad("L", "L > 0")
    if params.beta < 0:
        bad("beta", "beta >= 0")
    if params.U < 0:
        bad("U", "U >= 0")
    if params.b2 < 0:
        bad("b2", "b2 >= 0")
    if params.k0 + params.beta < 0:
        bad("k0", "k = k0+beta >= 0")
    for name in ("alpha", "k1", "p0"):
        if getattr(params, name) != 0:
            bad(name, f"{name} = 0 (fixed)")
    if not isinstance(config, BoundaryConfig):
        bad("config", "must be a BoundaryConfig")
    return ValidationReport(tuple(out))


def require_valid(params: BeamParams, config: BoundaryConfig) -> None:
    report = validate_params(params, config)
    if not report.ok:
        raise InvalidParams(report)


class IDKind(str, enum.Enum):
    MODE = "mode"
    POLYNOMIAL = "polynomial"
    ELEMENTARY = "elementary"
    SINE = "sine"
    ZERO = "zero"
    CUSTOM = "custom"


@dataclass(frozen=True)
class InitialData:
    """Initial displacement/velocity recipe in terms of x_hat = x/L.

    Build with the classmethods; the grid is applied later by the simulator.
    """

    kind: IDKind = IDKind.ZERO
    n: int = 1
    scale: float = 1.0
    eps: float = 0.0
    w0: Optional[Callable] = field(default=None, compare=False)
    w1: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", IDKind(self.kind))
        if self.kind is IDKind.MODE and not 1 <= self.n <= 5:
            raise ValueError("mode initial data uses n in 1..5")
        if self.kind is IDKind.SINE and self.eps < 0:
            raise ValueError("eps >= 0")

    @classmethod
    def mode(cls, n: int) -> "InitialData":
        return cls(IDKind.MODE, n=n)

    @classmethod
    def polynomial(cls) -> "InitialData":
        return cls(IDKind.POLYNOMIAL)

    @classmethod
    def elementary(cls, scale: float = 1.0) -> "InitialData":
        return cls(IDKind.ELEMENTARY, scale=scale)

    @classmethod
    def sine(cls, eps: float) -> "InitialData":
        return cls(IDKind.SINE, eps=eps)

    @classmethod
    def zero(cls) -> "InitialData":
        return cls(IDKind.ZERO)

    @classmethod
    def custom(cls, w0: Callable, w1: Callable) -> "InitialData":
        return cls(IDKind.CUSTOM, w0=w0, w1=w1)

    @property
    def label(self) -> str:
        if self.kind is IDKind.MODE:
            return f"mode{self.n}"
        if self.kind is IDKind.ELEMENTARY:
            return f"elementary{_fmt(self.scale)}"
        if self.kind is IDKind.SINE:
            return f"sine{_fmt(self.eps)}"
        return self.kind.value

    def profiles(self, config: BoundaryConfig, xhat: np.ndarray):
        """Closed-form (w0, w1) on ``xhat``. Mode data needs a basis; see fdm.sample_initial."""
        xhat = np.asarray(xhat, dtype=float)
        zero = np.zeros_like(xhat)
        cf = config.kind is Config.CF
        if self.kind is IDKind.ZERO:
            return zero, zero.copy()
        if self.kind is IDKind.POLYNOMIAL:
            if cf:
                w0 = -4 * xhat**5 + 15 * xhat**4 - 20 * xhat**3 + 10 * xhat**2
            else:
                w0 = xhat**3 * (1 - xhat) ** 3
            return w0, zero
        if self.kind is IDKind.ELEMENTARY:
            w1 = self.scale * (xhat if cf else xhat * (1 - xhat))
            return zero, w1
        if self.kind is IDKind.SINE:
            return self.eps * np.sin(2 * np.pi * xhat), xhat * (1 - xhat)
        if self.kind is IDKind.CUSTOM:
            w0 = np.broadcast_to(np.asarray(self.w0(xhat), float), xhat.shape).copy()
            w1 = np.broadcast_to(np.asarray(self.w1(xhat), float), xhat.shape).copy()
            return w0, w1
        raise ValueError("mode initial data must be sampled from a ModeBasis")

    def to_dict(self) -> dict:
        if self.kind is IDKind.CUSTOM:
            raise ValueError("custom initial data is not serializable")
        d = {"kind": self.kind.value}
        if self.kind is IDKind.MODE:
            d["n"] = self.n
        elif self.kind is IDKind.ELEMENTARY:
            d["scale"] = self.scale
        elif self.kind is IDKind.SINE:
            d["eps"] = self.eps
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InitialData":
        kind = IDKind(d["kind"])
        if kind is IDKind.CUSTOM:
            raise ValueError("custom initial data is not serializable")
        return cls(kind, n=int(d.get("n", 1)), scale=float(d.get("scale", 1.0)),
                   eps=float(d.get("eps", 0.0)))


def _fmt(v: float) -> str:
    return repr(float(v)).rstrip("0").rstrip(".") if v != int(v) else str(int(v))
