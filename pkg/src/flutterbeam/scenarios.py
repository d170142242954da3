"""
Scenario documents, the preset registry and the batch runner.

A scenario is either a U_crit sweep (one axis, one or more configurations) or a
battery of simulations (configurations x optional swept axis x initial data).
Documents are strict JSON; presets are stored as documents too, so a preset and
a user file go through the same validation. Runs are dispatched to a process
pool and reassembled in submission order, so outputs do not depend on the
degree of parallelism.
"""

from __future__ import annotations

import copy
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .diagnostics import detect_lco, detect_steady, fit_growth_rate, profile_distance
from .errors import FlutterBeamError, ParseError, SchemaError
from .fdm import DEFAULT_ATOL, DEFAULT_RTOL, default_resolution, simulate
from .output import write_columns, write_csv, write_json
from .params import BeamParams, BoundaryConfig, IDKind, InitialData, validate_params
from .stability import SWEEP_AXES, ModalModel, find_ucrit

KINDS = ("simulate", "ucrit-sweep")
SIM_AXES = ("U", "k0", "b1", "b2", "beta", "L", "D")
OUTPUTS = ("observable", "energy", "snapshots", "ucrit")
ANALYSES = ("lco", "steady", "dichotomy", "plateau", "growth", "drift")
BOUNDED_LATE_GROWTH = 1.05
PARAM_KEYS = {"d": "D", "l": "L", "beta": "beta", "u": "U", "k0": "k0", "b1": "b1", "b2": "b2"}
TOP_KEYS = ("name", "preset", "kind", "configs", "params", "sweep", "initial_data", "horizon",
            "sample_dt", "resolution", "rtol", "atol", "u_range", "ucrit_tol", "modes",
            "u_relative", "outputs", "snapshot_times", "analysis", "notes")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    kind: str = "simulate"
    configs: tuple = (BoundaryConfig(),)
    params: BeamParams = BeamParams()
    sweep: Optional[SweepSpec] = None
    initial_data: tuple = (InitialData.polynomial(),)
    horizon: float = 1.0
    sample_dt: float = 0.01
    resolution: Optional[int] = None
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    u_range: tuple = (0.0, 2000.0)
    ucrit_tol: float = 1e-4
    modes: int = 6
    u_relative: bool = False  # swept U values are multiples of the modal U_crit
    outputs: tuple = ("observable", "energy")
    snapshot_times: tuple = ()
    analysis: tuple = ()
    notes: tuple = ()
    preset: Optional[str] = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name, "kind": self.kind,
            "configs": [c.label for c in self.configs],
            "params": self.params.to_dict(),
            "initial_data": [ic.to_dict() for ic in self.initial_data],
            "horizon": self.horizon, "sample_dt": self.sample_dt,
            "resolution": self.resolution, "rtol": self.rtol, "atol": self.atol,
            "u_range": list(self.u_range), "ucrit_tol": self.ucrit_tol, "modes": self.modes,
            "u_relative": self.u_relative, "outputs": list(self.outputs),
            "snapshot_times": list(self.snapshot_times), "analysis": list(self.analysis),
            "notes": list(self.notes),
        }
        if self.sweep is not None:
            d["sweep"] = {"axis": self.sweep.axis, "values": list(self.sweep.values)}
        if self.preset is not None:
            d["preset"] = self.preset
        return d


# ---------------------------------------------------------------- presets

_PHYS = {"d": 23.9, "l": 300.0, "beta": 1.2e-4, "k0": 0.0, "b1": 0.0, "b2": 0.0}
_UNIT = {"d": 1.0, "l": 1.0, "beta": 1.0, "k0": 0.0, "b1": 0.0, "b2": 0.0}

PRESETS = {
    "fig1-sweep": {
        "kind": "ucrit-sweep", "configs": ["C", "H", "CF"], "params": dict(_PHYS),
        "sweep": {"axis": "L", "start": 100.0, "stop": 500.0, "num": 21},
        "u_range": [0.0, 2000.0], "ucrit_tol": 1e-6, "outputs": ["ucrit"],
    },
    "fig2-beta-sweep": {
        "kind": "ucrit-sweep", "configs": ["C", "H", "CF"], "params": dict(_PHYS),
        "sweep": {"axis": "beta", "start": 1e-5, "stop": 1e-2, "num": 31, "spacing": "log"},
        "u_range": [0.0, 2000.0], "ucrit_tol": 1e-6, "outputs": ["ucrit"],
    },
    "fig3-k0-sweep": {
        "kind": "ucrit-sweep", "configs": ["C", "H", "CF"], "params": dict(_PHYS),
        "sweep": {"axis": "k0", "start": 0.0, "stop": 2e-3, "num": 21},
        "u_range": [0.0, 2000.0], "ucrit_tol": 1e-6, "outputs": ["ucrit"],
    },
    "fig4-ic-battery": {
        "configs": ["H"], "params": dict(_PHYS, u=5.0), "resolution": 256,
        "initial_data": [{"kind": "mode", "n": 1}, {"kind": "mode", "n": 2},
                         {"kind": "polynomial"}, {"kind": "elementary", "scale": 1.0}],
        "horizon": 8000.0, "sample_dt": 10.0, "rtol": 1e-6, "atol": 1e-8,
        "outputs": ["energy"], "analysis": ["growth"],
    },
    "lin-energy-C": {
        "configs": ["C"], "params": dict(_UNIT),
        "sweep": {"axis": "U", "values": [0.0, 0.5, 0.9, 1.1, 1.5]}, "u_relative": True,
        "initial_data": [{"kind": "polynomial"}], "resolution": 48, "horizon": 1.0,
        "sample_dt": 0.001, "rtol": 1e-7, "atol": 1e-9, "outputs": ["energy"], "analysis": ["growth"],
        "notes": ["k0=0 gives k=1; set params.k0=-1 for the undamped variant",
                  "reference U_crit=135.9/135.18 listed for C matches the cantilever; the "
                  "clamped-clamped modal value is about 636, so U is relative to the computed U_crit"],
    },
    "nonlin-energy-C": {
        "configs": ["C"], "params": dict(_UNIT, b2=1.0),
        "sweep": {"axis": "U", "values": [0.5, 1.5, 2.0]}, "u_relative": True,
        "initial_data": [{"kind": "polynomial"}], "resolution": 48, "horizon": 3.0,
        "sample_dt": 0.001, "rtol": 1e-6, "atol": 1e-8, "outputs": ["observable", "energy"],
        "analysis": ["lco"],
        "notes": ["U relative to the computed clamped-clamped U_crit (reference 135.9 matches the cantilever)"],
    },
    "blowup-cf": {
        "configs": ["CF-linear", "CF"], "params": dict(_UNIT, beta=0.0, b2=1.0),
        "initial_data": [{"kind": "elementary", "scale": 12.0}, {"kind": "elementary", "scale": 13.0}],
        "resolution": 64, "horizon": 10.0, "sample_dt": 0.01, "rtol": 1e-5, "atol": 1e-7,
        "outputs": ["observable", "energy"], "analysis": ["dichotomy", "drift"],
    },
    "lco-cf": {
        "configs": ["CF"], "params": dict(_UNIT, b2=1.0, u=150.0),
        "initial_data": [{"kind": "mode", "n": 2}, {"kind": "polynomial"},
                         {"kind": "elementary", "scale": 1.0}],
        "resolution": 32, "horizon": 20.0, "sample_dt": 0.002, "rtol": 1e-6, "atol": 1e-8,
        "outputs": ["observable", "energy", "snapshots"], "snapshot_times": [19.9, 19.95, 20.0],
        "analysis": ["lco"],
    },
    "buckle-C": {
        "configs": ["C"], "params": dict(_UNIT, u=100.0, b1=50.0, b2=1.0),
        "sweep": {"axis": "k0", "values": [0.0, 1.0, 3.0]},
        "initial_data": [{"kind": "polynomial"}], "resolution": 32, "horizon": 30.0,
        "sample_dt": 0.01, "rtol": 1e-7, "atol": 1e-7, "outputs": ["observable", "energy"],
        "analysis": ["steady"], "notes": ["k = k0 + beta in {1, 2, 4}"],
    },
    "buckle-C-b1-100": {
        "configs": ["C"], "params": dict(_UNIT, u=100.0, b1=100.0, b2=1.0),
        "sweep": {"axis": "k0", "values": [0.0, 1.0]},
        "initial_data": [{"kind": "polynomial"}, {"kind": "elementary", "scale": 1.0}],
        "resolution": 32, "horizon": 30.0, "sample_dt": 0.01, "rtol": 1e-7, "atol": 1e-7,
        "outputs": ["observable", "energy"], "analysis": ["steady"],
        "notes": ["k in {1, 2}; initial data for the mirrored steady states is unspecified, "
                  "two catalog choices are run"],
    },
    "damping-lco-C": {
        "configs": ["C"], "params": dict(_UNIT, u=5000.0, b1=20.0, b2=1.0),
        "sweep": {"axis": "k0", "values": [0.0, 1.0, 4.0, 9.0]},
        "initial_data": [{"kind": "polynomial"}], "resolution": 48, "horizon": 2.0,
        "sample_dt": 0.0005, "rtol": 1e-6, "atol": 1e-8, "outputs": ["observable", "energy"],
        "analysis": ["lco"], "notes": ["conflicting reference values (b1=20, b2=1) and (b1=50, b2=1); the first set is used"],
    },
    "nonsimple-lco": {
        "configs": ["C"], "params": dict(_UNIT, u=5000.0, b1=5000.0, b2=5000.0, k0=100.0),
        "initial_data": [{"kind": "polynomial"}], "resolution": 48, "horizon": 2.0,
        "sample_dt": 0.0005, "rtol": 1e-6, "atol": 1e-8, "outputs": ["observable", "energy"],
        "analysis": ["lco"], "notes": ["conflicting reference values (k=101, b1=5000, b2=5000) and (k=100, b1=5000, "
                  "b2=1000); the first set is used"],
    },
    "chaos-h": {
        "configs": ["H"], "params": dict(_UNIT, u=200.0, b1=2000.0, b2=1.0, k0=1.0),
        "initial_data": [{"kind": "sine", "eps": 0.0}, {"kind": "sine", "eps": 0.1},
                         {"kind": "sine", "eps": 0.01}, {"kind": "sine", "eps": 0.001}],
        "resolution": 32, "horizon": 20.0, "sample_dt": 0.002, "rtol": 1e-6, "atol": 1e-8,
        "outputs": ["observable", "energy"], "analysis": ["lco", "plateau"],
    },
    "b2-plateau": {
        "configs": ["C"], "params": dict(_UNIT, u=150.0),
        "sweep": {"axis": "b2", "values": [0.5, 1.0, 2.0, 4.0]},
        "initial_data": [{"kind": "polynomial"}], "resolution": 32, "horizon": 5.0,
        "sample_dt": 0.005, "rtol": 1e-6, "atol": 1e-9, "outputs": ["energy"], "analysis": ["plateau"],
        "notes": ["U=150 is below the clamped-clamped U_crit (about 636); the reference "
                  "U_crit=135.97 matches the cantilever"],
    },
}


def preset_names() -> list:
    return sorted(PRESETS)


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise SchemaError("preset", f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    doc = copy.deepcopy(PRESETS[name])
    doc.setdefault("name", name)
    return doc


# ---------------------------------------------------------------- parsing

def load_scenario(path) -> Scenario:
    """Read and validate a scenario JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


def scenario_from_name_or_path(ref: str) -> Scenario:
    if ref in PRESETS:
        return scenario_from_dict({"preset": ref})
    return load_scenario(ref)


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "document must be a JSON object")
    _check_keys(doc, TOP_KEYS, "")
    preset = doc.get("preset")
    if preset is not None:
        if not isinstance(preset, str):
            raise SchemaError("preset", "must be a string")
        base = preset_document(preset)
        merged = dict(base)
        for k, v in doc.items():
            if k == "params" and isinstance(v, dict):
                merged["params"] = {**base.get("params", {}), **v}
            elif k != "preset":
                merged[k] = v
        doc = merged
    return _build(doc, preset)


def _check_keys(d: dict, allowed, prefix: str):
    for k in d:
        if k not in allowed:
            raise SchemaError(prefix + k, "unknown key")


def _num(v, path, positive=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaError(path, "must be a finite number")
    if positive and not v > 0:
        raise SchemaError(path, "must be > 0")
    return float(v)


def _list(v, path):
    if not isinstance(v, list):
        raise SchemaError(path, "must be a list")
    return v


def _parse_config(text, path) -> BoundaryConfig:
    if not isinstance(text, str):
        raise SchemaError(path, "must be a string")
    try:
        return BoundaryConfig.parse(text)
    except ValueError:
        raise SchemaError(path, f"unknown configuration {text!r}") from None


def _parse_ic(d, path) -> InitialData:
    if not isinstance(d, dict):
        raise SchemaError(path, "must be an object")
    _check_keys(d, ("kind", "n", "scale", "eps"), path + ".")
    kind = d.get("kind")
    try:
        kind = IDKind(kind)
    except ValueError:
        raise SchemaError(path + ".kind", f"unknown initial data kind {kind!r}") from None
    if kind is IDKind.CUSTOM:
        raise SchemaError(path + ".kind", "custom initial data cannot be given in a document")
    try:
        if kind is IDKind.MODE:
            n = d.get("n", 1)
            if isinstance(n, bool) or not isinstance(n, int):
                raise SchemaError(path + ".n", "must be an integer")
            return InitialData.mode(n)
        if kind is IDKind.ELEMENTARY:
            return InitialData.elementary(_num(d.get("scale", 1.0), path + ".scale"))
        if kind is IDKind.SINE:
            return InitialData.sine(_num(d.get("eps", 0.0), path + ".eps"))
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None
    return InitialData(kind)


def _parse_sweep(d, path) -> SweepSpec:
    if not isinstance(d, dict):
        raise SchemaError(path, "must be an object")
    _check_keys(d, ("axis", "values", "start", "stop", "num", "spacing"), path + ".")
    axis = d.get("axis")
    if not isinstance(axis, str):
        raise SchemaError(path + ".axis", "required string")
    if "values" in d:
        if any(k in d for k in ("start", "stop", "num", "spacing")):
            raise SchemaError(path, "give either values or start/stop/num")
        vals = [_num(v, f"{path}.values[{i}]") for i, v in enumerate(_list(d["values"], path + ".values"))]
    else:
        for k in ("start", "stop", "num"):
            if k not in d:
                raise SchemaError(f"{path}.{k}", "required when values is absent")
        start, stop = _num(d["start"], path + ".start"), _num(d["stop"], path + ".stop")
        num = d["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise SchemaError(path + ".num", "must be a positive integer")
        spacing = d.get("spacing", "linear")
        if spacing == "linear":
            vals = np.linspace(start, stop, num).tolist()
        elif spacing == "log":
            if not (start > 0 and stop > 0):
                raise SchemaError(path, "log spacing needs positive start and stop")
            vals = np.geomspace(start, stop, num).tolist()
        else:
            raise SchemaError(path + ".spacing", "linear or log")
    if not vals:
        raise SchemaError(path + ".values", "empty sweep")
    return SweepSpec(axis, tuple(float(v) for v in vals))


def _parse_strings(v, path, allowed):
    out = []
    for i, s in enumerate(_list(v, path)):
        if s not in allowed:
            raise SchemaError(f"{path}[{i}]", f"must be one of {allowed}")
        out.append(s)
    return tuple(out)


def _build(doc: dict, preset: Optional[str]) -> Scenario:
    s = Scenario(preset=preset)
    kw = {}
    if "name" in doc:
        if not isinstance(doc["name"], str) or not doc["name"]:
            raise SchemaError("name", "must be a non-empty string")
        kw["name"] = doc["name"]
    if "kind" in doc:
        if doc["kind"] not in KINDS:
            raise SchemaError("kind", f"must be one of {KINDS}")
        kw["kind"] = doc["kind"]
    kind = kw.get("kind", s.kind)
    if "configs" in doc:
        cl = _list(doc["configs"], "configs")
        if not cl:
            raise SchemaError("configs", "at least one configuration")
        kw["configs"] = tuple(_parse_config(c, f"configs[{i}]") for i, c in enumerate(cl))
    if "params" in doc:
        p = doc["params"]
        if not isinstance(p, dict):
            raise SchemaError("params", "must be an object")
        _check_keys(p, tuple(PARAM_KEYS), "params.")
        base = s.params.to_dict()
        base.update({k: _num(v, f"params.{k}") for k, v in p.items()})
        kw["params"] = BeamParams.from_dict(base)
    if "sweep" in doc and doc["sweep"] is not None:
        kw["sweep"] = _parse_sweep(doc["sweep"], "sweep")
    if "initial_data" in doc:
        il = _list(doc["initial_data"], "initial_data")
        if not il:
            raise SchemaError("initial_data", "at least one entry")
        kw["initial_data"] = tuple(_parse_ic(d, f"initial_data[{i}]") for i, d in enumerate(il))
    for key in ("horizon", "sample_dt", "rtol", "atol", "ucrit_tol"):
        if key in doc:
            kw[key] = _num(doc[key], key, positive=True)
    if "resolution" in doc and doc["resolution"] is not None:
        r = doc["resolution"]
        if isinstance(r, bool) or not isinstance(r, int) or r < 32:
            raise SchemaError("resolution", "integer >= 32")
        kw["resolution"] = r
    if "modes" in doc:
        m = doc["modes"]
        if isinstance(m, bool) or not isinstance(m, int) or not 1 <= m <= 10:
            raise SchemaError("modes", "integer in 1..10")
        kw["modes"] = m
    if "u_range" in doc:
        ur = _list(doc["u_range"], "u_range")
        if len(ur) != 2:
            raise SchemaError("u_range", "two numbers [lo, hi]")
        lo, hi = _num(ur[0], "u_range[0]"), _num(ur[1], "u_range[1]")
        if not (0 <= lo < hi):
            raise SchemaError("u_range", "need 0 <= lo < hi")
        kw["u_range"] = (lo, hi)
    if "u_relative" in doc:
        if not isinstance(doc["u_relative"], bool):
            raise SchemaError("u_relative", "must be true or false")
        kw["u_relative"] = doc["u_relative"]
    if "outputs" in doc:
        kw["outputs"] = _parse_strings(doc["outputs"], "outputs", OUTPUTS)
    if "analysis" in doc:
        kw["analysis"] = _parse_strings(doc["analysis"], "analysis", ANALYSES)
    if "snapshot_times" in doc:
        kw["snapshot_times"] = tuple(_num(v, f"snapshot_times[{i}]")
                                     for i, v in enumerate(_list(doc["snapshot_times"], "snapshot_times")))
    if "notes" in doc:
        notes = _list(doc["notes"], "notes")
        if not all(isinstance(n, str) for n in notes):
            raise SchemaError("notes", "list of strings")
        kw["notes"] = tuple(notes)
    if kind == "ucrit-sweep" and "outputs" not in doc:
        kw["outputs"] = ("ucrit",)
    sc = replace(s, **kw)
    _validate(sc)
    return sc


def _validate(s: Scenario):
    if s.kind == "ucrit-sweep":
        if s.sweep is None:
            raise SchemaError("sweep", "a ucrit-sweep needs exactly one swept axis")
        if s.sweep.axis not in SWEEP_AXES:
            raise SchemaError("sweep.axis", f"must be one of {SWEEP_AXES}")
    elif s.sweep is not None and s.sweep.axis not in SIM_AXES:
        raise SchemaError("sweep.axis", f"must be one of {SIM_AXES}")
    if s.u_relative and (s.sweep is None or s.sweep.axis != "U"):
        raise SchemaError("u_relative", "only meaningful with a sweep over U")
    for c in s.configs:
        for p in _variant_params(s, c, u_crit=1.0):
            rep = validate_params(p, c)
            if not rep.ok:
                v = rep.violations[0]
                raise SchemaError(f"params.{v.field}", v.message)


def _variant_params(s: Scenario, config: BoundaryConfig, u_crit: Optional[float] = None) -> list:
    if s.sweep is None or s.kind == "ucrit-sweep":
        return [s.params]
    out = []
    for v in s.sweep.values:
        if s.sweep.axis == "U" and s.u_relative:
            out.append(s.params.with_(U=v * (u_crit or 0.0)))
        else:
            out.append(s.params.with_(**{s.sweep.axis: v}))
    return out


# ---------------------------------------------------------------- running

@dataclass
class RunRecord:
    run_id: str
    config: str
    params: dict
    initial_data: Optional[dict] = None
    axis_value: Optional[float] = None
    files: list = field(default_factory=list)
    status: str = "ok"
    error: Optional[str] = None
    diverged: bool = False
    message: str = ""
    wall_time: float = 0.0
    results: dict = field(default_factory=dict)


@dataclass
class RunManifest:
    name: str
    version: str
    scenario: dict
    runs: list
    files: list
    summary: dict
    conflicts: list
    wall_time: float

    @property
    def n_failed(self) -> int:
        return sum(r.status != "ok" for r in self.runs)

    @property
    def all_failed(self) -> bool:
        return bool(self.runs) and self.n_failed == len(self.runs)


def _sweep_task(task):
    config, params, axis, value, u_range, tol, N = task
    t0 = time.perf_counter()
    try:
        p = params.with_(**{axis: value})
        res = find_ucrit(config, p, u_range, tol=tol, N=N)
        out = {"u_crit": res.u_crit, "omega_crit": res.omega_crit,
               "bracket_lo": res.bracket[0], "bracket_hi": res.bracket[1], "error": None}
    except (FlutterBeamError, ValueError) as exc:
        out = {"u_crit": float("nan"), "omega_crit": float("nan"), "bracket_lo": float("nan"),
               "bracket_hi": float("nan"), "error": f"{type(exc).__name__}: {exc}"}
    out["wall_time"] = time.perf_counter() - t0
    return out


def _sim_task(task):
    config, params, ic, T, M, rtol, atol, dt, snaps = task
    t0 = time.perf_counter()
    try:
        traj = simulate(config, params, ic, T, M=M, rtol=rtol, atol=atol, sample_dt=dt)
    except (FlutterBeamError, ValueError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}", "wall_time": time.perf_counter() - t0}
    tr = traj.energies()
    snap_idx = sorted({int(np.argmin(np.abs(traj.t - ts))) for ts in snaps if ts <= traj.t[-1] + 1e-12})
    steady = detect_steady(traj)
    return {
        "error": None, "t": traj.t, "observable": traj.observable,
        "E": tr.E, "Pi": tr.Pi, "scriptE": tr.scriptE, "Ehat": tr.Ehat,
        "x": traj.grid.x, "snapshots": [(traj.t[i], traj.w[i]) for i in snap_idx],
        "final_w": traj.w[-1], "steady": steady,
        "diverged": traj.diverged, "message": traj.message, "nfev": traj.nfev,
        "wall_time": time.perf_counter() - t0,
    }


def _map(fn, tasks, parallelism: int):
    if parallelism <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, tasks))


def _fname(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_.=" else "_" for ch in text)


def run_scenario(s: Scenario, out_dir, parallelism: int = 1) -> RunManifest:
    """Run every job of ``s``, write CSV artifacts and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    if s.kind == "ucrit-sweep":
        runs, files, summary = _run_sweep(s, out, parallelism)
    else:
        runs, files, summary = _run_battery(s, out, parallelism)
    man = RunManifest(name=s.name, version=__version__, scenario=s.to_dict(), runs=runs,
                      files=files, summary=summary, conflicts=list(s.notes),
                      wall_time=time.perf_counter() - t_start)
    write_json(out / "manifest.json", man)
    return man


def _run_sweep(s: Scenario, out: Path, parallelism: int):
    axis = s.sweep.axis
    tasks = [(c, s.params, axis, v, s.u_range, s.ucrit_tol, s.modes)
             for c in s.configs for v in s.sweep.values]
    results = _map(_sweep_task, tasks, parallelism)
    runs, files, summary = [], [], {}
    nv = len(s.sweep.values)
    for ci, c in enumerate(s.configs):
        chunk = results[ci * nv:(ci + 1) * nv]
        fname = f"ucrit-{_fname(c.label)}.csv"
        write_csv(out / fname, ["axis_value", "u_crit", "omega_crit", "bracket_lo", "bracket_hi"],
                  [(v, r["u_crit"], r["omega_crit"], r["bracket_lo"], r["bracket_hi"])
                   for v, r in zip(s.sweep.values, chunk)])
        files.append(fname)
        for v, r in zip(s.sweep.values, chunk):
            runs.append(RunRecord(run_id=f"{c.label}-{axis}={v!r}", config=c.label,
                                  params=s.params.with_(**{axis: v}).to_dict(), axis_value=v,
                                  files=[fname], status="ok" if r["error"] is None else "failed",
                                  error=r["error"], wall_time=r["wall_time"],
                                  results={"u_crit": r["u_crit"], "omega_crit": r["omega_crit"]}))
        uc = np.array([r["u_crit"] for r in chunk])
        ok = ~np.isnan(uc)
        d = np.diff(uc[ok])
        summary[c.label] = {
            "axis": axis, "n_points": nv, "n_failed": int((~ok).sum()),
            "monotone_increasing": bool(np.all(d > 0)) if d.size else None,
            "monotone_decreasing": bool(np.all(d < 0)) if d.size else None,
        }
    return runs, files, summary


def _u_crits(s: Scenario) -> dict:
    if not (s.sweep is not None and s.sweep.axis == "U" and s.u_relative):
        return {}
    out = {}
    for c in s.configs:
        out[c.label] = find_ucrit(c, s.params, s.u_range, tol=s.ucrit_tol, N=s.modes).u_crit
    return out


def _run_battery(s: Scenario, out: Path, parallelism: int):
    ucrits = _u_crits(s)
    jobs = []
    for c in s.configs:
        plist = _variant_params(s, c, ucrits.get(c.label))
        vals = s.sweep.values if s.sweep is not None else [None]
        for (v, p), ic in itertools.product(zip(vals, plist), s.initial_data):
            jobs.append((c, v, p, ic))
    tasks = [(c, p, ic, s.horizon, s.resolution or default_resolution(p.L), s.rtol, s.atol,
              s.sample_dt, s.snapshot_times) for c, v, p, ic in jobs]
    results = _map(_sim_task, tasks, parallelism)

    runs, files = [], []
    for i, ((c, v, p, ic), r) in enumerate(zip(jobs, results)):
        tag = f"{i:02d}-{c.label}"
        if v is not None:
            tag += f"-{s.sweep.axis}={v!r}"
        tag = _fname(f"{tag}-{ic.label}")
        rec = RunRecord(run_id=tag, config=c.label, params=p.to_dict(), initial_data=ic.to_dict(),
                        axis_value=v, wall_time=r["wall_time"])
        if r["error"] is not None:
            rec.status, rec.error = "failed", r["error"]
            runs.append(rec)
            continue
        rec.diverged, rec.message = bool(r["diverged"]), r["message"]
        if "observable" in s.outputs:
            rec.files.append(_write(out / f"{tag}.csv", {
                "t": r["t"], "observable": r["observable"], "E": r["E"], "Pi": r["Pi"],
                "scriptE": r["scriptE"]}))
        if "energy" in s.outputs:
            rec.files.append(_write(out / f"{tag}-energy.csv", {
                "t": r["t"], "E": r["E"], "Pi": r["Pi"], "scriptE": r["scriptE"], "Ehat": r["Ehat"]}))
        if "snapshots" in s.outputs and r["snapshots"]:
            rows = [(t, x, w) for t, wv in r["snapshots"] for x, w in zip(r["x"], wv)]
            write_csv(out / f"{tag}-snapshots.csv", ["t", "x", "w"], rows)
            rec.files.append(f"{tag}-snapshots.csv")
        rec.results = _analyse_run(s, c, p, r)
        files.extend(rec.files)
        runs.append(rec)
    summary = _summarize(s, jobs, runs, results, ucrits)
    if "steady" in s.analysis:
        cols = {"x": results[0]["x"]} if results and results[0]["error"] is None else {}
        for rec, r in zip(runs, results):
            if r["error"] is None and len(r["x"]) == len(cols.get("x", [])):
                cols[rec.run_id] = r["final_w"]
        if len(cols) > 1:
            files.append(_write(out / "steady-profiles.csv", cols))
    return runs, files, summary


def _write(path: Path, columns: dict) -> str:
    write_columns(path, columns)
    return path.name


def _analyse_run(s: Scenario, config, params, r) -> dict:
    res = {"nfev": r["nfev"], "t_end": float(r["t"][-1])}
    sE = r["scriptE"]
    res["scriptE_initial"] = float(sE[0])
    res["scriptE_max"] = float(np.max(sE))
    res["E_max"] = float(np.max(r["E"]))
    res["late_growth"] = late_growth(sE)
    if "drift" in s.analysis:
        res["scriptE_drift"] = float(np.max(np.abs(sE - sE[0])) / max(abs(sE[0]), 1e-300))
    if "plateau" in s.analysis:
        n = len(sE)
        res["plateau"] = float(np.mean(sE[int(0.75 * n):]))
        res["early_mean"] = float(np.mean(sE[:max(1, int(0.25 * n))]))
    if "lco" in s.analysis:
        try:
            rep = detect_lco(r["t"], r["observable"])
            res["lco"] = rep
        except FlutterBeamError as exc:
            res["lco"] = {"error": f"{type(exc).__name__}: {exc}"}
    if "steady" in s.analysis:
        st = r["steady"]
        res["steady"] = {"is_steady": st.is_steady, "residual": st.residual,
                         "profile_change": st.profile_change,
                         "max_abs_w": float(np.max(np.abs(st.profile)))}
    if "growth" in s.analysis:
        t, E = r["t"], r["E"]
        win = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
        try:
            res["growth_rate"] = fit_growth_rate(_trace_like(t, E), win)
        except (FlutterBeamError, ValueError) as exc:
            res["growth_rate"] = None
            res["growth_error"] = str(exc)
        try:
            sp = ModalModel(config, params, s.modes).spectrum(params)
            res["modal_max_re_lambda"] = sp.max_growth
        except FlutterBeamError as exc:
            res["modal_error"] = str(exc)
    return res


def late_growth(energy) -> float:
    """max over the second half of the record divided by max over the first half.

    A run counts as bounded when this stays near 1: whatever transient gain
    happens early, the energy no longer climbs.
    """
    e = np.asarray(energy, float)
    h = len(e) // 2
    if h == 0:
        return 1.0
    return float(np.max(e[h:]) / max(np.max(e[:h]), 1e-300))


def _trace_like(t, E):
    from .diagnostics import EnergyTrace
    z = np.zeros_like(E)
    return EnergyTrace(np.asarray(t), np.asarray(E), z, np.asarray(E), np.asarray(E))


def _summarize(s: Scenario, jobs, runs, results, ucrits) -> dict:
    summ = {}
    if ucrits:
        summ["u_crit"] = ucrits
    ok = [(j, rec, r) for j, rec, r in zip(jobs, runs, results) if rec.status == "ok"]
    if "dichotomy" in s.analysis:
        summ["dichotomy"] = {}
        for c in s.configs:
            grp = sorted([(j[3].scale, rec) for j, rec, r in ok if j[0] == c], key=lambda a: a[0])
            if len(grp) < 2:
                continue
            (c_lo, lo), (c_hi, hi) = grp[0], grp[-1]
            lo_max = lo.results["scriptE_max"]
            bounded = not lo.diverged and lo.results["late_growth"] <= BOUNDED_LATE_GROWTH
            grows = hi.diverged or hi.results["scriptE_max"] > 10 * lo_max
            summ["dichotomy"][c.label] = {"low_scale": c_lo, "high_scale": c_hi,
                                          "low_bounded": bool(bounded), "high_grows": bool(grows),
                                          "dichotomy": bool(bounded and grows)}
    if "lco" in s.analysis:
        groups = {}
        for j, rec, r in ok:
            groups.setdefault((j[0].label, j[1]), []).append(rec)
        agree = []
        for (lab, v), recs in groups.items():
            reps = [rec.results.get("lco") for rec in recs]
            reps = [x for x in reps if not isinstance(x, dict)]
            if len(reps) < 2:
                continue
            A = np.array([x.amplitude for x in reps])
            P = np.array([x.period for x in reps])
            agree.append({"config": lab, "axis_value": v,
                          "amplitude_spread": float((A.max() - A.min()) / A.mean()),
                          "period_spread": float((P.max() - P.min()) / P.mean()),
                          "all_converged": bool(all(x.converged for x in reps))})
        if agree:
            summ["lco_agreement"] = agree
    if "plateau" in s.analysis and s.sweep is not None:
        plats = [rec.results["plateau"] for j, rec, r in ok]
        summ["plateau"] = {"values": plats,
                           "non_increasing": bool(np.all(np.diff(plats) <= 0))}
    if "steady" in s.analysis:
        prof = [(rec.run_id, r["final_w"]) for j, rec, r in ok]
        pairs = []
        for (a, pa), (b, pb) in itertools.combinations(prof, 2):
            pairs.append({"a": a, "b": b, "distance": profile_distance(pa, pb),
                          "distance_up_to_sign": profile_distance(pa, pb, allow_sign_flip=True),
                          "mirror_distance": profile_distance(pa, -pb)})
        summ["steady_pairs"] = pairs
    return summ
