"""Experiment drivers: energy/orthogonality runs, order studies, reference
caching, benchmarks, and the CSV / scenario-file formats they use."""
from __future__ import annotations

import configparser
import csv
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import NoConvergence
from .integrators import CotangentState, ReducedState, integrate, lie_poisson_step, vpd_step
from .linalg import hat, orthogonality_error, vee
from .systems import DipoleParams, dipole, dipole_initial_state, rigid_body, rigid_body_reduced
from .tableaux import ButcherTableau, builtin, builtin_names
from .tangent import FixedPointConfig

SYSTEMS = ("dipole", "rigid-body")
CSV_BASE = ["step", "t", "energy_err", "ortho_err"]
CSV_STATE = [f"g{i}{j}" for i in range(3) for j in range(3)] + ["p0", "p1", "p2"]
REFERENCE_FORMAT = "polarvi-reference"

DEFAULT_ORDER_HS = (1 / 10, 1 / 14, 1 / 20, 1 / 28)
DEFAULT_INERTIA = (0.7, 1.3, 2.1)
DEFAULT_MOMENTUM = (0.4, -0.9, 0.6)


def parse_real(text) -> float:
    """Float from a decimal or a fraction such as ``1/26``."""
    if isinstance(text, (int, float)):
        return float(text)
    return float(Fraction(str(text).strip()))


@dataclass
class Scenario:
    system: str = "dipole"
    method: str = "gl1"
    reduced: bool = False
    h: float = 0.01
    steps: int = 10_000
    tol: float = 1e-15
    max_iter: int = 100
    record_every: int = 1
    out: str | None = None
    dipole: DipoleParams = field(default_factory=DipoleParams)
    inertia: tuple = DEFAULT_INERTIA
    momentum: tuple = DEFAULT_MOMENTUM
    tableau: ButcherTableau | None = None

    def validate(self) -> "Scenario":
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}; choose from {list(SYSTEMS)}")
        if self.tableau is None and self.method not in builtin_names():
            raise ValueError(f"unknown method {self.method!r}; choose from {builtin_names()}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ValueError(f"h must be positive, got {self.h!r}")
        if self.steps < 0:
            raise ValueError(f"steps must be non-negative, got {self.steps}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1 or self.record_every < 1:
            raise ValueError("max_iter and record_every must be at least 1")
        if self.reduced and self.system != "rigid-body":
            raise ValueError("the reduced integrator needs a symmetric system (rigid-body)")
        return self

    @property
    def config(self) -> FixedPointConfig:
        return FixedPointConfig(self.tol, self.max_iter)

    def tableau_obj(self) -> ButcherTableau:
        return self.tableau if self.tableau is not None else builtin(self.method)

    def fingerprint(self) -> dict:
        """Everything that determines the trajectory apart from method and h."""
        d = self.dipole
        out = {"system": self.system, "reduced": self.reduced, "tol": self.tol}
        if self.system == "dipole":
            out["params"] = [d.m, d.alpha, d.q, d.beta, [float(x) for x in d.z]]
        else:
            out["params"] = [list(map(float, self.inertia)), list(map(float, self.momentum))]
        return out


@dataclass
class Model:
    """A scenario's step map on ``CotangentState`` plus its energy."""

    step: Callable
    initial: CotangentState
    energy: Callable[[CotangentState], float]


def build_model(sc: Scenario) -> Model:
    sc.validate()
    t, cfg, h = sc.tableau_obj(), sc.config, sc.h
    if sc.system == "dipole":
        sys = dipole(sc.dipole)
        return Model(lambda st: vpd_step(sys, t, h, st, cfg), dipole_initial_state(sc.dipole),
                     lambda st: sys.energy(st.g, st.p))
    inertia = np.diag(np.asarray(sc.inertia, dtype=float))
    start = CotangentState(np.eye(3), hat(np.asarray(sc.momentum, dtype=float)))
    if not sc.reduced:
        sys = rigid_body(inertia)
        return Model(lambda st: vpd_step(sys, t, h, st, cfg), start, lambda st: sys.energy(st.g, st.p))
    red = rigid_body_reduced(inertia)

    def step(st):
        # the rotation is reconstructed from the relative rotations f0
        new, cache = lie_poisson_step(red, t, h, ReducedState(st.p), cfg)
        return CotangentState(st.g @ cache.end_rot, new.mu), cache

    return Model(step, start, lambda st: red.energy(st.p))


def trajectory_error(a: CotangentState, b: CotangentState) -> float:
    """``|vee(p_a) - vee(p_b)|_2 + |g_a - g_b|_2``."""
    dp = np.asarray(a.p) - np.asarray(b.p)
    return float(np.linalg.norm(vee(dp)) + np.linalg.norm(np.asarray(a.g) - np.asarray(b.g), 2))


# -- long runs -------------------------------------------------------------

@dataclass
class ErrorReport:
    step: np.ndarray
    t: np.ndarray
    energy_err: np.ndarray
    ortho_err: np.ndarray
    states: np.ndarray | None = None
    summary: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return CSV_BASE + (CSV_STATE if self.states is not None else [])


def _state_row(st: CotangentState) -> list[float]:
    return list(np.asarray(st.g, dtype=float).ravel()) + list(vee(st.p))


def drift_slope(steps: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of ``values`` against ``steps`` (0 for fewer than two rows)."""
    if len(steps) < 2:
        return 0.0
    return float(np.polyfit(np.asarray(steps, dtype=float), values, 1)[0])


def run_scenario(sc: Scenario, with_state: bool = False, model: Model | None = None) -> ErrorReport:
    """Integrate ``sc`` and collect energy and orthogonality errors.

    Maxima are taken over every step (and every internal stage for the
    orthogonality error); rows are recorded every ``record_every`` steps.
    """
    model = model or build_model(sc)
    st0 = model.initial
    e0 = model.energy(st0)
    worst = {"energy": 0.0, "ortho": orthogonality_error(st0.g), "stage_ortho": 0.0}

    def observe(k, st, cache):
        worst["energy"] = max(worst["energy"], abs(model.energy(st) - e0))
        worst["ortho"] = max(worst["ortho"], orthogonality_error(st.g))
        stage = max(orthogonality_error(u) for u in cache.stage_rots)
        worst["stage_ortho"] = max(worst["stage_ortho"], stage, orthogonality_error(cache.end_rot))

    def record(k, st, cache):
        row = [k, k * sc.h, abs(model.energy(st) - e0), orthogonality_error(st.g)]
        return row + _state_row(st) if with_state else row

    start = time.perf_counter()
    traj = integrate(model.step, st0, sc.steps, observers=[observe], record=record, record_every=sc.record_every)
    wall = time.perf_counter() - start

    rows = np.array(traj.records, dtype=float)
    its = np.array(traj.iterations, dtype=float)
    report = ErrorReport(
        step=rows[:, 0].astype(int),
        t=rows[:, 1],
        energy_err=rows[:, 2],
        ortho_err=rows[:, 3],
        states=rows[:, 4:] if with_state else None,
    )
    report.summary = {
        "system": sc.system,
        "method": sc.tableau_obj().name or sc.method,
        "reduced": sc.reduced,
        "h": sc.h,
        "steps": sc.steps,
        "energy0": e0,
        "max_energy_err": worst["energy"],
        "final_energy_err": float(report.energy_err[-1]),
        "drift_slope": drift_slope(report.step, report.energy_err),
        "max_ortho_err": worst["ortho"],
        "max_stage_ortho_err": worst["stage_ortho"],
        "mean_iterations": float(its.mean()) if its.size else 0.0,
        "max_iterations": int(its.max()) if its.size else 0,
        "wall_seconds": wall,
    }
    return report


def run_energy_drift(sc: Scenario) -> ErrorReport:
    return run_scenario(sc, with_state=False)


# -- CSV -------------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_report_csv(report: ErrorReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(report.columns)
        for i in range(len(report.step)):
            row = [str(int(report.step[i])), _fmt(report.t[i]), _fmt(report.energy_err[i]), _fmt(report.ortho_err[i])]
            if report.states is not None:
                row += [_fmt(x) for x in report.states[i]]
            w.writerow(row)


def read_report_csv(path) -> ErrorReport:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:4] != CSV_BASE or header[4:] not in ([], CSV_STATE):
        raise ValueError(f"unrecognised CSV header {header}")
    data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
    return ErrorReport(
        step=data[:, 0].astype(int),
        t=data[:, 1],
        energy_err=data[:, 2],
        ortho_err=data[:, 3],
        states=data[:, 4:] if len(header) > 4 else None,
    )


# -- reference cache -------------------------------------------------------

def _reference_key(sc: Scenario, horizon: float, method: str, h: float) -> dict:
    return {**sc.fingerprint(), "T": horizon, "method": method, "h": h}


def _read_cache(path: Path) -> dict:
    if not path.exists():
        return {"format": REFERENCE_FORMAT, "version": 1, "entries": []}
    data = json.loads(path.read_text())
    if data.get("format") != REFERENCE_FORMAT:
        raise ValueError(f"{path} is not a reference cache")
    return data


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def steps_for(horizon: float, h: float) -> int:
    n = round(horizon / h)
    if n < 1 or abs(n * h - horizon) > 1e-12 * max(1.0, horizon):
        raise ValueError(f"step {h!r} does not divide the horizon {horizon!r}")
    return n


def compute_endpoint(sc: Scenario, horizon: float) -> CotangentState:
    sc = replace(sc, steps=steps_for(horizon, sc.h))
    model = build_model(sc)
    return integrate(model.step, model.initial, sc.steps).final


def make_reference(sc: Scenario, horizon: float = 0.5, method: str = "gl3", h: float = 0.001,
                   path=None, force: bool = False) -> CotangentState:
    """Endpoint at ``horizon`` of the reference run, cached in the JSON file ``path``."""
    key = _reference_key(sc, horizon, method, h)
    cache_path = Path(path) if path is not None else None
    data = _read_cache(cache_path) if cache_path is not None else None
    if data is not None and not force:
        for entry in data["entries"]:
            if entry["key"] == key:
                return CotangentState(np.array(entry["g"]), hat(np.array(entry["p"])))
    # the reference keeps the default iteration cap whatever the scenario asks for
    ref_sc = replace(sc, method=method, h=h, tableau=None, max_iter=max(sc.max_iter, Scenario.max_iter))
    end = compute_endpoint(ref_sc, horizon)
    if data is not None:
        entries = [e for e in data["entries"] if e["key"] != key]
        entries.append({"key": key, "g": end.g.tolist(), "p": vee(end.p).tolist()})
        data["entries"] = entries
        # json writes floats with repr, which round-trips exactly
        _write_atomic(cache_path, json.dumps(data, indent=1))
    return end


@dataclass
class OrderStudy:
    hs: list
    errors: list
    status: list
    slope: float
    window: tuple


def fit_slope(hs: Sequence[float], errors: Sequence[float], window=None) -> float:
    """Least-squares slope of log(error) against log(h) over ``window = (h_min, h_max)``."""
    lo, hi = window if window is not None else (-math.inf, math.inf)
    pts = [(h, e) for h, e in zip(hs, errors)
           if lo <= h <= hi and e is not None and math.isfinite(e) and e > 0]
    if len(pts) < 2:
        return math.nan
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def run_order_study(sc: Scenario, hs: Sequence[float] = DEFAULT_ORDER_HS, horizon: float = 0.5,
                    window=None, reference=None, ref_method: str = "gl3", ref_h: float = 0.001) -> OrderStudy:
    """Endpoint errors at ``horizon`` for every step size, and the fitted order.

    Grid points whose fixed-point iteration fails are recorded with status
    ``no-convergence`` and left out of the fit.
    """
    ref = make_reference(sc, horizon, ref_method, ref_h, reference)
    errors, status = [], []
    for h in hs:
        try:
            end = compute_endpoint(replace(sc, h=h), horizon)
        except NoConvergence:
            errors.append(math.nan)
            status.append("no-convergence")
            continue
        errors.append(trajectory_error(end, ref))
        status.append("ok")
    return OrderStudy(list(hs), errors, status, fit_slope(hs, errors, window), window)


def write_order_csv(study: OrderStudy, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "error", "status"])
        for h, e, s in zip(study.hs, study.errors, study.status):
            w.writerow([_fmt(h), _fmt(e), s])


# -- benchmarks ------------------------------------------------------------

@dataclass
class BenchResult:
    times: list
    steps: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.times))

    @property
    def min(self) -> float:
        return float(np.min(self.times))


def bench(sc: Scenario, repeats: int = 3) -> BenchResult:
    """Wall-clock seconds for integrating ``sc`` end to end, ``repeats`` times."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    model = build_model(sc)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        integrate(model.step, model.initial, sc.steps)
        times.append(time.perf_counter() - start)
    return BenchResult(times, sc.steps)


# -- scenario files --------------------------------------------------------

_SCENARIO_KEYS = {
    "system": str,
    "method": str,
    "reduced": None,
    "h": parse_real,
    "steps": int,
    "tol": parse_real,
    "max_iter": int,
    "record_every": int,
    "out": str,
}


def _floats(text: str) -> tuple:
    return tuple(parse_real(x) for x in text.split(","))


def parse_scenario(text: str, base: Scenario | None = None) -> Scenario:
    """Read an INI-style scenario.  Keys outside any section belong to
    ``[scenario]``; ``[dipole]``, ``[rigid-body]`` and ``[tableau]`` are optional."""
    cp = configparser.ConfigParser()
    if not text.lstrip().startswith("["):
        text = "[scenario]\n" + text
    cp.read_string(text)
    sc = replace(base) if base is not None else Scenario()
    if cp.has_section("scenario"):
        sec = cp["scenario"]
        for raw in sec:
            key = raw.replace("-", "_")
            if key not in _SCENARIO_KEYS:
                raise ValueError(f"unknown scenario key {raw!r}")
            conv = _SCENARIO_KEYS[key]
            setattr(sc, key, sec.getboolean(raw) if conv is None else conv(sec[raw]))
    if cp.has_section("dipole"):
        sec = cp["dipole"]
        kw = {k: parse_real(sec[k]) for k in ("m", "alpha", "q", "beta") if k in sec}
        if "z" in sec:
            kw["z"] = np.array(_floats(sec["z"]))
        sc.dipole = replace(sc.dipole, **kw)
    if cp.has_section("rigid-body"):
        sec = cp["rigid-body"]
        if "inertia" in sec:
            sc.inertia = _floats(sec["inertia"])
        if "momentum" in sec:
            sc.momentum = _floats(sec["momentum"])
    if cp.has_section("tableau"):
        sec = cp["tableau"]
        data = {k: json.loads(sec[k]) for k in ("a", "b", "c") if k in sec}
        name = sec.get("name", "custom")
        sc.tableau = ButcherTableau.from_strings(data, name)
        sc.tableau.check(1e-14)
        sc.method = name
    return sc


def load_scenario(path, base: Scenario | None = None) -> Scenario:
    return parse_scenario(Path(path).read_text(), base)

