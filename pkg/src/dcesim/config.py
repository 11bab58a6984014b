"""Scenario files: loading, validation and construction of model objects.

A scenario is a YAML (or JSON) mapping with up to five blocks::

    spacetime:  {r_s: 0.0}
    cavity:     {r0: 0.0, L0: 1.0, n_modes: 8}      # or {x1: ..., x2: ...}
    trajectory: {kind: oscillating, A: 1e-3, nu: 4.71, p: 2}
    run:        {methods: [dyson, integrate]}
    output:     {directory: out}

Unknown keys are errors. Validation collects every violation before failing.
Cavity positions are Schwarzschild radii when ``r_s > 0``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, DCEError
from .integrator import METHODS as INTEGRATOR_METHODS
from .modes import CavityConfig
from .quadrature import QuadratureSettings
from .spacetime import SchwarzschildSpacetime
from .symplectic import FrequencyMatrix
from .trajectories import (
    RIGID_PROFILES,
    OscillatingScenario,
    RigidTranslation,
    StaticTrajectory,
    TabulatedTrajectory,
    Trajectory,
)

__all__ = ["METHODS", "ScenarioConfig", "load_scenario", "parse_scenario"]

METHODS = ("dyson", "integrate", "scattering", "closed-form")
TRAJECTORY_KINDS = ("static", "oscillating", "rigid", "tabulated")

_BLOCK_KEYS = {
    "spacetime": {"r_s"},
    "cavity": {"r0", "L0", "x1", "x2", "n_modes"},
    "run": {"methods", "quadrature_tol", "integrator", "interior", "scan"},
    "output": {"directory"},
}
_TRAJECTORY_KEYS = {
    "static": {"kind", "T"},
    "oscillating": {"kind", "A", "epsilon", "nu", "p", "resonance"},
    "rigid": {"kind", "amplitude", "T", "profile", "frequency"},
    "tabulated": {"kind", "times", "x1", "x2"},
}
_INTEGRATOR_KEYS = {"method", "steps", "tol", "recompute_couplings", "backend"}
_SCAN_KEYS = {"m", "n", "nu", "nu_min", "nu_max", "points", "include_resonances", "rel_height"}
_RESONANCE_KEYS = {"q", "r", "branch"}

DEFAULTS = {
    "spacetime": {"r_s": 0.0},
    "cavity": {"n_modes": 8},
    "trajectory": {"kind": "static", "T": 1.0},
    "run": {"methods": ["dyson"], "quadrature_tol": 1e-12, "interior": None, "scan": None},
    "output": {"directory": "out"},
}
INTEGRATOR_DEFAULTS = {"method": "magnus4", "steps": None, "tol": 1e-10, "recompute_couplings": True, "backend": None}


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


class _Checker:
    def __init__(self):
        self.violations: list[str] = []

    def fail(self, msg):
        self.violations.append(msg)

    def keys(self, where, block, allowed):
        if not isinstance(block, dict):
            self.fail(f"{where}: expected a mapping, got {type(block).__name__}")
            return False
        for k in sorted(set(block) - allowed, key=str):
            self.fail(f"{where}.{k}: unknown key (allowed: {', '.join(sorted(allowed))})")
        return True

    def number(self, where, value, positive=False, nonnegative=False):
        if not _is_number(value):
            self.fail(f"{where}: expected a finite number, got {value!r}")
            return False
        if positive and not value > 0:
            self.fail(f"{where}: must be > 0, got {value}")
            return False
        if nonnegative and not value >= 0:
            self.fail(f"{where}: must be >= 0, got {value}")
            return False
        return True

    def integer(self, where, value, minimum=1):
        if not _is_int(value) or value < minimum:
            self.fail(f"{where}: expected an integer >= {minimum}, got {value!r}")
            return False
        return True


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario. ``data`` is the normalized mapping with defaults filled in."""

    data: dict
    source: str = "<memory>"

    # --- blocks -------------------------------------------------------------
    @property
    def methods(self) -> list:
        return list(self.data["run"]["methods"])

    @property
    def r_s(self) -> float:
        return float(self.data["spacetime"]["r_s"])

    @property
    def r0(self) -> float:
        return float(self.data["cavity"]["r0"])

    @property
    def L0(self) -> float:
        return float(self.data["cavity"]["L0"])

    @property
    def n_modes(self) -> int:
        return int(self.data["cavity"]["n_modes"])

    @property
    def trajectory_kind(self) -> str:
        return self.data["trajectory"]["kind"]

    @property
    def interior(self):
        return self.data["run"]["interior"]

    @property
    def integrator_options(self) -> dict:
        return dict(self.data["run"]["integrator"])

    @property
    def scan_options(self):
        return self.data["run"]["scan"]

    @property
    def quadrature(self) -> QuadratureSettings:
        return QuadratureSettings(tol=float(self.data["run"]["quadrature_tol"]))

    # --- model objects ------------------------------------------------------
    def spacetime(self) -> SchwarzschildSpacetime:
        return SchwarzschildSpacetime(self.r_s)

    def cavity(self) -> CavityConfig:
        """Cavity in conformal (tortoise) coordinates."""
        st = self.spacetime()
        return CavityConfig(
            float(st.tortoise(self.r0)) if not st.is_flat else self.r0,
            float(st.tortoise(self.r0 + self.L0)) if not st.is_flat else self.r0 + self.L0,
            self.n_modes,
        )

    def frequencies(self) -> FrequencyMatrix | None:
        """Lowest-order frequencies ``f(r0) m pi / L0`` in curved space; None when flat."""
        st = self.spacetime()
        if st.is_flat:
            return None
        m = np.arange(1, self.n_modes + 1)
        return FrequencyMatrix(st.lapse(self.r0) * m * math.pi / self.L0)

    def oscillating_scenario(self) -> OscillatingScenario:
        tr = self.data["trajectory"]
        if tr["kind"] != "oscillating":
            raise ConfigError(["trajectory.kind: the oscillating scenario needs kind 'oscillating'"])
        return OscillatingScenario(self.r0, self.L0, float(tr["A"]), float(tr["nu"]), int(tr["p"]))

    def radial_trajectory(self) -> Trajectory:
        tr = self.data["trajectory"]
        r0, r1 = self.r0, self.r0 + self.L0
        kind = tr["kind"]
        if kind == "static":
            return StaticTrajectory(r0, r1, float(tr["T"]))
        if kind == "oscillating":
            return self.oscillating_scenario().radial_trajectory()
        if kind == "rigid":
            return RigidTranslation(r0, r1, float(tr["amplitude"]), float(tr["T"]), tr["profile"], float(tr["frequency"]))
        return TabulatedTrajectory(tr["times"], tr["x1"], tr["x2"])

    def trajectory(self) -> Trajectory:
        """Wall worldlines in conformal coordinates."""
        st = self.spacetime()
        radial = self.radial_trajectory()
        if st.is_flat:
            return radial
        return self.oscillating_scenario().conformal_trajectory(st) if self.trajectory_kind == "oscillating" \
            else _conformal(radial, st)

    def scan_grid(self) -> np.ndarray:
        sc = self.scan_options
        if sc is None:
            raise ConfigError(["run.scan: no scan block in this scenario"])
        if sc.get("nu") is not None:
            grid = np.asarray(sc["nu"], dtype=float)
        else:
            grid = np.linspace(float(sc["nu_min"]), float(sc["nu_max"]), int(sc["points"]))
        if sc.get("include_resonances", True):
            scen = self.oscillating_scenario()
            st = self.spacetime()
            total = float(scen.omega0(sc["m"], st) + scen.omega0(sc["n"], st))
            extra = [v for v in (total, 0.5 * total) if grid.min() <= v <= grid.max()]
            grid = np.unique(np.concatenate([grid, extra]))
        return grid

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)


def _conformal(radial, st):
    from .spacetime import radial_to_conformal

    return radial_to_conformal(st, radial)


def _read(path: Path) -> dict:
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([f"{path}: YAML parse error{where}: {problem}"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return data


def load_scenario(path, overrides: dict | None = None) -> ScenarioConfig:
    """Read and validate a scenario file.

    ``overrides`` may set ``tolerance`` (quadrature and integrator) and
    ``directory``; they are applied before validation.
    """
    path = Path(path)
    raw = _read(path)
    return parse_scenario(raw, source=str(path), overrides=overrides)


def parse_scenario(raw: dict, source: str = "<memory>", overrides: dict | None = None) -> ScenarioConfig:
    chk = _Checker()
    raw = copy.deepcopy(raw)
    for k in sorted(set(raw) - (set(_BLOCK_KEYS) | {"trajectory"}), key=str):
        chk.fail(f"{k}: unknown top-level block (allowed: cavity, output, run, spacetime, trajectory)")

    data = {}
    for block in ("spacetime", "cavity", "trajectory", "run", "output"):
        given = raw.get(block, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            chk.fail(f"{block}: expected a mapping, got {type(given).__name__}")
            given = {}
        if block == "trajectory" and not given:
            merged = dict(DEFAULTS["trajectory"])
        elif block == "trajectory":
            merged = dict(given)
        else:
            merged = {**DEFAULTS[block], **given}
        data[block] = merged
    overrides = overrides or {}
    if overrides.get("tolerance") is not None:
        tol = overrides["tolerance"]
        data["run"]["quadrature_tol"] = tol
        data["run"]["integrator"] = {**(data["run"].get("integrator") or {}), "tol": tol}
    if overrides.get("directory") is not None:
        data["output"]["directory"] = str(overrides["directory"])

    _check_spacetime(chk, data)
    _check_cavity(chk, data)
    _check_trajectory(chk, data)
    _check_run(chk, data)
    if chk.keys("output", data["output"], _BLOCK_KEYS["output"]):
        if not isinstance(data["output"].get("directory"), str) or not data["output"]["directory"]:
            chk.fail("output.directory: expected a nonempty path string")
    if not chk.violations:
        _check_model(chk, data)
    if chk.violations:
        raise ConfigError(chk.violations)
    return ScenarioConfig(data, source)


def _check_spacetime(chk, data):
    st = data["spacetime"]
    if chk.keys("spacetime", st, _BLOCK_KEYS["spacetime"]):
        chk.number("spacetime.r_s", st.get("r_s"), nonnegative=True)


def _check_cavity(chk, data):
    cav = data["cavity"]
    if not chk.keys("cavity", cav, _BLOCK_KEYS["cavity"]):
        return
    radial = {"r0", "L0"} & set(cav)
    positional = {"x1", "x2"} & set(cav)
    if radial and positional:
        chk.fail("cavity: give either r0/L0 or x1/x2, not both")
        return
    if positional:
        if chk.number("cavity.x1", cav.get("x1")) & chk.number("cavity.x2", cav.get("x2")):
            if cav["x2"] <= cav["x1"]:
                chk.fail(f"cavity: x2={cav['x2']} must exceed x1={cav['x1']}")
            else:
                cav["r0"], cav["L0"] = cav["x1"], cav["x2"] - cav["x1"]
        cav.pop("x1", None)
        cav.pop("x2", None)
    else:
        cav.setdefault("r0", 0.0)
        if "L0" not in cav:
            chk.fail("cavity.L0: required (or give x1 and x2)")
        else:
            chk.number("cavity.r0", cav["r0"])
            chk.number("cavity.L0", cav["L0"], positive=True)
    chk.integer("cavity.n_modes", cav.get("n_modes"))


def _check_trajectory(chk, data):
    tr = data["trajectory"]
    if not isinstance(tr, dict):
        return
    kind = tr.get("kind")
    if kind not in TRAJECTORY_KINDS:
        chk.fail(f"trajectory.kind: expected one of {', '.join(TRAJECTORY_KINDS)}, got {kind!r}")
        return
    chk.keys("trajectory", tr, _TRAJECTORY_KEYS[kind])
    if kind == "static":
        tr.setdefault("T", 1.0)
        chk.number("trajectory.T", tr["T"], positive=True)
    elif kind == "oscillating":
        if ("A" in tr) == ("epsilon" in tr):
            chk.fail("trajectory: give exactly one of A or epsilon")
        elif "A" in tr:
            chk.number("trajectory.A", tr["A"])
        else:
            chk.number("trajectory.epsilon", tr["epsilon"])
        if ("nu" in tr) == ("resonance" in tr):
            chk.fail("trajectory: give exactly one of nu or resonance")
        elif "nu" in tr:
            chk.number("trajectory.nu", tr["nu"], positive=True)
        else:
            res = tr["resonance"]
            if chk.keys("trajectory.resonance", res, _RESONANCE_KEYS):
                res.setdefault("branch", "main")
                chk.integer("trajectory.resonance.q", res.get("q"))
                chk.integer("trajectory.resonance.r", res.get("r"))
                if res["branch"] not in ("main", "subharmonic"):
                    chk.fail(f"trajectory.resonance.branch: expected main or subharmonic, got {res['branch']!r}")
        chk.integer("trajectory.p", tr.get("p"))
    elif kind == "rigid":
        tr.setdefault("profile", "smoothstep")
        tr.setdefault("frequency", 0.0)
        chk.number("trajectory.amplitude", tr.get("amplitude"))
        chk.number("trajectory.T", tr.get("T"), positive=True)
        if tr["profile"] not in RIGID_PROFILES:
            chk.fail(f"trajectory.profile: expected one of {', '.join(RIGID_PROFILES)}, got {tr['profile']!r}")
        if chk.number("trajectory.frequency", tr["frequency"], nonnegative=True):
            if tr["profile"] == "shake" and tr["frequency"] <= 0:
                chk.fail("trajectory.frequency: the shake profile needs a positive frequency")
    else:
        for key in ("times", "x1", "x2"):
            v = tr.get(key)
            if not isinstance(v, list) or len(v) < 2 or not all(_is_number(x) for x in v):
                chk.fail(f"trajectory.{key}: expected a list of at least two finite numbers")


def _check_run(chk, data):
    run = data["run"]
    if not chk.keys("run", run, _BLOCK_KEYS["run"]):
        return
    methods = run.get("methods")
    if not isinstance(methods, list) or not methods:
        chk.fail(f"run.methods: expected a nonempty list drawn from {', '.join(METHODS)}")
    else:
        for m in methods:
            if m not in METHODS:
                chk.fail(f"run.methods: unknown method {m!r} (allowed: {', '.join(METHODS)})")
        if len(set(map(str, methods))) != len(methods):
            chk.fail("run.methods: duplicate entries")
    chk.number("run.quadrature_tol", run.get("quadrature_tol"), positive=True)
    if run.get("interior") is not None:
        chk.integer("run.interior", run["interior"])
    integ = run.get("integrator") or {}
    if chk.keys("run.integrator", integ, _INTEGRATOR_KEYS):
        integ = {**INTEGRATOR_DEFAULTS, **integ}
        run["integrator"] = integ
        if integ["method"] not in INTEGRATOR_METHODS:
            chk.fail(f"run.integrator.method: expected one of {', '.join(INTEGRATOR_METHODS)}, got {integ['method']!r}")
        if integ["steps"] is not None:
            chk.integer("run.integrator.steps", integ["steps"])
        chk.number("run.integrator.tol", integ["tol"], positive=True)
        if not isinstance(integ["recompute_couplings"], bool):
            chk.fail("run.integrator.recompute_couplings: expected true or false")
        if integ["backend"] not in (None, "compiled", "python"):
            chk.fail(f"run.integrator.backend: expected compiled or python, got {integ['backend']!r}")
    scan = run.get("scan")
    if scan is not None and chk.keys("run.scan", scan, _SCAN_KEYS):
        scan.setdefault("include_resonances", True)
        scan.setdefault("rel_height", 0.5)
        chk.integer("run.scan.m", scan.get("m"))
        chk.integer("run.scan.n", scan.get("n"))
        if scan.get("nu") is not None:
            nu = scan["nu"]
            if not isinstance(nu, list) or not nu or not all(_is_number(v) and v > 0 for v in nu):
                chk.fail("run.scan.nu: expected a nonempty list of positive numbers")
        else:
            ok = chk.number("run.scan.nu_min", scan.get("nu_min"), positive=True)
            ok &= chk.number("run.scan.nu_max", scan.get("nu_max"), positive=True)
            ok &= chk.integer("run.scan.points", scan.get("points"), minimum=3)
            if ok and scan["nu_max"] <= scan["nu_min"]:
                chk.fail("run.scan: nu_max must exceed nu_min")
        if not isinstance(scan["include_resonances"], bool):
            chk.fail("run.scan.include_resonances: expected true or false")
        chk.number("run.scan.rel_height", scan["rel_height"], positive=True)


def _check_model(chk, data):
    """Cross-block invariants, checked once every field has the right type."""
    r_s = data["spacetime"]["r_s"]
    cav = data["cavity"]
    tr = data["trajectory"]
    run = data["run"]
    kind = tr["kind"]
    if r_s > 0 and cav["r0"] <= r_s:
        chk.fail(f"cavity.r0: r0={cav['r0']} must lie outside the horizon r_s={r_s}")
    if kind == "oscillating":
        if "epsilon" in tr:
            tr["A"] = tr.pop("epsilon") * cav["L0"]
        if "resonance" in tr:
            res = tr.pop("resonance")
            f0 = 1.0 if r_s == 0 or cav["r0"] <= r_s else 1.0 - r_s / cav["r0"]
            total = f0 * (res["q"] + res["r"]) * math.pi / cav["L0"]
            tr["nu"] = total if res["branch"] == "main" else 0.5 * total
            tr["resonance_source"] = res
        if not abs(tr["A"]) < cav["L0"]:
            chk.fail(f"trajectory.A: amplitude |A|={abs(tr['A'])} must be below L0={cav['L0']}")
    if kind == "tabulated":
        if not len(tr["times"]) == len(tr["x1"]) == len(tr["x2"]):
            chk.fail("trajectory: times, x1 and x2 must have the same length")
        else:
            if abs(tr["x1"][0] - cav["r0"]) > 1e-10 * max(1.0, abs(cav["r0"])) or \
                    abs(tr["x2"][0] - cav["r0"] - cav["L0"]) > 1e-10 * max(1.0, abs(cav["r0"] + cav["L0"])):
                chk.fail("trajectory: tabulated walls must start at the cavity positions")
    methods = run["methods"]
    if "scattering" in methods and (kind not in ("rigid", "static") or r_s > 0):
        chk.fail(
            "run.methods: scattering needs a rigid translation (x2 - x1 constant) in flat space; "
            f"trajectory kind is {kind!r} with r_s={r_s}"
        )
    if "closed-form" in methods and kind != "oscillating":
        chk.fail(f"run.methods: closed-form needs an oscillating trajectory, got kind {kind!r}")
    if run["scan"] is not None and kind != "oscillating":
        chk.fail(f"run.scan: scans need an oscillating trajectory, got kind {kind!r}")
    if run["interior"] is not None and run["interior"] > cav["n_modes"]:
        chk.fail(f"run.interior: {run['interior']} exceeds n_modes={cav['n_modes']}")
    scan = run["scan"]
    if scan is not None:
        for key in ("m", "n"):
            if scan[key] > cav["n_modes"]:
                chk.fail(f"run.scan.{key}: mode {scan[key]} exceeds n_modes={cav['n_modes']}")
    # build the model once so every module-level precondition is exercised at load time
    if not chk.violations:
        try:
            cfg = ScenarioConfig(data)
            st = cfg.spacetime()
            cfg.cavity()
            traj = cfg.trajectory()
            from .trajectories import validate

            report = validate(traj)
            for v in report.violations:
                chk.fail(f"trajectory: {v}")
            if kind == "rigid" and r_s == 0 and not traj.is_rigid():
                chk.fail("trajectory: rigid translation does not keep x2 - x1 constant")
            if not st.is_flat:
                cfg.frequencies()
        except DCEError as exc:
            chk.fail(f"model: {exc}")
