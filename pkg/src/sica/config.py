"""Scenario configuration: YAML schema, validation and defaults.

Schema (version 1); every block and key is optional::

    schema_version: 1
    model:      {mu, Lambda, beta, eta_C, eta_A, phi, rho, gamma, omega,
                 d_S, d_I, d_C, d_A, xi1, xi2, xi3, d}
    grid:       {nx: 64, ny: 64, Lx: 10.0, Ly: 10.0}
    time:       {T: 25.0, dt: null}          # null -> min(1e-2, CFL bound)
    objective:  {a: 1.0, b: 1.0, u_max: 1.0}
    fbsm:       {max_iters: 200, tol: 1.0e-4, theta: 0.5,
                 jacobian_mode: full_jacobian}
    initial:                                 # one entry per compartment
      S: {uniform: 2.19}
      I: {gaussian: {amplitude: 0.5, center_x: 5.0, center_y: 5.0, width: 1.0}}
      C: {uniform: 0.0}
      A: {file: path/to/field.csv}           # same layout as snapshot files
    control:    {mode: constant, value: 0.0} # or {mode: optimize}
    output:     {snapshot_stride: 100, directory: out}

Omitted model parameters take the reference SICA rates of :class:`ModelParams`.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .control import FbsmConfig
from .errors import ParseError, ValidationError
from .forward import COMPARTMENTS, ODE_DT_CAP, TimeSpec, cfl_max_dt
from .grid import GridSpec
from .model import ModelParams, ObjectiveConfig

SCHEMA_VERSION = 1

_MODEL_KEYS = [f.name for f in dataclasses.fields(ModelParams)]
_GRID_KEYS = ["nx", "ny", "Lx", "Ly"]
_TIME_KEYS = ["T", "dt"]
_OBJECTIVE_KEYS = ["a", "b", "u_max"]
_FBSM_KEYS = ["max_iters", "tol", "theta", "jacobian_mode"]
_GAUSSIAN_KEYS = ["amplitude", "center_x", "center_y", "width"]
_TOP_KEYS = ["schema_version", "model", "grid", "time", "objective", "fbsm",
             "initial", "control", "output"]


@dataclass(frozen=True)
class InitialSpec:
    """How one compartment's initial field is built.

    ``kind`` is ``"uniform"`` (``value``), ``"gaussian"`` (``amplitude``,
    ``center_x``, ``center_y``, ``width`` = standard deviation in km) or
    ``"file"`` (``path`` to a CSV with one grid row ``j`` per line).
    """

    kind: str
    value: float = 0.0
    amplitude: float = 0.0
    center_x: float = 0.0
    center_y: float = 0.0
    width: float = 1.0
    path: str = ""

    def build(self, g: GridSpec) -> np.ndarray:
        if self.kind == "uniform":
            return np.full(g.shape, self.value)
        if self.kind == "gaussian":
            X, Y = g.mesh()
            r2 = (X - self.center_x) ** 2 + (Y - self.center_y) ** 2
            return self.amplitude * np.exp(-r2 / (2.0 * self.width**2))
        field = np.loadtxt(self.path, delimiter=",", ndmin=2).T
        if field.shape != g.shape:
            raise ValidationError(f"initial file {self.path}",
                                  f"shape {field.shape[::-1]} (rows x cols) does not match grid")
        return field

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"uniform": self.value}
        if self.kind == "gaussian":
            return {"gaussian": {k: getattr(self, k) for k in _GAUSSIAN_KEYS}}
        return {"file": self.path}


def _default_initial(g: GridSpec) -> dict[str, InitialSpec]:
    return {
        "S": InitialSpec("uniform", value=2.19),
        "I": InitialSpec("gaussian", amplitude=0.5, center_x=g.Lx / 2,
                         center_y=g.Ly / 2, width=g.Lx / 10),
        "C": InitialSpec("uniform", value=0.0),
        "A": InitialSpec("uniform", value=0.0),
    }


@dataclass(frozen=True)
class ControlSpec:
    mode: str = "constant"
    value: float = 0.0


@dataclass(frozen=True)
class OutputSpec:
    snapshot_stride: int = 100
    directory: str = "out"


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully validated scenario; ``time.dt`` is always resolved."""

    model: ModelParams
    grid: GridSpec
    time: TimeSpec
    objective: ObjectiveConfig
    fbsm: FbsmConfig
    initial: dict[str, InitialSpec]
    control: ControlSpec = ControlSpec()
    output: OutputSpec = OutputSpec()

    def initial_state(self) -> np.ndarray:
        z0 = np.stack([self.initial[c].build(self.grid) for c in COMPARTMENTS])
        if (z0 < 0).any() or not np.isfinite(z0).all():
            raise ValidationError("initial", "initial fields must be finite and nonnegative")
        return z0

    def with_control(self, mode: str, value: float | None = None) -> "ScenarioConfig":
        spec = ControlSpec(mode, self.control.value if value is None else float(value))
        _check_control(spec, self.objective)
        return dataclasses.replace(self, control=spec)

    def with_output(self, directory: str | None = None,
                    snapshot_stride: int | None = None) -> "ScenarioConfig":
        out = OutputSpec(
            self.output.snapshot_stride if snapshot_stride is None else int(snapshot_stride),
            self.output.directory if directory is None else str(directory),
        )
        if out.snapshot_stride < 1:
            raise ValidationError("output.snapshot_stride", "must be >= 1")
        return dataclasses.replace(self, output=out)

    def to_dict(self) -> dict:
        model = self.model.as_dict()
        return {
            "schema_version": SCHEMA_VERSION,
            "model": model,
            "grid": dataclasses.asdict(self.grid),
            "time": {"T": self.time.T, "dt": self.time.dt},
            "objective": {k: getattr(self.objective, k) for k in _OBJECTIVE_KEYS},
            "fbsm": {k: getattr(self.fbsm, k) for k in _FBSM_KEYS},
            "initial": {c: self.initial[c].to_dict() for c in COMPARTMENTS},
            "control": dataclasses.asdict(self.control),
            "output": dataclasses.asdict(self.output),
        }


def default_scenario() -> ScenarioConfig:
    return parse_config({})


def _check_keys(block: Any, allowed: list[str], where: str) -> dict:
    if block is None:
        return {}
    if not isinstance(block, dict):
        raise ValidationError(where, f"expected a mapping, got {type(block).__name__}")
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ValidationError(f"{where}.{unknown[0]}", "unknown key")
    return block


def _number(block: dict, key: str, where: str, default=None, integer: bool = False):
    value = block.get(key, default)
    if value is None:
        return None
    if isinstance(value, str):
        # YAML 1.1 reads exponents without a dot ("1e-4") as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}.{key}", f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ValidationError(f"{where}.{key}", f"expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{where}.{key}", "must be finite")
    return value


def _build(where: str, fn, **kwargs):
    """Construct a dataclass, mapping its ValueError onto the offending key."""
    try:
        return fn(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        first = msg.split()[0].split("=")[0] if msg else ""
        key = first if first in kwargs else None
        raise ValidationError(f"{where}.{key}" if key else where, msg) from None


def _parse_initial(block: Any, g: GridSpec, base: Path | None) -> dict[str, InitialSpec]:
    block = _check_keys(block, list(COMPARTMENTS), "initial")
    specs = _default_initial(g)
    for comp, entry in block.items():
        where = f"initial.{comp}"
        entry = _check_keys(entry, ["uniform", "gaussian", "file"], where)
        if len(entry) != 1:
            raise ValidationError(where, "give exactly one of uniform, gaussian, file")
        (kind, value), = entry.items()
        if kind == "uniform":
            v = _number(entry, "uniform", where)
            if v is None or v < 0:
                raise ValidationError(f"{where}.uniform", "must be a number >= 0")
            specs[comp] = InitialSpec("uniform", value=v)
        elif kind == "gaussian":
            gb = _check_keys(value, _GAUSSIAN_KEYS, f"{where}.gaussian")
            missing = [k for k in _GAUSSIAN_KEYS if k not in gb]
            if missing:
                raise ValidationError(f"{where}.gaussian.{missing[0]}", "missing")
            vals = {k: _number(gb, k, f"{where}.gaussian") for k in _GAUSSIAN_KEYS}
            if vals["amplitude"] < 0:
                raise ValidationError(f"{where}.gaussian.amplitude", "must be >= 0")
            if vals["width"] <= 0:
                raise ValidationError(f"{where}.gaussian.width", "must be > 0")
            specs[comp] = InitialSpec("gaussian", **vals)
        else:
            if not isinstance(value, str):
                raise ValidationError(f"{where}.file", "expected a path string")
            path = Path(value)
            if not path.is_absolute() and base is not None:
                path = base / path
            if not path.exists():
                raise ValidationError(f"{where}.file", f"no such file: {path}")
            specs[comp] = InitialSpec("file", path=str(path.resolve()))
    return specs


def _check_control(spec: ControlSpec, objective: ObjectiveConfig) -> None:
    if spec.mode not in ("constant", "optimize"):
        raise ValidationError("control.mode", "must be 'constant' or 'optimize'")
    if not 0 <= spec.value <= objective.u_max:
        raise ValidationError("control.value", f"must lie in [0, {objective.u_max}]")


def parse_config(data: Any, base: Path | None = None) -> ScenarioConfig:
    """Validate an already-parsed mapping and fill in defaults."""
    data = _check_keys(data, _TOP_KEYS, "config")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"unsupported version {version!r}")

    mb = _check_keys(data.get("model"), _MODEL_KEYS, "model")
    model_kwargs = {k: _number(mb, k, "model") for k in mb}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = _build("model", ModelParams, **model_kwargs)
    if model.d != 0:
        warnings.warn("model.d is nonzero but unused by the model; ignoring it", stacklevel=2)

    gb = _check_keys(data.get("grid"), _GRID_KEYS, "grid")
    grid = _build("grid", GridSpec,
                  nx=_number(gb, "nx", "grid", 64, integer=True),
                  ny=_number(gb, "ny", "grid", 64, integer=True),
                  Lx=_number(gb, "Lx", "grid", 10.0), Ly=_number(gb, "Ly", "grid", 10.0))

    tb = _check_keys(data.get("time"), _TIME_KEYS, "time")
    T = _number(tb, "T", "time", 25.0)
    dt = _number(tb, "dt", "time")
    if T <= 0:
        raise ValidationError("time.T", "must be > 0")
    bound = cfl_max_dt(model, grid)
    if dt is None:
        time = TimeSpec.fitted(T, min(ODE_DT_CAP, bound))
    else:
        if dt <= 0:
            raise ValidationError("time.dt", "must be > 0")
        if dt > bound * (1 + 1e-12):
            raise ValidationError("time.dt", f"{dt!r} exceeds the stability bound {bound!r}")
        time = _build("time", TimeSpec, T=T, dt=dt)

    ob = _check_keys(data.get("objective"), _OBJECTIVE_KEYS, "objective")
    objective = _build("objective", ObjectiveConfig,
                       a=_number(ob, "a", "objective", 1.0),
                       b=_number(ob, "b", "objective", 1.0),
                       u_max=_number(ob, "u_max", "objective", 1.0), T=T)
    if objective.a == 0:
        raise ValidationError("objective.a", "must be > 0")

    fb = _check_keys(data.get("fbsm"), _FBSM_KEYS, "fbsm")
    mode = fb.get("jacobian_mode", "full_jacobian")
    fbsm = _build("fbsm", FbsmConfig,
                  max_iters=_number(fb, "max_iters", "fbsm", 200, integer=True),
                  tol=_number(fb, "tol", "fbsm", 1e-4),
                  theta=_number(fb, "theta", "fbsm", 0.5),
                  jacobian_mode=mode)

    initial = _parse_initial(data.get("initial"), grid, base)

    cb = _check_keys(data.get("control"), ["mode", "value"], "control")
    control = ControlSpec(str(cb.get("mode", "constant")), _number(cb, "value", "control", 0.0))
    _check_control(control, objective)

    outb = _check_keys(data.get("output"), ["snapshot_stride", "directory"], "output")
    stride = _number(outb, "snapshot_stride", "output", 100, integer=True)
    if stride < 1:
        raise ValidationError("output.snapshot_stride", "must be >= 1")
    output = OutputSpec(stride, str(outb.get("directory", "out")))

    cfg = ScenarioConfig(model, grid, time, objective, fbsm, initial, control, output)
    cfg.initial_state()
    return cfg


def load_config(path) -> ScenarioConfig:
    """Read and validate a YAML scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(exc), location=str(path)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(problem, location=loc) from None
    if data is None:
        data = {}
    return parse_config(data, base=path.parent)


def dump_config(cfg: ScenarioConfig) -> str:
    """YAML text that :func:`load_config` reads back to an equal config."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
