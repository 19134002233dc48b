# python
"""
epblowup/config.py
Run configuration: DEFAULT_CONFIG, the line-based section format, schema
validation and assembly into Params / HorizonPolicy / InitialPoint objects.

File format:

    # comment
    [params]
    d = 3
    k = -1
    c = 1
    [data]
    F0 = gaussian a=0.5 sigma=1
    [scan]
    axes = G0, v0
    G0 = -1.0 0.3 41

Values parse as bool, int, float, whitespace lists of numbers, comma lists, or
profile specs (`<family> key=value ...`, `grid r=0,1,2 v=1,0.5,0`).
"""
from __future__ import annotations

import copy
import logging
import math
import pathlib
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import jsonschema
import numpy as np

from .errors import ConfigError, EpBlowupError
from .linearization import HorizonPolicy
from .model import (
    PROFILE_FAMILIES,
    AffineProfile,
    InitialPoint,
    Params,
    RadialProfile,
    derive_point,
    profile_from_spec,
    radial_field_from_density,
)

logger = logging.getLogger(__name__)

SCAN_AXES = ("F0", "G0", "u0", "v0")

DEFAULT_CONFIG: Dict[str, Any] = {
    "version": "0.1",
    "params": {"d": 3, "k": -1.0, "c": 1.0, "m": 0.0, "mu": 0.0},
    "data": {"r0": 1.0, "F0": 0.0, "G0": 0.0, "u0": 0.0, "v0": 0.0, "density": "non-strict"},
    "scan": {
        "axes": ["G0", "v0"],
        "F0": [-1.5, 1.5, 21],
        "G0": [-1.0, 0.3, 21],
        "u0": [-3.0, 3.0, 21],
        "v0": [-3.0, 3.0, 21],
        "r": [0.0, 5.0, 51],
        "refine": 10,
    },
    "policy": {
        "periods": 50.0,
        "tol": 1e-10,
        "atol": 1e-12,
        "escape": 1e6,
        "node_eps": 1e-3,
        "separatrix": True,
        "jobs": 1,
    },
    "phase": {"seeds": [[0.5, 0.0], [1.0, 0.0], [0.0, -0.5]], "t_end": 20.0, "samples": 400, "separatrix_points": 200},
    "crossval": {"suite": "d4-c0", "size": 10, "band": 0.01, "seed": 12345},
    "output": {"dir": "out", "format": "csv", "events": True},
}

_NUMBER = {"type": "number"}
_PROFILE = {
    "type": "object",
    "properties": {"kind": {"type": "string", "enum": ["family", "grid"]}},
    "required": ["kind"],
}
_NUMBER_OR_PROFILE = {"oneOf": [_NUMBER, _PROFILE]}
_RANGE = {
    "type": "array",
    "items": [_NUMBER, _NUMBER, {"type": "integer", "minimum": 2}],
    "minItems": 3,
    "maxItems": 3,
}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

RUN_CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": "epblowup-run.schema.json",
    "type": "object",
    "properties": {
        "version": {"type": "string"},
        "params": {
            "type": "object",
            "properties": {
                "d": {"type": "integer", "minimum": 1},
                "k": _NUMBER,
                "c": _NUMBER_OR_PROFILE,
                "m": _NUMBER,
                "mu": {"type": "number", "minimum": 0},
            },
            "required": ["d", "k", "c"],
            "additionalProperties": False,
        },
        "data": {
            "type": "object",
            "properties": {
                "r0": {"type": "number", "minimum": 0},
                "F0": _NUMBER_OR_PROFILE,
                "G0": _NUMBER_OR_PROFILE,
                "u0": _NUMBER,
                "v0": _NUMBER,
                "n0": _PROFILE,
                "density": {"type": "string", "enum": ["strict", "non-strict"]},
            },
            "additionalProperties": False,
        },
        "scan": {
            "type": "object",
            "properties": {
                "axes": {
                    "type": "array",
                    "items": {"type": "string", "enum": list(SCAN_AXES)},
                    "minItems": 2,
                    "maxItems": 2,
                    "uniqueItems": True,
                },
                "F0": _RANGE,
                "G0": _RANGE,
                "u0": _RANGE,
                "v0": _RANGE,
                "r": _RANGE,
                "refine": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "policy": {
            "type": "object",
            "properties": {
                "horizon": _POSITIVE,
                "periods": _POSITIVE,
                "tol": _POSITIVE,
                "atol": _POSITIVE,
                "escape": _POSITIVE,
                "node_eps": _POSITIVE,
                "separatrix": {"type": "boolean"},
                "jobs": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "phase": {
            "type": "object",
            "properties": {
                "seeds": {
                    "type": "array",
                    "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                },
                "t_end": _POSITIVE,
                "samples": {"type": "integer", "minimum": 2},
                "separatrix_points": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "crossval": {
            "type": "object",
            "properties": {
                "suite": {"type": "string"},
                "size": {"type": "integer", "minimum": 2},
                "band": {"type": "number", "minimum": 0},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "dir": {"type": "string"},
                "format": {"type": "string", "enum": ["csv", "json"]},
                "events": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


# ---------------------------------------------------------------- parsing


def _parse_scalar(token: str) -> Any:
    low = token.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _parse_profile(tokens: Sequence[str], lineno: int, key: str) -> Dict[str, Any]:
    kind = tokens[0]
    spec: Dict[str, Any] = {"kind": "grid"} if kind == "grid" else {"kind": "family", "family": kind}
    for tok in tokens[1:]:
        name, sep, raw = tok.partition("=")
        if not sep or not name or not raw:
            raise ConfigError(f"profile parameter must look like name=value, got {tok!r}", lineno, key)
        if kind == "grid":
            try:
                spec[name] = [float(x) for x in raw.split(",") if x]
            except ValueError as exc:
                raise ConfigError(f"grid values must be numbers: {exc}", lineno, key) from None
        else:
            value = _parse_scalar(raw)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"profile parameter {name} must be numeric", lineno, key)
            spec[name] = float(value)
    return spec


def parse_value(raw: str, lineno: int = 0, key: str = "") -> Any:
    raw = raw.strip()
    if not raw:
        raise ConfigError("empty value", lineno, key)
    tokens = raw.split()
    if tokens[0] in PROFILE_FAMILIES or tokens[0] == "grid":
        if len(tokens) > 1 and "=" in tokens[1]:
            return _parse_profile(tokens, lineno, key)
    if "," in raw:
        return [parse_value(item, lineno, key) for item in raw.split(",") if item.strip()]
    if len(tokens) > 1:
        values = [_parse_scalar(t) for t in tokens]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            raise ConfigError(f"cannot parse value {raw!r}", lineno, key)
        return values
    return _parse_scalar(tokens[0])


def parse_config_text(text: str) -> Dict[str, Any]:
    """Sections of `key = value` lines; '#' starts a comment."""
    out: Dict[str, Any] = {}
    section: Optional[str] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            out.setdefault(section, {})
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            if key == "version":
                out["version"] = raw.strip()
                continue
            raise ConfigError("key outside of any [section]", lineno, key)
        value = parse_value(raw, lineno, key)
        if section == "scan" and key == "axes" and isinstance(value, str):
            value = [value]
        if section == "phase" and key == "seeds" and value and not isinstance(value[0], list):
            value = [value]
        out[section][key] = value
    return out


def merge_config(base: Mapping[str, Any], user: Mapping[str, Any]) -> Dict[str, Any]:
    """Section-wise merge: user keys replace defaults inside each section."""
    merged = copy.deepcopy(dict(base))
    for section, values in user.items():
        if isinstance(values, Mapping) and isinstance(merged.get(section), dict):
            merged[section].update(copy.deepcopy(dict(values)))
        else:
            merged[section] = copy.deepcopy(values)
    return merged


def validate_config(cfg: Mapping[str, Any]) -> None:
    try:
        jsonschema.validate(instance=cfg, schema=RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or None
        raise ConfigError(f"invalid configuration: {exc.message}", field=path) from None


# ---------------------------------------------------------------- assembly


@dataclass(frozen=True)
class ScanSpec:
    axes: Tuple[str, str]
    ranges: Dict[str, Tuple[float, float, int]]
    fixed: Dict[str, float]
    r_grid: Tuple[float, float, int]
    refine: int = 10

    def values(self, axis: str) -> np.ndarray:
        lo, hi, n = self.ranges[axis]
        return np.linspace(lo, hi, int(n))

    def r_values(self) -> np.ndarray:
        lo, hi, n = self.r_grid
        grid = np.linspace(lo, hi, int(n))
        return grid if grid[0] == 0.0 else np.concatenate([[0.0], grid])


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    format: str = "csv"
    events: bool = True

    @property
    def path(self) -> pathlib.Path:
        return pathlib.Path(self.dir)


@dataclass
class RunConfig:
    raw: Dict[str, Any]
    params: Params
    policy: HorizonPolicy
    scan: ScanSpec
    output: OutputSpec
    jobs: int = 1
    source: Optional[str] = None
    _profiles: Dict[str, RadialProfile] = field(default_factory=dict, repr=False)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.raw.get(name, {}))

    @property
    def data(self) -> Dict[str, Any]:
        return self.section("data")

    @property
    def has_profiles(self) -> bool:
        data = self.data
        return "n0" in data or any(isinstance(data.get(k), dict) for k in ("F0", "G0"))

    def profile(self, name: str) -> RadialProfile:
        """F0 or G0 as a radial profile; G0 comes from n0 when a density is given."""
        if name in self._profiles:
            return self._profiles[name]
        data = self.data
        if name == "G0" and "n0" in data:
            n0 = profile_from_spec(data["n0"])
            field_nl = radial_field_from_density(n0, self.params.d)
            # r G' + d G = c - n  =>  G = c/d - (enclosed density field)
            prof: RadialProfile = AffineProfile(field_nl, -1.0, self.params.c0 / self.params.d)
        else:
            prof = profile_from_spec(data.get(name, 0.0))
        self._profiles[name] = prof
        return prof

    def point(self) -> InitialPoint:
        data = self.data
        r0 = float(data.get("r0", 1.0))
        if self.has_profiles:
            return derive_point(self.profile("F0"), self.profile("G0"), r0)
        return InitialPoint(
            r0, float(data["F0"]), float(data["G0"]), float(data.get("u0", 0.0)), float(data.get("v0", 0.0))
        )

    def to_record(self) -> Dict[str, Any]:
        return copy.deepcopy(self.raw)


def build_params(cfg: Mapping[str, Any]) -> Params:
    p = cfg["params"]
    c = p["c"]
    c_value = profile_from_spec(c) if isinstance(c, dict) else float(c)
    try:
        return Params(int(p["d"]), float(p["k"]), c_value, float(p.get("m", 0.0)), float(p.get("mu", 0.0)))
    except EpBlowupError as exc:
        raise ConfigError(str(exc), field="params") from None


def build_policy(cfg: Mapping[str, Any]) -> HorizonPolicy:
    pol = cfg["policy"]
    return HorizonPolicy(
        periods=float(pol["periods"]),
        horizon=float(pol["horizon"]) if "horizon" in pol else None,
        node_eps=float(pol["node_eps"]),
        rtol=float(pol["tol"]),
        atol=float(pol["atol"]),
        escape=float(pol["escape"]),
        use_separatrix=bool(pol["separatrix"]),
    )


def build_scan(cfg: Mapping[str, Any]) -> ScanSpec:
    scan = cfg["scan"]
    data = cfg["data"]
    axes = tuple(scan["axes"])
    ranges = {a: (float(scan[a][0]), float(scan[a][1]), int(scan[a][2])) for a in SCAN_AXES}
    fixed = {a: float(data[a]) for a in SCAN_AXES if isinstance(data.get(a), (int, float))}
    fixed["r0"] = float(data.get("r0", 1.0))
    r = scan["r"]
    return ScanSpec(axes, ranges, fixed, (float(r[0]), float(r[1]), int(r[2])), int(scan["refine"]))  # type: ignore[arg-type]


def build_config(cfg: Dict[str, Any], source: Optional[str] = None) -> RunConfig:
    validate_config(cfg)
    for key in ("tol", "atol", "horizon", "escape"):
        value = cfg["policy"].get(key)
        if value is not None and not math.isfinite(float(value)):
            raise ConfigError(f"policy {key} must be finite", field=f"policy.{key}")
    out = cfg["output"]
    return RunConfig(
        raw=cfg,
        params=build_params(cfg),
        policy=build_policy(cfg),
        scan=build_scan(cfg),
        output=OutputSpec(out["dir"], out["format"], bool(out["events"])),
        jobs=int(cfg["policy"]["jobs"]),
        source=source,
    )


def load_config(
    path: Optional[pathlib.Path] = None,
    text: Optional[str] = None,
    overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> RunConfig:
    """CLI overrides beat the file, the file beats DEFAULT_CONFIG."""
    source = None
    user: Dict[str, Any] = {}
    if path is not None:
        path = pathlib.Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        source = str(path)
    if text is not None:
        user = parse_config_text(text)
    cfg = merge_config(DEFAULT_CONFIG, user)
    if overrides:
        cfg = merge_config(cfg, {k: dict(v) for k, v in overrides.items() if v})
    logger.debug("configuration assembled from %s", source or "defaults")
    return build_config(cfg, source)
