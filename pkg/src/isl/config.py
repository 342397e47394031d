"""Experiment configuration: JSON with a ``schema`` version field, complex numbers as ``[re, im]``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SCHEMA = "isl-config/1"
MODES = ("monodromy", "deform", "garnier", "slice-poles", "riccati", "verify-all")

DEFAULT_THRESHOLDS = {
    "trace_defect": 1e-8,
    "relation_residual": 1e-6,
    "conservation": 1e-8,
    "isomonodromy_drift": 1e-6,
    "lemma1": 1e-8,
    "b_drift": 1e-8,
    "pvi_residual": 1e-5,
    "roundtrip": 1e-9,
}


def parse_complex(value, field_name: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{field_name}: expected a number or [re, im], got {value!r}", field_name)


def parse_complex_list(value, field_name: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{field_name}: expected a list", field_name)
    return [parse_complex(v, f"{field_name}[{i}]") for i, v in enumerate(value)]


def _matrix(value, field_name):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(r, list) and len(r) == 2 for r in value)):
        raise ConfigError(f"{field_name}: expected a 2x2 matrix of [re, im] entries", field_name)
    return np.array(
        [[parse_complex(value[r][c], f"{field_name}[{r}][{c}]") for c in range(2)] for r in range(2)],
        dtype=np.complex128,
    )


@dataclass
class ExperimentConfig:
    mode: str
    n: int
    seed: int
    tol: float
    points: list | None = None
    residues: list | None = None
    random_family: dict = field(default_factory=dict)
    theta: dict | None = None
    path: dict = field(default_factory=dict)
    slice: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    raw: dict = field(default_factory=dict)


def load(path, mode: str | None = None, seed: int | None = None, tol: float | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", "config") from exc
    return from_dict(raw, mode, seed, tol)


def from_dict(raw: dict, mode: str | None = None, seed: int | None = None, tol: float | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "config")
    if raw.get("schema") != SCHEMA:
        raise ConfigError(f"schema: expected {SCHEMA!r}, got {raw.get('schema')!r}", "schema")
    m = mode or raw.get("mode")
    if m not in MODES:
        raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {m!r}", "mode")
    if "mode" in raw and mode is not None and raw["mode"] != mode:
        raise ConfigError(f"mode: config says {raw['mode']!r} but {mode!r} was requested", "mode")
    n = raw.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError(f"n: expected a positive integer, got {n!r}", "n")
    s = seed if seed is not None else raw.get("seed", 0)
    if not isinstance(s, int) or isinstance(s, bool) or s < 0:
        raise ConfigError(f"seed: expected a nonnegative integer, got {s!r}", "seed")
    t = tol if tol is not None else raw.get("tol", 1e-10)
    if not isinstance(t, (int, float)) or not (0 < t < 1):
        raise ConfigError(f"tol: expected a number in (0, 1), got {t!r}", "tol")
    cfg = ExperimentConfig(m, n, s, float(t), raw=raw)

    fam = raw.get("family", {"random": {}})
    if not isinstance(fam, dict):
        raise ConfigError("family: expected an object", "family")
    if "points" in fam or "residues" in fam:
        if "points" not in fam:
            raise ConfigError("family.points is required with explicit residues", "family.points")
        if "residues" not in fam:
            raise ConfigError("family.residues is required with explicit points", "family.residues")
        pts = parse_complex_list(fam["points"], "family.points")
        if len(pts) != n:
            raise ConfigError(f"family.points: expected the {n} moving points a_1..a_n", "family.points")
        res = fam["residues"]
        if not isinstance(res, list) or len(res) != n + 2:
            raise ConfigError(f"family.residues: expected {n + 2} matrices", "family.residues")
        cfg.points = pts + [0j, 1 + 0j]
        cfg.residues = [_matrix(r, f"family.residues[{i}]") for i, r in enumerate(res)]
    else:
        rnd = fam.get("random", {})
        if not isinstance(rnd, dict):
            raise ConfigError("family.random: expected an object", "family.random")
        opts = {"scale": float(rnd.get("scale", 1.0)), "centered": bool(rnd.get("centered", False))}
        if "beta_inf" in rnd:
            opts["beta_inf"] = parse_complex(rnd["beta_inf"], "family.random.beta_inf")
        cfg.random_family = opts

    if "theta" in raw:
        th = raw["theta"]
        if not isinstance(th, dict) or "thetas" not in th:
            raise ConfigError("theta.thetas is required", "theta.thetas")
        thetas = parse_complex_list(th["thetas"], "theta.thetas")
        if len(thetas) != n + 2:
            raise ConfigError(f"theta.thetas: expected {n + 2} values", "theta.thetas")
        cfg.theta = {"thetas": thetas}
        if "theta_inf" in th:
            cfg.theta["theta_inf"] = parse_complex(th["theta_inf"], "theta.theta_inf")
    elif m == "riccati":
        raise ConfigError("theta: required for riccati mode", "theta")

    path = raw.get("path", {})
    if not isinstance(path, dict):
        raise ConfigError("path: expected an object", "path")
    if "segments" in path:
        segs = path["segments"]
        if not isinstance(segs, list):
            raise ConfigError("path.segments: expected a list of displacement lists", "path.segments")
        cfg.path = {"segments": [parse_complex_list(sg, f"path.segments[{i}]") for i, sg in enumerate(segs)]}
        for i, sg in enumerate(cfg.path["segments"]):
            if len(sg) != n:
                raise ConfigError(f"path.segments[{i}]: expected {n} entries", f"path.segments[{i}]")
    else:
        cfg.path = {"length": float(path.get("length", 0.8)), "pieces": int(path.get("pieces", 1))}

    sl = raw.get("slice", {})
    if not isinstance(sl, dict):
        raise ConfigError("slice: expected an object", "slice")
    cfg.slice = {
        "count": int(sl.get("count", 2)),
        "starts": int(sl.get("starts", 8)),
        "box": float(sl.get("box", 1.5)),
    }
    if "direction" in sl:
        d = parse_complex_list(sl["direction"], "slice.direction")
        if len(d) != n:
            raise ConfigError(f"slice.direction: expected {n} entries", "slice.direction")
        cfg.slice["direction"] = d
    if "origin" in sl:
        o = parse_complex_list(sl["origin"], "slice.origin")
        if len(o) != n:
            raise ConfigError(f"slice.origin: expected {n} entries", "slice.origin")
        cfg.slice["origin"] = o

    thr = raw.get("thresholds", {})
    if not isinstance(thr, dict):
        raise ConfigError("thresholds: expected an object", "thresholds")
    for k, v in thr.items():
        if k not in DEFAULT_THRESHOLDS:
            raise ConfigError(f"thresholds.{k}: unknown check", f"thresholds.{k}")
        if not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"thresholds.{k}: expected a positive number", f"thresholds.{k}")
        cfg.thresholds[k] = float(v)
    return cfg
