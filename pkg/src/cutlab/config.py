"""Run configuration: JSON ingestion with strict key checking, and the
bundled scenario registry."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import (Backend, GeometryError, ImplicitSurface, PeriodicChart,
                       ZERO_FIELD, ambient_scalar_field, chart_metric_field,
                       chart_scalar_field, level_surface)
from .stability import Resolution
from .submanifold import (SubmanifoldSpec, chart_curve, curve_submanifold,
                          point_submanifold, surface_curve)


class ConfigError(Exception):
    """Malformed configuration; message names the offending key."""


def _check_keys(block: dict, allowed: set[str], where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    for k in block:
        if k not in allowed:
            raise ConfigError(f"{where}.{k}: unknown key")


@dataclass
class RunConfig:
    scenario: str | None
    backend_spec: dict
    submanifold_spec: dict
    resolution: Resolution
    family: dict | None
    out: str | None = None
    seed: int = 0
    threads: int | None = None
    raw: dict = field(default_factory=dict)

    def build_backend(self) -> Backend:
        return build_backend(self.backend_spec)

    def build_submanifold(self, b: Backend) -> SubmanifoldSpec:
        return build_submanifold(b, self.submanifold_spec)


_TOP_KEYS = {"scenario", "backend", "submanifold", "resolution", "family",
             "out", "seed", "threads"}
_RES_KEYS = {"m", "m_N", "dt", "t_max", "tol", "capture_radius", "angle_tol",
             "pair_tol", "dedup_radius"}


def build_backend(spec: dict) -> Backend:
    _check_keys(spec, {"kind", "periods", "metric", "surface", "psi",
                       "fd_step", "curv_step"}, "backend")
    kind = spec.get("kind")
    if kind == "periodic-chart":
        periods = tuple(float(v) for v in spec.get("periods", (1.0, 1.0)))
        mspec = dict(spec.get("metric", {"name": "flat"}))
        name = mspec.pop("name", None)
        if name is None:
            raise ConfigError("backend.metric.name: required")
        fld = chart_metric_field(name, periods, **mspec)
        kw = {}
        if "fd_step" in spec:
            kw["fd_step"] = float(spec["fd_step"])
        if "curv_step" in spec:
            kw["curv_step"] = float(spec["curv_step"])
        return PeriodicChart(periods, fld, **kw)
    if kind == "implicit-surface":
        sspec = dict(spec.get("surface", {"name": "sphere"}))
        name = sspec.pop("name", None)
        if name is None:
            raise ConfigError("backend.surface.name: required")
        surf = level_surface(name, **sspec)
        psi = ZERO_FIELD
        if "psi" in spec:
            pspec = dict(spec["psi"])
            pname = pspec.pop("name", None)
            if pname is None:
                raise ConfigError("backend.psi.name: required")
            psi = ambient_scalar_field(pname, **pspec)
        return ImplicitSurface(surf, psi=psi)
    raise ConfigError(f"backend.kind: unknown kind {kind!r}")


def build_submanifold(b: Backend, spec: dict) -> SubmanifoldSpec:
    _check_keys(spec, {"dim", "point", "curve", "m_N"}, "submanifold")
    dim = spec.get("dim")
    m_N = int(spec.get("m_N", 256))
    if dim == 0:
        if "point" not in spec:
            raise ConfigError("submanifold.point: required for dim 0")
        return point_submanifold(spec["point"], m_N=m_N)
    if dim == 1:
        cspec = dict(spec.get("curve", {}))
        name = cspec.pop("name", None)
        if name is None:
            raise ConfigError("submanifold.curve.name: required")
        if isinstance(b, PeriodicChart):
            curve = chart_curve(name, b.periods, **cspec)
        else:
            curve = surface_curve(name, **cspec)
        return curve_submanifold(curve, m_N=m_N)
    raise ConfigError(f"submanifold.dim: must be 0 or 1, got {dim!r}")


def build_family_field(cfg: RunConfig, b: Backend):
    """Scalar field for a conformal family, from the family block."""
    fspec = dict(cfg.family.get("phi", {}))
    name = fspec.pop("name", None)
    if name is None:
        raise ConfigError("family.phi.name: required")
    if isinstance(b, PeriodicChart):
        return chart_scalar_field(name, b.periods, **fspec)
    return ambient_scalar_field(name, **fspec)


def _parse_resolution(block: dict) -> Resolution:
    _check_keys(block, _RES_KEYS, "resolution")
    kw = {k: v for k, v in block.items() if k != "m_N"}
    for k in list(kw):
        kw[k] = int(kw[k]) if k == "m" else float(kw[k])
        if kw[k] <= 0:
            raise ConfigError(f"resolution.{k}: must be positive")
    return Resolution(**kw)


def parse_config(source) -> RunConfig:
    """Parse a config dict, JSON string, or path to a JSON file."""
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        text = Path(source).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as ex:
            raise ConfigError(f"config JSON parse error at line {ex.lineno}, "
                              f"column {ex.colno}: {ex.msg}") from ex
    elif isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as ex:
            raise ConfigError(f"config JSON parse error at line {ex.lineno}, "
                              f"column {ex.colno}: {ex.msg}") from ex
    else:
        data = source
    _check_keys(data, _TOP_KEYS, "config")
    if "scenario" in data:
        cfg = scenario(data["scenario"])
        cfg.raw = dict(data)
    else:
        if "backend" not in data or "submanifold" not in data:
            raise ConfigError("config.backend / config.submanifold: required "
                              "when no scenario is named")
        cfg = RunConfig(None, data["backend"], data["submanifold"],
                        Resolution(), None, raw=dict(data))
        build_backend(cfg.backend_spec)   # validate eagerly
    if "backend" in data and cfg.scenario is not None:
        raise ConfigError("config.backend: conflicts with scenario")
    if "resolution" in data:
        merged = dict(_scenario_res_overrides(cfg))
        merged.update(data["resolution"])
        cfg.resolution = _parse_resolution(merged)
    if "family" in data:
        fam = data["family"]
        _check_keys(fam, {"kind", "phi", "target", "metric", "tau"}, "family")
        if "tau" not in fam:
            raise ConfigError("family.tau: required (strictly decreasing "
                              "positive ladder)")
        cfg.family = fam
    if cfg.family is not None:
        taus = cfg.family.get("tau")
        if (not isinstance(taus, (list, tuple)) or len(taus) < 2
                or any(t2 >= t1 for t1, t2 in zip(taus, taus[1:]))
                or taus[-1] <= 0):
            raise ConfigError("family.tau: must be a strictly decreasing "
                              "positive ladder")
    if "out" in data:
        cfg.out = str(data["out"])
    if "seed" in data:
        cfg.seed = int(data["seed"])
    if "threads" in data:
        cfg.threads = int(data["threads"])
    return cfg


def _scenario_res_overrides(cfg: RunConfig) -> dict:
    return cfg.resolution.as_dict()


# ---------------------------------------------------------------------------
# bundled scenarios
# ---------------------------------------------------------------------------

def scenario(name: str) -> RunConfig:
    if name not in SCENARIOS:
        raise ConfigError(f"scenario: unknown scenario {name!r}; "
                          f"choose one of {sorted(SCENARIOS)}")
    backend, sub, res, fam = SCENARIOS[name]
    return RunConfig(name, dict(backend), dict(sub), res,
                     None if fam is None else dict(fam))


_FLAT = {"kind": "periodic-chart", "periods": [1.0, 1.0],
         "metric": {"name": "flat"}}
_WARPED = {"kind": "periodic-chart", "periods": [1.0, 1.0],
           "metric": {"name": "warped-diag", "amplitude": 0.2, "harmonic": 1}}
_SPHERE = {"kind": "implicit-surface", "surface": {"name": "sphere",
                                                   "radius": 1.0}}
_LINE = {"dim": 1, "curve": {"name": "horizontal-circle", "y0": 0.0},
         "m_N": 256}

SCENARIOS: dict[str, tuple] = {
    "flat-torus-line": (_FLAT, _LINE, Resolution(t_max=1.2), None),
    "flat-torus-point": (_FLAT, {"dim": 0, "point": [0.25, 0.25]},
                         Resolution(t_max=1.2), None),
    "sphere-equator": (_SPHERE,
                       {"dim": 1, "curve": {"name": "equator", "radius": 1.0},
                        "m_N": 256},
                       Resolution(t_max=3.4), None),
    "warped-torus-line": (_WARPED, _LINE, Resolution(t_max=1.4), None),
    "warped-torus-bump-sweep": (_WARPED, _LINE, Resolution(t_max=1.6),
                                {"kind": "conformal",
                                 "phi": {"name": "sine-y", "amplitude": 1.0},
                                 "tau": [0.2, 0.1, 0.05, 0.025]}),
    "torus-line-shift-sweep": (_FLAT, _LINE, Resolution(t_max=1.2),
                               {"kind": "embedding",
                                "target": {"name": "horizontal-circle",
                                           "y0": 0.1},
                                "tau": [0.2, 0.1, 0.05, 0.025]}),
    "torus-homothety-sweep": (_FLAT, _LINE, Resolution(t_max=1.6),
                              {"kind": "conformal",
                               "phi": {"name": "constant", "value": 1.0},
                               "tau": [0.2, 0.1, 0.05, 0.025]}),
}
