"""Scenario files: one YAML document describing a curve, a system, loops,
a flat surface, fiber targets and the checks to run.

Complex numbers may be written as numbers, ``[re, im]`` pairs or strings
such as ``"1-2j"``.  Every tolerance has a default which is written back
into the run summary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .curve import PathOnCurve, as_complex, circle_path
from .errors import ConfigParse

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "monodromy": 1e-8,
    "propagation": 1e-10,
    "wkb_slack": 0.02,
    "quadrature": 1e-8,
    "fiber": 1e-12,
    "spectral": 1e-10,
    "conic": 1e-6,
    "scaling_action": 1e-12,
    "curvature": 1e-3,
    "newton": 1e-12,
}

CHECK_KINDS = ("monodromy_relation", "wkb_sweep", "noether_rank", "fiber", "flat_birkhoff",
               "flat_find_wkb", "spectral_scaling", "conic_scaling", "scaling_action", "model_metric")


def parse_complex(value, where: str = "value") -> complex:
    try:
        if isinstance(value, str):
            return complex(value.replace(" ", ""))
        return as_complex(value)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"{where}: cannot read {value!r} as a complex number") from exc


def parse_complex_list(values, where: str = "value") -> list[complex]:
    if not isinstance(values, (list, tuple)):
        raise ConfigParse(f"{where}: expected a list")
    return [parse_complex(v, f"{where}[{k}]") for k, v in enumerate(values)]


@dataclass
class Scenario:
    name: str = "scenario"
    seed: int = 0
    curve: dict | None = None
    system: dict | None = None
    loops: dict = field(default_factory=dict)
    t_grid: list = field(default_factory=list)
    flat_surface: dict | None = None
    fiber_targets: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def tol(self, key: str) -> float:
        return float(self.tolerances[key])


def _t_grid(spec) -> list[float]:
    if spec is None:
        return []
    if isinstance(spec, dict):
        try:
            return [float(v) for v in np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))]
        except KeyError as exc:
            raise ConfigParse(f"t_grid needs start, stop and num (missing {exc})") from exc
    if isinstance(spec, list):
        return [float(v) for v in spec]
    raise ConfigParse("t_grid must be a list or {start, stop, num}")


def parse_loop(spec) -> PathOnCurve:
    """``{circle: {center, radius}}`` or ``{path: <serialized path>}``."""
    if not isinstance(spec, dict):
        raise ConfigParse(f"loop must be a mapping, got {spec!r}")
    if "circle" in spec:
        c = spec["circle"]
        return circle_path(parse_complex(c.get("center", 0), "circle.center"), float(c["radius"]),
                           start_angle=float(c.get("start_angle", 0.0)), turns=int(c.get("turns", 1)))
    if "path" in spec:
        return PathOnCurve.from_dict(spec["path"])
    raise ConfigParse("loop needs a 'circle' or 'path' entry")


def scenario_from_dict(d: dict) -> Scenario:
    if d is None:
        d = {}
    if not isinstance(d, dict):
        raise ConfigParse("scenario must be a mapping")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigParse(f"unsupported schema_version {version!r}")
    tols = dict(DEFAULT_TOLERANCES)
    for k, v in (d.get("tolerances") or {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigParse(f"unknown tolerance {k!r}")
        if not float(v) > 0:
            raise ConfigParse(f"tolerance {k!r} must be positive")
        tols[k] = float(v)
    checks = d.get("checks") or []
    if not isinstance(checks, list):
        raise ConfigParse("checks must be a list")
    loops = d.get("loops") or {}
    if not isinstance(loops, dict):
        raise ConfigParse("loops must be a mapping from id to loop")
    ids = set()
    for k, c in enumerate(checks):
        if not isinstance(c, dict) or "kind" not in c:
            raise ConfigParse(f"checks[{k}] needs a 'kind'")
        if c["kind"] not in CHECK_KINDS:
            raise ConfigParse(f"checks[{k}]: unknown kind {c['kind']!r}")
        c.setdefault("id", f"{c['kind']}_{k}")
        if c["id"] in ids:
            raise ConfigParse(f"duplicate check id {c['id']!r}")
        ids.add(c["id"])
        if "loop" in c and c["loop"] not in loops:
            raise ConfigParse(f"check {c['id']!r} refers to unknown loop {c['loop']!r}")
        needs_curve = c["kind"] in ("monodromy_relation", "wkb_sweep", "noether_rank", "fiber",
                                    "spectral_scaling", "conic_scaling")
        if needs_curve and not d.get("curve"):
            raise ConfigParse(f"check {c['id']!r} needs a curve")
    return Scenario(name=str(d.get("name", "scenario")), seed=int(d.get("seed", 0)), curve=d.get("curve"),
                    system=d.get("system"), loops=loops, t_grid=_t_grid(d.get("t_grid")),
                    flat_surface=d.get("flat_surface"), fiber_targets=d.get("fiber_targets") or [],
                    checks=checks, tolerances=tols)


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read scenario {path}: {exc}") from exc
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParse(f"invalid YAML in {path}: {exc}") from exc
    return scenario_from_dict(d)
