"""Run configuration: JSON document -> validated RunConfig.

Schema (version 1); every frequency is in units of Gamma::

    {
      "schema": 1,
      "transition": {"fg": 1, "fe": 2, "gamma_transit": 0.01,
                     "rabi_convention": "stretched"},
      "pump": {"rabi": 1.0, "detuning": 0.0,
               "polarization": [[0, 0], [0, 0], [1, 0]]},
      "probe": {"polarization": [[1, 0], [0, 0], [0, 0]]},
      "grid": {"delta_min": -10, "delta_max": 10, "points": 801,
               "refine_points": 200, "refine_halfwidth": 0.2},
      "decompose": false,
      "average": {"rabi_max": 18, "samples": 64, "placement": "midpoint"},
      "output": {"path": "spectrum.csv", "format": "csv"},
      "solver": {"path": "auto", "workers": 1},
      "verify": {"deltas": [-3, -1, 0.5, 2], "probe_rabi": 0.001,
                 "step": 0.01, "tolerance": 0.001}
    }

Polarizations are Cartesian lab-frame vectors (x, y, z); each entry is a
real number or an ``[re, im]`` pair.  ``average`` and ``verify`` are optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .angular import PolarizationVector, cartesian_to_spherical
from .master_equation import RABI_CONVENTIONS, PumpConfig, TransitionSpec
from .spectrum import PLACEMENTS, SOLVER_PATHS, Grid, SpectrumRequest, StandingWaveSpec

SCHEMA_VERSION = 1
OUTPUT_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class VerifySettings:
    deltas: tuple[float, ...] = (-3.0, -1.0, 0.5, 2.0)
    probe_rabi: float = 1e-3
    step: float = 1e-2
    tolerance: float = 1e-3


@dataclass(frozen=True)
class RunConfig:
    request: SpectrumRequest
    raw: dict[str, Any]
    output_path: str | None = None
    output_format: str = "csv"
    solver_path: str = "auto"
    workers: int = 1
    verify: VerifySettings = field(default_factory=VerifySettings)

    def resolved(self) -> dict[str, Any]:
        """Normalized configuration (defaults filled in) for manifests and round trips."""
        req = self.request
        tr = req.transition
        out: dict[str, Any] = {
            "schema": SCHEMA_VERSION,
            "transition": {
                "fg": tr.fg.value,
                "fe": tr.fe.value,
                "gamma_transit": tr.gamma_transit,
                "rabi_convention": tr.rabi_convention,
            },
            "pump": {
                "rabi": req.pump.rabi,
                "detuning": req.pump.detuning,
                "polarization": _pol_to_json(self.raw["pump"]["polarization"]),
            },
            "probe": {"polarization": _pol_to_json(self.raw["probe"]["polarization"])},
            "grid": {
                "delta_min": req.grid.delta_min,
                "delta_max": req.grid.delta_max,
                "points": req.grid.points,
                "refine_points": req.grid.refine_points,
                "refine_halfwidth": req.grid.refine_halfwidth,
            },
            "decompose": req.decompose,
            "average": None
            if req.average is None
            else {"rabi_max": req.average.rabi_max, "samples": req.average.samples,
                  "placement": req.average.placement},
            "output": {"path": self.output_path, "format": self.output_format},
            "solver": {"path": self.solver_path, "workers": self.workers},
            "verify": {
                "deltas": list(self.verify.deltas),
                "probe_rabi": self.verify.probe_rabi,
                "step": self.verify.step,
                "tolerance": self.verify.tolerance,
            },
        }
        return out


_ALLOWED = {
    "": {"schema", "transition", "pump", "probe", "grid", "decompose", "average", "output", "solver", "verify"},
    "transition": {"fg", "fe", "gamma_transit", "rabi_convention"},
    "pump": {"rabi", "detuning", "polarization"},
    "probe": {"polarization"},
    "grid": {"delta_min", "delta_max", "points", "refine_points", "refine_halfwidth"},
    "average": {"rabi_max", "samples", "placement"},
    "output": {"path", "format"},
    "solver": {"path", "workers"},
    "verify": {"deltas", "probe_rabi", "step", "tolerance"},
}


def _section(doc: dict, name: str, required: bool = True) -> dict | None:
    if name not in doc or doc[name] is None:
        if required:
            raise ConfigError(f"{name}: missing required section")
        return None
    sec = doc[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = set(sec) - _ALLOWED[name]
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown key")
    return sec


def _number(sec: dict, path: str, key: str, default=None, *, minimum=None, strict_min=False) -> float:
    if key not in sec:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required value")
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not np.isfinite(val):
        raise ConfigError(f"{path}.{key}: expected a finite number, got {val!r}")
    if minimum is not None and (val < minimum or (strict_min and val == minimum)):
        op = ">" if strict_min else ">="
        raise ConfigError(f"{path}.{key}: must be {op} {minimum}, got {val!r}")
    return float(val)


def _integer(sec: dict, path: str, key: str, default=None, *, minimum=None) -> int:
    if key not in sec:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required value")
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {val!r}")
    return val


def _complex_entry(val, path: str) -> complex:
    if isinstance(val, bool):
        raise ConfigError(f"{path}: expected a number or [re, im] pair")
    if isinstance(val, (int, float)):
        return complex(val)
    if (
        isinstance(val, list)
        and len(val) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)
    ):
        return complex(val[0], val[1])
    raise ConfigError(f"{path}: expected a number or [re, im] pair, got {val!r}")


def _polarization(sec: dict, path: str) -> PolarizationVector:
    if "polarization" not in sec:
        raise ConfigError(f"{path}.polarization: missing required value")
    val = sec["polarization"]
    if not isinstance(val, list) or len(val) != 3:
        raise ConfigError(f"{path}.polarization: expected three Cartesian components (x, y, z)")
    comps = [_complex_entry(v, f"{path}.polarization[{i}]") for i, v in enumerate(val)]
    if not all(np.isfinite(c) for c in comps) or np.linalg.norm(comps) == 0:
        raise ConfigError(f"{path}.polarization: vector is zero or not finite and cannot be normalized")
    return cartesian_to_spherical(*comps)


def _pol_to_json(val) -> list:
    out = []
    for v in val:
        c = complex(v) if not isinstance(v, list) else complex(v[0], v[1])
        out.append([c.real, c.imag])
    return out


def config_from_dict(doc: Any) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _ALLOWED[""]
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"schema: unsupported version {schema!r} (expected {SCHEMA_VERSION})")

    tr = _section(doc, "transition")
    fg = _number(tr, "transition", "fg", minimum=0)
    fe = _number(tr, "transition", "fe", minimum=0)
    gamma = _number(tr, "transition", "gamma_transit", 0.01, minimum=0, strict_min=True)
    conv = tr.get("rabi_convention", "stretched")
    if conv not in RABI_CONVENTIONS:
        raise ConfigError(f"transition.rabi_convention: must be one of {sorted(RABI_CONVENTIONS)}, got {conv!r}")
    try:
        spec = TransitionSpec.from_values(fg, fe, gamma, conv)
    except ValueError as exc:
        raise ConfigError(f"transition: {exc}") from exc

    pu = _section(doc, "pump")
    pump = PumpConfig(
        rabi=_number(pu, "pump", "rabi", minimum=0),
        detuning=_number(pu, "pump", "detuning", 0.0),
        polarization=_polarization(pu, "pump"),
    )
    probe_pol = _polarization(_section(doc, "probe"), "probe")

    gr = _section(doc, "grid")
    points = _integer(gr, "grid", "points", minimum=2)
    dmin = _number(gr, "grid", "delta_min")
    dmax = _number(gr, "grid", "delta_max")
    if not dmin < dmax:
        raise ConfigError(f"grid.delta_max: must exceed delta_min ({dmin!r}), got {dmax!r}")
    grid = Grid(
        dmin,
        dmax,
        points,
        refine_points=_integer(gr, "grid", "refine_points", 0, minimum=0),
        refine_halfwidth=_number(gr, "grid", "refine_halfwidth", 0.0, minimum=0),
    )

    decompose = doc.get("decompose", False)
    if not isinstance(decompose, bool):
        raise ConfigError(f"decompose: expected true or false, got {decompose!r}")

    av = _section(doc, "average", required=False)
    average = None
    if av is not None:
        placement = av.get("placement", "midpoint")
        if placement not in PLACEMENTS:
            raise ConfigError(f"average.placement: must be one of {list(PLACEMENTS)}, got {placement!r}")
        average = StandingWaveSpec(
            _number(av, "average", "rabi_max", minimum=0, strict_min=True),
            _integer(av, "average", "samples", 64, minimum=1),
            placement,
        )

    out = _section(doc, "output", required=False) or {}
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path: expected a string")
    fmt = out.get("format", "csv")
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"output.format: must be one of {list(OUTPUT_FORMATS)}, got {fmt!r}")

    so = _section(doc, "solver", required=False) or {}
    solver_path = so.get("path", "auto")
    if solver_path not in SOLVER_PATHS:
        raise ConfigError(f"solver.path: must be one of {list(SOLVER_PATHS)}, got {solver_path!r}")
    workers = _integer(so, "solver", "workers", 1, minimum=1)

    ve = _section(doc, "verify", required=False)
    verify = VerifySettings()
    if ve is not None:
        deltas = ve.get("deltas", list(verify.deltas))
        if not isinstance(deltas, list) or not deltas:
            raise ConfigError("verify.deltas: expected a nonempty list of offsets")
        for i, d in enumerate(deltas):
            if isinstance(d, bool) or not isinstance(d, (int, float)) or d == 0 or not np.isfinite(d):
                raise ConfigError(f"verify.deltas[{i}]: expected a finite nonzero offset, got {d!r}")
        verify = VerifySettings(
            tuple(float(d) for d in deltas),
            _number(ve, "verify", "probe_rabi", verify.probe_rabi, minimum=0, strict_min=True),
            _number(ve, "verify", "step", verify.step, minimum=0, strict_min=True),
            _number(ve, "verify", "tolerance", verify.tolerance, minimum=0, strict_min=True),
        )

    request = SpectrumRequest(spec, pump, probe_pol, grid, decompose, average)
    return RunConfig(request, doc, path, fmt, solver_path, workers, verify)


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)
