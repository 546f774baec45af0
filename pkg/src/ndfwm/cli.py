from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .dressed import dressed_levels, predict_resonances
from .master_equation import build_liouvillian
from .oracle import IntegrationError, demodulate_fwm, integrate
from .response import ProbeConfig, SolverError, fwm_response, steady_state
from .spectrum import Spectrum, compute, spectrum_sweep

log = logging.getLogger("ndfwm")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY_FAILED = 4

SPECTRUM_COLUMNS = ["delta", "power", "amp_m_re", "amp_m_im", "amp_0_re", "amp_0_im", "amp_p_re", "amp_p_im"]
COMPONENTS = ("m", "0", "p")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def spectrum_table(spec: Spectrum) -> tuple[list[str], list[list[float]]]:
    cols = list(SPECTRUM_COLUMNS)
    keys = sorted(spec.partials) if spec.partials else []
    for key in keys:
        for c in COMPONENTS:
            cols += [f"absm{key:g}_{c}_re", f"absm{key:g}_{c}_im"]
    rows = []
    power = spec.power
    for i, d in enumerate(spec.delta):
        row = [float(d), float(power[i])]
        for a in spec.amplitudes[i]:
            row += [a.real, a.imag]
        for key in keys:
            for a in spec.partials[key][i]:
                row += [a.real, a.imag]
        rows.append(row)
    return cols, rows


def write_table(path: Path, cols: list[str], rows: list[list[Any]], fmt: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = {c: [r[i] for r in rows] for i, c in enumerate(cols)}
        payload = {"columns": cols, "data": payload}
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
        return
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in r))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_manifest(path: Path, payload: dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=str)
        handle.write("\n")


def manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def _base_manifest(command: str, cfg: RunConfig | None, argv: list[str]) -> dict[str, Any]:
    return {
        "schema_version": 1,
        "command": command,
        "command_line": "ndfwm " + " ".join(argv),
        "artifact_version": __version__,
        "config": cfg.resolved() if cfg is not None else None,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def _run_spectrum(command: str, cfg: RunConfig, out: Path, fmt: str) -> dict[str, Any]:
    req = cfg.request
    if command == "decompose":
        req = replace(req, decompose=True)
    if command == "average":
        if req.average is None:
            raise ConfigError("average: the 'average' subcommand needs an 'average' section")
        spec = compute(req, cfg.solver_path, cfg.workers)
    else:
        # spectrum/decompose always use the single-intensity sweep
        spec = spectrum_sweep(req, cfg.solver_path, cfg.workers)
    cols, rows = spectrum_table(spec)
    write_table(out, cols, rows, fmt)
    return {"solver": spec.diagnostics, "rows": len(rows)}


def _run_dressed(cfg: RunConfig, out: Path, fmt: str) -> dict[str, Any]:
    req = cfg.request
    levels = dressed_levels(req.transition, req.pump)
    res = predict_resonances(req.transition, req.pump, req.probe_polarization, levels=levels)
    lv_cols = ["index", "energy", "label", "uncoupled"]
    lv_rows = [[k, float(levels.energies[k]), levels.labels[k], bool(levels.uncoupled[k])] for k in range(len(levels))]
    rs_cols = ["delta", "weight", "initial", "final", "kind"]
    rs_rows = [[r.delta, r.weight, r.initial, r.final, r.kind] for r in res]
    if fmt == "json":
        payload = {
            "levels": [dict(zip(lv_cols, r)) for r in lv_rows],
            "resonances": [dict(zip(rs_cols, r)) for r in rs_rows],
        }
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    else:
        write_table(out, lv_cols, lv_rows, "csv")
        write_table(out.with_name(out.stem + "_resonances" + out.suffix), rs_cols, rs_rows, "csv")
    return {"levels": len(lv_rows), "resonances": len(rs_rows)}


def run_verify(cfg: RunConfig) -> tuple[list[dict[str, Any]], bool]:
    """Oracle cross-check: linear response vs demodulated time integration per offset."""
    req = cfg.request
    vs = cfg.verify
    liouv = build_liouvillian(req.transition, req.pump)
    rho_ss = steady_state(liouv)
    results = []
    for d in vs.deltas:
        lin = fwm_response(liouv, ProbeConfig(req.probe_polarization, d), rho_ss).fwm_amplitude
        traj = integrate(req.transition, req.pump, req.probe_polarization, vs.probe_rabi, d, step=vs.step)
        orc = demodulate_fwm(traj, gamma=req.transition.gamma_transit)
        rel = float(np.linalg.norm(orc - lin) / max(np.linalg.norm(lin), 1e-300))
        results.append({
            "delta": float(d),
            "linear": lin,
            "oracle": orc,
            "relative_error": rel,
            "passed": rel <= vs.tolerance,
            "trace_drift": traj.trace_drift,
            "hermiticity_drift": traj.hermiticity_drift,
        })
    return results, all(r["passed"] for r in results)


def _run_verify(cfg: RunConfig, out: Path, fmt: str) -> tuple[dict[str, Any], bool]:
    results, ok = run_verify(cfg)
    cols = ["delta", "relative_error", "passed"]
    for src in ("linear", "oracle"):
        for c in COMPONENTS:
            cols += [f"{src}_{c}_re", f"{src}_{c}_im"]
    rows = []
    for r in results:
        row = [r["delta"], r["relative_error"], "true" if r["passed"] else "false"]
        for src in ("linear", "oracle"):
            for a in r[src]:
                row += [float(a.real), float(a.imag)]
        rows.append(row)
        status = "PASS" if r["passed"] else "FAIL"
        print(f"[{status}] delta={r['delta']:+g}  relative error {r['relative_error']:.3e}  (tol {cfg.verify.tolerance:g})")
    write_table(out, cols, rows, fmt)
    diag = {
        "tolerance": cfg.verify.tolerance,
        "max_relative_error": max(r["relative_error"] for r in results),
        "max_trace_drift": max(r["trace_drift"] for r in results),
        "max_hermiticity_drift": max(r["hermiticity_drift"] for r in results),
        "passed": ok,
    }
    return diag, ok


COMMANDS = ("spectrum", "average", "decompose", "dressed", "verify")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ndfwm",
        description="Four-wave-mixing spectra of a pump-driven degenerate two-level transition.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "spectrum": "FWM spectrum at a single pump intensity",
        "average": "spectrum averaged over the standing-wave pump intensity",
        "decompose": "spectrum with per-|m| partial amplitudes",
        "dressed": "dressed-state energies and predicted resonances",
        "verify": "cross-check linear response against time-domain integration",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("config", help="JSON configuration file")
        p.add_argument("-o", "--output", default=None, help="output file (overrides output.path)")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--solver", choices=["direct", "accelerated", "auto"], default=None)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
        overrides = {}
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers: must be >= 1")
            overrides["workers"] = args.workers
        if args.solver is not None:
            overrides["solver_path"] = args.solver
        if args.format is not None:
            overrides["output_format"] = args.format
        if args.output is not None:
            overrides["output_path"] = args.output
        if overrides:
            cfg = replace(cfg, **overrides)
        if cfg.output_path is None:
            cfg = replace(cfg, output_path=f"{args.command}.{cfg.output_format}")
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.output_path)
    manifest = _base_manifest(args.command, cfg, argv)
    t0 = time.perf_counter()
    status = EXIT_OK
    try:
        if args.command in ("spectrum", "average", "decompose"):
            manifest["diagnostics"] = _run_spectrum(args.command, cfg, out, cfg.output_format)
        elif args.command == "dressed":
            manifest["diagnostics"] = _run_dressed(cfg, out, cfg.output_format)
        else:
            diag, ok = _run_verify(cfg, out, cfg.output_format)
            manifest["diagnostics"] = diag
            status = EXIT_OK if ok else EXIT_VERIFY_FAILED
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, IntegrationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
        status = EXIT_NUMERICAL
    manifest["timing_seconds"] = time.perf_counter() - t0
    manifest["exit_status"] = status
    manifest["outputs"] = [str(out)] if status != EXIT_NUMERICAL else []
    write_manifest(manifest_path(out), manifest)
    return status


if __name__ == "__main__":
    sys.exit(main())
