"""Command-line entry point.

Exit codes: 0 every enabled monitor passed, 1 bad config or usage,
2 monitor failure (CFL excursions included), 3 non-finite abort,
4 I/O error. ANSE_OUTPUT_DIR, when set, is the parent directory of
relative run directories.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .audit import AUDITS, adversarial_ratio_search, reports_to_csv, reports_to_table
from .config import (
    AuditConfig,
    ParseError,
    RunConfig,
    ValidationError,
    config_from_dict,
    emit_config,
    parse_audit_config,
    parse_config,
)
from .diagnostics import DegenerateSeries, fit_exponential_decay
from .persist import (
    DiagnosticsWriter,
    MissingArtifact,
    SnapshotError,
    read_diagnostics,
    read_manifest,
    resolve_run_dir,
    snapshot_name,
    write_audit_csv,
    write_manifest,
    write_snapshot,
)
from .scenarios import TAYLOR_GREEN_RATE, build_monitors, build_scenario
from .timestepper import CflViolation, NonFinite, StepperConfig, integrate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MONITOR = 2
EXIT_NONFINITE = 3
EXIT_IO = 4

MANIFEST = "manifest.json"
DIAGNOSTICS = "diagnostics.csv"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def stepper_config(cfg: RunConfig) -> StepperConfig:
    st = cfg.stepper
    return StepperConfig(
        t_end=st.t_end,
        dt=st.dt,
        cfl=st.cfl,
        dt_max=st.dt_max,
        scheme=st.scheme,
        snapshot_every=cfg.output.snapshot_every,
        diagnostics_every=cfg.output.diagnostics_every,
    )


def run(cfg: RunConfig, log=None) -> int:
    """Integrate one scenario into its run directory and return the exit code."""
    log = log or (lambda msg: None)
    run_dir = resolve_run_dir(cfg.output.run_dir)
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        s0, forcing = build_scenario(cfg)
    except (OSError, SnapshotError) as exc:
        log(f"error: {exc}")
        return EXIT_IO

    monitors = build_monitors(cfg)
    manifest = {
        "config": json.loads(emit_config(cfg)),
        "code_version": __version__,
        "started": _now(),
        "ended": None,
        "status": "running",
        "seeds": {
            "initial": cfg.initial.seed,
            "forcing": cfg.forcing.seed,
            "generator": "numpy.random.default_rng (PCG64)",
        },
    }
    mpath = run_dir / MANIFEST
    try:
        write_manifest(mpath, manifest)
        writer = DiagnosticsWriter(run_dir / DIAGNOSTICS)
    except OSError as exc:
        log(f"error: {exc}")
        return EXIT_IO

    def snapshot(n, s):
        write_snapshot(run_dir / snapshot_name(n), s)

    code = EXIT_OK
    records = []
    final = None
    try:
        # a blow-up overflows before the non-finite check catches it
        with writer, warnings.catch_warnings(), np.errstate(over="ignore", invalid="ignore"):
            warnings.simplefilter("ignore", CflViolation)
            final, records = integrate(s0, forcing, stepper_config(cfg), monitors, writer.write, snapshot)
    except NonFinite as exc:
        records = exc.records or []
        manifest["status"] = "nonfinite"
        manifest["error"] = str(exc)
        code = EXIT_NONFINITE
    except OSError as exc:
        manifest["status"] = "io_error"
        manifest["error"] = str(exc)
        code = EXIT_IO

    if code == EXIT_OK:
        results = monitors.evaluate(records)
        manifest["monitors"] = [
            {"name": r.name, "passed": bool(r.passed), "value": float(r.value), "detail": r.detail} for r in results
        ]
        if monitors.cfl_violations:
            manifest["cfl_violation"] = {
                "steps": monitors.cfl_violations,
                "max_courant": float(records[-1].max_courant) if records else float("nan"),
                "limit": 2 * cfg.stepper.cfl,
            }
        failed = [r.name for r in results if not r.passed]
        if failed or monitors.cfl_violations:
            code = EXIT_MONITOR
            manifest["status"] = "monitor_failure"
            manifest["failed"] = failed or ["cfl"]
        else:
            manifest["status"] = "passed"
        try:
            write_snapshot(run_dir / "final.bin", final)
        except OSError as exc:
            manifest["status"] = "io_error"
            manifest["error"] = str(exc)
            code = EXIT_IO
    manifest["steps"] = int(records[-1].step) if records else 0
    manifest["ended"] = _now()
    manifest["exit_code"] = code
    try:
        write_manifest(mpath, manifest)
    except OSError as exc:
        log(f"error: {exc}")
        return EXIT_IO
    log(f"{cfg.scenario}: {manifest['status']} ({run_dir})")
    return code


def audit(cfg: AuditConfig, log=None) -> int:
    """Run the configured audits; exit 0 iff no trial violates its inequality."""
    log = log or (lambda msg: None)
    reports = []
    for e in cfg.audits:
        reports.append(AUDITS[e.inequality](e.n, e.kmax, e.seed))
        if e.adversarial_iters:
            reports.append(adversarial_ratio_search(e.inequality, e.kmax, e.adversarial_iters, e.seed))
    out = resolve_run_dir(cfg.output.run_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_audit_csv(out / "audit.csv", [reports_to_csv(reports)])
        write_audit_csv(out / "audit.txt", [reports_to_table(reports)])
    except OSError as exc:
        log(f"error: {exc}")
        return EXIT_IO
    log(reports_to_table(reports))
    return EXIT_OK if all(r.violations == 0 for r in reports) else EXIT_MONITOR


def report(run_dir) -> str:
    """Summary of a finished run read from its manifest and diagnostics CSV."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir / MANIFEST)
    d = {k: [float(x) for x in v] for k, v in read_diagnostics(run_dir / DIAGNOSTICS).items()}
    t = d["t"]
    if len(t) == 0:
        raise MissingArtifact(f"{run_dir / DIAGNOSTICS} has no records")
    scenario = manifest.get("config", {}).get("scenario", "?")
    lines = [f"run {run_dir}", f"scenario {scenario}, status {manifest.get('status')}, {len(t)} records, t = {t[-1]!r}"]

    lines.append("monitors:")
    for m in manifest.get("monitors", []):
        lines.append(f"  {'PASS' if m['passed'] else 'FAIL'} {m['name']}: {m['value']!r} ({m['detail']})")
    if "cfl_violation" in manifest:
        lines.append(f"  CFL exceeded on {manifest['cfl_violation']['steps']} steps")

    span = t[-1] - t[0]
    w0, w1 = d["omega_l2"][0], d["omega_l2"][-1]
    if scenario == "taylor_green" and span > 0 and w0 > 0 and w1 > 0:
        measured = -math.log(w1 / w0) / span
        lines.append(f"vorticity decay rate: measured {measured!r}, analytic {TAYLOR_GREEN_RATE!r}")
    try:
        fit = fit_exponential_decay(t, d["osc_vorticity_l2"])
        lines.append(f"oscillation enstrophy fit: rate {fit.rate!r}, r2 {fit.r_squared!r}")
    except DegenerateSeries:
        pass

    lines.append("minimum bound margins:")
    for col in ("e1_margin", "e2_margin", "v2_margin", "v20_margin"):
        lines.append(f"  {col}: {float(np.min(d[col]))!r}")
    lines.append("budget residuals (max abs):")
    for col in ("energy_residual", "enstrophy_residual"):
        lines.append(f"  {col}: {float(np.max(np.abs(d[col])))!r}")
    lines.append("final norms:")
    for col in ("energy", "enstrophy", "omega_l2", "h2_norm", "osc_vorticity_l2", "mean_profile_l2"):
        lines.append(f"  {col}: {d[col][-1]!r}")
    if not np.all(np.isnan(d["twin_distance"])):
        lines.append(f"twin distance (max): {float(np.nanmax(d['twin_distance']))!r}")
    return "\n".join(lines) + "\n"


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _set_key(data: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def sweep_configs(cfg: RunConfig, params: Sequence[str]) -> list[tuple[str, RunConfig]]:
    """Cartesian product of --param key=v1,v2 settings, each in its own run directory."""
    axes = []
    for p in params:
        key, sep, values = p.partition("=")
        if not sep or not values:
            raise ValueError(f"--param expects key=v1,v2,... (got {p!r})")
        axes.append([(key.strip(), v.strip()) for v in values.split(",")])
    base = json.loads(emit_config(cfg))
    out = []
    for combo in itertools.product(*axes):
        data = json.loads(json.dumps(base))
        tag = "_".join(f"{k.split('.')[-1]}={v}" for k, v in combo)
        for k, v in combo:
            _set_key(data, k, _parse_value(v))
        data["output"]["run_dir"] = str(Path(cfg.output.run_dir) / tag)
        out.append((tag, config_from_dict(data)))
    return out


def sweep(cfg: RunConfig, params: Sequence[str], log=None) -> int:
    codes = [run(c, log) for _, c in sweep_configs(cfg, params)]
    return max(codes, default=EXIT_OK)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anse", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="integrate one scenario")
    r.add_argument("config")
    a = sub.add_parser("audit", help="Monte-Carlo audit of the functional inequalities")
    a.add_argument("config")
    rep = sub.add_parser("report", help="summarize a finished run directory")
    rep.add_argument("run_dir")
    s = sub.add_parser("sweep", help="grid of runs over config parameters")
    s.add_argument("config")
    s.add_argument("--param", action="append", default=[], metavar="KEY=V1,V2",
                   help="dotted config key and comma-separated values; repeat for a Cartesian product")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)

    def log(msg):
        print(msg, file=sys.stderr)

    try:
        if args.command == "report":
            sys.stdout.write(report(args.run_dir))
            return EXIT_OK
        if args.command == "audit":
            return audit(parse_audit_config(args.config), log)
        cfg = parse_config(args.config)
        if args.command == "run":
            return run(cfg, log)
        return sweep(cfg, args.param, log)
    except MissingArtifact as exc:
        log(f"error: {exc}")
        return EXIT_IO
    except (ParseError, ValidationError, ValueError) as exc:
        log(f"error: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        log(f"error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
