"""Command line: flow runs, Donaldson-Sadun comparison, check suites, Wilson tables, snapshots.

Exit codes: 0 pass, 1 gated-check failure, 2 usage/config/range/snapshot error,
3 numerical blow-up.  Every command that writes files also writes
``manifest.json`` (config echo, version, checksums, wall times).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, snapshot, suites
from .config import RunSpec, load_config, read_loops_file
from .diagnostics import LoopSpec, check_energy_identity, check_fa10, monotonicity_violations, regularized_wilson
from .errors import (
    BlowUpDetected,
    ChecksumMismatch,
    ConfigError,
    InsufficientSamples,
    RangeError,
    SchemaMismatch,
    YMFlowError,
)
from .fields import initial_data
from .flow import CSV_COLUMNS, FlowConfig, integrate, marini_pipeline

EXIT_OK, EXIT_GATED, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3
USAGE_ERRORS = (ConfigError, RangeError, SchemaMismatch, ChecksumMismatch)
DS_COLUMNS = ("n", "t", "C_B_l2", "Aeps_B_l2", "direct_B_l2", "B_gap", "A_diff_l2")
WILSON_COLUMNS = ("loop_id", "plane", "anchor", "a", "b", "t", "W_real")


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


class CsvStream:
    """Row-at-a-time CSV writer with shortest-round-trip-safe float formatting."""

    def __init__(self, path: Path, columns):
        self.columns = tuple(columns)
        self.fh = open(path, "w", newline="")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(self.columns)

    def row(self, rec: dict) -> None:
        self.w.writerow([fmt(rec[c]) for c in self.columns])
        self.fh.flush()

    def close(self) -> None:
        self.fh.close()


def dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class Run:
    """Collects outputs and check results for the manifest."""

    def __init__(self, args, spec: RunSpec):
        self.args = args
        self.spec = spec
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[Path] = []
        self.checks: dict = {}
        self.start = _now()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(p)
        return p

    def manifest(self, exit_code: int) -> None:
        files = []
        for p in self.outputs:
            if p.exists():
                data = p.read_bytes()
                files.append({"path": p.name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        dump_json(
            self.out / "manifest.json",
            {
                "command": self.args.command,
                "argv": list(self.args.argv),
                "version": __version__,
                "seed": self.spec.run.seed,
                "threads": self.args.threads,
                "config": self.spec.as_dict(),
                "start_time": self.start,
                "end_time": _now(),
                "outputs": files,
                "checks": self.checks,
                "exit_code": exit_code,
            },
        )


# ---------------------------------------------------------------------------
# commands


def _initial(spec: RunSpec, cfg: FlowConfig):
    return initial_data(cfg.mesh(), cfg.group, cfg.projection, spec.initial, cfg.seed)


def _save_blowup(run: Run, exc: BlowUpDetected, bc: str) -> None:
    if exc.last_state is not None:
        snapshot.save(run.path("blowup_last.snap"), exc.last_state, bc, extra={"reason": str(exc)})


def _load_resume(path, cfg: FlowConfig):
    state, header = snapshot.load(path)
    want = {"group": cfg.group, "n": cfg.n, "L": cfg.L, "bc": cfg.bc}
    got = {k: header[k] for k in want}
    if got != want:
        raise ConfigError(f"resume snapshot {got} does not match the run config {want}")
    if abs(state.t - state.step * cfg.dt_eff) > 1e-12 * max(1.0, cfg.T):
        raise ConfigError("resume snapshot does not lie on the configured step grid")
    return state


def cmd_flow(run: Run) -> int:
    spec, args = run.spec, run.args
    cfg = spec.run
    steps = args.snapshot_steps if args.snapshot_steps is not None else spec.output.snapshot_steps
    bad = [k for k in steps if not 0 <= k <= cfg.nsteps]
    if bad:
        raise RangeError(f"snapshot steps {bad} outside [0, {cfg.nsteps}]")
    state = _load_resume(args.resume, cfg) if args.resume else None
    stream = CsvStream(run.path("flow.csv"), CSV_COLUMNS)
    obs = [lambda st, rec: stream.row(rec)]
    try:
        if cfg.bc == "Marini":
            if state is not None:
                raise ConfigError("resume is not supported for the Marini pipeline")
            traj = marini_pipeline(cfg, _initial(spec, cfg), observers=obs)
        elif state is None:
            traj = integrate(cfg, _initial(spec, cfg), observers=obs, snapshot_steps=steps)
        else:
            traj = integrate(cfg, state=state, observers=obs, snapshot_steps=steps)
    except BlowUpDetected as exc:
        stream.close()
        _save_blowup(run, exc, cfg.bc)
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    stream.close()
    for k, st in sorted(traj.snapshots.items()):
        snapshot.save(run.path(f"snap_step{k:08d}.snap"), st, cfg.bc, extra={"config": cfg.as_dict()})

    fe5 = check_energy_identity(traj)
    fa10, fa10_note = None, None
    if state is not None:
        fa10_note = "resumed run: the identity needs records from t = 0"
    else:
        try:
            fa10 = check_fa10(traj).as_dict()
        except InsufficientSamples as exc:
            fa10_note = str(exc)
    final = {c: traj.records[-1][c] for c in CSV_COLUMNS}
    summary = {
        "config": cfg.as_dict(),
        "dt_eff": cfg.dt_eff,
        "nsteps": cfg.nsteps,
        "n_records": len(traj),
        "resumed_from_step": None if state is None else state.step,
        "final": final,
        "fe5": fe5.as_dict(),
        "fa10": fa10,
        "fa10_note": fa10_note,
        "monotonicity_violations": monotonicity_violations(traj),
    }
    if cfg.bc == "Marini":
        summary["marini"] = {
            "Bnorm_linf_final": traj.records[-1]["Bnorm_linf"],
            "Bnorm_linf_direct_final": traj.records[-1]["Bnorm_linf_direct"],
            "normal_gauge": traj.meta["normal_gauge"],
        }
    dump_json(run.path("summary.json"), summary)
    run.checks = {"fe5_defect": fe5.max_defect, "monotonicity_violations": summary["monotonicity_violations"]}
    return EXIT_OK


def cmd_compare_ds(run: Run) -> int:
    spec = run.spec
    base, cmp_ = spec.run, spec.compare
    if base.bc == "Marini":
        raise ConfigError("compare-ds needs Dirichlet or Neumann bc")
    ns = sorted(cmp_.ns)
    if len(ns) < 2:
        raise ConfigError("compare-ds needs at least two resolutions")
    stream = CsvStream(run.path("ds.csv"), DS_COLUMNS)
    levels = []
    try:
        for n in ns:
            cfg = suites.ds_config(
                n, base.bc, base.T, cmp_.eps_steps, cmp_.dt_factor, group=base.group, L=base.L, seed=base.seed,
                scheme=base.scheme, theta=base.theta,
            )
            res = suites.ds_pair(cfg, _initial(spec, cfg))
            for r in res["rows"]:
                stream.row({"n": n, **r})
            levels.append({k: res[k] for k in ("n", "rel_error", "B_gap", "eps", "dt")} | {"h": cfg.h})
    except BlowUpDetected as exc:
        stream.close()
        _save_blowup(run, exc, base.bc)
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    stream.close()
    hs = [lv["h"] for lv in levels]
    rel = [lv["rel_error"] for lv in levels]
    gap = [lv["B_gap"] for lv in levels]
    rel_orders = suites.orders(rel, hs=hs)
    gap_orders = suites.orders(gap, hs=hs)
    checks = [
        suites.CheckResult.at_least("rel_error_decreasing", int(np.all(np.diff(rel) < 0)), 1, errors=rel),
        suites.CheckResult.at_least("B_gap_order", min(gap_orders), 1.0, orders=gap_orders),
        suites.CheckResult.at_most("final_rel_error", rel[-1], cmp_.tol),
    ]
    dump_json(
        run.path("ds_convergence.json"),
        {
            "bc": base.bc,
            "group": base.group,
            "T": base.T,
            "levels": levels,
            "rel_error_orders": rel_orders,
            "B_gap_orders": gap_orders,
            "checks": [dataclasses.asdict(c) for c in checks],
            "passed": all(c.passed for c in checks),
        },
    )
    return _report_checks(run, checks)


def _report_checks(run: Run, checks) -> int:
    for c in checks:
        print(c.line())
    run.checks = {c.name: c.passed for c in checks if c.gated}
    failing = [c.name for c in checks if c.gated and not c.passed]
    if failing:
        print("failing checks: " + ", ".join(failing), file=sys.stderr)
        return EXIT_GATED
    return EXIT_OK


def cmd_check(run: Run) -> int:
    spec, kind = run.spec, run.args.kind
    ck, seed = spec.check, spec.run.seed
    if kind == "structure":
        rep = suites.structure_suite(n=ck.n, group=spec.run.group, seed=seed, n_fields=ck.n_trials)
    elif kind == "gaffney":
        rep = suites.gaffney_suite(ns=ck.ns, n_trials=ck.n_trials, n_gf=ck.gf_n, seed=seed)
    else:
        rep = suites.identities_suite(n=ck.n, seed=seed, n_bound_runs=ck.n_bound_runs, ns=ck.ns)
    d = rep.as_dict()
    d.pop("runtime_s")  # keeps the report bit-identical across runs; wall time lives in the manifest
    dump_json(run.path(f"check_{kind}.json"), d)
    return _report_checks(run, rep.checks)


def cmd_wilson(run: Run) -> int:
    spec, args = run.spec, run.args
    cfg = spec.run
    loops = read_loops_file(args.loops) if args.loops else spec.wilson.loops
    if not loops:
        n = cfg.n
        loops = (LoopSpec("xy", (n // 4, n // 4, n // 2), max(1, n // 2), max(1, n // 2)),)
    try:
        rows = regularized_wilson(cfg.replace(bc=cfg.bc if cfg.bc != "Marini" else "Neumann"),
                                  _initial(spec, cfg), spec.wilson.t_eval, loops)
    except BlowUpDetected as exc:
        _save_blowup(run, exc, cfg.bc)
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    stream = CsvStream(run.path("wilson.csv"), WILSON_COLUMNS)
    for r in rows:
        stream.row(r)
    stream.close()
    return EXIT_OK


def cmd_snapshot(run: Run) -> int:
    spec, args = run.spec, run.args
    cfg = spec.run
    if args.action == "load":
        state, header = snapshot.load(args.file)
        header = dict(header, A_l2=float(np.sqrt(np.sum(state.A.values ** 2) * state.A.mesh.h ** 3)))
        print(json.dumps(header, indent=2, sort_keys=True))
        return EXIT_OK
    if cfg.bc == "Marini":
        raise ConfigError("snapshot save needs Dirichlet or Neumann bc")
    k = cfg.nsteps if args.step is None else int(args.step)
    if not 0 <= k <= cfg.nsteps:
        raise RangeError(f"--step must lie in [0, {cfg.nsteps}]")
    try:
        traj = integrate(cfg, _initial(spec, cfg), snapshot_steps=[k], until_step=k)
    except BlowUpDetected as exc:
        _save_blowup(run, exc, cfg.bc)
        return EXIT_BLOWUP
    target = Path(args.file) if args.file else run.out / f"snap_step{k:08d}.snap"
    run.outputs.append(target)
    snapshot.save(target, traj.snapshots[k], cfg.bc, extra={"config": cfg.as_dict()})
    print(target)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(s: str):
    try:
        return tuple(int(v) for v in s.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--out", default="out", help="output directory (YMFLOW_OUT overrides)")
    common.add_argument("--seed", type=int, help="overrides [run] seed")
    common.add_argument("--threads", type=int, default=1, help="BLAS/OpenMP thread limit")

    p = argparse.ArgumentParser(prog="ymflow", description="Discrete Yang-Mills heat flow on a cube")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("flow", parents=[common], help="run a flow, stream the time series")
    f.add_argument("--snapshot-steps", type=_int_list, help="steps to snapshot, e.g. '10,20'")
    f.add_argument("--resume", metavar="SNAP", help="continue from a snapshot")

    sub.add_parser("compare-ds", parents=[common], help="Donaldson-Sadun reconstruction vs direct flow")

    c = sub.add_parser("check", parents=[common], help="run a check suite")
    c.add_argument("kind", choices=("structure", "gaffney", "identities"))

    w = sub.add_parser("wilson", parents=[common], help="Wilson loop table along the flow")
    w.add_argument("--loops", help="CSV with header plane,anchor,a,b")

    s = sub.add_parser("snapshot", parents=[common], help="save or inspect a snapshot")
    s.add_argument("action", choices=("save", "load"))
    s.add_argument("file", nargs="?", help="snapshot path (required for load)")
    s.add_argument("--step", type=int, help="step to save (default: final)")
    return p


COMMANDS = {"flow": cmd_flow, "compare-ds": cmd_compare_ds, "check": cmd_check, "wilson": cmd_wilson, "snapshot": cmd_snapshot}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    args.argv = argv
    if os.environ.get("YMFLOW_OUT"):
        args.out = os.environ["YMFLOW_OUT"]
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "snapshot" and args.action == "load" and not args.file:
        print("error: snapshot load needs a file", file=sys.stderr)
        return EXIT_USAGE
    run = None
    with threadpool_limits(limits=args.threads):
        try:
            spec = (load_config(args.config) if args.config else RunSpec()).with_seed(args.seed)
            if args.command == "snapshot" and args.action == "load":
                return COMMANDS["snapshot"](_Bare(args, spec))
            run = Run(args, spec)
            code = COMMANDS[args.command](run)
        except USAGE_ERRORS as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            code = EXIT_USAGE
        except YMFlowError as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            code = EXIT_USAGE
    if run is not None:
        run.manifest(code)
    return code


class _Bare:
    """Run stand-in for read-only commands that write no manifest."""

    def __init__(self, args, spec):
        self.args, self.spec = args, spec


if __name__ == "__main__":
    sys.exit(main())
