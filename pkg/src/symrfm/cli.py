"""Command-line entry point: ``symrfm <subcommand> ...``.

Failures exit nonzero after printing one line ``error: <kind>: <message>``
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, harness, io
from .groups import GroupError, enumerate_subgroup
from .partitions import PartitionError, load_partition, save_partition
from .rfm import KernelConfig, NumericalError, rfm
from .tasks import Task, build_dataset

EXIT_FAILURE = 1
EXIT_USAGE = 2


def _task(args) -> Task:
    return Task.from_moduli(args.op, [int(m) for m in args.moduli.split("x")])


def _kernel(args) -> KernelConfig:
    return KernelConfig(kind=args.kernel, bandwidth=args.bandwidth, power=args.power,
                        iterations=args.iterations, ridge=args.ridge,
                        centering=not args.uncentered)


def _add_task_args(p):
    p.add_argument("--op", required=True, choices=("add", "sub", "mul", "div"))
    p.add_argument("--moduli", required=True, help="e.g. 61 or 5x11")


def _add_kernel_args(p):
    d = KernelConfig()
    p.add_argument("--kernel", default=d.kind, choices=("gaussian", "quadratic"))
    p.add_argument("--bandwidth", type=float, default=d.bandwidth)
    p.add_argument("--power", type=float, default=d.power)
    p.add_argument("--iterations", type=int, default=d.iterations)
    p.add_argument("--ridge", type=float, default=d.ridge)
    p.add_argument("--uncentered", action="store_true",
                   help="use the raw second moment of the Jacobians in the update")
    p.add_argument("--m0", default="identity",
                   help="identity | file:PATH | pi-sum:id,sr10 | learned:REFLECTION")


def _out_dir(args) -> Path:
    return Path(args.output) if args.output else harness.output_root()


# --------------------------------------------------------------------------
# subcommands


def cmd_gen_task(args):
    task = _task(args)
    ds = build_dataset(task)
    g = task.group
    out = Path(args.out) if args.out else _out_dir(args) / f"{task.name}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    fmt = (lambda e: str(e[0])) if len(task.moduli) == 1 else g.format_element
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "a", "b", "label"])
        for r in range(len(ds)):
            a, b = ds.pair(r)
            w.writerow([r, fmt(a), fmt(b), fmt(g.element(int(ds.y[r])))])
    print(f"{task.name}: {len(ds)} rows, {task.n} classes -> {out}")


def _build_partition(args, ds):
    spec = {"family": args.family}
    if args.family == "random":
        spec["fraction"] = args.fraction
    elif args.family == "fixed-points":
        spec["reflection"] = args.reflection
    else:
        spec["subgroup"] = args.subgroup
    part = harness.base_partition(ds, spec, args.seed)
    if args.move:
        move = harness.MoveSpec(args.move, (args.count,), args.move_reflection)
        part = harness.apply_move(ds, part, move, args.count, args.seed)
    return part


def cmd_make_partition(args):
    task = _task(args)
    ds = build_dataset(task)
    part = _build_partition(args, ds)
    path = save_partition(args.out, task, part)
    print(f"train={len(part.train)} test={len(part.test)} -> {path}")


def _save_run(out: Path, run, csv_mirror=False):
    out.mkdir(parents=True, exist_ok=True)
    io.save_history(out / "history.csv", run.history)
    io.save_matrix(out / "M.mat", run.feature_matrix, csv_mirror)
    analysis.heatmap(run.feature_matrix, out / "M.png", scale=4)


def cmd_run_rfm(args):
    task, part = load_partition(args.partition)
    ds = build_dataset(task)
    part.check_total(ds)
    cfg = _kernel(args)
    M0 = harness.resolve_m0(task, cfg, args.m0)

    def show(t, m):
        if args.verbose:
            print(f"iter {t:3d} train {m.train_accuracy:.4f} test {m.test_accuracy:.4f} "
                  f"loss {m.test_loss:.3e} ({m.seconds:.2f}s)")

    run = rfm(ds, part, cfg, M0, callback=show)
    out = _out_dir(args) / "run-rfm" / f"{task.name}-{cfg.kind}"
    _save_run(out, run, args.csv)
    print(json.dumps({"task": task.name, "train_accuracy": run.train_accuracy,
                      "test_accuracy": run.test_accuracy, "output": str(out)}))


def cmd_analyze(args):
    M = np.load(args.matrix) if args.matrix.endswith(".npy") else io.load_matrix(args.matrix)
    report = {"stats": analysis.matrix_stats(M)}
    if args.subgroup:
        task = _task(args)
        for s in args.subgroup:
            H = enumerate_subgroup(task.group, s, task.variant)
            report[s] = analysis.alignment(M, H).as_dict()
    if args.heatmap:
        analysis.heatmap(M, args.heatmap, scale=args.scale)
        report["heatmap"] = args.heatmap
    print(json.dumps(report, indent=1))


def cmd_orbit_check(args):
    task = _task(args)
    ds = build_dataset(task)
    part = _build_partition(args, ds)
    cfg = _kernel(args)
    H = enumerate_subgroup(task.group, args.subgroup, task.variant)
    run = rfm(ds, part, cfg, harness.resolve_m0(task, cfg, args.m0))
    pred = analysis.orbit_predict(part, H, run)
    print(json.dumps({"test_accuracy": run.test_accuracy, **pred.as_dict()}))


def _progress(row):
    acc = row.get("test_accuracy")
    acc = f"{acc:.4f}" if isinstance(acc, float) else "-"
    extra = f" error={row['error']}" if row.get("status") == "failed" else ""
    print(f"{row['experiment']:<28} {row['label']:<22} seed={row['seed']:<3} "
          f"test={acc} {row['status']} {row['seconds']:.1f}s{extra}", flush=True)


def _run_config(cfg, args):
    exps = cfg["experiments"]
    seeds = None
    if args.seeds is not None:
        seeds = list(range(args.seeds)) if args.seeds > 0 else []
    exps = [harness.override(e, seeds=seeds, iterations=args.iterations) for e in exps]
    if args.only:
        exps = [e for e in exps if any(o in e.name for o in args.only)]
        if not exps:
            raise harness.ConfigError(f"no experiment matches {args.only}")
    out = _out_dir(args) / cfg["name"]
    rows = harness.run_experiments(exps, out, workers=args.workers, progress=_progress)
    failed = sum(r["status"] != "ok" for r in rows)
    for s in io.summarize(rows):
        print(f"{s['experiment']:<28} {s['label']:<22} runs={s['runs']} "
              f"test mean={_fmt(s['test_accuracy_mean'])} "
              f"[{_fmt(s['test_accuracy_min'])}, {_fmt(s['test_accuracy_max'])}]")
    print(f"results: {out / 'results.csv'}")
    if failed:
        raise RunFailures(f"{failed} of {len(rows)} runs failed")


def _fmt(v):
    return f"{v:.4f}" if isinstance(v, float) else "-"


class RunFailures(RuntimeError):
    pass


def cmd_run(args):
    _run_config(harness.load_config(args.config), args)


def cmd_reproduce(args):
    _run_config(harness.load_preset(args.preset), args)


def cmd_list_presets(args):
    for name in harness.PRESETS:
        print(f"{name:<12} {harness.load_preset(name)['description']}")


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symrfm", description=__doc__.splitlines()[0])
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-task", help="write the full Cayley table of a task as CSV")
    _add_task_args(p)
    p.add_argument("--out")
    p.add_argument("--output", help="output root (default $SYMRFM_OUTPUT_ROOT or ./results)")
    p.set_defaults(func=cmd_gen_task)

    def partition_args(p):
        _add_task_args(p)
        p.add_argument("--family", default="fixed-points", choices=harness.FAMILIES)
        p.add_argument("--fraction", type=float, default=0.5)
        p.add_argument("--reflection", default="s")
        p.add_argument("--subgroup", help="e.g. reflection:s, dihedral:16,0")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--move", choices=harness.MOVE_KINDS)
        p.add_argument("--count", type=int, default=0)
        p.add_argument("--move-reflection", default="s")

    p = sub.add_parser("make-partition", help="build a train/test partition file")
    partition_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_partition)

    p = sub.add_parser("run-rfm", help="train RFM on a saved partition")
    p.add_argument("--partition", required=True)
    _add_kernel_args(p)
    p.add_argument("--output")
    p.add_argument("--csv", action="store_true", help="also write a CSV copy of the matrix")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_run_rfm)

    p = sub.add_parser("analyze", help="alignment, stats and heatmap of a saved matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--op", choices=("add", "sub", "mul", "div"))
    p.add_argument("--moduli")
    p.add_argument("--subgroup", action="append")
    p.add_argument("--heatmap")
    p.add_argument("--scale", type=int, default=4)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("orbit-check", help="compare correct test points with Orbit_H(train)")
    partition_args(p)
    p.set_defaults(family="random")
    _add_kernel_args(p)
    p.set_defaults(func=cmd_orbit_check)

    def sweep_args(p):
        p.add_argument("--output")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seeds", type=int, help="override: use seeds 0..N-1")
        p.add_argument("--iterations", type=int, help="override T for every run")
        p.add_argument("--only", action="append", help="run experiments whose name contains this")

    p = sub.add_parser("run", help="run every experiment in a TOML config")
    p.add_argument("--config", required=True)
    sweep_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="run a bundled preset")
    p.add_argument("preset")
    sweep_args(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("list-presets")
    p.set_defaults(func=cmd_list_presets)
    return ap


_ERROR_KINDS = (
    (harness.ConfigError, "config"),
    (PartitionError, "partition"),
    (GroupError, "group"),
    (NumericalError, "numerical"),
    (RunFailures, "runs"),
    (OSError, "io"),
    (ValueError, "value"),
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    if args.command == "analyze" and args.subgroup and not (args.op and args.moduli):
        parser.error("--subgroup needs --op and --moduli")
    try:
        args.func(args)
    except Exception as exc:
        for cls, kind in _ERROR_KINDS:
            if isinstance(exc, cls):
                msg = str(exc).replace("\n", " ")
                print(f"error: {kind}: {msg}", file=sys.stderr)
                return EXIT_FAILURE
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
