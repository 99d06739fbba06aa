"""Config-driven experiment sweeps.

A config file holds one or more ``[[experiment]]`` tables. Each experiment
names a task, a kernel, a base partition, an optional move sweep and a seed
list; it expands into one run per (move count, seed). Runs execute on a
bounded process pool and every result row is appended by the parent process.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import analysis, io
from .groups import GroupError, enumerate_subgroup, parse_dihedral
from .partitions import (
    PartitionError,
    move_fixed_to_train,
    move_partners,
    move_random,
    move_symmetric_pairs,
    partition_fixed_points,
    partition_random,
    partition_subgroup_fixed_points,
    save_partition,
)
from .representation import rep_sum
from .rfm import KernelConfig, rfm
from .tasks import Task, build_dataset

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "SYMRFM_OUTPUT_ROOT"
PRESETS = ("table1", "fig1", "fig2", "fig3", "fig4",
           "appendix-d1", "appendix-d2", "appendix-d3", "appendix-e", "appendix-f")
MOVE_KINDS = ("random", "symmetric-pairs", "fixed-to-train", "partners")
FAMILIES = ("random", "fixed-points", "subgroup-fixed-points")


class ConfigError(ValueError):
    pass


def output_root(default="results") -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, default))


# --------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class MoveSpec:
    kind: str
    counts: tuple
    reflection: Optional[str] = None

    def label(self, count) -> str:
        return f"{self.kind}={count}"


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    operation: str
    moduli: tuple
    kernel: KernelConfig
    partition: dict
    move: Optional[MoveSpec] = None
    m0: str = "identity"
    seeds: tuple = (0,)
    orbit: Optional[str] = None
    alignment: tuple = ()
    heatmaps: bool = True
    save_matrices: bool = True
    csv_mirror: bool = False
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def task(self) -> Task:
        return Task.from_moduli(self.operation, self.moduli)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def validate(self) -> None:
        """Check everything that can fail before any run starts."""
        try:
            task = self.task
            dataset = build_dataset(task)
            base = base_partition(dataset, self.partition, self.seeds[0])
            if self.move is not None:
                if self.move.reflection is not None:
                    parse_dihedral(task.group, self.move.reflection, task.variant)
                apply_move(dataset, base, self.move, max(self.move.counts), self.seeds[0])
            if self.orbit:
                enumerate_subgroup(task.group, self.orbit, task.variant)
            for a in self.alignment:
                enumerate_subgroup(task.group, a, task.variant)
            _check_m0(task, self.m0)
        except (GroupError, PartitionError, ValueError) as exc:
            raise ConfigError(f"experiment {self.name!r}: {exc}") from exc


def _seeds(d: dict, defaults: dict) -> tuple:
    seeds = d.get("seeds", defaults.get("seeds"))
    if seeds is None:
        master = d.get("master_seed", defaults.get("master_seed", 0))
        count = d.get("n_seeds", defaults.get("n_seeds", 1))
        seeds = [int(master) + i for i in range(int(count))]
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


def experiment_from_dict(d: dict, defaults: Optional[dict] = None) -> ExperimentConfig:
    defaults = defaults or {}
    merged = {**defaults, **d}
    for key in ("name", "task", "partition"):
        if key not in merged:
            raise ConfigError(f"experiment is missing {key!r}")
    task = merged["task"]
    if "operation" not in task or "moduli" not in task:
        raise ConfigError("task needs 'operation' and 'moduli'")
    moduli = task["moduli"]
    moduli = tuple([moduli] if isinstance(moduli, int) else moduli)
    kernel_d = {**defaults.get("kernel", {}), **d.get("kernel", {})}
    try:
        kernel = KernelConfig(**kernel_d)
    except TypeError as exc:
        raise ConfigError(f"bad kernel table: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    part = dict(merged["partition"])
    if part.get("family") not in FAMILIES:
        raise ConfigError(f"partition family must be one of {FAMILIES}")
    move = None
    if "move" in merged:
        mv = merged["move"]
        if mv.get("kind") not in MOVE_KINDS:
            raise ConfigError(f"move kind must be one of {MOVE_KINDS}")
        counts = mv.get("counts")
        if not counts:
            raise ConfigError("move needs a non-empty 'counts' list")
        move = MoveSpec(mv["kind"], tuple(int(c) for c in counts), mv.get("reflection"))
    alignment = merged.get("alignment", ())
    if isinstance(alignment, str):
        alignment = (alignment,)
    raw = {k: v for k, v in merged.items() if k not in ("workers",)}
    raw["kernel"] = kernel.to_dict()
    return ExperimentConfig(
        name=str(merged["name"]),
        operation=task["operation"],
        moduli=moduli,
        kernel=kernel,
        partition=part,
        move=move,
        m0=str(merged.get("m0", "identity")),
        seeds=_seeds(d, defaults),
        orbit=merged.get("orbit"),
        alignment=tuple(alignment),
        heatmaps=bool(merged.get("heatmaps", True)),
        save_matrices=bool(merged.get("save_matrices", True)),
        csv_mirror=bool(merged.get("csv_mirror", False)),
        raw=raw,
    )


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def parse_config(text: str) -> dict:
    """Parse a TOML document into ``{'defaults', 'experiments', ...}``."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    defaults = doc.get("defaults", {})
    exps = doc.get("experiment", [])
    if isinstance(exps, dict):
        exps = [exps]
    if not exps:
        raise ConfigError("config has no [[experiment]] tables")
    return {
        "name": doc.get("name", "run"),
        "description": doc.get("description", ""),
        "defaults": defaults,
        "experiments": [experiment_from_dict(e, defaults) for e in exps],
        "calibration": doc.get("calibration", {}),
    }


def preset_text(name: str) -> str:
    if name not in PRESETS and name != "calibration":
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("symrfm").joinpath("presets", f"{name}.toml").read_text()


def load_preset(name: str) -> dict:
    return parse_config(preset_text(name))


def override(exp: ExperimentConfig, seeds=None, iterations=None) -> ExperimentConfig:
    kw = {}
    if seeds is not None:
        kw["seeds"] = tuple(seeds)
    if iterations is not None:
        kw["kernel"] = dataclasses.replace(exp.kernel, iterations=int(iterations))
    if not kw:
        return exp
    raw = dict(exp.raw)
    if "seeds" in kw:
        raw["seeds"] = list(kw["seeds"])
    if "kernel" in kw:
        raw["kernel"] = kw["kernel"].to_dict()
    return dataclasses.replace(exp, raw=raw, **kw)


# --------------------------------------------------------------------------
# partitions and M0


def base_partition(dataset, spec: dict, seed: int):
    fam = spec["family"]
    if fam == "random":
        return partition_random(dataset, float(spec.get("fraction", 0.5)), int(spec.get("seed", seed)))
    if fam == "fixed-points":
        return partition_fixed_points(dataset, spec.get("reflection", "s"))
    if fam == "subgroup-fixed-points":
        if "subgroup" not in spec:
            raise ConfigError("subgroup-fixed-points needs 'subgroup'")
        return partition_subgroup_fixed_points(dataset, spec["subgroup"])
    raise ConfigError(f"unknown partition family {fam!r}")


def apply_move(dataset, base, move: MoveSpec, count: int, seed: int):
    task = dataset.task
    if move.kind == "random":
        return move_random(base, count, seed)
    if move.kind == "fixed-to-train":
        return move_fixed_to_train(base, count, seed)
    refl = parse_dihedral(task.group, move.reflection or "s", task.variant)
    if move.kind == "symmetric-pairs":
        return move_symmetric_pairs(base, count, refl, seed)
    return move_partners(base, count, refl, seed)


def seed_dependent(exp: ExperimentConfig, count) -> bool:
    if exp.partition["family"] == "random" and "seed" not in exp.partition:
        return True
    return exp.move is not None and count not in (0, None)


def _check_m0(task, m0: str):
    kind, _, arg = m0.partition(":")
    if kind == "identity":
        return
    if kind == "file":
        if not Path(arg).exists():
            raise ConfigError(f"M0 file {arg!r} not found")
    elif kind == "pi-sum":
        [parse_dihedral(task.group, t.strip(), task.variant) for t in arg.split(",")]
    elif kind == "learned":
        parse_dihedral(task.group, arg, task.variant)
    else:
        raise ConfigError(f"unknown M0 source {m0!r}")


def pi_sum_matrix(task, names) -> np.ndarray:
    """``sum Pi(h)`` over the named elements, scaled to unit top eigenvalue."""
    elems = [parse_dihedral(task.group, t.strip(), task.variant) for t in names]
    P = rep_sum(elems)
    sym = 0.5 * (P + P.T)
    return sym / np.linalg.eigvalsh(sym)[-1]


_LEARNED_CACHE = {}


def learned_matrix(task, kernel: KernelConfig, reflection: str) -> np.ndarray:
    """Final feature matrix of a run withholding the fixed points of ``reflection``."""
    key = (task.operation, task.moduli, kernel, reflection)
    if key not in _LEARNED_CACHE:
        ds = build_dataset(task)
        run = rfm(ds, partition_fixed_points(ds, reflection), kernel)
        _LEARNED_CACHE[key] = run.feature_matrix
    return _LEARNED_CACHE[key]


def resolve_m0(task, kernel: KernelConfig, m0: str) -> Optional[np.ndarray]:
    kind, _, arg = m0.partition(":")
    if kind == "identity":
        return None
    if kind == "file":
        if arg.endswith(".npy"):
            return np.load(arg)
        return io.load_matrix(arg)
    if kind == "pi-sum":
        return pi_sum_matrix(task, arg.split(","))
    if kind == "learned":
        return learned_matrix(task, kernel, arg)
    raise ConfigError(f"unknown M0 source {m0!r}")


# --------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class RunSpec:
    experiment: ExperimentConfig
    label: str
    count: Optional[int]
    seed: int
    outdir: str
    M0: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


def expand(exp: ExperimentConfig, outdir) -> list:
    counts = exp.move.counts if exp.move is not None else (None,)
    specs = []
    for count in counts:
        label = exp.move.label(count) if exp.move is not None else "base"
        seeds = exp.seeds if seed_dependent(exp, count) else exp.seeds[:1]
        for seed in seeds:
            d = Path(outdir) / exp.name / label.replace("=", "-") / f"seed-{seed}"
            specs.append(RunSpec(exp, label, count, seed, str(d)))
    return specs


def execute(spec: RunSpec) -> dict:
    """Run one spec; never raises, failures come back as ``status='failed'`` rows."""
    exp = spec.experiment
    row = {
        "experiment": exp.name, "config_hash": exp.config_hash, "label": spec.label,
        "seed": spec.seed, "task": exp.task.name, "kernel": exp.kernel.to_dict(), "m0": exp.m0,
    }
    t0 = time.perf_counter()
    try:
        ds = build_dataset(exp.task)
        part = base_partition(ds, exp.partition, spec.seed)
        if exp.move is not None:
            part = apply_move(ds, part, exp.move, spec.count, spec.seed)
        row["partition"] = part.provenance
        row["n_train"], row["n_test"] = len(part.train), len(part.test)
        out = Path(spec.outdir)
        out.mkdir(parents=True, exist_ok=True)
        artifacts = [str(save_partition(out / "partition.json", exp.task, part))]
        M0 = spec.M0 if spec.M0 is not None else resolve_m0(exp.task, exp.kernel, exp.m0)
        run = rfm(ds, part, exp.kernel, M0)
        final = run.final
        row.update(train_accuracy=final.train_accuracy, test_accuracy=final.test_accuracy,
                   train_loss=final.train_loss, test_loss=final.test_loss)
        artifacts.append(str(io.save_history(out / "history.csv", run.history)))
        if exp.save_matrices:
            artifacts.append(str(io.save_matrix(out / "M.mat", run.feature_matrix, exp.csv_mirror)))
        if exp.heatmaps:
            artifacts.append(str(analysis.heatmap(run.feature_matrix, out / "M.png", scale=4)))
        if exp.alignment:
            scores = {}
            for a in exp.alignment:
                H = enumerate_subgroup(exp.task.group, a, exp.task.variant)
                scores[a] = analysis.alignment(run.feature_matrix, H).as_dict()
            row["alignment"] = scores
        if exp.orbit:
            H = enumerate_subgroup(exp.task.group, exp.orbit, exp.task.variant)
            pred = analysis.orbit_predict(part, H, run)
            row["orbit_precision"], row["orbit_recall"] = pred.precision, pred.recall
        row["artifacts"] = artifacts
        row["status"] = "ok"
    except Exception as exc:  # flagged, not dropped
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
        log.debug("run failed\n%s", traceback.format_exc())
    row["seconds"] = round(time.perf_counter() - t0, 3)
    return row


def run_experiments(experiments, outdir=None, workers: int = 1, progress=None) -> list:
    """Validate, expand and execute; returns the appended result rows."""
    outdir = Path(outdir) if outdir is not None else output_root()
    for exp in experiments:
        exp.validate()
    specs = []
    for exp in experiments:
        # learned/pi-sum starting matrices are resolved once, in this process
        M0 = resolve_m0(exp.task, exp.kernel, exp.m0)
        specs += [dataclasses.replace(s, M0=M0) for s in expand(exp, outdir)]
    rows = []
    with io.ResultsWriter(outdir / "results.csv") as writer:
        def done(row):
            writer.append(row)
            rows.append(row)
            if progress is not None:
                progress(row)

        if workers <= 1:
            for s in specs:
                done(execute(s))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(execute, s) for s in specs]
                for fut in as_completed(futures):
                    done(fut.result())
    write_curves(rows, outdir)
    io.summarize(rows, outdir / "summary.csv")
    return rows


def write_curves(rows, outdir) -> None:
    """Per-label histories averaged over seeds, with the loss scaled to max 1."""
    groups = {}
    for r in rows:
        if r.get("status") == "ok":
            hist = next(a for a in r["artifacts"] if a.endswith("history.csv"))
            groups.setdefault((r["experiment"], r["label"]), []).append(io.load_history(hist))
    for (exp, label), hists in groups.items():
        T = min(len(h) for h in hists)
        cols = ("train_accuracy", "test_accuracy", "train_loss", "test_loss")
        mean = {c: np.mean([[it[c] for it in h[:T]] for h in hists], axis=0) for c in cols}
        path = Path(outdir) / exp / label.replace("=", "-") / "curve.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            fh.write("iteration," + ",".join(cols) + ",train_loss_normalized,test_loss_normalized\n")
            tr = analysis.normalized_loss(mean["train_loss"])
            te = analysis.normalized_loss(mean["test_loss"])
            for t in range(T):
                vals = [mean[c][t] for c in cols] + [tr[t], te[t]]
                fh.write(f"{t + 1}," + ",".join(f"{v:.10g}" for v in vals) + "\n")
