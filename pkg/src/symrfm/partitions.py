"""Train/test partitions of a :class:`~symrfm.tasks.Dataset`.

Every partition carries a provenance dict from which :func:`rebuild`
regenerates the exact index sets. Random draws use numpy's PCG64 seeded
with the recorded integer seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .groups import DihedralElement, GroupError, Subgroup, enumerate_subgroup, parse_dihedral
from .tasks import Dataset, Task

GENERATOR = "PCG64"
FILE_FORMAT = "symrfm-partition/1"


class PartitionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Partition:
    train: np.ndarray
    test: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        train = np.unique(np.asarray(self.train, dtype=np.intp))
        test = np.unique(np.asarray(self.test, dtype=np.intp))
        if np.intersect1d(train, test).size:
            raise PartitionError("train and test overlap")
        for arr in (train, test):
            arr.setflags(write=False)
        object.__setattr__(self, "train", train)
        object.__setattr__(self, "test", test)

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and np.array_equal(self.train, other.train)
            and np.array_equal(self.test, other.test)
        )

    @property
    def size(self) -> int:
        return len(self.train) + len(self.test)

    def check_total(self, dataset: Dataset) -> None:
        # rows are unique and disjoint, so size plus range implies coverage
        top = max(self.train.max(initial=-1), self.test.max(initial=-1))
        if self.size != len(dataset) or top >= len(dataset):
            raise PartitionError("partition does not cover the dataset")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _reflection(dataset: Dataset, g) -> DihedralElement:
    task = dataset.task
    if isinstance(g, str):
        g = parse_dihedral(task.group, g, task.variant)
    if not g.is_reflection:
        raise GroupError(f"{g} is not a reflection")
    if g.variant != task.variant or g.group != task.group:
        raise GroupError(f"{g} does not act on {task.name}")
    return g


def _subgroup(dataset: Dataset, H) -> Subgroup:
    if isinstance(H, str):
        H = enumerate_subgroup(dataset.task.group, H, dataset.task.variant)
    return H


def _complement(N: int, rows) -> np.ndarray:
    mask = np.ones(N, dtype=bool)
    mask[rows] = False
    return np.flatnonzero(mask)


def fixed_rows(dataset: Dataset, g: DihedralElement) -> np.ndarray:
    perm = g.pair_map()
    return np.flatnonzero(perm == np.arange(len(perm)))


# --------------------------------------------------------------------------
# base families


def partition_random(dataset: Dataset, fraction: float, seed: int) -> Partition:
    if not 0.0 <= fraction <= 1.0:
        raise PartitionError(f"fraction must lie in [0, 1], got {fraction}")
    N = len(dataset)
    k = int(np.floor(fraction * N))
    train = _rng(seed).choice(N, size=k, replace=False)
    prov = {"family": "random", "fraction": float(fraction), "seed": int(seed), "generator": GENERATOR}
    return Partition(train, _complement(N, train), prov)


def partition_fixed_points(dataset: Dataset, reflection) -> Partition:
    g = _reflection(dataset, reflection)
    test = fixed_rows(dataset, g)
    prov = {"family": "fixed-points", "reflection": str(g)}
    return Partition(_complement(len(dataset), test), test, prov)


def partition_subgroup_fixed_points(dataset: Dataset, H) -> Partition:
    H = _subgroup(dataset, H)
    refl = H.reflections
    if not refl:
        raise GroupError("subgroup has no reflections")
    test = np.unique(np.concatenate([fixed_rows(dataset, g) for g in refl]))
    prov = {"family": "subgroup-fixed-points", "subgroup": str(H.presentation),
            "elements": [str(g) for g in H.elements]}
    return Partition(_complement(len(dataset), test), test, prov)


# --------------------------------------------------------------------------
# moves (each draws a fresh subset from the partition it is given)


def move_random(partition: Partition, count: int, seed: int) -> Partition:
    """Move ``count`` uniformly chosen train rows to the test set."""
    if not 0 <= count <= len(partition.train):
        raise PartitionError(f"cannot move {count} of {len(partition.train)} train rows")
    moved = _rng(seed).choice(partition.train, size=count, replace=False)
    prov = {"family": "move-random", "base": partition.provenance, "count": int(count),
            "seed": int(seed), "generator": GENERATOR}
    return Partition(np.setdiff1d(partition.train, moved), np.union1d(partition.test, moved), prov)


def reflection_pairs(rows, g: DihedralElement) -> np.ndarray:
    """Disjoint ``{x, g x}`` pairs with both members in ``rows``; shape ``(k, 2)``."""
    rows = np.asarray(rows, dtype=np.intp)
    perm = g.pair_map()
    images = perm[rows]
    keep = (images > rows) & np.isin(images, rows)
    return np.stack([rows[keep], images[keep]], axis=1)


def move_symmetric_pairs(partition: Partition, count: int, reflection: DihedralElement, seed: int) -> Partition:
    """Move ``count`` reflection pairs ``{x, g x}`` together, keeping ``{id, g}``-invariance."""
    pairs = reflection_pairs(partition.train, reflection)
    if not 0 <= count <= len(pairs):
        raise PartitionError(f"only {len(pairs)} reflection pairs available, asked for {count}")
    pick = _rng(seed).choice(len(pairs), size=count, replace=False)
    moved = pairs[pick].ravel()
    prov = {"family": "move-symmetric-pairs", "base": partition.provenance, "count": int(count),
            "reflection": str(reflection), "seed": int(seed), "generator": GENERATOR}
    return Partition(np.setdiff1d(partition.train, moved), np.union1d(partition.test, moved), prov)


def move_fixed_to_train(partition: Partition, count: int, seed: int) -> Partition:
    """Move ``count`` uniformly chosen test rows back into the train set."""
    if not 0 <= count <= len(partition.test):
        raise PartitionError(f"cannot move {count} of {len(partition.test)} test rows")
    moved = _rng(seed).choice(partition.test, size=count, replace=False)
    prov = {"family": "move-fixed-to-train", "base": partition.provenance, "count": int(count),
            "seed": int(seed), "generator": GENERATOR}
    return Partition(np.union1d(partition.train, moved), np.setdiff1d(partition.test, moved), prov)


def move_partners(partition: Partition, count: int, reflection: DihedralElement, seed: int) -> Partition:
    """Move the train images ``g x`` of ``count`` random test rows ``x`` to the test set.

    ``count=-1`` takes every test row. Takes those points out of ``Orbit_{id,g}(train)``.
    """
    perm = reflection.pair_map()
    images = perm[partition.test]
    candidates = np.unique(images[np.isin(images, partition.train)])
    if count == -1:
        count = len(candidates)
    if not 0 <= count <= len(candidates):
        raise PartitionError(f"only {len(candidates)} partners in train, asked for {count}")
    moved = _rng(seed).choice(candidates, size=count, replace=False)
    prov = {"family": "move-partners", "base": partition.provenance, "count": int(count),
            "reflection": str(reflection), "seed": int(seed), "generator": GENERATOR}
    return Partition(np.setdiff1d(partition.train, moved), np.union1d(partition.test, moved), prov)


def is_invariant(rows, H, dataset: Dataset) -> bool:
    rows = np.asarray(rows, dtype=np.intp)
    if len(rows) and (rows.min() < 0 or rows.max() >= len(dataset)):
        raise PartitionError("row index out of range")
    elements = H.elements if isinstance(H, Subgroup) else tuple(H)
    for h in elements:
        if not np.isin(h.pair_map()[rows], rows).all():
            return False
    return True


# --------------------------------------------------------------------------
# provenance and files


def rebuild(dataset: Dataset, provenance: dict) -> Partition:
    fam = provenance["family"]
    if fam == "random":
        return partition_random(dataset, provenance["fraction"], provenance["seed"])
    if fam == "fixed-points":
        return partition_fixed_points(dataset, provenance["reflection"])
    if fam == "subgroup-fixed-points":
        return partition_subgroup_fixed_points(dataset, provenance["subgroup"])
    base = rebuild(dataset, provenance["base"])
    if fam == "move-random":
        return move_random(base, provenance["count"], provenance["seed"])
    if fam == "move-symmetric-pairs":
        g = _reflection(dataset, provenance["reflection"])
        return move_symmetric_pairs(base, provenance["count"], g, provenance["seed"])
    if fam == "move-fixed-to-train":
        return move_fixed_to_train(base, provenance["count"], provenance["seed"])
    if fam == "move-partners":
        g = _reflection(dataset, provenance["reflection"])
        return move_partners(base, provenance["count"], g, provenance["seed"])
    raise PartitionError(f"unknown partition family {fam!r}")


def save_partition(path, task: Task, partition: Partition) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": FILE_FORMAT,
        "task": task.to_dict(),
        "provenance": partition.provenance,
        "train": partition.train.tolist(),
        "test": partition.test.tolist(),
    }
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def load_partition(path) -> tuple:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FILE_FORMAT:
        raise PartitionError(f"{path}: not a partition file")
    task = Task.from_dict(doc["task"])
    return task, Partition(doc["train"], doc["test"], doc["provenance"])
