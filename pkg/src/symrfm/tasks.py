"""Full Cayley-table datasets for binary operations on finite Abelian groups."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .groups import DIRECT, INVERSE, Group, GroupError, GroupSpec, MultiplicativeGroup

OPERATIONS = {
    "add": DIRECT,
    "sub": INVERSE,
    "mul": DIRECT,
    "div": INVERSE,
}


@dataclass(frozen=True)
class Task:
    """A binary-operation task: ``a*b`` (add, mul) or ``a*b^-1`` (sub, div)."""

    operation: str
    group: Group

    def __post_init__(self):
        if self.operation not in OPERATIONS:
            raise GroupError(f"unknown operation {self.operation!r}")
        multiplicative = isinstance(self.group, MultiplicativeGroup)
        if self.operation in ("mul", "div") and not multiplicative:
            raise GroupError(f"{self.operation} needs a multiplicative group")
        if self.operation in ("add", "sub") and multiplicative:
            raise GroupError(f"{self.operation} needs an additive group")

    @classmethod
    def modular(cls, operation: str, p: int) -> "Task":
        if operation in ("mul", "div"):
            return cls(operation, MultiplicativeGroup(p))
        return cls(operation, GroupSpec((p,)))

    @classmethod
    def from_moduli(cls, operation: str, moduli) -> "Task":
        moduli = tuple(int(m) for m in ([moduli] if isinstance(moduli, int) else moduli))
        if operation in ("mul", "div"):
            if len(moduli) != 1:
                raise GroupError("multiplicative tasks take a single prime modulus")
            return cls(operation, MultiplicativeGroup(moduli[0]))
        return cls(operation, GroupSpec(moduli))

    @property
    def variant(self) -> str:
        return OPERATIONS[self.operation]

    @property
    def moduli(self) -> tuple:
        if isinstance(self.group, MultiplicativeGroup):
            return (self.group.p,)
        return self.group.moduli

    @property
    def n(self) -> int:
        return self.group.order

    def target(self, a, b):
        g = self.group
        if self.variant == DIRECT:
            return g.op(a, b)
        return g.op(a, g.inverse(b))

    @property
    def name(self) -> str:
        return f"{self.operation}-" + "x".join(str(m) for m in self.moduli)

    def to_dict(self) -> dict:
        return {"operation": self.operation, "moduli": list(self.moduli)}

    @classmethod
    def from_dict(cls, d: dict) -> "Task":
        return cls.from_moduli(d["operation"], d["moduli"])


@dataclass(frozen=True, eq=False)
class Dataset:
    """All ``n^2`` pairs in canonical order (row ``= idx(a) * n + idx(b)``)."""

    task: Task
    a: np.ndarray
    b: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.task.n

    def __len__(self) -> int:
        return len(self.y)

    @cached_property
    def X(self) -> np.ndarray:
        N, n = len(self), self.n
        X = np.zeros((N, 2 * n))
        X[np.arange(N), self.a] = 1.0
        X[np.arange(N), n + self.b] = 1.0
        X.setflags(write=False)
        return X

    @cached_property
    def Y(self) -> np.ndarray:
        Y = np.zeros((len(self), self.n))
        Y[np.arange(len(self)), self.y] = 1.0
        Y.setflags(write=False)
        return Y

    def row(self, pair) -> int:
        g = self.task.group
        return g.index(g.coerce(pair[0])) * self.n + g.index(g.coerce(pair[1]))

    def rows(self, pairs) -> np.ndarray:
        return np.array(sorted(self.row(p) for p in pairs), dtype=np.intp)

    def pair(self, row: int):
        g = self.task.group
        return g.element(int(self.a[row])), g.element(int(self.b[row]))

    def pairs(self, rows) -> set:
        return {self.pair(int(r)) for r in rows}


def build_dataset(task: Task) -> Dataset:
    g = task.group
    n = g.order
    a, b = np.divmod(np.arange(n * n, dtype=np.intp), n)
    if task.variant == DIRECT:
        y = g.op_table[a, b]
    else:
        y = g.op_table[a, g.inverse_table[b]]
    for arr in (a, b, y):
        arr.setflags(write=False)
    return Dataset(task, a, b, np.asarray(y, dtype=np.intp))
