"""Finite Abelian groups and the generalized dihedral action on pairs.

Two group families are supported:

* :class:`GroupSpec` -- a direct product of additive cyclic groups
  ``Z_{n1} x ... x Z_{nk}``; elements are residue tuples.
* :class:`MultiplicativeGroup` -- the units ``Z_p^*`` of a prime field;
  elements are 1-tuples ``(v,)`` with ``1 <= v < p``.

Both share one canonical index map (mixed radix, first factor most
significant; value ``v -> v - 1`` for ``Z_p^*``), which every encoding and
permutation matrix in the package goes through.

The symmetry group of ``f(a, b) = a * b`` acts on ``A x A`` by

    r^x (a, b)  = (a*x, b*x^-1)          (direct)
    sr^x (a, b) = (b*x^-1, a*x)

and the symmetry group of the right-inverse operation ``a * b^-1`` by

    r~^x (a, b)   = (a*x, b*x)           (inverse variant)
    s~r~^x (a, b) = ((b*x)^-1, (a*x)^-1)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, NamedTuple, Union

import numpy as np

Element = tuple  # residue tuple
Pair = tuple  # (Element, Element)

DIRECT = "direct"
INVERSE = "inverse"
ROTATION = "rotation"
REFLECTION = "reflection"


class GroupError(ValueError):
    """Raised for malformed elements, mismatched groups or bad presentations."""


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % k for k in range(2, math.isqrt(p) + 1))


class _TabulatedGroup:
    """Shared machinery: index map, Cayley table and inverse table."""

    order: int

    def element(self, index: int) -> Element:
        raise NotImplementedError

    def index(self, element) -> int:
        raise NotImplementedError

    def _op_elements(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    @property
    def identity(self) -> Element:
        return self.element(self.identity_index)

    @property
    def identity_index(self) -> int:
        raise NotImplementedError

    def elements(self) -> list:
        return [self.element(i) for i in range(self.order)]

    def coerce(self, value) -> Element:
        """Normalise ``value`` (int for one-factor groups, or tuple) to an element."""
        if isinstance(value, (int, np.integer)):
            value = (int(value),)
        value = tuple(int(v) for v in value)
        self.index(value)  # validates
        return value

    def op(self, a, b) -> Element:
        return self._op_elements(self.coerce(a), self.coerce(b))

    def inverse(self, a) -> Element:
        return self.element(int(self.inverse_table[self.index(self.coerce(a))]))

    @cached_property
    def op_table(self) -> np.ndarray:
        """``op_table[i, j]`` is the index of ``element(i) * element(j)``."""
        elems = self.elements()
        table = np.empty((self.order, self.order), dtype=np.intp)
        for i, a in enumerate(elems):
            for j, b in enumerate(elems):
                table[i, j] = self.index(self._op_elements(a, b))
        table.setflags(write=False)
        return table

    @cached_property
    def inverse_table(self) -> np.ndarray:
        ident = self.identity_index
        inv = np.argmax(self.op_table == ident, axis=1).astype(np.intp)
        inv.setflags(write=False)
        return inv

    def format_element(self, element) -> str:
        element = self.coerce(element)
        return "(" + ",".join(str(v) for v in element) + ")"

    def parse_element(self, text: str) -> Element:
        text = text.strip()
        if text.startswith("(") and text.endswith(")"):
            text = text[1:-1]
        try:
            values = tuple(int(v) for v in text.split(",") if v.strip())
        except ValueError:
            raise GroupError(f"cannot parse element {text!r}") from None
        return self.coerce(values)


@dataclass(frozen=True)
class GroupSpec(_TabulatedGroup):
    """Additive Abelian group ``Z_{n1} x ... x Z_{nk}``."""

    moduli: tuple

    def __post_init__(self):
        moduli = tuple(int(n) for n in self.moduli)
        if not moduli:
            raise GroupError("a group needs at least one cyclic factor")
        if any(n < 2 for n in moduli):
            raise GroupError(f"every modulus must be >= 2, got {moduli}")
        object.__setattr__(self, "moduli", moduli)

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def is_cyclic_factor(self) -> bool:
        return len(self.moduli) == 1

    @property
    def identity_index(self) -> int:
        return 0

    def index(self, element) -> int:
        if len(element) != len(self.moduli):
            raise GroupError(f"element {element} does not match moduli {self.moduli}")
        idx = 0
        for r, n in zip(element, self.moduli):
            if not 0 <= r < n:
                raise GroupError(f"residue {r} out of range for modulus {n}")
            idx = idx * n + r
        return idx

    def element(self, index: int) -> Element:
        if not 0 <= index < self.order:
            raise GroupError(f"index {index} out of range")
        out = []
        for n in reversed(self.moduli):
            index, r = divmod(index, n)
            out.append(r)
        return tuple(reversed(out))

    def _op_elements(self, a, b):
        if len(a) != len(self.moduli) or len(b) != len(self.moduli):
            raise GroupError("mismatched tuple arity")
        return tuple((x + y) % n for x, y, n in zip(a, b, self.moduli))

    def inverse(self, a) -> Element:
        a = self.coerce(a)
        return tuple((-x) % n for x, n in zip(a, self.moduli))

    def describe(self) -> str:
        return " x ".join(f"Z{n}" for n in self.moduli)


@dataclass(frozen=True)
class MultiplicativeGroup(_TabulatedGroup):
    """Units of ``Z_p`` under multiplication, indexed by value (``v -> v - 1``)."""

    p: int

    def __post_init__(self):
        if not _is_prime(int(self.p)):
            raise GroupError(f"multiplicative tasks need a prime modulus, got {self.p}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def order(self) -> int:
        return self.p - 1

    @property
    def moduli(self) -> tuple:
        return (self.p - 1,)

    @property
    def identity_index(self) -> int:
        return 0

    def index(self, element) -> int:
        if len(element) != 1 or not 1 <= element[0] < self.p:
            raise GroupError(f"{element} is not a unit mod {self.p}")
        return element[0] - 1

    def element(self, index: int) -> Element:
        if not 0 <= index < self.order:
            raise GroupError(f"index {index} out of range")
        return (index + 1,)

    def _op_elements(self, a, b):
        if len(a) != 1 or len(b) != 1:
            raise GroupError("mismatched tuple arity")
        return ((a[0] * b[0]) % self.p,)

    def inverse(self, a) -> Element:
        a = self.coerce(a)
        return (pow(a[0], -1, self.p),)

    def describe(self) -> str:
        return f"Z{self.p}*"


Group = Union[GroupSpec, MultiplicativeGroup]


def op(spec: Group, a, b) -> Element:
    return spec.op(a, b)


def inverse(spec: Group, a) -> Element:
    return spec.inverse(a)


# --------------------------------------------------------------------------
# dihedral elements


@dataclass(frozen=True)
class DihedralElement:
    """``r^x`` or ``s r^x`` acting on ``A x A``; ``variant`` selects the action."""

    group: Group = field(repr=False)
    kind: str
    x: Element
    variant: str = DIRECT

    def __post_init__(self):
        if self.kind not in (ROTATION, REFLECTION):
            raise GroupError(f"unknown kind {self.kind!r}")
        if self.variant not in (DIRECT, INVERSE):
            raise GroupError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "x", self.group.coerce(self.x))

    @property
    def is_reflection(self) -> bool:
        return self.kind == REFLECTION

    @property
    def is_identity(self) -> bool:
        return self.kind == ROTATION and self.x == self.group.identity

    @property
    def x_index(self) -> int:
        return self.group.index(self.x)

    def apply(self, pair) -> Pair:
        g = self.group
        a, b = g.coerce(pair[0]), g.coerce(pair[1])
        x = self.x
        xi = g.inverse(x)
        if self.variant == DIRECT:
            if self.kind == ROTATION:
                return g.op(a, x), g.op(b, xi)
            return g.op(b, xi), g.op(a, x)
        if self.kind == ROTATION:
            return g.op(a, x), g.op(b, x)
        return g.inverse(g.op(b, x)), g.inverse(g.op(a, x))

    __call__ = apply

    def compose(self, other: "DihedralElement") -> "DihedralElement":
        """``self o other`` (``other`` acts first)."""
        if other.group != self.group:
            raise GroupError("cannot compose elements of different groups")
        if other.variant != self.variant:
            raise GroupError("variant mismatch")
        g = self.group
        x, y = self.x, other.x
        # r^x s = s r^{-x}; s r^x s = r^{-x}
        if self.kind == ROTATION and other.kind == ROTATION:
            kind, z = ROTATION, g.op(x, y)
        elif self.kind == ROTATION:
            kind, z = REFLECTION, g.op(y, g.inverse(x))
        elif other.kind == ROTATION:
            kind, z = REFLECTION, g.op(x, y)
        else:
            kind, z = ROTATION, g.op(y, g.inverse(x))
        return DihedralElement(g, kind, z, self.variant)

    def __mul__(self, other):
        return self.compose(other)

    def inverse(self) -> "DihedralElement":
        if self.kind == REFLECTION:
            return self
        return DihedralElement(self.group, ROTATION, self.group.inverse(self.x), self.variant)

    def pair_map(self) -> np.ndarray:
        """Action on dataset rows: ``row(a, b) = idx(a) * n + idx(b)`` maps to ``row(g(a, b))``."""
        g = self.group
        n = g.order
        T, inv = g.op_table, g.inverse_table
        a, b = np.divmod(np.arange(n * n), n)
        x = self.x_index
        if self.variant == DIRECT:
            if self.kind == ROTATION:
                na, nb = T[a, x], T[b, inv[x]]
            else:
                na, nb = T[b, inv[x]], T[a, x]
        elif self.kind == ROTATION:
            na, nb = T[a, x], T[b, x]
        else:
            na, nb = inv[T[b, x]], inv[T[a, x]]
        return na * n + nb

    def __str__(self) -> str:
        return format_dihedral(self)


def rotation(group: Group, x, variant: str = DIRECT) -> DihedralElement:
    return DihedralElement(group, ROTATION, x, variant)


def reflection(group: Group, x=None, variant: str = DIRECT) -> DihedralElement:
    return DihedralElement(group, REFLECTION, group.identity if x is None else x, variant)


def identity(group: Group, variant: str = DIRECT) -> DihedralElement:
    return DihedralElement(group, ROTATION, group.identity, variant)


def dihedral_elements(group: Group, variant: str = DIRECT) -> list:
    """All ``2|A|`` elements of the symmetry group, rotations first."""
    return [rotation(group, e, variant) for e in group.elements()] + [
        reflection(group, e, variant) for e in group.elements()
    ]


def apply(g: DihedralElement, pair) -> Pair:
    return g.apply(pair)


def compose(g: DihedralElement, h: DihedralElement) -> DihedralElement:
    return g.compose(h)


def format_dihedral(g: DihedralElement) -> str:
    grp = g.group
    if g.x == grp.identity:
        body = "id" if g.kind == ROTATION else "s"
    else:
        x = str(g.x[0]) if len(g.x) == 1 else grp.format_element(g.x)
        body = ("r^" if g.kind == ROTATION else "sr^") + x
    return body + ("~" if g.variant == INVERSE else "")


_DIHEDRAL_RE = re.compile(r"^(sr\^?|r\^?|id|e|s)(.*?)(~?)$")


def parse_dihedral(group: Group, text: str, variant: str | None = None) -> DihedralElement:
    """Parse ``id``, ``s``, ``r^3``, ``sr35``, ``sr^(3,2)`` with optional ``~`` suffix."""
    text = text.strip().replace(" ", "")
    m = _DIHEDRAL_RE.match(text)
    if not m:
        raise GroupError(f"cannot parse dihedral element {text!r}")
    head, arg, tilde = m.groups()
    var = INVERSE if tilde else DIRECT
    if variant is not None:
        if tilde and variant != INVERSE:
            raise GroupError(f"{text!r} is inverse-variant but {variant} was requested")
        var = variant
    if head in ("id", "e", "s"):
        if arg:
            raise GroupError(f"cannot parse dihedral element {text!r}")
        return (identity if head != "s" else reflection)(group, variant=var)
    if not arg:
        raise GroupError(f"missing exponent in {text!r}")
    x = group.parse_element(arg)
    kind = REFLECTION if head.startswith("s") else ROTATION
    return DihedralElement(group, kind, x, var)


# --------------------------------------------------------------------------
# fixed points, orbits, classes


def fixed_points(g: DihedralElement) -> set:
    """Pairs left unchanged by ``g``.

    Reflections use the closed forms ``{(a, a*x)}`` (direct) and
    ``{(a, (a*x)^-1)}`` (inverse variant); rotations fall back to a scan.
    """
    grp = g.group
    if g.kind == REFLECTION:
        if g.variant == DIRECT:
            return {(a, grp.op(a, g.x)) for a in grp.elements()}
        return {(a, grp.inverse(grp.op(a, g.x))) for a in grp.elements()}
    return fixed_points_brute(g)


def fixed_points_brute(g: DihedralElement) -> set:
    elems = g.group.elements()
    return {p for p in product(elems, elems) if g.apply(p) == p}


def fixing_reflection(group: Group, pair, variant: str = DIRECT) -> Element:
    """The unique ``x`` with ``sr^x (a, b) = (a, b)``."""
    a, b = group.coerce(pair[0]), group.coerce(pair[1])
    if variant == DIRECT:
        return group.op(group.inverse(a), b)
    return group.op(group.inverse(a), group.inverse(b))


def orbit(H: Iterable[DihedralElement] | "Subgroup", X: Iterable) -> set:
    elements = H.elements if isinstance(H, Subgroup) else tuple(H)
    out = set()
    for p in X:
        for h in elements:
            out.add(h.apply(p))
    return out


def symmetry_class(group: Group, label, variant: str = DIRECT) -> set:
    """All pairs whose target equals ``label`` (``a*b`` or ``a*b^-1``)."""
    label = group.coerce(label)
    out = set()
    for a in group.elements():
        # direct: b = a^-1 * l ; inverse: a * b^-1 = l  =>  b = l^-1 * a
        if variant == DIRECT:
            b = group.op(group.inverse(a), label)
        else:
            b = group.op(group.inverse(label), a)
        out.add((a, b))
    return out


# --------------------------------------------------------------------------
# subgroups


class Presentation(NamedTuple):
    kind: str  # trivial | cyclic | dihedral | reflection | generated
    params: tuple = ()

    def __str__(self) -> str:
        if self.kind == "trivial":
            return "trivial"
        return f"{self.kind}:" + ",".join(str(p) for p in self.params)


@dataclass(frozen=True)
class Subgroup:
    presentation: Presentation
    elements: tuple

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, g):
        return g in self.elements

    @property
    def reflections(self) -> list:
        return [g for g in self.elements if g.is_reflection]

    @property
    def group(self) -> Group:
        return self.elements[0].group

    @property
    def variant(self) -> str:
        return self.elements[0].variant

    def __str__(self) -> str:
        return "{" + ", ".join(format_dihedral(g) for g in self.elements) + "}"


def _sort_key(g: DihedralElement):
    return (g.kind == REFLECTION, g.group.index(g.x))


def closure(generators: Iterable[DihedralElement]) -> tuple:
    """Subgroup generated by ``generators`` (identity included), canonically sorted."""
    gens = list(generators)
    if not gens:
        raise GroupError("closure needs at least one generator")
    ident = identity(gens[0].group, gens[0].variant)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                k = g.compose(h)
                if k not in seen:
                    seen.add(k)
                    nxt.append(k)
        frontier = nxt
    return tuple(sorted(seen, key=_sort_key))


def enumerate_subgroup(group: Group, presentation, variant: str = DIRECT) -> Subgroup:
    """Materialise a subgroup from its presentation.

    ``cyclic(d)`` is ``<r^d>`` and ``dihedral(d, m)`` is ``<r^d, sr^m>``; both need
    an additive cyclic group ``Z_n`` with ``d | n``. ``reflection(x)`` is
    ``{id, sr^x}`` for any group.
    """
    if isinstance(presentation, str):
        presentation = parse_presentation(group, presentation)
    kind, params = presentation
    if kind == "trivial":
        return Subgroup(presentation, (identity(group, variant),))
    if kind == "reflection":
        x = params[0]
        x = parse_dihedral(group, x).x if isinstance(x, str) else group.coerce(x)
        g = reflection(group, x, variant)
        name = format_dihedral(reflection(group, x))  # keeps the text form re-parseable
        return Subgroup(Presentation(kind, (name,)), closure([g]))
    if kind == "generated":
        gens = [parse_dihedral(group, t, variant) if isinstance(t, str) else t for t in params]
        return Subgroup(presentation, closure(gens))
    if kind in ("cyclic", "dihedral"):
        if not (isinstance(group, GroupSpec) and group.is_cyclic_factor):
            raise GroupError(f"{kind} presentations need an additive cyclic group")
        n = group.order
        d = int(params[0])
        if d <= 0 or n % d:
            raise GroupError(f"{d} does not divide {n}")
        gens = [rotation(group, d % n, variant)]
        if kind == "dihedral":
            m = int(params[1])
            if not 0 <= m < d:
                raise GroupError(f"need 0 <= m < d, got m={m}, d={d}")
            gens.append(reflection(group, m, variant))
        return Subgroup(Presentation(kind, (d,) + tuple(int(p) for p in params[1:])), closure(gens))
    raise GroupError(f"unknown presentation {kind!r}")


def parse_presentation(group: Group, text: str) -> Presentation:
    """``trivial``, ``cyclic:16``, ``dihedral:16,0``, ``reflection:sr^3`` or ``gen:r^8,s``."""
    text = text.strip()
    if text in ("trivial", "id"):
        return Presentation("trivial")
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind == "cyclic":
        return Presentation("cyclic", (int(rest),))
    if kind == "dihedral":
        d, m = (int(v) for v in rest.split(","))
        return Presentation("dihedral", (d, m))
    if kind == "reflection":
        g = parse_dihedral(group, rest)
        if not g.is_reflection:
            raise GroupError(f"{rest!r} is not a reflection")
        return Presentation("reflection", (g.x,))
    if kind in ("gen", "generated"):
        return Presentation("generated", tuple(t.strip() for t in _split_top(rest)))
    raise GroupError(f"unknown presentation {text!r}")


def _split_top(text: str) -> list:
    """Split on commas that are not inside parentheses."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        parts.append(cur)
    return parts
