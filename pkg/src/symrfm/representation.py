"""One-hot encodings and permutation representations of the symmetry group."""

from __future__ import annotations

import numpy as np

from .groups import DIRECT, ROTATION, DihedralElement, Group, GroupError, Subgroup


def encode(group: Group, pair) -> np.ndarray:
    """``e_a || e_b`` in ``R^{2n}``."""
    n = group.order
    x = np.zeros(2 * n)
    x[group.index(group.coerce(pair[0]))] = 1.0
    x[n + group.index(group.coerce(pair[1]))] = 1.0
    return x


def decode(group: Group, x: np.ndarray):
    n = group.order
    x = np.asarray(x)
    if x.shape != (2 * n,):
        raise GroupError(f"expected a vector of length {2 * n}, got {x.shape}")
    halves = x[:n], x[n:]
    for h in halves:
        if np.count_nonzero(h) != 1 or h.max() != 1.0:
            raise GroupError("not a one-hot pair encoding")
    return group.element(int(np.argmax(halves[0]))), group.element(int(np.argmax(halves[1])))


def encode_label(group: Group, label) -> np.ndarray:
    y = np.zeros(group.order)
    y[group.index(group.coerce(label))] = 1.0
    return y


def right_mult_matrix(group: Group, x) -> np.ndarray:
    """``R_x`` with ``R_x e_a = e_{a*x}``."""
    n = group.order
    xi = group.index(group.coerce(x))
    R = np.zeros((n, n))
    R[group.op_table[:, xi], np.arange(n)] = 1.0
    return R


def inversion_matrix(group: Group) -> np.ndarray:
    """``I e_a = e_{a^-1}``."""
    n = group.order
    inv = np.zeros((n, n))
    inv[group.inverse_table, np.arange(n)] = 1.0
    return inv


def perm_rep(g: DihedralElement) -> np.ndarray:
    """Block permutation matrix ``Pi(g)`` acting on encoded pairs."""
    grp = g.group
    n = grp.order
    R = right_mult_matrix(grp, g.x)
    Z = np.zeros((n, n))
    if g.variant == DIRECT:
        rot = np.block([[R, Z], [Z, R.T]])  # R_{x^-1} = R_x^T
        if g.kind == ROTATION:
            return rot
        swap = np.block([[Z, np.eye(n)], [np.eye(n), Z]])
        return swap @ rot
    rot = np.block([[R, Z], [Z, R]])
    if g.kind == ROTATION:
        return rot
    inv = inversion_matrix(grp)
    return np.block([[Z, inv], [inv, Z]]) @ rot


def rep_sum(H) -> np.ndarray:
    """``sum_{h in H} Pi(h)``."""
    elements = H.elements if isinstance(H, Subgroup) else tuple(H)
    return sum(perm_rep(h) for h in elements)
