import itertools

import numpy as np
import pytest

from symrfm.groups import (
    DIRECT, INVERSE, GroupError, GroupSpec, MultiplicativeGroup, dihedral_elements, reflection, rotation,
)
from symrfm.representation import (
    decode, encode, encode_label, inversion_matrix, perm_rep, rep_sum, right_mult_matrix,
)

Z3 = GroupSpec((3,))


def test_encode_example():
    np.testing.assert_array_equal(encode(Z3, (1, 2)), [0, 1, 0, 0, 0, 1])
    np.testing.assert_array_equal(encode_label(Z3, Z3.op(1, 2)), [1, 0, 0])


@pytest.mark.parametrize("g", [GroupSpec((24,)), GroupSpec((4, 6)), MultiplicativeGroup(23)])
def test_decode_roundtrip(g):
    for a, b in itertools.product(g.elements(), repeat=2):
        assert decode(g, encode(g, (a, b))) == (a, b)


def test_decode_rejects_non_encodings():
    with pytest.raises(GroupError):
        decode(Z3, np.array([1, 1, 0, 0, 0, 1.0]))
    with pytest.raises(GroupError):
        decode(Z3, np.zeros(5))


def test_right_mult_matrix():
    np.testing.assert_array_equal(right_mult_matrix(Z3, 0), np.eye(3))
    R = right_mult_matrix(Z3, 1)
    np.testing.assert_array_equal(R, [[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    g = GroupSpec((2, 6))
    for x, y in itertools.product(g.elements(), repeat=2):
        np.testing.assert_array_equal(
            right_mult_matrix(g, x) @ right_mult_matrix(g, y), right_mult_matrix(g, g.op(x, y)))


def test_pi_s():
    I3, Z = np.eye(3), np.zeros((3, 3))
    np.testing.assert_array_equal(perm_rep(reflection(Z3)), np.block([[Z, I3], [I3, Z]]))


def test_inversion_matrix():
    g = GroupSpec((5,))
    inv = inversion_matrix(g)
    for a in range(5):
        e = np.eye(5)[a]
        assert np.argmax(inv @ e) == (-a) % 5


@pytest.mark.parametrize("variant", [DIRECT, INVERSE])
@pytest.mark.parametrize("g", [GroupSpec((6,)), GroupSpec((2, 3)), MultiplicativeGroup(7)])
def test_reps_are_orthogonal_and_reflections_symmetric(g, variant):
    for h in dihedral_elements(g, variant):
        P = perm_rep(h)
        assert set(np.unique(P)) <= {0.0, 1.0}
        np.testing.assert_array_equal(P @ P.T, np.eye(len(P)))
        if h.is_reflection:
            np.testing.assert_array_equal(P, P.T)


def test_rep_sum_counts():
    g = GroupSpec((5,))
    full = rep_sum(dihedral_elements(g))
    # every encoded coordinate is hit by each of the 2n elements exactly once per row
    np.testing.assert_array_equal(full.sum(1), np.full(10, 10.0))
