import itertools

import pytest
from hypothesis import given, settings, strategies as st

from symrfm.groups import (
    DIRECT,
    INVERSE,
    GroupError,
    GroupSpec,
    MultiplicativeGroup,
    closure,
    compose,
    dihedral_elements,
    enumerate_subgroup,
    fixed_points,
    fixed_points_brute,
    fixing_reflection,
    format_dihedral,
    inverse,
    op,
    orbit,
    parse_dihedral,
    reflection,
    rotation,
    symmetry_class,
)

Z7 = GroupSpec((7,))
Z29 = GroupSpec((29,))
Z32 = GroupSpec((32,))
Z3x7 = GroupSpec((3, 7))


def all_pairs(g):
    els = g.elements()
    return [(a, b) for a in els for b in els]


# --- elements and arithmetic ---------------------------------------------


def test_op_examples():
    assert op(GroupSpec((5, 11)), (3, 2), (4, 10)) == (2, 1)
    assert op(Z29, 17, 20) == (8,)
    assert op(Z3x7, (1, 5), Z3x7.identity) == (1, 5)


def test_inverse_examples():
    assert inverse(Z29, 5) == (24,)
    assert inverse(Z29, 0) == (0,)
    assert inverse(Z3x7, (1, 2)) == (2, 5)


def test_arity_mismatch():
    with pytest.raises(GroupError):
        op(Z3x7, (1,), (2, 3))
    with pytest.raises(GroupError):
        Z7.coerce((9,))


def test_mixed_radix_index():
    # first modulus most significant
    assert Z3x7.index((1, 2)) == 9
    assert Z3x7.element(20) == (2, 6)
    assert [Z3x7.index(e) for e in Z3x7.elements()] == list(range(21))


def test_multiplicative_group():
    g = MultiplicativeGroup(7)
    assert g.order == 6
    assert g.elements()[0] == (1,)
    assert g.index((1,)) == 0 and g.index((6,)) == 5
    assert g.op(3, 5) == (1,)
    assert g.inverse(3) == (5,)
    with pytest.raises(GroupError):
        MultiplicativeGroup(9)


@pytest.mark.parametrize("moduli", [(2,), (5,), (12,), (2, 2), (2, 3, 4)])
def test_tables_match_elementwise_ops(moduli):
    g = GroupSpec(moduli)
    els = g.elements()
    for a, b in itertools.product(els, els):
        assert g.op_table[g.index(a), g.index(b)] == g.index(g.op(a, b))
    assert all(g.inverse_table[g.index(a)] == g.index(g.inverse(a)) for a in els)


def test_tables_are_read_only():
    with pytest.raises(ValueError):
        Z7.op_table[0, 0] = 3


# --- action ---------------------------------------------------------------


def test_apply_examples():
    assert reflection(Z7).apply((2, 5)) == ((5,), (2,))
    assert rotation(Z7, 3).apply((1, 4)) == ((4,), (1,))
    # inverse variant: s~(a, b) = (b^-1, a^-1)
    assert reflection(Z7, variant=INVERSE).apply((2, 5)) == ((2,), (5,))


def test_compose_examples():
    s = reflection(Z29)
    assert compose(s, s).is_identity
    assert compose(s, compose(rotation(Z29, 5), s)) == rotation(Z29, 24)


@pytest.mark.parametrize("variant", [DIRECT, INVERSE])
@pytest.mark.parametrize("g", [Z7, GroupSpec((2, 4)), MultiplicativeGroup(7)])
def test_compose_matches_pointwise(g, variant):
    els = dihedral_elements(g, variant)
    pairs = all_pairs(g)
    for x, y in itertools.product(els, els):
        xy = compose(x, y)
        assert all(xy.apply(p) == x.apply(y.apply(p)) for p in pairs)


def test_compose_variant_mismatch():
    with pytest.raises(GroupError):
        compose(reflection(Z7), reflection(Z7, variant=INVERSE))


def test_inverse_element():
    for g in dihedral_elements(Z3x7):
        assert compose(g, g.inverse()).is_identity


def test_pair_map_matches_apply():
    g = parse_dihedral(Z3x7, "sr^(1,4)")
    perm = g.pair_map()
    n = Z3x7.order
    for a, b in all_pairs(Z3x7):
        a2, b2 = g.apply((a, b))
        assert perm[Z3x7.index(a) * n + Z3x7.index(b)] == Z3x7.index(a2) * n + Z3x7.index(b2)


@pytest.mark.parametrize("text", ["id", "s", "r^3", "sr^35", "sr^(3,2)", "s~", "sr^4~"])
def test_format_parse_roundtrip(text):
    g = {"sr^35": GroupSpec((61,)), "sr^(3,2)": GroupSpec((5, 11))}.get(text, Z7)
    assert format_dihedral(parse_dihedral(g, text)) == text


def test_parse_rejects_garbage():
    for bad in ("t^3", "sr", "s3", "r^x"):
        with pytest.raises(GroupError):
            parse_dihedral(Z7, bad)


# --- fixed points, orbits, classes --------------------------------------


def test_fixed_points_z7_addition():
    fp = fixed_points(reflection(Z7, 3))
    assert fp == {((a,), ((a + 3) % 7,)) for a in range(7)}


def test_fixed_points_z7_multiplication():
    fp = fixed_points(reflection(MultiplicativeGroup(7), 3))
    expected = {(1, 3), (2, 6), (3, 2), (4, 5), (5, 1), (6, 4)}
    assert fp == {((a,), (b,)) for a, b in expected}


def test_fixed_points_z7_subtraction():
    fp = fixed_points(reflection(Z7, 3, INVERSE))
    assert fp == {((a,), ((-a - 3) % 7,)) for a in range(7)}


def test_fixed_points_of_rotation_is_brute_force():
    assert fixed_points(rotation(Z7, 2)) == set()
    assert len(fixed_points(rotation(Z7, 0))) == 49
    # r^16 on Z32 is an involution but still moves every pair
    assert fixed_points(rotation(Z32, 16)) == fixed_points_brute(rotation(Z32, 16)) == set()


def test_fixing_reflection():
    assert fixing_reflection(Z29, (4, 9)) == (5,)
    assert fixing_reflection(Z29, (6, 6)) == (0,)
    fixers = [[x for x in Z7.elements() if reflection(Z7, x).apply(p) == p] for p in all_pairs(Z7)]
    assert all(len(f) == 1 for f in fixers)


def test_fixing_reflection_inverse_variant():
    g = Z7
    for p in all_pairs(g):
        x = fixing_reflection(g, p, INVERSE)
        assert reflection(g, x, INVERSE).apply(p) == p


def test_orbit_examples():
    s = enumerate_subgroup(Z7, "reflection:s")
    assert orbit(s, {((1,), (2,))}) == {((1,), (2,)), ((2,), (1,))}
    trivial = enumerate_subgroup(Z7, "trivial")
    X = {((1,), (2,)), ((4,), (0,))}
    assert orbit(trivial, X) == X
    full = dihedral_elements(Z7)
    assert orbit(full, {((1,), (2,))}) == symmetry_class(Z7, 3)


@settings(max_examples=30, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)), max_size=10),
       st.integers(0, 6))
def test_orbit_idempotent_and_monotone(raw, k):
    H = enumerate_subgroup(Z7, f"reflection:sr^{k}")
    X = {((a,), (b,)) for a, b in raw}
    O = orbit(H, X)
    assert X <= O
    assert orbit(H, O) == O
    Y = X | {((0,), (0,))}
    assert O <= orbit(H, Y)


def test_symmetry_class_examples():
    z5 = GroupSpec((5,))
    assert symmetry_class(z5, 0) == {((a,), ((5 - a) % 5,)) for a in range(5)}
    for g in (GroupSpec((n,)) for n in range(2, 22)):
        classes = [symmetry_class(g, l) for l in g.elements()]
        assert all(len(c) == g.order for c in classes)
    classes = [symmetry_class(Z3x7, l) for l in Z3x7.elements()]
    union = set().union(*classes)
    assert len(union) == 21 * 21 == sum(len(c) for c in classes)


# --- subgroups ------------------------------------------------------------


def test_dihedral_subgroups_z32():
    H = enumerate_subgroup(Z32, "dihedral:16,0")
    assert {format_dihedral(h) for h in H} == {"id", "r^16", "s", "sr^16"}
    assert len(enumerate_subgroup(Z32, "dihedral:8,0")) == 8
    assert len(enumerate_subgroup(Z32, "dihedral:4,0")) == 16
    assert len(enumerate_subgroup(Z32, "cyclic:8")) == 4


@pytest.mark.parametrize("k", [0, 5, 31])
def test_reflection_subgroup(k):
    H = enumerate_subgroup(Z32, f"reflection:sr^{k}" if k else "reflection:s")
    assert len(H) == 2 and H.elements[0].is_identity


@pytest.mark.parametrize("text", ["dihedral:16,3", "dihedral:8,5", "cyclic:4", "gen:r^8,sr^2"])
def test_subgroups_are_closed(text):
    H = enumerate_subgroup(Z32, text)
    els = set(H.elements)
    assert any(h.is_identity for h in els)
    assert all(compose(a, b) in els for a in els for b in els)
    assert all(a.inverse() in els for a in els)


def test_subgroup_errors():
    with pytest.raises(GroupError):
        enumerate_subgroup(Z32, "dihedral:5,0")
    with pytest.raises(GroupError):
        enumerate_subgroup(Z32, "dihedral:8,9")
    with pytest.raises(GroupError):
        enumerate_subgroup(Z3x7, "cyclic:3")


def test_closure_of_two_reflections_is_dihedral():
    H = closure([reflection(Z32, 0), reflection(Z32, 8)])
    assert len(H) == 8
