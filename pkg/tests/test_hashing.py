import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtcode.gf import BudgetExceeded, DimensionError, EnsembleSpec, FieldVector
from mtcode.hashing import (
    ALPHA_GRID,
    HashProfile,
    collision_probability,
    compose_profiles,
    ensemble_size,
    enumerate_members,
    member_tables,
    profile_ensemble,
    report_json,
    verify_balanced_coloring_bound,
    verify_collision_bound,
    verify_hash_inequality,
)
from oracles import (
    bcp_lhs_bruteforce,
    collision_bruteforce,
    crp_lhs_bruteforce,
    ensemble_members,
    hash_lhs_bruteforce,
    image_union,
)

UL = "UniformLinear"
SP = "SparseColumnWeight"
RB = "RandomBinningTable"


def V(*xs, q=2):
    return FieldVector(list(xs), q)


def test_alpha_grid():
    assert ALPHA_GRID == (1, Fraction(3, 2), 2, 4, 8)


def test_collision_examples():
    assert collision_probability(EnsembleSpec(UL, 2, 3, 4), V(1, 0, 1, 1), V(1, 0, 1, 1)) == 1
    assert collision_probability(EnsembleSpec(UL, 2, 3, 4), V(1, 0, 1, 1), V(0, 0, 1, 1)) == Fraction(1, 8)
    # weight-one columns collide on (1,1) iff both ones sit in the same row
    assert collision_probability(EnsembleSpec(SP, 2, 2, 2, 1), V(0, 0), V(1, 1)) == Fraction(1, 2)
    with pytest.raises(DimensionError):
        collision_probability(EnsembleSpec(UL, 2, 2, 3), V(0, 0), V(1, 1))


@pytest.mark.parametrize(
    "spec",
    [
        EnsembleSpec(UL, 2, 2, 2),
        EnsembleSpec(UL, 3, 1, 2),
        EnsembleSpec(RB, 2, 1, 2),
        EnsembleSpec(SP, 2, 2, 3, 1),
        EnsembleSpec(SP, 2, 3, 3, 2),
        EnsembleSpec(SP, 3, 2, 2, 1),
    ],
)
def test_collision_matches_enumeration(spec):
    q, n = spec.q, spec.cols
    for a, b in itertools.product(itertools.product(range(q), repeat=n), repeat=2):
        got = collision_probability(spec, FieldVector(a, q), FieldVector(b, q))
        assert got == collision_bruteforce(spec, a, b)
        assert got == collision_probability(spec, FieldVector(b, q), FieldVector(a, q))


@pytest.mark.parametrize(
    "spec", [EnsembleSpec(SP, 2, 3, 4, 2), EnsembleSpec(SP, 2, 2, 3, 1), EnsembleSpec(UL, 2, 2, 3)]
)
def test_hash_lhs_matches_enumeration(spec):
    assert spec.image_size == image_union(spec)
    z = tuple([1] + [0] * (spec.cols - 1))
    for alpha in ALPHA_GRID:
        res = verify_hash_inequality(spec, alpha, 0, FieldVector(z, spec.q))
        assert res["lhs"] == hash_lhs_bruteforce(spec, alpha, z)


def test_hash_inequality_examples():
    spec = EnsembleSpec(UL, 2, 3, 5)
    res = verify_hash_inequality(spec, 1, 0, V(1, 0, 0, 1, 1))
    assert res == {"holds": True, "lhs": 0}
    sparse = EnsembleSpec(SP, 2, 2, 3, 1)
    assert verify_hash_inequality(sparse, 10**6, 0, V(0, 1, 1))["lhs"] == 0
    prof = profile_ensemble(sparse)
    for z in itertools.product(range(2), repeat=3):
        assert verify_hash_inequality(sparse, prof.alpha, prof.beta, FieldVector(z, 2))["holds"]


def test_profile_examples():
    assert profile_ensemble(EnsembleSpec(UL, 2, 2, 4)) == HashProfile(Fraction(1), Fraction(0))
    assert profile_ensemble(EnsembleSpec(RB, 2, 2, 3)) == HashProfile(Fraction(1), Fraction(0))
    # the weight-2 columns of a 3x4 sparse matrix land in the even-weight subspace (4 bins);
    # at alpha = 1 the threshold is 1/4 and 61/27 of mass sits above it, at 3/2 nothing does
    prof = profile_ensemble(EnsembleSpec(SP, 2, 3, 4, 2))
    assert prof == HashProfile(Fraction(3, 2), Fraction(0))
    assert hash_lhs_bruteforce(EnsembleSpec(SP, 2, 3, 4, 2), 1, (0, 0, 0, 0)) == Fraction(61, 27)
    with pytest.raises(BudgetExceeded):
        profile_ensemble(EnsembleSpec(UL, 2, 2, 12), budget=1024)


def test_compose_profiles():
    a = HashProfile(Fraction(3, 2), Fraction(1, 4))
    b = HashProfile(Fraction(2), Fraction(1, 2))
    c = compose_profiles([a, b])
    assert c.alpha == 3 and c.beta == Fraction(5, 4) * Fraction(3, 2) - 1
    assert compose_profiles([]) == HashProfile(Fraction(1), Fraction(0))


@pytest.mark.parametrize("spec", [EnsembleSpec(UL, 2, 2, 2), EnsembleSpec(SP, 2, 2, 2, 1), EnsembleSpec(RB, 2, 1, 2)])
def test_member_tables_are_the_ensemble(spec):
    tabs = member_tables(spec)
    assert len(tabs) == ensemble_size(spec)
    # same multiset of functions as the oracle, each member equiprobable
    got = sorted(tuple(int(v) for v in t) for t in tabs)
    want = sorted(tuple(t) for t, _ in ensemble_members(spec))
    if spec.kind == SP:
        assert sorted(set(got)) == sorted(set(want))
    else:
        assert got == want


def test_enumerate_members_linear_only():
    assert len(list(enumerate_members(EnsembleSpec(UL, 2, 1, 3)))) == 8
    with pytest.raises(ValueError):
        list(enumerate_members(EnsembleSpec(RB, 2, 1, 2)))


# --- lemma checks ----------------------------------------------------------------


def test_bcp_examples():
    spec = EnsembleSpec(UL, 2, 1, 2)
    res = verify_balanced_coloring_bound([spec], np.ones(4), np.ones(4, dtype=bool))
    # only the zero matrix (1 of 4) is unbalanced, contributing |1 - 1/2| + |0 - 1/2|
    assert res["lhs"] == Fraction(1, 4) and res["holds"]
    point = np.zeros(4, dtype=bool)
    point[2] = True
    res = verify_balanced_coloring_bound([spec], np.ones(4), point)
    assert res["lhs"] == 2 * (1 - Fraction(1, 2)) and res["holds"]
    with pytest.raises(ValueError):
        verify_balanced_coloring_bound([spec], np.zeros(4), np.ones(4, dtype=bool))


def test_crp_examples():
    spec = EnsembleSpec(UL, 2, 2, 3)
    single = np.zeros(8, dtype=bool)
    single[5] = True
    assert verify_collision_bound([spec], single, (5,))["lhs"] == 0
    # a 2x3 matrix always has a nonzero kernel vector, so some other point shares the bin
    res = verify_collision_bound([spec], np.ones(8, dtype=bool), (3,))
    assert res["lhs"] == 1 and res["holds"]
    a, b = EnsembleSpec(UL, 2, 1, 2), EnsembleSpec(SP, 2, 2, 2, 1)
    T = np.zeros((4, 4), dtype=bool)
    T[np.ix_([0, 1], [1, 2])] = True
    res = verify_collision_bound([a, b], T, (0, 1))
    assert res["lhs"] == Fraction(3, 4) == crp_lhs_bruteforce([a, b], T, (0, 1)) and res["holds"]


def test_report_json():
    spec = EnsembleSpec(UL, 2, 1, 2)
    rep = report_json({"x": 1}, verify_collision_bound([spec], np.ones(4, dtype=bool), (0,)))
    assert set(rep) == {"config", "lhs", "rhs", "holds"}


ENSEMBLES = st.sampled_from(
    [
        EnsembleSpec(UL, 2, 1, 2),
        EnsembleSpec(UL, 2, 2, 2),
        EnsembleSpec(UL, 2, 1, 3),
        EnsembleSpec(SP, 2, 2, 2, 1),
        EnsembleSpec(SP, 2, 2, 3, 1),
        EnsembleSpec(RB, 2, 1, 2),
    ]
)


@st.composite
def lemma_instances(draw):
    k = draw(st.integers(1, 2))
    specs = [draw(ENSEMBLES) for _ in range(k)]
    shape = tuple(s.q**s.cols for s in specs)
    cells = int(np.prod(shape))
    T = np.array(draw(st.lists(st.booleans(), min_size=cells, max_size=cells)), dtype=bool).reshape(shape)
    if not T.any():
        T.reshape(-1)[draw(st.integers(0, cells - 1))] = True
    Q = np.array(draw(st.lists(st.integers(1, 5), min_size=cells, max_size=cells))).reshape(shape)
    z = tuple(int(v) for v in np.argwhere(T)[draw(st.integers(0, int(T.sum()) - 1))])
    return specs, Q, T, z


@settings(max_examples=40, deadline=None)
@given(lemma_instances())
def test_lemmas_hold_and_match_enumeration(inst):
    specs, Q, T, z = inst
    bcp = verify_balanced_coloring_bound(specs, Q, T)
    assert bcp["holds"] and bcp["lhs"] == bcp_lhs_bruteforce(specs, Q, T)
    crp = verify_collision_bound(specs, T, z)
    assert crp["holds"] and crp["lhs"] == crp_lhs_bruteforce(specs, T, z)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([UL, RB]), st.integers(1, 3), st.integers(1, 4), st.data())
def test_two_universal_profiles(kind, rows, cols, data):
    spec = EnsembleSpec(kind, 2, rows, cols)
    z = data.draw(st.lists(st.integers(0, 1), min_size=cols, max_size=cols))
    assert verify_hash_inequality(spec, 1, 0, FieldVector(z, 2)) == {"holds": True, "lhs": 0}


@settings(max_examples=20, deadline=None)
@given(lemma_instances())
def test_tight_bcp_never_looser(inst):
    specs, Q, T, _ = inst
    loose = verify_balanced_coloring_bound(specs, Q, T)
    tight = verify_balanced_coloring_bound(specs, Q, T, tight=True)
    assert tight["lhs"] == loose["lhs"] and tight["rhs"] <= loose["rhs"] and tight["holds"]
