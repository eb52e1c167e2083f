"""Tests for trees and cone-code algebra.

The oracle for the cone operations is the depth-slice model: once a depth N
is at least the length of every code string in sight, the coded boundary set
is determined by the set of contained length-N strings having a prefix in
the code, and union/intersection/subset are plain set operations on slices.
"""

from __future__ import annotations

import itertools

from hypothesis import given, settings
from hypothesis import strategies as st
import pytest

from tdlc.clc_tree import (
    ClcTree,
    CodeSet,
    NString,
    cantor_pair,
    cantor_unpair,
    code_set,
    cone_equal,
    cone_intersect,
    cone_subset,
    cone_union,
    decode_pair_injection,
    godel_code,
    godel_decode,
    minimal_code,
    qp_tree,
    s_infinity_fragment,
    strong_index,
    strong_index_decode,
    tree_aut_td,
)
from tdlc.errors import InconsistentPair, NotInjective, TreeMismatch

Q3 = qp_tree(3)
T3 = tree_aut_td(3)
S2 = s_infinity_fragment(2)


def slice_at(tree: ClcTree, u: CodeSet, depth: int) -> frozenset[NString]:
    """Depth-N slice of the coded set: contained length-N strings with a
    prefix in the code."""
    out = set()
    for s in u.strings:
        if len(s) <= depth:
            out.update(tree.extensions_to_length(s, depth))
        else:
            out.add(s[:depth])
    return frozenset(out)


def slices_depth(*sets: CodeSet) -> int:
    return max((len(s) for u in sets for s in u.strings), default=0)


# ---------------------------------------------------------------------------
# numeric codes


def test_godel_code_frozen_values():
    assert godel_code(()) == 1
    assert godel_code((0,)) == 2
    assert godel_code((1,)) == 4
    assert godel_code((1, 0)) == 12
    assert godel_code((0, 0, 0)) == 2 * 3 * 5


def test_godel_round_trip():
    for s in [(), (0,), (2, 1, 0), (5,), (1, 2, 3, 4)]:
        assert godel_decode(godel_code(s)) == s


def test_godel_decode_rejects_non_codes():
    for bad in [0, 3, 5, 10, 15]:
        with pytest.raises(ValueError):
            godel_decode(bad)


def test_strong_index_frozen_values():
    assert strong_index([]) == 0
    assert strong_index([(0,)]) == 4
    assert strong_index([(0,), (1, 0)]) == 4 + 2**12
    assert strong_index([(0,), (0,)]) == 4


def test_strong_index_round_trip():
    sets = [frozenset(), frozenset({(0,)}), frozenset({(0,), (1, 0), (2,)})]
    for strings in sets:
        assert strong_index_decode(strong_index(strings)) == strings


def test_strong_index_accepts_code_set():
    u = code_set(Q3, [(0,)])
    assert strong_index(u) == 4


# ---------------------------------------------------------------------------
# pair decoding


def test_cantor_pair_round_trip():
    for x, y in itertools.product(range(7), repeat=2):
        assert cantor_unpair(cantor_pair(x, y)) == (x, y)
    assert cantor_pair(0, 0) == 0


def test_decode_pair_injection_merges_components():
    # entry 0: forward value 1; entry 1: backward value 0
    s = (cantor_pair(2, 0), cantor_pair(0, 1))
    assert decode_pair_injection(s) == {0: 1}


def test_decode_pair_injection_inconsistent():
    # forward sends 0 to 1 while backward claims 1 came from 3
    s = (cantor_pair(2, 0), cantor_pair(0, 4))
    with pytest.raises(InconsistentPair):
        decode_pair_injection(s)


def test_decode_pair_injection_two_images():
    # forward sends 0 to 1, backward at 2 also claims preimage 0
    s = (cantor_pair(2, 0), cantor_pair(0, 0), cantor_pair(0, 1))
    with pytest.raises(InconsistentPair):
        decode_pair_injection(s)


def test_decode_pair_injection_not_injective():
    # forward sends both 0 and 1 to value 2
    s = (cantor_pair(3, 0), cantor_pair(3, 0))
    with pytest.raises(NotInjective):
        decode_pair_injection(s)


def model_decode(s: NString):
    """Relation-based model of pair decoding, for cross-checking."""
    pairs = [cantor_unpair(e) for e in s]
    fwd = {i: a - 1 for i, (a, _) in enumerate(pairs) if a > 0}
    bwd = {i: b - 1 for i, (_, b) in enumerate(pairs) if b > 0}
    for r, v in fwd.items():
        if v in bwd and bwd[v] != r:
            return "inconsistent"
    rel = {(r, v) for r, v in fwd.items()} | {(r, t) for t, r in bwd.items()}
    domain = {r for r, _ in rel}
    if any(len({v for r2, v in rel if r2 == r}) > 1 for r in domain):
        return "inconsistent"
    values = [v for _, v in rel]
    if len(values) != len(set(values)):
        return "not_injective"
    return dict(rel)


def test_decode_pair_injection_matches_model_exhaustively():
    codes = range(cantor_pair(2, 2) + 1)
    for length in range(4):
        for s in itertools.product(codes, repeat=length):
            expected = model_decode(s)
            if expected == "inconsistent":
                with pytest.raises(InconsistentPair):
                    decode_pair_injection(s)
            elif expected == "not_injective":
                with pytest.raises(NotInjective):
                    decode_pair_injection(s)
            else:
                assert decode_pair_injection(s) == expected


# ---------------------------------------------------------------------------
# registry trees


@pytest.mark.parametrize("tree", [Q3, qp_tree(2), T3, tree_aut_td(4), S2])
def test_branch_bound_holds_to_depth_four(tree: ClcTree):
    # exhaustive over the finite fragment; root entries capped for the
    # infinitely branching tree
    first_entries = [f for f in range(6) if tree.contains((f,))]
    for f in first_entries:
        stack = [(f,)]
        while stack:
            s = stack.pop()
            assert all(
                s[i] <= tree.branch_bound(s[0], i) for i in range(len(s))
            )
            if len(s) < 4:
                stack.extend(tree.successors(s))


@pytest.mark.parametrize("tree", [Q3, T3, S2])
def test_no_leaves_to_depth_four(tree: ClcTree):
    first_entries = [f for f in range(6) if tree.contains((f,))]
    for f in first_entries:
        stack = [(f,)]
        while stack:
            s = stack.pop()
            succ = tree.successors(s)
            assert succ, f"leaf at {s} in {tree.name}"
            if len(s) < 4:
                stack.extend(succ)


def test_qp_tree_membership():
    assert Q3.contains(())
    assert Q3.contains((0,))
    assert Q3.contains((0, 0, 2))
    assert Q3.contains((2, 1, 0))
    assert not Q3.contains((2, 0))  # positive power with zero leading digit
    assert not Q3.contains((0, 3))  # digit out of range
    assert not Q3.contains((-1,))


def test_tree_aut_td_membership():
    assert T3.contains((1, 2, 1))
    assert not T3.contains((1, 1))  # backtracking
    assert not T3.contains((0,))  # colors start at 1
    assert not T3.contains((4,))


def test_s_infinity_fragment_membership():
    assert S2.contains((0, 0))  # all undefined
    assert S2.contains((cantor_pair(2, 0),))  # 0 -> 1 forward only
    assert not S2.contains((cantor_pair(2, 0), cantor_pair(0, 4)))


# ---------------------------------------------------------------------------
# cone algebra against the depth-slice oracle


def small_code_sets(tree: ClcTree, atoms: list[NString]):
    return st.sets(st.sampled_from(atoms), max_size=4).map(
        lambda ss: code_set(tree, ss)
    )


def atoms_for(tree: ClcTree, depth: int) -> list[NString]:
    out: list[NString] = []
    first_entries = [f for f in range(4) if tree.contains((f,))]
    for f in first_entries:
        stack = [(f,)]
        while stack:
            s = stack.pop()
            out.append(s)
            if len(s) < depth:
                stack.extend(tree.successors(s))
    return out


Q3_ATOMS = atoms_for(Q3, 3)
T3_ATOMS = atoms_for(T3, 3)


@settings(max_examples=150, deadline=None)
@given(
    u=small_code_sets(Q3, Q3_ATOMS),
    w=small_code_sets(Q3, Q3_ATOMS),
)
def test_cone_ops_match_slices_qp(u: CodeSet, w: CodeSet):
    depth = max(slices_depth(u, w), 1)
    su, sw = slice_at(Q3, u, depth), slice_at(Q3, w, depth)
    assert slice_at(Q3, cone_union(u, w), depth) == su | sw
    assert slice_at(Q3, cone_intersect(u, w), depth) == su & sw
    assert cone_subset(u, w) == (su <= sw)


@settings(max_examples=150, deadline=None)
@given(
    u=small_code_sets(T3, T3_ATOMS),
    w=small_code_sets(T3, T3_ATOMS),
)
def test_cone_ops_match_slices_td(u: CodeSet, w: CodeSet):
    depth = max(slices_depth(u, w), 1)
    su, sw = slice_at(T3, u, depth), slice_at(T3, w, depth)
    assert slice_at(T3, cone_union(u, w), depth) == su | sw
    assert slice_at(T3, cone_intersect(u, w), depth) == su & sw
    assert cone_subset(u, w) == (su <= sw)


def test_cone_union_absorbs_nested_cone():
    u = code_set(Q3, [(1,)])
    w = code_set(Q3, [(1, 1)])
    assert cone_union(u, w).strings == frozenset({(1,)})


def test_cone_intersect_keeps_longer_of_comparable():
    u = code_set(Q3, [(1,), (2,)])
    w = code_set(Q3, [(1, 1), (3,)])
    assert cone_intersect(u, w).strings == frozenset({(1, 1)})


def test_cone_subset_requires_full_cover():
    u = code_set(T3, [(1,)])
    w = code_set(T3, [(1, 2), (1, 3)])
    # the cone at (1) also contains branches through (1, 2) and (1, 3) only
    assert cone_subset(u, w)
    assert cone_subset(w, u)
    assert not cone_subset(u, code_set(T3, [(1, 2)]))


def test_cone_subset_empty_cases():
    empty = code_set(Q3, [])
    u = code_set(Q3, [(0,)])
    assert cone_subset(empty, u)
    assert cone_subset(empty, empty)
    assert not cone_subset(u, empty)


def test_tree_mismatch():
    with pytest.raises(TreeMismatch):
        cone_union(code_set(Q3, [(0,)]), code_set(T3, [(1,)]))


# ---------------------------------------------------------------------------
# minimal codes


def test_minimal_code_drops_covered_strings():
    u = code_set(Q3, [(1,), (1, 1), (1, 2, 0)])
    m = minimal_code(u)
    assert m.strings == frozenset({(1,)})
    assert m.canonical


def test_minimal_code_keeps_incomplete_sibling_family():
    # successors of (1,) in qp_tree(3) are (1, 1) and (1, 2) only
    assert set(Q3.successors((1,))) == {(1, 1), (1, 2)}
    u = code_set(Q3, [(1, 1), (1, 1, 0)])
    assert minimal_code(u).strings == frozenset({(1, 1)})


def test_minimal_code_collapses_full_sibling_family():
    u = code_set(Q3, [(1, 1), (1, 2)])
    assert minimal_code(u).strings == frozenset({(1,)})


def test_minimal_code_collapse_cascades():
    # digits 0..2 complete the family under (1, 1); the resulting
    # {(1, 1), (1, 2)} is itself the complete family under (1,)
    u = code_set(Q3, [(1, 1, 0), (1, 1, 1), (1, 1, 2), (1, 2)])
    m = minimal_code(u)
    assert m.strings == frozenset({(1,)})


def test_minimal_code_never_collapses_to_root():
    # heads 0..2 are not a "complete family": root branching is unbounded
    u = code_set(Q3, [(0,), (1,), (2,)])
    assert minimal_code(u).strings == u.strings


@settings(max_examples=100, deadline=None)
@given(u=small_code_sets(Q3, Q3_ATOMS))
def test_minimal_code_idempotent_and_equivalent(u: CodeSet):
    m = minimal_code(u)
    assert m.canonical
    assert minimal_code(m).strings == m.strings
    assert cone_equal(u, m)


@settings(max_examples=100, deadline=None)
@given(u=small_code_sets(T3, T3_ATOMS), w=small_code_sets(T3, T3_ATOMS))
def test_equivalent_codes_share_canonical_form(u: CodeSet, w: CodeSet):
    if cone_equal(u, w):
        assert minimal_code(u).strings == minimal_code(w).strings


def test_code_set_rejects_bad_strings():
    with pytest.raises(ValueError):
        code_set(Q3, [()])
    with pytest.raises(ValueError):
        code_set(Q3, [(2, 0)])
