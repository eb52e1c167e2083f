"""Tests for the abstract meet-groupoid layer.

The oracle under test is the coset table of the order-8 symmetry group of
the square; the independent route to every answer is setwise arithmetic on
frozensets of group elements, written out directly here.
"""

from __future__ import annotations

import itertools

import pytest

from tdlc.meet_groupoid import (
    MeetGroupoidOracle,
    axiom_check,
    dihedral_oracle,
    dump_oracle,
    extendable_injection,
    idempotents,
    is_idempotent,
    is_subset,
    left_cosets,
    load_oracle,
    right_cosets,
    source,
    suborbit,
    target,
)


def d4_mul(a, b):
    r1, s1 = a
    r2, s2 = b
    return ((r2 + (r1 if s2 == 0 else -r1)) % 4, (s1 + s2) % 2)


def d4_inv(a):
    for r, s in itertools.product(range(4), range(2)):
        if d4_mul(a, (r, s)) == (0, 0):
            return (r, s)
    raise AssertionError


GROUP = [(r, s) for r in range(4) for s in range(2)]
ORACLE = dihedral_oracle()
EMPTY = ORACLE.empty()
NONEMPTY = [a for a in ORACLE.elements() if a != EMPTY]


def translate(g, coset):
    return frozenset(d4_mul(g, x) for x in coset)


# ---------------------------------------------------------------------------
# the coset table itself


def test_element_census():
    # 8 singletons, 5*4 cosets of order-2 subgroups, 3*2 of order-4, the
    # whole group, and the empty set
    assert len(ORACLE.elements()) == 36
    assert len(idempotents(ORACLE)) == 10


def test_products_match_setwise_arithmetic():
    for a, b in itertools.product(NONEMPTY, repeat=2):
        got = ORACLE.prod(a, b)
        setwise = frozenset(d4_mul(x, y) for x in a for y in b)
        tgt_a = frozenset(d4_mul(d4_inv(x), y) for x in a for y in a)
        src_b = frozenset(d4_mul(x, d4_inv(y)) for x in b for y in b)
        if got is not None:
            assert got == setwise
            assert tgt_a == src_b
        else:
            assert tgt_a != src_b


def test_source_and_target():
    for a in NONEMPTY:
        s, t = source(ORACLE, a), target(ORACLE, a)
        assert s == frozenset(d4_mul(x, d4_inv(y)) for x in a for y in a)
        assert t == frozenset(d4_mul(d4_inv(x), y) for x in a for y in a)
        assert is_idempotent(ORACLE, s) and is_idempotent(ORACLE, t)


def test_idempotent_rejects_empty():
    with pytest.raises(ValueError):
        is_idempotent(ORACLE, EMPTY)


def test_coset_enumeration():
    for u in idempotents(ORACLE):
        lefts = left_cosets(ORACLE, u)
        rights = right_cosets(ORACLE, u)
        assert set(lefts) == {translate(g, u) for g in GROUP}
        assert set(rights) == {
            frozenset(d4_mul(x, g) for x in u) for g in GROUP
        }
        assert len(lefts) == 8 // len(u)


def test_index_counts_cosets():
    for u, v in itertools.product(idempotents(ORACLE), repeat=2):
        k = ORACLE.index(u, v)
        common = u & v
        assert k == len(u) // len(common)
        inside = [a for a in left_cosets(ORACLE, common) if is_subset(ORACLE, a, u)]
        assert len(inside) == k


# ---------------------------------------------------------------------------
# axiom checking


def test_axiom_check_passes_exhaustively():
    report = axiom_check(ORACLE)
    assert report.passed, report.failures
    assert all(report.exhaustive.values())
    assert report.skipped_overflow == 0


def test_axiom_check_budget_truncates():
    report = axiom_check(ORACLE, budget=5)
    assert report.passed
    assert not all(report.exhaustive.values())


class _Delegate(MeetGroupoidOracle):
    """Pass-through wrapper for fault injection."""

    def __init__(self, base):
        self.base = base

    def elements(self):
        return self.base.elements()

    def empty(self):
        return self.base.empty()

    def prod(self, a, b):
        return self.base.prod(a, b)

    def inv(self, a):
        return self.base.inv(a)

    def meet(self, a, b):
        return self.base.meet(a, b)

    def index(self, u, v):
        return self.base.index(u, v)


def _some_composable_pair():
    for a, b in itertools.product(NONEMPTY, repeat=2):
        p = ORACLE.prod(a, b)
        if p is not None and len(a) > 1:
            return a, b, p
    raise AssertionError


def test_fault_rewired_product_is_caught():
    a0, b0, p0 = _some_composable_pair()
    other = next(x for x in NONEMPTY if x != p0)

    class Rewired(_Delegate):
        def prod(self, a, b):
            if (a, b) == (a0, b0):
                return other
            return self.base.prod(a, b)

    report = axiom_check(Rewired(ORACLE))
    assert not report.passed
    assert set(report.failures) & {"a", "c", "g"}


def test_fault_broken_inverse_is_caught():
    # crooked inverse on a coset whose source and target differ
    x0 = next(
        x
        for x in NONEMPTY
        if ORACLE.prod(x, x) is None and len(x) > 1
    )

    class BadInv(_Delegate):
        def inv(self, a):
            if a == x0:
                return a
            return self.base.inv(a)

    report = axiom_check(BadInv(ORACLE))
    assert not report.passed


def test_fault_empty_meet_of_subgroups_is_caught():
    u0, v0 = idempotents(ORACLE)[:2]

    class BadMeet(_Delegate):
        def meet(self, a, b):
            if {a, b} == {u0, v0}:
                return self.base.empty()
            return self.base.meet(a, b)

    report = axiom_check(BadMeet(ORACLE))
    assert not report.passed
    assert "e" in report.failures


def test_fault_defined_empty_product_is_caught():
    a0 = NONEMPTY[0]

    class BadEmpty(_Delegate):
        def prod(self, a, b):
            if a == self.base.empty() and b == a0:
                return a0
            return self.base.prod(a, b)

    report = axiom_check(BadEmpty(ORACLE))
    assert not report.passed
    assert "d" in report.failures


def test_fault_order_breaking_inverse_is_caught():
    # a singleton whose element is not an involution, forced self-inverse
    x0 = frozenset({(1, 0)})
    assert x0 in NONEMPTY

    class SelfInv(_Delegate):
        def inv(self, a):
            if a == x0:
                return a
            return self.base.inv(a)

    report = axiom_check(SelfInv(ORACLE))
    assert not report.passed
    assert set(report.failures) & {"b", "c", "f"}


# ---------------------------------------------------------------------------
# extension criterion


def _brute_extenders(pairs):
    out = []
    for g in GROUP:
        if all(translate(g, a) == b for a, b in pairs):
            out.append(g)
    return frozenset(out)


def test_extendable_injection_exhaustive_small():
    sample = [a for a in NONEMPTY if len(a) <= 4]
    for a, b in itertools.product(sample, repeat=2):
        result = extendable_injection(ORACLE, [(a, b)])
        expected = _brute_extenders([(a, b)])
        if expected:
            assert result.witness == expected
        else:
            assert result.witness is None


def test_extendable_injection_two_pairs():
    sample = [a for a in NONEMPTY if len(a) == 2][:8]
    for (a1, b1), (a2, b2) in itertools.product(
        itertools.product(sample, repeat=2), repeat=2
    ):
        pairs = [(a1, b1), (a2, b2)]
        result = extendable_injection(ORACLE, pairs)
        expected = _brute_extenders(pairs)
        if expected:
            assert result.witness == expected
        else:
            assert result.witness is None
            assert result.reason


def test_extendable_injection_rejects_empty():
    with pytest.raises(ValueError):
        extendable_injection(ORACLE, [])
    with pytest.raises(ValueError):
        extendable_injection(ORACLE, [(EMPTY, NONEMPTY[0])])


# ---------------------------------------------------------------------------
# suborbits


def test_suborbit_matches_brute_force_everywhere():
    for u in idempotents(ORACLE):
        for ell in left_cosets(ORACLE, u):
            for f in NONEMPTY:
                got = suborbit(ORACLE, u, ell, f)
                want = {translate(g, f) for g in ell}
                assert got == want, (u, ell, f)
                assert len(got) == ORACLE.index(u, source(ORACLE, f))


def test_suborbit_identity_case():
    for u in idempotents(ORACLE):
        assert suborbit(ORACLE, u, u, u) == {u}


def test_suborbit_validates_arguments():
    u = next(iter(idempotents(ORACLE)))
    other = next(a for a in NONEMPTY if ORACLE.prod(a, u) != a)
    with pytest.raises(ValueError):
        suborbit(ORACLE, u, other, u)


# ---------------------------------------------------------------------------
# dump / load


def test_dump_load_round_trip():
    text = dump_oracle(ORACLE)
    loaded = load_oracle(text)
    assert dump_oracle(loaded) == text


def test_loaded_table_passes_axioms():
    loaded = load_oracle(dump_oracle(ORACLE))
    report = axiom_check(loaded)
    assert report.passed


def test_dump_is_deterministic():
    assert dump_oracle(ORACLE) == dump_oracle(dihedral_oracle())


def test_load_rejects_bad_header():
    with pytest.raises(ValueError):
        load_oracle("something else v9\n")
