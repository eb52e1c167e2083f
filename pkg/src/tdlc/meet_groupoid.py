"""Meet groupoids of compact open cosets, behind an abstract oracle.

A meet groupoid is a set of "cosets" with a partial product, a total
inversion, a total binary meet with a distinguished empty element, and an
index function on pairs of subgroups (nonempty idempotents).  Oracles are
finite windows onto a possibly infinite structure: the product either
returns an element, returns ``None`` (undefined by the coset typing rules),
or raises :class:`WindowOverflow` when the true result exists but falls
outside the window.

This module contains everything that works against the oracle interface
alone: the axiom checker, coset enumeration, the extension criterion for
partial injections, the finite-suborbit algorithm, a coset-table oracle for
any finite group, and a text dump/load format.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

from .errors import Undefined, WindowOverflow

Handle = Hashable


class MeetGroupoidOracle:
    """Interface for finite meet-groupoid windows.

    Subclasses implement ``elements`` (finite, deterministic order,
    including the empty element), ``empty``, ``prod`` (``None`` when
    undefined, :class:`WindowOverflow` when defined but outside the
    window), ``inv``, ``meet`` (total), and ``index`` on nonempty
    idempotent pairs.  ``boundary_flag`` marks elements at the window edge
    whose products are expected to overflow.
    """

    def elements(self) -> Sequence[Handle]:
        raise NotImplementedError

    def empty(self) -> Handle:
        raise NotImplementedError

    def prod(self, a: Handle, b: Handle) -> Handle | None:
        raise NotImplementedError

    def inv(self, a: Handle) -> Handle:
        raise NotImplementedError

    def meet(self, a: Handle, b: Handle) -> Handle:
        raise NotImplementedError

    def index(self, u: Handle, v: Handle) -> int:
        raise NotImplementedError

    def boundary_flag(self, a: Handle) -> bool:
        return False


# ---------------------------------------------------------------------------
# derived notions


def is_idempotent(oracle: MeetGroupoidOracle, a: Handle) -> bool:
    if a == oracle.empty():
        raise ValueError("idempotency is asked of nonempty elements only")
    try:
        return oracle.prod(a, a) == a
    except WindowOverflow:
        return False


def source(oracle: MeetGroupoidOracle, a: Handle) -> Handle:
    """The subgroup ``a * inv(a)``; ``a`` is one of its right cosets."""
    if a == oracle.empty():
        raise ValueError("the empty element has no source")
    s = oracle.prod(a, oracle.inv(a))
    if s is None:
        raise Undefined("product with own inverse undefined; oracle is broken")
    return s


def target(oracle: MeetGroupoidOracle, a: Handle) -> Handle:
    """The subgroup ``inv(a) * a``; ``a`` is one of its left cosets."""
    if a == oracle.empty():
        raise ValueError("the empty element has no target")
    t = oracle.prod(oracle.inv(a), a)
    if t is None:
        raise Undefined("product with own inverse undefined; oracle is broken")
    return t


def is_subset(oracle: MeetGroupoidOracle, a: Handle, b: Handle) -> bool:
    """Containment via the meet: ``a`` is a subset of ``b`` iff their meet
    is ``a`` again."""
    return oracle.meet(a, b) == a


def idempotents(oracle: MeetGroupoidOracle) -> list[Handle]:
    """All subgroups of the window: nonempty idempotent elements."""
    empty = oracle.empty()
    return [
        a for a in oracle.elements() if a != empty and is_idempotent(oracle, a)
    ]


def _prod_or_none(oracle: MeetGroupoidOracle, a: Handle, b: Handle):
    try:
        return oracle.prod(a, b)
    except WindowOverflow:
        return None


def left_cosets(oracle: MeetGroupoidOracle, u: Handle) -> list[Handle]:
    """All window elements ``a`` with ``a * u = a``."""
    if not is_idempotent(oracle, u):
        raise ValueError("cosets are enumerated for subgroups only")
    empty = oracle.empty()
    return [
        a
        for a in oracle.elements()
        if a != empty and _prod_or_none(oracle, a, u) == a
    ]


def right_cosets(oracle: MeetGroupoidOracle, u: Handle) -> list[Handle]:
    """All window elements ``a`` with ``u * a = a``."""
    if not is_idempotent(oracle, u):
        raise ValueError("cosets are enumerated for subgroups only")
    empty = oracle.empty()
    return [
        a
        for a in oracle.elements()
        if a != empty and _prod_or_none(oracle, u, a) == a
    ]


# ---------------------------------------------------------------------------
# axiom checking


@dataclass
class AxiomReport:
    """Result of :func:`axiom_check`.

    ``failures`` maps axiom letters to the first counterexample found, as a
    tuple of the handles involved.  ``checked`` counts instances examined
    per axiom; ``exhaustive`` records whether the budget covered them all.
    ``skipped_overflow`` counts pairs excluded because the window edge
    hides their product.
    """

    failures: dict[str, tuple] = field(default_factory=dict)
    checked: dict[str, int] = field(default_factory=dict)
    exhaustive: dict[str, bool] = field(default_factory=dict)
    skipped_overflow: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures


class _Budget:
    def __init__(self, limit: int | None):
        self.limit = limit
        self.count = 0
        self.hit = False

    def step(self) -> bool:
        if self.limit is not None and self.count >= self.limit:
            self.hit = True
            return False
        self.count += 1
        return True


def axiom_check(
    oracle: MeetGroupoidOracle, budget: int | None = None
) -> AxiomReport:
    """Verify the meet-groupoid laws on the window, exhaustively or up to
    ``budget`` instances per law.

    Checked laws, lettered as reported:

    a. associativity with definedness agreement: for a defined product
       ``ab``, an element ``c`` composes with it iff ``bc`` is defined and
       ``a(bc)`` is, and then the two bracketings agree; for an undefined
       pair ``(a, b)``, no ``c`` makes ``a(bc)`` defined via ``bc``.
    b. ``a * inv(a)`` and ``inv(a) * a`` are always defined.
    c. cancellation: ``(ab) * inv(b) = a`` and ``inv(a) * (ab) = b``.
    d. empty laws: ``inv(empty) = empty = empty * empty``; products of
       empty with anything nonempty are undefined.
    e. two subgroups always meet in a nonempty element.
    f. inversion preserves and reflects containment.
    g. exchange of meets with products: when ``a0 b0`` and ``a1 b1`` are
       defined and the meets ``a0 ^ a1`` and ``b0 ^ b1`` are nonempty,
       ``(a0 ^ a1)(b0 ^ b1) = a0 b0 ^ a1 b1``.

    Pairs whose product overflows the window are skipped and counted.
    """
    report = AxiomReport()
    elements = list(oracle.elements())
    empty = oracle.empty()
    nonempty = [a for a in elements if a != empty]

    # product closure with overflow bookkeeping
    prodmap: dict[tuple[Handle, Handle], Handle] = {}
    succ: dict[Handle, set[Handle]] = {a: set() for a in nonempty}
    overflow_pairs: set[tuple[Handle, Handle]] = set()
    for a, b in itertools.product(nonempty, repeat=2):
        try:
            p = oracle.prod(a, b)
        except WindowOverflow:
            overflow_pairs.add((a, b))
            continue
        if p is not None:
            prodmap[(a, b)] = p
            succ[a].add(b)
    report.skipped_overflow = len(overflow_pairs)
    images = {
        b: {prodmap[(b, c)] for c in succ[b]} for b in nonempty
    }

    def record(letter: str, witness: tuple) -> None:
        if letter not in report.failures:
            report.failures[letter] = witness

    # (b) first: later checks lean on sources and targets existing
    bud = _Budget(budget)
    for a in nonempty:
        if not bud.step():
            break
        if (a, oracle.inv(a)) in overflow_pairs or (
            oracle.inv(a),
            a,
        ) in overflow_pairs:
            continue
        if (a, oracle.inv(a)) not in prodmap or (
            oracle.inv(a),
            a,
        ) not in prodmap:
            record("b", (a,))
    report.checked["b"] = bud.count
    report.exhaustive["b"] = not bud.hit

    # (d) empty laws
    bud = _Budget(budget)
    bud.step()
    if oracle.inv(empty) != empty or _prod_or_none(oracle, empty, empty) != empty:
        record("d", (empty,))
    for a in nonempty:
        if not bud.step():
            break
        if (
            _prod_or_none(oracle, empty, a) is not None
            or _prod_or_none(oracle, a, empty) is not None
        ):
            record("d", (a,))
    report.checked["d"] = bud.count
    report.exhaustive["d"] = not bud.hit

    # (c) cancellation on every defined pair
    bud = _Budget(budget)
    for (a, b), p in prodmap.items():
        if not bud.step():
            break
        left = _prod_or_none(oracle, p, oracle.inv(b))
        right = _prod_or_none(oracle, oracle.inv(a), p)
        if left != a or right != b:
            record("c", (a, b))
    report.checked["c"] = bud.count
    report.exhaustive["c"] = not bud.hit

    # (a) associativity and definedness agreement
    bud = _Budget(budget)
    done = False
    for (a, b), p in prodmap.items():
        if done:
            break
        candidates = succ[b] | succ.get(p, set())
        for c in candidates:
            if not bud.step():
                done = True
                break
            if (b, c) in overflow_pairs or (p, c) in overflow_pairs:
                continue
            lhs_defined = c in succ.get(p, set())
            bc = prodmap.get((b, c))
            if bc is None:
                rhs_defined = False
            elif (a, bc) in overflow_pairs:
                continue
            else:
                rhs_defined = (a, bc) in prodmap
            if lhs_defined != rhs_defined:
                record("a", (a, b, c))
                continue
            if lhs_defined and prodmap[(p, c)] != prodmap[(a, bc)]:
                record("a", (a, b, c))
    for a, b in itertools.product(nonempty, repeat=2):
        if done or (a, b) in prodmap or (a, b) in overflow_pairs:
            continue
        if not bud.step():
            done = True
            break
        for bc in images[b]:
            if (a, bc) in prodmap or (a, bc) in overflow_pairs:
                record("a", (a, b, bc))
                break
    report.checked["a"] = bud.count
    report.exhaustive["a"] = not bud.hit

    # (e) subgroups pairwise meet
    subgroup_list = [
        a for a in nonempty if prodmap.get((a, a)) == a
    ]
    bud = _Budget(budget)
    done = False
    for u in subgroup_list:
        if done:
            break
        for v in subgroup_list:
            if not bud.step():
                done = True
                break
            if oracle.meet(u, v) == empty:
                record("e", (u, v))
    report.checked["e"] = bud.count
    report.exhaustive["e"] = not bud.hit

    # (f) inversion is an order isomorphism
    bud = _Budget(budget)
    done = False
    for a in nonempty:
        if done:
            break
        for b in nonempty:
            if not bud.step():
                done = True
                break
            fwd = oracle.meet(a, b) == a
            bwd = oracle.meet(oracle.inv(a), oracle.inv(b)) == oracle.inv(a)
            if fwd != bwd:
                record("f", (a, b))
    report.checked["f"] = bud.count
    report.exhaustive["f"] = not bud.hit

    # (g) meets exchange with products
    mates: dict[Handle, list[Handle]] = {
        a: [b for b in nonempty if oracle.meet(a, b) != empty]
        for a in nonempty
    }
    bud = _Budget(budget)
    done = False
    for (a0, b0), p0 in prodmap.items():
        if done:
            break
        for a1 in mates[a0]:
            if done:
                break
            for b1 in mates[b0]:
                if (a1, b1) not in prodmap:
                    continue
                if not bud.step():
                    done = True
                    break
                am = oracle.meet(a0, a1)
                bm = oracle.meet(b0, b1)
                if (am, bm) in overflow_pairs:
                    continue
                lhs = _prod_or_none(oracle, am, bm)
                rhs = oracle.meet(p0, prodmap[(a1, b1)])
                if lhs != rhs:
                    record("g", (a0, b0, a1, b1))
    report.checked["g"] = bud.count
    report.exhaustive["g"] = not bud.hit

    return report


# ---------------------------------------------------------------------------
# extension criterion


@dataclass(frozen=True)
class ExtensionResult:
    """Outcome of the extension criterion: either a witness coset (every
    group element of it induces the requested partial map) or a reason why
    none exists."""

    witness: Handle | None
    reason: str | None = None

    @property
    def extends(self) -> bool:
        return self.witness is not None


def extendable_injection(
    oracle: MeetGroupoidOracle, pairs: Sequence[tuple[Handle, Handle]]
) -> ExtensionResult:
    """Decide whether some ambient group element maps each first coset onto
    the corresponding second coset by left translation.

    The witness region for one pair ``(a, b)`` is ``b * inv(a)``; the map
    extends exactly when these regions are all defined and meet in a
    nonempty coset, which is returned.
    """
    empty = oracle.empty()
    if not pairs:
        raise ValueError("need at least one pair")
    if any(a == empty or b == empty for a, b in pairs):
        raise ValueError("pairs must be nonempty cosets")
    region: Handle | None = None
    for a, b in pairs:
        try:
            r = oracle.prod(b, oracle.inv(a))
        except WindowOverflow:
            return ExtensionResult(
                None, f"witness region for ({a}, {b}) overflows the window"
            )
        if r is None:
            return ExtensionResult(
                None, f"witness region undefined for ({a}, {b}): type mismatch"
            )
        region = r if region is None else oracle.meet(region, r)
        if region == empty:
            return ExtensionResult(None, "witness regions have empty meet")
    return ExtensionResult(region)


# ---------------------------------------------------------------------------
# finite suborbits


def suborbit(
    oracle: MeetGroupoidOracle, u: Handle, ell: Handle, f: Handle
) -> set[Handle]:
    """The finite set ``{g * f : g a group element with g u = ell}``.

    ``u`` must be a subgroup and ``ell`` one of its left cosets.  The
    computation stays inside the coset calculus: with ``v`` the source
    subgroup of ``f``, the translates ``g * f`` for ``g`` ranging over
    ``ell`` are exactly the products ``d * f`` where ``d`` runs over the
    left cosets of ``v`` that contain a left coset of ``u ^ v`` lying
    inside ``ell``.
    """
    empty = oracle.empty()
    if f == empty:
        raise ValueError("the translated coset must be nonempty")
    if not is_idempotent(oracle, u):
        raise ValueError("first argument must be a subgroup")
    if _prod_or_none(oracle, ell, u) != ell:
        raise ValueError("second argument must be a left coset of the subgroup")
    v = source(oracle, f)
    uv = oracle.meet(u, v)
    if uv == empty:
        raise Undefined("subgroups failed to meet; oracle is broken")
    k = oracle.index(u, v)
    l0 = [c for c in left_cosets(oracle, uv) if is_subset(oracle, c, ell)]
    l1 = [
        d
        for d in left_cosets(oracle, v)
        if any(is_subset(oracle, c, d) for c in l0)
    ]
    out: set[Handle] = set()
    for d in l1:
        prod = oracle.prod(d, f)  # WindowOverflow propagates to the caller
        if prod is None:
            raise Undefined("translate unexpectedly undefined; oracle is broken")
        out.add(prod)
    if len(out) != k:
        # the full suborbit has index(u, v) distinct translates; finding
        # fewer means some of them need finer cosets than the window holds
        raise WindowOverflow(
            f"suborbit has {k} translates but only {len(out)} are representable"
        )
    return out


# ---------------------------------------------------------------------------
# coset tables of finite groups


class FiniteGroupOracle(MeetGroupoidOracle):
    """The meet groupoid of all cosets of all subgroups of a finite group.

    Handles are frozensets of group elements (plus the empty frozenset).
    The product of a left coset of a subgroup with a right coset of the
    same subgroup is their setwise product; other products are undefined.
    """

    def __init__(self, group: Sequence[Hashable], mul: Callable):
        self._mul = mul
        self._group = list(group)
        self._identity = self._find_identity()
        self._inverse = {g: self._find_inverse(g) for g in self._group}
        self._subgroups = self._find_subgroups()
        cosets: set[frozenset] = set()
        for h in self._subgroups:
            for g in self._group:
                cosets.add(frozenset(mul(g, x) for x in h))
                cosets.add(frozenset(mul(x, g) for x in h))
        self._elements = [frozenset()] + sorted(
            cosets, key=lambda c: (len(c), sorted(map(repr, c)))
        )
        self._element_set = set(self._elements)
        # precomputed tables: the oracle is consulted heavily by scans
        inv = {a: self.inv(a) for a in self._elements}
        tgt = {a: self._setwise(inv[a], a) for a in self._elements if a}
        src = {a: self._setwise(a, inv[a]) for a in self._elements if a}
        self._prod_table: dict[tuple, frozenset | None] = {}
        for a in self._elements:
            for b in self._elements:
                if not a or not b:
                    self._prod_table[(a, b)] = (
                        frozenset() if not a and not b else None
                    )
                elif tgt[a] == src[b]:
                    self._prod_table[(a, b)] = self._setwise(a, b)
                else:
                    self._prod_table[(a, b)] = None

    def _find_identity(self):
        for e in self._group:
            if all(
                self._mul(e, g) == g and self._mul(g, e) == g
                for g in self._group
            ):
                return e
        raise ValueError("no identity element")

    def _find_inverse(self, g):
        for h in self._group:
            if self._mul(g, h) == self._identity:
                return h
        raise ValueError(f"no inverse for {g!r}")

    def _find_subgroups(self) -> list[frozenset]:
        out = []
        for bits in itertools.product([False, True], repeat=len(self._group)):
            subset = {
                g for g, keep in zip(self._group, bits) if keep
            }
            if self._identity not in subset:
                continue
            if all(
                self._mul(a, b) in subset
                for a in subset
                for b in subset
            ):
                out.append(frozenset(subset))
        return out

    def elements(self) -> Sequence[Handle]:
        return list(self._elements)

    def empty(self) -> Handle:
        return frozenset()

    def _setwise(self, a: frozenset, b: frozenset) -> frozenset:
        return frozenset(self._mul(x, y) for x in a for y in b)

    def prod(self, a: Handle, b: Handle) -> Handle | None:
        return self._prod_table[(a, b)]

    def inv(self, a: Handle) -> Handle:
        return frozenset(self._inverse[x] for x in a)

    def meet(self, a: Handle, b: Handle) -> Handle:
        common = frozenset(a) & frozenset(b)
        return common if common in self._element_set else frozenset()

    def index(self, u: Handle, v: Handle) -> int:
        if not u or not v:
            raise ValueError("index needs nonempty subgroups")
        common = frozenset(u) & frozenset(v)
        if not common or len(u) % len(common):
            raise ValueError("index of a non-subgroup pair")
        return len(u) // len(common)


def dihedral_oracle() -> FiniteGroupOracle:
    """The coset meet groupoid of the symmetry group of a square, a handy
    nonabelian group of order 8."""
    # elements (r, s): rotation by r quarter turns, then s reflections
    group = [(r, s) for r in range(4) for s in range(2)]

    def mul(a, b):
        r1, s1 = a
        r2, s2 = b
        r = (r2 + (r1 if s2 == 0 else -r1)) % 4
        return (r, (s1 + s2) % 2)

    return FiniteGroupOracle(group, mul)


# ---------------------------------------------------------------------------
# dump / load


def dump_oracle(oracle: MeetGroupoidOracle) -> str:
    """Serialize a finite oracle as a deterministic line-based table."""
    elements = list(oracle.elements())
    ids = {a: i for i, a in enumerate(elements)}
    empty = oracle.empty()
    lines = ["meet-groupoid-table v1", f"elements {len(elements)}"]
    for i, a in enumerate(elements):
        flag = 1 if oracle.boundary_flag(a) else 0
        lines.append(f"{i} {flag}")
    lines.append(f"empty {ids[empty]}")

    prods, overflows = [], []
    for a, b in itertools.product(elements, repeat=2):
        try:
            p = oracle.prod(a, b)
        except WindowOverflow:
            overflows.append(f"{ids[a]} {ids[b]}")
            continue
        if p is not None:
            prods.append(f"{ids[a]} {ids[b]} {ids[p]}")
    lines.append(f"prod {len(prods)}")
    lines.extend(prods)
    lines.append(f"overflow {len(overflows)}")
    lines.extend(overflows)

    lines.append(f"inv {len(elements)}")
    lines.extend(f"{ids[a]} {ids[oracle.inv(a)]}" for a in elements)

    meets = []
    for a, b in itertools.product(elements, repeat=2):
        m = oracle.meet(a, b)
        if m != empty:
            meets.append(f"{ids[a]} {ids[b]} {ids[m]}")
    lines.append(f"meet {len(meets)}")
    lines.extend(meets)

    idems = [
        a for a in elements if a != empty and is_idempotent(oracle, a)
    ]
    indexes = []
    for u, v in itertools.product(idems, repeat=2):
        try:
            k = oracle.index(u, v)
        except WindowOverflow:
            continue
        indexes.append(f"{ids[u]} {ids[v]} {k}")
    lines.append(f"index {len(indexes)}")
    lines.extend(indexes)
    return "\n".join(lines) + "\n"


class TableOracle(MeetGroupoidOracle):
    """A meet-groupoid oracle backed by explicit tables, as produced by
    :func:`dump_oracle`.  Handles are the integer ids of the dump."""

    def __init__(
        self,
        size: int,
        empty_id: int,
        prod_table: dict[tuple[int, int], int],
        overflow_pairs: set[tuple[int, int]],
        inv_table: dict[int, int],
        meet_table: dict[tuple[int, int], int],
        index_table: dict[tuple[int, int], int],
        boundary: set[int] = frozenset(),
    ):
        self._size = size
        self._empty = empty_id
        self._prod = prod_table
        self._overflow = overflow_pairs
        self._inv = inv_table
        self._meet = meet_table
        self._index = index_table
        self._boundary = set(boundary)

    def elements(self) -> Sequence[Handle]:
        return list(range(self._size))

    def empty(self) -> Handle:
        return self._empty

    def prod(self, a, b):
        if (a, b) in self._overflow:
            raise WindowOverflow(f"product of {a} and {b} leaves the window")
        return self._prod.get((a, b))

    def inv(self, a):
        return self._inv[a]

    def meet(self, a, b):
        return self._meet.get((a, b), self._empty)

    def index(self, u, v):
        try:
            return self._index[(u, v)]
        except KeyError:
            raise ValueError(f"no index recorded for ({u}, {v})") from None

    def boundary_flag(self, a) -> bool:
        return a in self._boundary


def load_oracle(text: str) -> TableOracle:
    """Parse the dump format back into a :class:`TableOracle`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    it = iter(lines)
    header = next(it)
    if header != "meet-groupoid-table v1":
        raise ValueError(f"unknown table header {header!r}")

    def expect(keyword: str) -> int:
        line = next(it)
        word, count = line.split()
        if word != keyword:
            raise ValueError(f"expected {keyword!r} section, got {line!r}")
        return int(count)

    size = expect("elements")
    boundary = set()
    for _ in range(size):
        i, flag = map(int, next(it).split())
        if flag:
            boundary.add(i)
    word, empty_id = next(it).split()
    if word != "empty":
        raise ValueError("missing empty declaration")

    prod_table = {}
    for _ in range(expect("prod")):
        a, b, c = map(int, next(it).split())
        prod_table[(a, b)] = c
    overflow = set()
    for _ in range(expect("overflow")):
        a, b = map(int, next(it).split())
        overflow.add((a, b))
    inv_table = {}
    for _ in range(expect("inv")):
        a, b = map(int, next(it).split())
        inv_table[a] = b
    meet_table = {}
    for _ in range(expect("meet")):
        a, b, c = map(int, next(it).split())
        meet_table[(a, b)] = c
    index_table = {}
    for _ in range(expect("index")):
        u, v, k = map(int, next(it).split())
        index_table[(u, v)] = k
    return TableOracle(
        size,
        int(empty_id),
        prod_table,
        overflow,
        inv_table,
        meet_table,
        index_table,
        boundary,
    )
