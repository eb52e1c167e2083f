"""Reconstructing an isomorphism onto a disguised coset-window oracle.

Given an opaque :class:`~tdlc.meet_groupoid.MeetGroupoidOracle` that is
secretly isomorphic to a canonical window (:class:`~tdlc.qp_groupoids.QpWindow`
or :class:`~tdlc.qp_groupoids.ZQpWindow`), rebuild an explicit isomorphism
using only the oracle operations:

1. :func:`locate_chain` walks the subgroup chain in index-p steps from an
   arbitrary idempotent anchor.
2. :func:`definable_shift` recovers the rescaling map ``D(r,a) -> D(r+1,a)``
   from its first-order definition: ``C`` is the shift of ``B`` iff some left
   coset ``D`` of the next subgroup lies inside ``B`` and has p-th power
   ``C``.
3. :func:`build_iso_qp` picks a generator of the (cyclic) group of left
   cosets of the central subgroup, maps label powers onto it, and transports
   them to every level with the definable shift.
4. :func:`build_iso_zqp` first rebuilds the abelian part (recognised inside
   the extension as the elements whose source and target agree), then chooses
   a nested chain of displacement-one cosets ``F_r`` and assembles every
   z-displaced coset from products, inverses and label translates of these.
5. :func:`verify_iso` replays all operations on both sides and reports any
   disagreement.

All searches are first-found in oracle enumeration order, so rebuilds are
deterministic for a fixed oracle.  Different anchors or seeds give different
tables; :func:`verify_iso` is the correctness criterion, not table equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

from .errors import (
    DomainError,
    NestedChoiceFailed,
    NotFound,
    NotUnique,
    WindowOverflow,
)
from .meet_groupoid import (
    MeetGroupoidOracle,
    idempotents,
    is_idempotent,
    is_subset,
    left_cosets,
    source,
    target,
)
from .qp_groupoids import EMPTY, QpCoset, QpWindow, ZQpCoset, ZQpWindow

Handle = Hashable

__all__ = [
    "SubgroupChain",
    "IsoTable",
    "IsoReport",
    "locate_chain",
    "definable_shift",
    "build_iso_qp",
    "build_iso_zqp",
    "verify_iso",
]


@dataclass
class SubgroupChain:
    """Oracle subgroups keyed by offset from the anchor, descending in size.

    ``levels[r+1]`` is the unique index-p subgroup inside ``levels[r]``.
    """

    levels: dict[int, Handle]
    p: int

    def lo(self) -> int:
        return min(self.levels)

    def hi(self) -> int:
        return max(self.levels)

    def recentred(self) -> "SubgroupChain":
        """Shift the keys so the median subgroup sits at offset 0."""
        lo, hi = self.lo(), self.hi()
        if (hi - lo) % 2:
            raise NotFound("subgroup chain has even length; no median level")
        mid = (lo + hi) // 2
        return SubgroupChain({r - mid: h for r, h in self.levels.items()}, self.p)


@dataclass
class IsoTable:
    """A rebuilt isomorphism from a canonical window onto an oracle.

    ``level_bound``/``label_exp`` describe the oracle's full window; the
    table itself is total on the safe sub-window with margin one in the
    level and one order in the label, because the definable rescaling map
    needs one spare level of sub-cosets and one spare label order to pin a
    coset down.  (The truncation genuinely leaves the finest-order labels at
    nonzero levels undetermined: multiplying just that layer by a unit
    congruent to 1 mod p^(M-1), independently per level, is an automorphism
    of the truncated window.)  The safe sub-window is itself a canonical
    window with both parameters one smaller; :meth:`model_window` builds it.
    """

    group: str  # "qp" | "zqp"
    p: int
    level_bound: int
    label_exp: int
    mapping: dict  # safe-window nonempty coset -> oracle handle
    chain: dict[int, Handle]  # canonical subgroup level -> oracle handle
    zpow_bound: int | None = None
    f_chain: dict[int, Handle] | None = None  # level r -> image of E(-1,r,0)

    def model_window(self):
        """The safe sub-window the table is total on, as a canonical window."""
        if self.group == "qp":
            return QpWindow(self.p, self.level_bound - 1, self.label_exp - 1)
        return ZQpWindow(
            self.p, self.level_bound - 1, self.label_exp - 1, self.zpow_bound
        )


@dataclass
class IsoReport:
    """Outcome of :func:`verify_iso`: counterexamples, if any, and coverage."""

    problems: list[tuple] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.problems


# ---------------------------------------------------------------------------
# subgroup chain


def _index_p_inside(
    oracle: MeetGroupoidOracle, subs: Sequence[Handle], u: Handle, p: int
) -> list[Handle]:
    """Subgroups of index p properly inside u."""
    out = []
    for v in subs:
        if v == u or not is_subset(oracle, v, u):
            continue
        if oracle.index(u, v) == p:
            out.append(v)
    return out


def _index_p_above(
    oracle: MeetGroupoidOracle, subs: Sequence[Handle], u: Handle, p: int
) -> list[Handle]:
    """Subgroups containing u with index p."""
    out = []
    for v in subs:
        if v == u or not is_subset(oracle, u, v):
            continue
        if oracle.index(v, u) == p:
            out.append(v)
    return out


def locate_chain(oracle: MeetGroupoidOracle, anchor: Handle) -> SubgroupChain:
    """Walk the oracle's subgroup chain outward from ``anchor``.

    The anchor becomes offset 0.  Going up, the unique index-p subgroup
    inside the current one is next; going down, the unique subgroup
    containing it with index p.  The walk stops where no candidate exists;
    two candidates in either direction mean the oracle is not a disguised
    window and raise :class:`NotUnique`.  Every oracle subgroup must end up
    on the chain, otherwise :class:`NotFound` is raised.
    """
    if not is_idempotent(oracle, anchor):
        raise ValueError("anchor must be a subgroup handle")
    subs = idempotents(oracle)
    if len(subs) < 2:
        raise NotFound("oracle exposes fewer than two subgroups")
    # the index-p step size is read off the anchor's immediate neighbours
    steps = sorted(
        {oracle.index(anchor, v) for v in subs if v != anchor and is_subset(oracle, v, anchor)}
    )
    p = steps[0] if steps else None
    if p is None:
        down_steps = sorted(
            {oracle.index(v, anchor) for v in subs if v != anchor and is_subset(oracle, anchor, v)}
        )
        p = down_steps[0]
    levels = {0: anchor}
    r = 0
    while True:
        found = _index_p_inside(oracle, subs, levels[r], p)
        if not found:
            break
        if len(found) > 1:
            raise NotUnique(f"{len(found)} index-{p} subgroups below offset {r}")
        r += 1
        levels[r] = found[0]
    r = 0
    while True:
        found = _index_p_above(oracle, subs, levels[r], p)
        if not found:
            break
        if len(found) > 1:
            raise NotUnique(f"{len(found)} index-{p} supergroups above offset {r}")
        r -= 1
        levels[r] = found[0]
    if set(levels.values()) != set(subs):
        raise NotFound("subgroup chain does not span the oracle's subgroups")
    return SubgroupChain(levels, p)


# ---------------------------------------------------------------------------
# the definable rescaling map


def _coset_power(oracle: MeetGroupoidOracle, d: Handle, n: int) -> Handle:
    out = d
    for _ in range(n - 1):
        nxt = oracle.prod(out, d)
        if nxt is None:
            raise NotFound("coset power left the oracle's defined products")
        out = nxt
    return out


def _coset_level(oracle: MeetGroupoidOracle, chain: SubgroupChain, b: Handle) -> int:
    """The chain offset r with b a left coset of chain(r)."""
    for r, u in chain.levels.items():
        if oracle.prod(b, u) == b:
            return r
    raise NotFound(f"{b!r} is not a left coset of any chain subgroup")


def definable_shift(
    oracle: MeetGroupoidOracle, chain: SubgroupChain, b: Handle
) -> Handle:
    """The rescaled image of ``b``, one chain level finer.

    ``C`` is the image of ``B`` exactly when some left coset ``D`` of the
    next-finer subgroup satisfies ``D`` inside ``B`` and ``D^p = C`` — a
    first-order property of the groupoid, so it survives any disguise of the
    handles.
    """
    r = _coset_level(oracle, chain, b)
    if r + 1 not in chain.levels:
        raise NotFound(f"no finer subgroup below offset {r}; window boundary")
    powers = {
        _coset_power(oracle, d, chain.p)
        for d in left_cosets(oracle, chain.levels[r + 1])
        if is_subset(oracle, d, b)
    }
    if not powers:
        raise NotFound(f"no sub-coset of {b!r} at the next level")
    if len(powers) > 1:
        raise NotUnique(f"rescaling of {b!r} is ambiguous: {sorted(map(repr, powers))}")
    return powers.pop()


def _definable_unshift(
    oracle: MeetGroupoidOracle, chain: SubgroupChain, c: Handle
) -> Handle:
    """Inverse of :func:`definable_shift`: the coset one level coarser whose
    rescaled image is ``c``."""
    r = _coset_level(oracle, chain, c)
    if r - 1 not in chain.levels:
        raise NotFound(f"no coarser subgroup above offset {r}; window boundary")
    for d in left_cosets(oracle, chain.levels[r]):
        if _coset_power(oracle, d, chain.p) == c:
            for b in left_cosets(oracle, chain.levels[r - 1]):
                if is_subset(oracle, d, b):
                    return b
            raise NotFound(f"no coarser coset contains {d!r}")
    raise NotFound(f"{c!r} has no rescaling preimage")


# ---------------------------------------------------------------------------
# abelian window rebuild


def _safe_labels(p: int, label_exp: int) -> list[Fraction]:
    """Labels of order at most p^(label_exp - 1), in canonical order."""
    den = p**label_exp
    return [Fraction(k, den) for k in range(0, den, p)]


def _exact_log(n: int, p: int) -> int:
    m = 0
    while n > 1 and n % p == 0:
        n //= p
        m += 1
    if n != 1:
        raise NotFound(f"coset count is not a power of {p}")
    return m


def build_iso_qp(oracle: MeetGroupoidOracle, anchor: Handle | None = None) -> IsoTable:
    """Rebuild an isomorphism from a canonical p-adic window onto ``oracle``.

    Phases: (a)/(b) grow a tower of p-th roots in the cyclic group of left
    cosets of the central subgroup, ending in a generator; (c) map canonical
    labels to generator powers; (d) transport every level-0 coset to the
    other levels with the definable rescaling map.
    """
    if anchor is None:
        anchor = idempotents(oracle)[0]
    chain = locate_chain(oracle, anchor).recentred()
    p = chain.p
    level_bound = chain.hi()
    unit = chain.levels[0]
    cosets0 = left_cosets(oracle, unit)
    label_exp = _exact_log(len(cosets0), p)
    if level_bound < 2 or label_exp < 2:
        raise NotFound("window too small to leave a safe sub-window")

    # tower of p-th roots: tower[m] has order p^m and tower[m]^p = tower[m-1]
    tower = [unit]
    for m in range(1, label_exp + 1):
        for d in cosets0:
            if _coset_power(oracle, d, p) == tower[m - 1] and d != tower[m - 1]:
                tower.append(d)
                break
        else:
            raise NotFound(f"no order-p^{m} coset with the required p-th power")
    generator = tower[label_exp]

    # generator powers realise every level-0 label; only labels of order up
    # to p^(label_exp - 1) — multiples of p in the numerator — enter the
    # safe table, but the full cycle is walked as a well-formedness check
    mapping: dict = {}
    den = p**label_exp
    h = unit
    for k in range(den):
        if k % p == 0:
            mapping[QpCoset(0, Fraction(k, den))] = h
        nxt = oracle.prod(h, generator)
        if nxt is None:
            raise NotFound("power enumeration left the oracle's defined products")
        h = nxt
    if h != unit:
        raise NotFound("level-0 cosets are not cyclic of the expected order")

    # transport by the definable rescaling map, both directions, staying one
    # level clear of the window edge
    labels = _safe_labels(p, label_exp)
    for r in range(1, level_bound):
        for a in labels:
            mapping[QpCoset(r, a)] = definable_shift(
                oracle, chain, mapping[QpCoset(r - 1, a)]
            )
    for r in range(-1, -level_bound, -1):
        for a in labels:
            mapping[QpCoset(r, a)] = _definable_unshift(
                oracle, chain, mapping[QpCoset(r + 1, a)]
            )
    return IsoTable(
        group="qp",
        p=p,
        level_bound=level_bound,
        label_exp=label_exp,
        mapping=mapping,
        chain=dict(chain.levels),
    )


# ---------------------------------------------------------------------------
# scaling extension rebuild


class _SubOracle(MeetGroupoidOracle):
    """Restriction of an oracle to a product-closed subset of its handles."""

    def __init__(self, base: MeetGroupoidOracle, handles: Sequence[Handle]):
        self._base = base
        self._handles = list(handles)
        self._member = set(handles)

    def elements(self) -> Sequence[Handle]:
        return list(self._handles)

    def empty(self) -> Handle:
        return self._base.empty()

    def prod(self, a, b):
        out = self._base.prod(a, b)
        if out is not None and out not in self._member:
            raise NotFound("restricted oracle is not closed under products")
        return out

    def inv(self, a):
        return self._base.inv(a)

    def meet(self, a, b):
        return self._base.meet(a, b)

    def index(self, u, v):
        return self._base.index(u, v)

    def boundary_flag(self, a):
        return self._base.boundary_flag(a)


def _displacement(
    oracle: MeetGroupoidOracle, level_of: dict[Handle, int], a: Handle
) -> tuple[int, int]:
    """(target level, source level) of a handle, via the subgroup chain."""
    tgt = target(oracle, a)
    src = source(oracle, a)
    if tgt not in level_of or src not in level_of:
        raise NotFound(f"{a!r} has source or target off the subgroup chain")
    return level_of[tgt], level_of[src]


def build_iso_zqp(oracle: MeetGroupoidOracle) -> IsoTable:
    """Rebuild an isomorphism from a canonical scaling-extension window.

    The abelian part is recognised inside the oracle as the handles whose
    source and target subgroups agree, and rebuilt with
    :func:`build_iso_qp`.  A nested chain ``F_r`` of displacement-one cosets
    is then chosen (``F_{r+1}`` inside ``F_r``); products of consecutive
    ``F``s realise every negative displacement, inverses give the positive
    ones, and label translates fill in each fibre.
    """
    empty = oracle.empty()
    abelian = [empty]
    displaced = []
    for a in oracle.elements():
        if a == empty:
            continue
        if source(oracle, a) == target(oracle, a):
            abelian.append(a)
        else:
            displaced.append(a)
    if not displaced:
        raise NotFound("oracle has no displaced cosets; not a scaling extension")

    qp = build_iso_qp(_SubOracle(oracle, abelian))
    p, level_bound, label_exp = qp.p, qp.level_bound, qp.label_exp
    safe_bound = level_bound - 1
    chain = qp.chain
    level_of = {h: r for r, h in chain.items()}

    zpow_bound = 0
    shape: dict[Handle, tuple[int, int]] = {}
    for a in displaced:
        tgt_level, src_level = _displacement(oracle, level_of, a)
        shape[a] = (tgt_level, src_level)
        zpow_bound = max(zpow_bound, abs(tgt_level - src_level))

    # nested chain of displacement-one cosets: F_r has target level r,
    # source level r+1, and F_{r+1} sits inside F_r.  The chain must run all
    # the way up to the last level that has one: each upward nesting step is
    # only solvable when the label class below it is one order coarser, so a
    # full-length chain is what pins every F_r used in products onto a
    # coarse label class.  First-found depth-first search over candidates.
    def _descend(prev: Handle, r: int) -> dict[int, Handle] | None:
        if r == level_bound:
            return {}
        for cand in displaced:
            if shape[cand] != (r, r + 1) or not is_subset(oracle, cand, prev):
                continue
            rest = _descend(cand, r + 1)
            if rest is not None:
                rest[r] = cand
                return rest
        return None

    f_chain: dict[int, Handle] | None = None
    for f0 in (a for a in displaced if shape[a] == (0, 1)):
        rest = _descend(f0, 1)
        if rest is not None:
            f_chain = {0: f0, **rest}
            break
    if f_chain is None:
        raise NestedChoiceFailed(
            "no full nested chain of displacement-one cosets from level 0 up"
        )
    for r in range(-1, -safe_bound - 1, -1):
        chosen = next(
            (
                a
                for a in displaced
                if shape[a] == (r, r + 1) and is_subset(oracle, f_chain[r + 1], a)
            ),
            None,
        )
        if chosen is None:
            raise NestedChoiceFailed(
                f"no displacement-one coset at level {r} containing the chain"
            )
        f_chain[r] = chosen

    mapping: dict = {}
    for d, h in qp.mapping.items():
        mapping[ZQpCoset(0, d.level, d.label)] = h

    # zero-label fibres: descending products of consecutive F's for negative
    # displacement, inverses for positive
    zero_fibre: dict[tuple[int, int], Handle] = {}
    for z in range(-1, -zpow_bound - 1, -1):
        for r in range(-safe_bound, safe_bound + 1):
            if abs(r - z) > safe_bound:
                continue
            h = f_chain[r - z - 1]
            for s in range(r - z - 2, r - 1, -1):
                nxt = oracle.prod(h, f_chain[s])
                if nxt is None:
                    raise NotFound("chain product unexpectedly undefined")
                h = nxt
            zero_fibre[(z, r)] = h
    for z in range(1, zpow_bound + 1):
        for r in range(-safe_bound, safe_bound + 1):
            if abs(r - z) > safe_bound:
                continue
            zero_fibre[(z, r)] = oracle.inv(zero_fibre[(-z, r - z)])

    for (z, r), h in zero_fibre.items():
        for d in [QpCoset(r, a) for a in _safe_labels(p, label_exp)]:
            out = oracle.prod(h, qp.mapping[d])
            if out is None:
                raise NotFound("label translate unexpectedly undefined")
            mapping[ZQpCoset(z, r, d.label)] = out

    safe = ZQpWindow(p, safe_bound, label_exp - 1, zpow_bound)
    expected = {e for e in safe.elements() if e is not EMPTY}
    if set(mapping) != expected:
        raise NotFound("rebuilt table does not cover the safe sub-window")
    return IsoTable(
        group="zqp",
        p=p,
        level_bound=level_bound,
        label_exp=label_exp,
        mapping=mapping,
        chain=chain,
        zpow_bound=zpow_bound,
        f_chain=f_chain,
    )


# ---------------------------------------------------------------------------
# verification


_OVERFLOW = object()


def _window_prod(window, a, b):
    try:
        return window.prod(a, b)
    except WindowOverflow:
        return _OVERFLOW


def _expected_safe_image(oracle: MeetGroupoidOracle, table: IsoTable) -> set:
    """Oracle handles the table must hit, characterised without the table.

    A handle belongs to the safe image iff its source and target sit at
    interior chain offsets and it properly contains some handle whose source
    and target are both one offset finer — the first-order way of saying
    its label order leaves one order of margin.
    """
    level_of = {h: r for r, h in table.chain.items()}
    empty = oracle.empty()
    shapes: dict[Handle, tuple[int, int]] = {}
    by_shape: dict[tuple[int, int], list[Handle]] = {}
    for h in oracle.elements():
        if h == empty:
            continue
        tgt, src = target(oracle, h), source(oracle, h)
        if tgt not in level_of or src not in level_of:
            continue
        shapes[h] = (level_of[tgt], level_of[src])
        by_shape.setdefault(shapes[h], []).append(h)
    safe_bound = table.level_bound - 1
    out = set()
    for h, (t, s) in shapes.items():
        if abs(t) > safe_bound or abs(s) > safe_bound:
            continue
        finer = by_shape.get((t + 1, s + 1), [])
        if any(is_subset(oracle, h2, h) for h2 in finer):
            out.add(h)
    return out


def verify_iso(
    table: IsoTable,
    source_window: MeetGroupoidOracle,
    oracle: MeetGroupoidOracle,
    max_problems: int = 20,
) -> IsoReport:
    """Replay every operation through the table and compare both sides.

    Checks: totality on the canonical window, injectivity, surjectivity onto
    the oracle's handles, and preservation of product (including undefined
    and out-of-window cases), inverse, meet, and the index function.
    """
    report = IsoReport()
    win_elems = [a for a in source_window.elements() if a != source_window.empty()]
    phi = dict(table.mapping)

    missing = [a for a in win_elems if a not in phi]
    if missing:
        report.problems.append(("total", missing[0], None, None, "unmapped"))
        return report
    if len(set(phi.values())) != len(phi):
        seen: dict = {}
        for a, h in phi.items():
            if h in seen:
                report.problems.append(("injective", seen[h], a, h, "collision"))
                break
            seen[h] = a
    if set(phi.values()) != _expected_safe_image(oracle, table):
        report.problems.append(
            ("surjective", None, None, None, "image differs from safe-window handles")
        )
    if report.problems:
        return report

    phi[source_window.empty()] = oracle.empty()

    def fail(kind, a, b, got, want):
        if len(report.problems) < max_problems:
            report.problems.append((kind, a, b, got, want))

    for a in win_elems:
        report.checked += 1
        if phi[source_window.inv(a)] != oracle.inv(phi[a]):
            fail("inv", a, None, oracle.inv(phi[a]), phi[source_window.inv(a)])
    for a in win_elems:
        for b in win_elems:
            report.checked += 1
            w = _window_prod(source_window, a, b)
            o = _window_prod(oracle, phi[a], phi[b])
            if w is _OVERFLOW or o is _OVERFLOW:
                if w is not o:
                    fail("prod-overflow", a, b, o, w)
                continue
            if (w is None) != (o is None):
                fail("prod-defined", a, b, o, w)
            elif w is not None and phi[w] != o:
                fail("prod", a, b, o, phi[w])
            m = oracle.meet(phi[a], phi[b])
            if phi[source_window.meet(a, b)] != m:
                fail("meet", a, b, m, phi[source_window.meet(a, b)])
    subs = [u for u in win_elems if source_window.prod(u, u) == u]
    for u in subs:
        for v in subs:
            report.checked += 1
            try:
                got = oracle.index(phi[u], phi[v])
            except (DomainError, ValueError):
                got = None
            if source_window.index(u, v) != got:
                fail("index", u, v, got, source_window.index(u, v))
    return report
