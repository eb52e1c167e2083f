"""Concrete coset meet groupoids for the p-adic line and its scaling extension.

Two finite windows of compact open cosets are provided, both implementing the
``MeetGroupoidOracle`` interface:

* :class:`QpWindow` -- cosets ``D(r, a)`` of the subgroups ``U_r = p^r Z_p``
  inside ``Q_p``, labelled by Prufer elements ``a`` (rationals ``k / p^m``
  taken mod 1).  ``D(r, 0) = U_r`` and ``D(r, a)`` is the preimage of ``a``
  under the projection ``x -> x / p^r mod 1``.
* :class:`ZQpWindow` -- cosets ``E(z, r, a) = g^z D(r, a)`` in the semidirect
  product ``Z lt|x Q_p``, where the generator ``g`` acts by multiplication by
  ``p`` (so ``g^-1 x g = p x``).

Group elements are exact: plain :class:`fractions.Fraction` values for the
p-adic line (restricted to ``Z[1/p]``), pairs ``(zpow, Fraction)`` for the
extension.  All label arithmetic is exact rational arithmetic; no floats.

Window bounds: levels live in ``[center-R, center+R]`` and the extension
additionally keeps ``|z| <= Z`` and the inverse level ``r - z`` inside the
level range, so the element set is closed under inversion and meets.
Operations whose true result lies outside the window raise
:class:`~tdlc.errors.WindowOverflow`; products that are undefined in the
groupoid itself (mismatched source/target) raise
:class:`~tdlc.errors.Undefined` from the checked ``d_*`` / ``e_*`` methods and
return ``None`` from the oracle-interface ``prod``.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ParseError, Undefined, WindowOverflow
from .meet_groupoid import MeetGroupoidOracle

__all__ = [
    "PruferLabel",
    "prufer_label",
    "prufer_add",
    "prufer_neg",
    "prufer_mul_p_power",
    "prufer_unit_mul",
    "prufer_order_exp",
    "prufer_project",
    "QpCoset",
    "ZQpCoset",
    "Empty",
    "EMPTY",
    "QpWindow",
    "ZQpWindow",
    "scramble",
    "ScrambledOracle",
    "parse_coset_literal",
    "format_coset",
]


# ---------------------------------------------------------------------------
# Prufer labels: rationals k/p^m taken mod 1, i.e. the p-power torsion of Q/Z.

PruferLabel = Fraction


def _is_p_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def prufer_label(p: int, value: Fraction | int | str) -> PruferLabel:
    """Normalise ``value`` to a label in ``[0, 1)`` with p-power denominator."""
    a = Fraction(value) % 1
    if not _is_p_power(a.denominator, p):
        raise ValueError(f"denominator of {a} is not a power of {p}")
    return a


def prufer_add(a: PruferLabel, b: PruferLabel) -> PruferLabel:
    return (a + b) % 1


def prufer_neg(a: PruferLabel) -> PruferLabel:
    return (-a) % 1


def prufer_mul_p_power(a: PruferLabel, j: int, p: int) -> PruferLabel:
    """Multiply by ``p**j`` inside Q/Z (j may be negative)."""
    return (a * Fraction(p) ** j) % 1


def prufer_unit_mul(a: PruferLabel, unit: int, p: int) -> PruferLabel:
    """Multiply by an integer unit coprime to p (an automorphism of the labels)."""
    if math.gcd(unit, p) != 1:
        raise ValueError(f"unit {unit} is not coprime to {p}")
    return (a * unit) % 1


def prufer_order_exp(a: PruferLabel, p: int) -> int:
    """Exponent m with order(a) = p^m."""
    m = 0
    d = a.denominator
    while d % p == 0:
        d //= p
        m += 1
    if d != 1:
        raise ValueError(f"denominator of {a} is not a power of {p}")
    return m


def prufer_project(p: int, r: int, x: Fraction | int) -> PruferLabel:
    """Projection of ``x in Z[1/p]`` to the label of the ``U_r``-coset containing it.

    ``x`` and ``y`` land in the same coset of ``U_r = p^r Z_p`` exactly when
    ``(x - y) / p^r`` is a p-adic integer, so the label is ``x / p^r mod 1``
    (discarding the prime-to-p part of the denominator, which is trivial for
    Z[1/p] inputs).
    """
    x = Fraction(x)
    if not _is_p_power(x.denominator, p):
        raise ValueError(f"{x} is not in Z[1/{p}]")
    return (x * Fraction(p) ** (-r)) % 1


# ---------------------------------------------------------------------------
# Coset handles.


class Empty:
    """The empty coset (bottom of the meet semilattice)."""

    _instance: "Empty | None" = None

    def __new__(cls) -> "Empty":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return "Empty"


EMPTY = Empty()


@dataclass(frozen=True, order=True)
class QpCoset:
    """Nonempty coset ``D(level, label)`` of ``U_level`` in ``Q_p``."""

    level: int
    label: PruferLabel

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"D[r={self.level},a={self.label}]"


@dataclass(frozen=True, order=True)
class ZQpCoset:
    """Nonempty coset ``E(zpow, level, label) = g^zpow D(level, label)``."""

    zpow: int
    level: int
    label: PruferLabel

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"E[z={self.zpow},r={self.level},a={self.label}]"


QpHandle = QpCoset | Empty
ZQpHandle = ZQpCoset | Empty


# ---------------------------------------------------------------------------
# The p-adic line window.


class QpWindow(MeetGroupoidOracle):
    """Finite window of cosets ``D(r, a)`` with ``|r - center| <= level_bound``
    and ``order(a) <= p^label_exp``."""

    def __init__(
        self,
        p: int,
        level_bound: int = 2,
        label_exp: int = 2,
        level_center: int = 0,
    ) -> None:
        if p < 2:
            raise ValueError("p must be at least 2")
        if level_bound < 1 or label_exp < 1:
            raise ValueError("level_bound and label_exp must be at least 1")
        self.p = p
        self.level_bound = level_bound
        self.label_exp = label_exp
        self.level_center = level_center
        self._labels = [Fraction(k, p**label_exp) for k in range(p**label_exp)]
        self._elements: list[QpHandle] = [EMPTY]
        for r in self.levels():
            for a in self._labels:
                self._elements.append(QpCoset(r, a))
        self._element_set = set(self._elements[1:])

    def levels(self) -> range:
        c, b = self.level_center, self.level_bound
        return range(c - b, c + b + 1)

    def labels(self) -> Sequence[PruferLabel]:
        return list(self._labels)

    def subgroup(self, r: int) -> QpCoset:
        return self._require(QpCoset(r, Fraction(0)))

    def _require(self, a: QpHandle) -> QpHandle:
        if a is EMPTY:
            return a
        if a not in self._element_set:
            raise WindowOverflow(f"{a!r} is outside the window")
        return a

    def _in_window(self, a: QpCoset) -> bool:
        return a in self._element_set

    # -- oracle interface ---------------------------------------------------

    def elements(self) -> Sequence[QpHandle]:
        return list(self._elements)

    def empty(self) -> QpHandle:
        return EMPTY

    def prod(self, a: QpHandle, b: QpHandle):
        try:
            return self.d_prod(a, b)
        except Undefined:
            return None

    def inv(self, a: QpHandle) -> QpHandle:
        return self.d_inv(a)

    def meet(self, a: QpHandle, b: QpHandle) -> QpHandle:
        return self.d_meet(a, b)

    def index(self, u: QpHandle, v: QpHandle) -> int:
        u, v = self._require(u), self._require(v)
        for x in (u, v):
            if x is EMPTY or x.label != 0:
                raise ValueError(f"{x!r} is not a subgroup in the window")
        common = max(u.level, v.level)
        return self.p ** (common - u.level)

    def boundary_flag(self, a: QpHandle) -> bool:
        if a is EMPTY:
            return False
        return abs(a.level - self.level_center) == self.level_bound

    # -- checked operations -------------------------------------------------

    def d_prod(self, a: QpHandle, b: QpHandle) -> QpHandle:
        """Product of a left coset and a right coset of the same subgroup:
        defined iff the levels agree, in which case labels add."""
        a, b = self._require(a), self._require(b)
        if a is EMPTY and b is EMPTY:
            return EMPTY
        if a is EMPTY or b is EMPTY:
            raise Undefined("product of empty with a nonempty coset is undefined")
        if a.level != b.level:
            raise Undefined(f"levels {a.level} and {b.level} differ")
        return QpCoset(a.level, prufer_add(a.label, b.label))

    def d_inv(self, a: QpHandle) -> QpHandle:
        a = self._require(a)
        if a is EMPTY:
            return EMPTY
        return QpCoset(a.level, prufer_neg(a.label))

    def d_subset(self, a: QpHandle, b: QpHandle) -> bool:
        """``D(r,a) <= D(s,b)`` iff ``r >= s`` and ``p^(r-s) a = b``."""
        a, b = self._require(a), self._require(b)
        if a is EMPTY:
            return True
        if b is EMPTY:
            return False
        if a.level < b.level:
            return False
        return prufer_mul_p_power(a.label, a.level - b.level, self.p) == b.label

    def d_meet(self, a: QpHandle, b: QpHandle) -> QpHandle:
        a, b = self._require(a), self._require(b)
        if a is EMPTY or b is EMPTY:
            return EMPTY
        fine, coarse = (a, b) if a.level >= b.level else (b, a)
        if self.d_subset(fine, coarse):
            return fine
        return EMPTY

    # -- geometry -----------------------------------------------------------

    def measure(self, a: QpHandle) -> Fraction:
        """Haar measure normalised so that ``mu(U_0) = 1``: ``mu(D(r,a)) = p^-r``."""
        a = self._require(a)
        if a is EMPTY:
            return Fraction(0)
        return Fraction(self.p) ** (-a.level)

    def shift(self, a: QpHandle) -> QpHandle:
        """The scaling automorphism ``x -> p x``, sending ``D(r,a)`` to ``D(r+1,a)``."""
        a = self._require(a)
        if a is EMPTY:
            return EMPTY
        out = QpCoset(a.level + 1, a.label)
        if not self._in_window(out):
            raise WindowOverflow(f"shift of {a!r} leaves the window")
        return out

    def act_left(self, g: Fraction | int, a: QpHandle) -> QpHandle:
        """Translate by a group element: ``g + D(r,a) = D(r, a + proj_r(g))``."""
        a = self._require(a)
        if a is EMPTY:
            return EMPTY
        out = QpCoset(a.level, prufer_add(a.label, prufer_project(self.p, a.level, g)))
        if not self._in_window(out):
            raise WindowOverflow(
                f"translate of {a!r} by {g!r} needs a finer label than the window holds"
            )
        return out

    def act_right(self, g: Fraction | int, a: QpHandle) -> QpHandle:
        """Right translation; the dual of left translation by the inverse.

        For this abelian group it coincides with :meth:`act_left`, but it is
        computed through the duality ``A.g = (g^-1 . A^-1)^-1`` so the two
        routes stay independent.
        """
        a = self._require(a)
        if a is EMPTY:
            return EMPTY
        return self.d_inv(self.act_left(-Fraction(g), self.d_inv(a)))


# ---------------------------------------------------------------------------
# The scaling-extension window.


class ZQpWindow(MeetGroupoidOracle):
    """Finite window of cosets ``E(z, r, a) = g^z D(r, a)`` in ``Z lt|x Q_p``.

    Elements keep ``|z| <= zpow_bound`` and both the level ``r`` and the
    inverse level ``r - z`` within ``level_bound`` of the level center, so the
    set is closed under inversion and meets; products escape only through the
    z-cap.  Exact group elements are pairs ``(z, q)`` with ``q`` in ``Z[1/p]``
    and the law ``(z1, q1) * (z2, q2) = (z1 + z2, p^z2 q1 + q2)``.
    """

    def __init__(
        self,
        p: int,
        level_bound: int = 2,
        label_exp: int = 2,
        zpow_bound: int = 2,
        level_center: int = 0,
    ) -> None:
        if p < 2:
            raise ValueError("p must be at least 2")
        if level_bound < 1 or label_exp < 1 or zpow_bound < 1:
            raise ValueError("window bounds must be at least 1")
        self.p = p
        self.level_bound = level_bound
        self.label_exp = label_exp
        self.zpow_bound = zpow_bound
        self.level_center = level_center
        self._labels = [Fraction(k, p**label_exp) for k in range(p**label_exp)]
        self._elements: list[ZQpHandle] = [EMPTY]
        for z in range(-zpow_bound, zpow_bound + 1):
            for r in self._level_range():
                if abs(r - z - level_center) <= level_bound:
                    for a in self._labels:
                        self._elements.append(ZQpCoset(z, r, a))
        self._element_set = set(self._elements[1:])

    def _level_range(self) -> range:
        c, b = self.level_center, self.level_bound
        return range(c - b, c + b + 1)

    def labels(self) -> Sequence[PruferLabel]:
        return list(self._labels)

    def subgroup(self, r: int) -> ZQpCoset:
        return self._require(ZQpCoset(0, r, Fraction(0)))

    def subgroups(self) -> list[ZQpCoset]:
        """The window subgroups ``U_r``, center outward.

        This enumeration order makes the prefix minimisation of
        :meth:`scale_upper_approx` total for every window element whenever
        ``zpow_bound <= level_bound``: conjugating the central subgroup moves
        its level by at most the z-cap, which then stays in range.
        """
        c, b = self.level_center, self.level_bound
        offsets = [0]
        for k in range(1, b + 1):
            offsets.extend([-k, k])
        return [self.subgroup(c + o) for o in offsets]

    def _require(self, a: ZQpHandle) -> ZQpHandle:
        if a is EMPTY:
            return a
        if a not in self._element_set:
            raise WindowOverflow(f"{a!r} is outside the window")
        return a

    def _fits(self, z: int, r: int) -> bool:
        return (
            abs(z) <= self.zpow_bound
            and abs(r - self.level_center) <= self.level_bound
            and abs(r - z - self.level_center) <= self.level_bound
        )

    # -- oracle interface ---------------------------------------------------

    def elements(self) -> Sequence[ZQpHandle]:
        return list(self._elements)

    def empty(self) -> ZQpHandle:
        return EMPTY

    def prod(self, a: ZQpHandle, b: ZQpHandle):
        try:
            return self.e_prod(a, b)
        except Undefined:
            return None

    def inv(self, a: ZQpHandle) -> ZQpHandle:
        return self.e_inv(a)

    def meet(self, a: ZQpHandle, b: ZQpHandle) -> ZQpHandle:
        return self.e_meet(a, b)

    def index(self, u: ZQpHandle, v: ZQpHandle) -> int:
        u, v = self._require(u), self._require(v)
        for x in (u, v):
            if x is EMPTY or x.zpow != 0 or x.label != 0:
                raise ValueError(f"{x!r} is not a subgroup in the window")
        common = max(u.level, v.level)
        return self.p ** (common - u.level)

    def boundary_flag(self, a: ZQpHandle) -> bool:
        if a is EMPTY:
            return False
        return (
            abs(a.zpow) == self.zpow_bound
            or abs(a.level - self.level_center) == self.level_bound
            or abs(a.level - a.zpow - self.level_center) == self.level_bound
        )

    # -- checked operations -------------------------------------------------

    def e_prod(self, a: ZQpHandle, b: ZQpHandle) -> ZQpHandle:
        """``g^v D(r,a) . g^w D(s,b)`` is defined iff ``r = s - w`` (the target
        subgroup of the left factor equals the source subgroup of the right
        factor) and then equals ``g^(v+w) D(s, a+b)``."""
        a, b = self._require(a), self._require(b)
        if a is EMPTY and b is EMPTY:
            return EMPTY
        if a is EMPTY or b is EMPTY:
            raise Undefined("product of empty with a nonempty coset is undefined")
        if a.level != b.level - b.zpow:
            raise Undefined(
                f"target level {a.level} does not match source level {b.level - b.zpow}"
            )
        z = a.zpow + b.zpow
        out = ZQpCoset(z, b.level, prufer_add(a.label, b.label))
        if not self._fits(z, b.level):
            raise WindowOverflow(f"product of {a!r} and {b!r} leaves the window")
        return out

    def e_inv(self, a: ZQpHandle) -> ZQpHandle:
        """``(g^z D(r,a))^-1 = g^-z D(r-z, -a)``."""
        a = self._require(a)
        if a is EMPTY:
            return EMPTY
        return ZQpCoset(-a.zpow, a.level - a.zpow, prufer_neg(a.label))

    def e_subset(self, a: ZQpHandle, b: ZQpHandle) -> bool:
        """Cosets with different z-parts are disjoint; with equal z-parts the
        containment is the level/label rule of the p-adic factor."""
        a, b = self._require(a), self._require(b)
        if a is EMPTY:
            return True
        if b is EMPTY:
            return False
        if a.zpow != b.zpow:
            return False
        if a.level < b.level:
            return False
        return prufer_mul_p_power(a.label, a.level - b.level, self.p) == b.label

    def e_meet(self, a: ZQpHandle, b: ZQpHandle) -> ZQpHandle:
        a, b = self._require(a), self._require(b)
        if a is EMPTY or b is EMPTY:
            return EMPTY
        if a.zpow != b.zpow:
            return EMPTY
        fine, coarse = (a, b) if a.level >= b.level else (b, a)
        if self.e_subset(fine, coarse):
            return fine
        return EMPTY

    # -- geometry -----------------------------------------------------------

    def measure(self, a: ZQpHandle) -> Fraction:
        """Left Haar measure with ``mu(U_0) = 1``: ``mu(g^z D(r,a)) = p^-r``."""
        a = self._require(a)
        if a is EMPTY:
            return Fraction(0)
        return Fraction(self.p) ** (-a.level)

    def act_left(self, g: tuple[int, Fraction | int], a: ZQpHandle) -> ZQpHandle:
        """Translate by ``g = (z, q)``: commuting ``q`` past ``g^w`` scales it
        by ``p^w``, so ``(z,q) . g^w D(r,b) = g^(z+w) D(r, b + proj_r(p^w q))``."""
        a = self._require(a)
        if a is EMPTY:
            return EMPTY
        z, q = g
        q = Fraction(q)
        w, r = a.zpow, a.level
        shifted = q * Fraction(self.p) ** w
        out = ZQpCoset(z + w, r, prufer_add(a.label, prufer_project(self.p, r, shifted)))
        if out not in self._element_set:
            raise WindowOverflow(f"translate of {a!r} by {g!r} leaves the window")
        return out

    def act_right(self, g: tuple[int, Fraction | int], a: ZQpHandle) -> ZQpHandle:
        """Right translation via the duality ``A.g = (g^-1 . A^-1)^-1``."""
        a = self._require(a)
        if a is EMPTY:
            return EMPTY
        return self.e_inv(self.act_left(group_inv(self.p, g), self.e_inv(a)))

    # -- scaling data -------------------------------------------------------

    def modular(self, a: ZQpHandle) -> Fraction:
        """Modular function value, constant on each coset:
        ``Delta(g^z D(r,a)) = mu(U_r) / mu(U_(r-z)) = p^-z``."""
        a = self._require(a)
        if a is EMPTY:
            raise ValueError("the empty coset carries no modular value")
        return Fraction(self.p) ** (-a.zpow)

    def conj_subgroup(self, a: ZQpHandle, u: ZQpHandle) -> ZQpHandle:
        """``x^-1 U_s x`` for any ``x`` in the coset ``a`` (depends only on the
        z-part: conjugation sends ``U_s`` to ``U_(s+z)``)."""
        a, u = self._require(a), self._require(u)
        if a is EMPTY:
            raise ValueError("cannot conjugate by the empty coset")
        if u is EMPTY or u.zpow != 0 or u.label != 0:
            raise ValueError(f"{u!r} is not a subgroup in the window")
        out = ZQpCoset(0, u.level + a.zpow, Fraction(0))
        if not self._fits(0, out.level):
            raise WindowOverflow(f"conjugate of {u!r} by {a!r} leaves the window")
        return out

    def m_value(self, a: ZQpHandle, u: ZQpHandle) -> int:
        """Displacement index ``|U^x : U^x meet U|`` for ``x`` in the coset ``a``."""
        return self.index(self.conj_subgroup(a, u), u)

    def scale(self, a: ZQpHandle) -> int:
        """Minimum displacement index over the window subgroups.

        Every subgroup whose conjugate stays in the window contributes; the
        minimum is attained because the displacement depends only on the
        z-part here (it equals ``p^max(0, -z)``), and at least one subgroup
        always remains in range.
        """
        a = self._require(a)
        if a is EMPTY:
            raise ValueError("the empty coset has no scale")
        best: int | None = None
        for u in self.subgroups():
            try:
                m = self.m_value(a, u)
            except WindowOverflow:
                continue
            if best is None or m < best:
                best = m
        if best is None:
            raise WindowOverflow(f"no window subgroup admits conjugation by {a!r}")
        return best

    def scale_upper_approx(self, a: ZQpHandle, t: int) -> int:
        """Minimum displacement index over the first ``t`` window subgroups
        (coarsest first); non-increasing in ``t`` and equal to :meth:`scale`
        once every subgroup has been inspected."""
        a = self._require(a)
        if a is EMPTY:
            raise ValueError("the empty coset has no scale")
        if t < 1:
            raise ValueError("t must be at least 1")
        best: int | None = None
        for u in self.subgroups()[:t]:
            try:
                m = self.m_value(a, u)
            except WindowOverflow:
                continue
            if best is None or m < best:
                best = m
        if best is None:
            raise WindowOverflow(
                f"none of the first {t} subgroups admits conjugation by {a!r}"
            )
        return best


# ---------------------------------------------------------------------------
# Exact group elements of the extension.


def group_mul(
    p: int, x: tuple[int, Fraction | int], y: tuple[int, Fraction | int]
) -> tuple[int, Fraction]:
    """Semidirect law ``(z1, q1) * (z2, q2) = (z1 + z2, p^z2 q1 + q2)``."""
    z1, q1 = x
    z2, q2 = y
    return (z1 + z2, Fraction(q1) * Fraction(p) ** z2 + Fraction(q2))


def group_inv(p: int, x: tuple[int, Fraction | int]) -> tuple[int, Fraction]:
    z, q = x
    return (-z, -Fraction(q) * Fraction(p) ** (-z))


# ---------------------------------------------------------------------------
# Scrambled oracles.


class ScrambledOracle(MeetGroupoidOracle):
    """A window hidden behind a seeded bijection onto integer handles.

    Structurally isomorphic to the underlying window (optionally twisted by a
    level shift and a unit multiplication on labels), but exposes nothing of
    the coset coordinates: handles are ``0 .. n-1`` and every operation is
    relayed through the secret bijection.
    """

    def __init__(self, base: MeetGroupoidOracle, seed: int) -> None:
        self._base = base
        order = list(base.elements())
        rng = random.Random(seed)
        rng.shuffle(order)
        self._to_base = order
        self._from_base = {h: i for i, h in enumerate(order)}
        self._empty = self._from_base[base.empty()]

    def elements(self) -> Sequence[int]:
        return list(range(len(self._to_base)))

    def empty(self) -> int:
        return self._empty

    def prod(self, a: int, b: int):
        out = self._base.prod(self._to_base[a], self._to_base[b])
        return None if out is None else self._from_base[out]

    def inv(self, a: int) -> int:
        return self._from_base[self._base.inv(self._to_base[a])]

    def meet(self, a: int, b: int) -> int:
        return self._from_base[self._base.meet(self._to_base[a], self._to_base[b])]

    def index(self, u: int, v: int) -> int:
        return self._base.index(self._to_base[u], self._to_base[v])

    def boundary_flag(self, a: int) -> bool:
        return self._base.boundary_flag(self._to_base[a])

    def reveal(self, a: int):
        """Expose the hidden coset behind a handle (test/debug use only)."""
        return self._to_base[a]


class _UnitTwisted(MeetGroupoidOracle):
    """View of a window with every Prufer label multiplied by a fixed unit."""

    def __init__(self, base: QpWindow | ZQpWindow, unit: int) -> None:
        if math.gcd(unit, base.p) != 1:
            raise ValueError(f"unit {unit} is not coprime to {base.p}")
        self._base = base
        self._unit = unit

    def _twist(self, a):
        if a is EMPTY:
            return a
        if isinstance(a, QpCoset):
            return QpCoset(a.level, prufer_unit_mul(a.label, self._unit, self._base.p))
        return ZQpCoset(
            a.zpow, a.level, prufer_unit_mul(a.label, self._unit, self._base.p)
        )

    def elements(self) -> Sequence:
        return [self._twist(a) for a in self._base.elements()]

    def empty(self):
        return EMPTY

    def prod(self, a, b):
        # The label twist is an automorphism (labels only ever add), so the
        # twisted product of twisted handles is the twist of the base product.
        return self._base.prod(a, b)

    def inv(self, a):
        return self._base.inv(a)

    def meet(self, a, b):
        return self._base.meet(a, b)

    def index(self, u, v) -> int:
        return self._base.index(u, v)

    def boundary_flag(self, a) -> bool:
        return self._base.boundary_flag(a)


def scramble(
    window: QpWindow | ZQpWindow,
    seed: int,
    shift_power: int = 0,
    unit: int = 1,
) -> ScrambledOracle:
    """Produce a seeded opaque-handle oracle isomorphic to ``window``.

    ``shift_power`` recentres the level range (composing the hidden
    isomorphism with a power of the scaling map); ``unit`` multiplies every
    label by an integer coprime to ``p``.  Either twist changes which concrete
    coset hides behind each handle without changing the structure.
    """
    if math.gcd(unit, window.p) != 1:
        raise ValueError(f"unit {unit} is not coprime to {window.p}")
    base: MeetGroupoidOracle
    if isinstance(window, QpWindow):
        base = QpWindow(
            window.p,
            window.level_bound,
            window.label_exp,
            level_center=window.level_center + shift_power,
        )
    elif isinstance(window, ZQpWindow):
        base = ZQpWindow(
            window.p,
            window.level_bound,
            window.label_exp,
            window.zpow_bound,
            level_center=window.level_center + shift_power,
        )
    else:  # pragma: no cover - defensive
        raise TypeError(f"cannot scramble {type(window).__name__}")
    if unit != 1:
        base = _UnitTwisted(base, unit)
    return ScrambledOracle(base, seed)


# ---------------------------------------------------------------------------
# Literals.

_D_RE = re.compile(r"^D\[r=(-?\d+),a=(-?\d+(?:/\d+)?)\]$")
_E_RE = re.compile(r"^E\[z=(-?\d+),r=(-?\d+),a=(-?\d+(?:/\d+)?)\]$")


def parse_coset_literal(text: str) -> QpCoset | ZQpCoset | Empty:
    """Parse ``D[r=1,a=1/3]`` / ``E[z=1,r=0,a=0]`` / ``Empty`` literals."""
    s = text.strip()
    if s == "Empty":
        return EMPTY
    m = _D_RE.match(s)
    if m:
        return QpCoset(int(m.group(1)), Fraction(m.group(2)) % 1)
    m = _E_RE.match(s)
    if m:
        return ZQpCoset(int(m.group(1)), int(m.group(2)), Fraction(m.group(3)) % 1)
    raise ParseError(f"not a coset literal: {text!r}", position=0)


def format_coset(a: QpCoset | ZQpCoset | Empty) -> str:
    if a is EMPTY or isinstance(a, Empty):
        return "Empty"
    if isinstance(a, QpCoset):
        return f"D[r={a.level},a={a.label}]"
    if isinstance(a, ZQpCoset):
        return f"E[z={a.zpow},r={a.level},a={a.label}]"
    raise TypeError(f"not a coset handle: {a!r}")
