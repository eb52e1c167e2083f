"""Computably branching trees and the algebra of finite cone codes.

A tree here is a decidable set of finite natural-number strings, closed under
prefix, with no leaves, and with all branching below the root bounded by a
computable function of the first entry.  Compact open subsets of the boundary
are coded by finite sets of nonempty strings (each string denotes the cone of
branches through it); union, intersection, subset, and canonicalization on
these codes are all decidable and implemented exactly.

Strings also carry two numeric codings: a prime-power code for individual
strings and a sum-of-powers-of-two index for finite string sets, used when a
set of strings has to travel through a single natural number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .errors import InconsistentPair, NotInjective, TreeMismatch

NString = tuple[int, ...]


# ---------------------------------------------------------------------------
# trees


@dataclass(frozen=True)
class ClcTree:
    """A computably branching, prefix-closed, leafless tree of NStrings.

    ``contains`` decides membership.  ``branch_bound(first, i)`` bounds the
    entry at position ``i`` of any contained string whose first entry is
    ``first``; it makes the one-step successor relation of every nonempty
    string computable by finite search.  Branching at the root itself may be
    infinite, so successors of the empty string are not enumerable in
    general and are never needed by the code-set algebra.
    """

    name: str
    contains: Callable[[NString], bool]
    branch_bound: Callable[[int, int], int]

    def __post_init__(self):
        if not self.contains(()):
            raise ValueError("tree must contain the empty string")

    def successors(self, s: NString) -> list[NString]:
        """All one-entry extensions of a nonempty contained string."""
        if not s:
            raise ValueError("root branching may be infinite; refusing to enumerate")
        if not self.contains(s):
            return []
        bound = self.branch_bound(s[0], len(s))
        return [s + (e,) for e in range(bound + 1) if self.contains(s + (e,))]

    def extensions_to_length(self, s: NString, length: int) -> Iterator[NString]:
        """All contained extensions of nonempty ``s`` with the given length."""
        if len(s) >= length:
            if self.contains(s):
                yield s
            return
        for child in self.successors(s):
            yield from self.extensions_to_length(child, length)


# ---------------------------------------------------------------------------
# string and string-set codes


def _primes() -> Iterator[int]:
    """The primes in order, by incremental trial division."""
    found: list[int] = []
    n = 2
    while True:
        if all(n % q for q in found):
            found.append(n)
            yield n
        n += 1


def godel_code(s: NString) -> int:
    """Prime-power code of one string: the i-th entry raises the i-th prime
    to power entry+1.  The empty string codes to 1."""
    code = 1
    gen = _primes()
    for entry in s:
        code *= next(gen) ** (entry + 1)
    return code


def godel_decode(code: int) -> NString:
    """Inverse of :func:`godel_code`; rejects numbers not of the coded form."""
    if code < 1:
        raise ValueError(f"not a string code: {code}")
    entries: list[int] = []
    rest = code
    gen = _primes()
    while rest > 1:
        prime = next(gen)
        exponent = 0
        while rest % prime == 0:
            rest //= prime
            exponent += 1
        if exponent == 0:
            raise ValueError(f"not a string code: {code} (gap at prime {prime})")
        entries.append(exponent - 1)
    return tuple(entries)


def strong_index(strings: "CodeSet | Iterable[NString]") -> int:
    """Sum of ``2**godel_code(s)`` over a finite set of strings."""
    if isinstance(strings, CodeSet):
        strings = strings.strings
    return sum(2 ** godel_code(s) for s in set(strings))


def strong_index_decode(index: int) -> frozenset[NString]:
    """Inverse of :func:`strong_index`."""
    if index < 0:
        raise ValueError(f"not a set index: {index}")
    out = []
    bit = 0
    while index:
        if index & 1:
            out.append(godel_decode(bit))
        index >>= 1
        bit += 1
    return frozenset(out)


# ---------------------------------------------------------------------------
# pair decoding for the symmetric-group fragment


def cantor_pair(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


def cantor_unpair(e: int) -> tuple[int, int]:
    if e < 0:
        raise ValueError(f"not a pair code: {e}")
    w = 0
    while (w + 1) * (w + 2) // 2 <= e:
        w += 1
    y = e - w * (w + 1) // 2
    return w - y, y


def decode_pair_injection(s: NString) -> dict[int, int]:
    """Decode a string of pair codes into one injective partial map.

    Entry ``i`` decodes to a pair of slots; slot 0 means "undefined" and
    slot ``v+1`` means value ``v``.  The first slot gives a forward value
    ``fwd(i)``, the second a backward value ``bwd(i)``.  The two components
    must agree (``fwd(r) = s`` and ``bwd(s)`` both defined forces
    ``bwd(s) = r``, and symmetrically), and the merged map
    ``{r -> s : fwd(r) = s or bwd(s) = r}`` must be a function; otherwise
    :class:`InconsistentPair`.  If the merged map repeats a value,
    :class:`NotInjective`.
    """
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    for i, entry in enumerate(s):
        a, b = cantor_unpair(entry)
        if a > 0:
            fwd[i] = a - 1
        if b > 0:
            bwd[i] = b - 1

    for r, v in fwd.items():
        if v in bwd and bwd[v] != r:
            raise InconsistentPair(
                f"forward sends {r} to {v} but backward sends {v} to {bwd[v]}"
            )
    for t, r in bwd.items():
        if r in fwd and fwd[r] != t:
            raise InconsistentPair(
                f"backward sends {t} to {r} but forward sends {r} to {fwd[r]}"
            )

    merged: dict[int, int] = dict(fwd)
    for t, r in bwd.items():
        if r in merged and merged[r] != t:
            raise InconsistentPair(
                f"components jointly send {r} to both {merged[r]} and {t}"
            )
        merged[r] = t

    seen: dict[int, int] = {}
    for r, v in merged.items():
        if v in seen:
            raise NotInjective(f"both {seen[v]} and {r} map to {v}")
        seen[v] = r
    return merged


# ---------------------------------------------------------------------------
# cone codes


@dataclass(frozen=True)
class CodeSet:
    """A finite set of nonempty tree strings, read as a union of cones.

    ``canonical`` records that the set is an antichain under the prefix
    order containing no complete sibling family; :func:`minimal_code`
    produces the canonical form.
    """

    tree: ClcTree
    strings: frozenset[NString]
    canonical: bool = False

    def __post_init__(self):
        for s in self.strings:
            if not s:
                raise ValueError("code sets contain only nonempty strings")
            if not self.tree.contains(s):
                raise ValueError(f"string {s} not in tree {self.tree.name}")

    def is_empty(self) -> bool:
        return not self.strings


def code_set(tree: ClcTree, strings: Iterable[NString]) -> CodeSet:
    return CodeSet(tree, frozenset(tuple(s) for s in strings))


def _check_same_tree(u: CodeSet, w: CodeSet) -> None:
    if u.tree.name != w.tree.name:
        raise TreeMismatch(f"code sets over {u.tree.name} and {w.tree.name}")


def _is_prefix(a: NString, b: NString) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


def minimal_code(u: CodeSet) -> CodeSet:
    """Canonical form: drop strings with a proper prefix present, then
    collapse complete sibling families to their parent, to a fixpoint.

    Families whose parent is the root never collapse: the root itself is
    not an admissible code string, and root branching may be infinite.
    """
    strings = set(u.strings)
    changed = True
    while changed:
        changed = False
        pruned = {
            s
            for s in strings
            if not any(t != s and _is_prefix(t, s) for t in strings)
        }
        if pruned != strings:
            strings = pruned
            changed = True
        parents: dict[NString, set[NString]] = {}
        for s in strings:
            if len(s) >= 2:
                parents.setdefault(s[:-1], set()).add(s)
        for parent, children in parents.items():
            if children == set(u.tree.successors(parent)) and children:
                strings -= children
                strings.add(parent)
                changed = True
                break
    return CodeSet(u.tree, frozenset(strings), canonical=True)


def cone_union(u: CodeSet, w: CodeSet) -> CodeSet:
    """Union of the coded sets, canonicalized."""
    _check_same_tree(u, w)
    return minimal_code(CodeSet(u.tree, u.strings | w.strings))


def cone_intersect(u: CodeSet, w: CodeSet) -> CodeSet:
    """Intersection of the coded sets, canonicalized.

    Two cones meet exactly when one string is a prefix of the other, and
    then the intersection is the cone of the longer string.
    """
    _check_same_tree(u, w)
    out: set[NString] = set()
    for a in u.strings:
        for b in w.strings:
            if _is_prefix(a, b):
                out.add(b)
            elif _is_prefix(b, a):
                out.add(a)
    return minimal_code(CodeSet(u.tree, frozenset(out)))


def _covered(tree: ClcTree, s: NString, w: CodeSet, depth: int) -> bool:
    """Is the cone of ``s`` contained in the union coded by ``w``?

    Complete by expansion to ``depth``, which must be at least the longest
    string in ``w``: at that length, containment is a plain prefix check.
    """
    if any(_is_prefix(b, s) for b in w.strings):
        return True
    if len(s) >= depth:
        return False
    return all(_covered(tree, child, w, depth) for child in tree.successors(s))


def cone_subset(u: CodeSet, w: CodeSet) -> bool:
    """Decide containment of the coded sets."""
    _check_same_tree(u, w)
    if u.is_empty():
        return True
    depth = max((len(b) for b in w.strings), default=0)
    return all(_covered(u.tree, a, w, depth) for a in u.strings)


def cone_equal(u: CodeSet, w: CodeSet) -> bool:
    return cone_subset(u, w) and cone_subset(w, u)


# ---------------------------------------------------------------------------
# registry


def qp_tree(p: int) -> ClcTree:
    """Tree of p-adic digit expansions: a first entry giving the power of p
    in the leading term, then digits below p, with a nonzero digit first
    whenever the leading power is positive."""
    if p < 2:
        raise ValueError(f"need p >= 2, got {p}")

    def contains(s: NString) -> bool:
        if not s:
            return True
        if s[0] < 0:
            return False
        if any(not 0 <= d < p for d in s[1:]):
            return False
        if s[0] > 0 and len(s) >= 2 and s[1] == 0:
            return False
        return True

    def branch_bound(first: int, i: int) -> int:
        return first if i == 0 else p - 1

    return ClcTree(f"qp({p})", contains, branch_bound)


def tree_aut_td(d: int) -> ClcTree:
    """Tree of reduced color words over colors 1..d: vertices of the
    d-regular tree, coded by backtrack-free edge-color paths from a base
    vertex."""
    if d < 2:
        raise ValueError(f"need degree >= 2, got {d}")

    def contains(s: NString) -> bool:
        if any(not 1 <= c <= d for c in s):
            return False
        return all(s[i] != s[i + 1] for i in range(len(s) - 1))

    def branch_bound(first: int, i: int) -> int:
        return d

    return ClcTree(f"td({d})", contains, branch_bound)


def s_infinity_fragment(bound: int) -> ClcTree:
    """Tree of finite injections with values below ``bound``, given as
    forward/backward pairs: entry ``i`` is a pair code whose slots give the
    image and preimage of ``i`` (slot 0 for undefined, ``v+1`` for value
    ``v < bound``).  Contained strings are exactly the consistent injective
    ones; every string extends by the all-undefined entry, so the tree has
    no leaves."""
    if bound < 1:
        raise ValueError(f"need bound >= 1, got {bound}")
    max_entry = cantor_pair(bound, bound)

    def contains(s: NString) -> bool:
        if not s:
            return True
        for entry in s:
            if entry > max_entry:
                return False
            a, b = cantor_unpair(entry)
            if a > bound or b > bound:
                return False
        try:
            decode_pair_injection(s)
        except (InconsistentPair, NotInjective):
            return False
        return True

    def branch_bound(first: int, i: int) -> int:
        return max_entry

    return ClcTree(f"sym({bound})", contains, branch_bound)
