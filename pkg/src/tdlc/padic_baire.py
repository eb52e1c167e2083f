"""Exact p-adic numbers as digit streams over the expansion tree.

A number with absolute value ``p**h`` is coded by a branch of the expansion
tree for ``p``: a head ``h >= 0`` followed by base-p digits, denoting
``sum(d_i * p**(i - h))``.  Heads are natural, so numbers of small absolute
value carry head 0 and leading zero digits.  A positive head promises a
nonzero first digit.

Streams carry a provenance: ``exact`` streams are backed by a rational and
can produce every digit; ``transducer`` streams are produced by arithmetic
on parent streams and pull parent digits lazily; ``prefix`` streams hold
finitely many digits and raise :class:`PrecisionExhausted` beyond them.
Every arithmetic operation declares a modulus: how many input digits it
needs to deliver a requested number of output digits.

On top of scalar streams sit entrywise matrix arithmetic, adjugates, and a
budgeted semi-decision procedure for whether a partially specified 2x2
matrix can be completed to one of determinant 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Sequence

from .clc_tree import CodeSet, NString, qp_tree
from .errors import BudgetExceeded, ParseError, PrecisionExhausted

__all__ = [
    "PadicExact",
    "PadicStream",
    "UnaryStreamOp",
    "add_modulus",
    "add_stream",
    "adjugate_inverse",
    "decide_image_subset",
    "det_stream",
    "exact_stream",
    "mat_add",
    "mat_mul",
    "mat_neg",
    "mul_modulus",
    "mul_stream",
    "neg_modulus",
    "neg_op",
    "neg_stream",
    "padic_add",
    "padic_mul",
    "padic_neg",
    "parse_stream_literal",
    "prefix_stream",
    "sl_prune",
]


# ---------------------------------------------------------------------------
# exact rationals with p-adic structure


def _p_valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("zero has no valuation")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class PadicExact:
    """A rational in p-adic normal form ``p**(-power) * num / den`` with
    ``num`` and ``den`` coprime to each other and to ``p``.

    ``power`` is the exponent of the absolute value: ``|x| = p**power``.
    Zero is stored as ``power 0, num 0, den 1``.
    """

    p: int
    power: int
    num: int
    den: int = 1

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"need p >= 2, got {self.p}")
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        if self.num == 0:
            if self.power != 0 or self.den != 1:
                raise ValueError("zero must be stored as power 0, num 0, den 1")
        else:
            if gcd(self.num, self.den) != 1:
                raise ValueError("num and den must be coprime")
            if self.num % self.p == 0 or self.den % self.p == 0:
                raise ValueError("num and den must be coprime to p")

    @classmethod
    def from_fraction(cls, p: int, q: Fraction | int) -> "PadicExact":
        q = Fraction(q)
        if q == 0:
            return cls(p, 0, 0, 1)
        v = _p_valuation(q.numerator, p) - _p_valuation(q.denominator, p)
        unit = q / Fraction(p) ** v
        return cls(p, -v, unit.numerator, unit.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den) * Fraction(self.p) ** (-self.power)

    @property
    def head(self) -> int:
        return max(self.power, 0)

    def digit(self, i: int) -> int:
        """Digit ``i`` of the stream expansion (position ``i - head``)."""
        shift = self.head - self.power
        mod = self.p ** (i + 1)
        x = self.num * self.p**shift * pow(self.den, -1, mod) % mod
        return x // self.p**i

    def prefix_string(self, n: int) -> NString:
        if n < 1:
            raise ValueError("prefix strings include the head; need n >= 1")
        return (self.head,) + tuple(self.digit(i) for i in range(n - 1))

    def __add__(self, other: "PadicExact") -> "PadicExact":
        return PadicExact.from_fraction(self.p, self.value + other.value)

    def __mul__(self, other: "PadicExact") -> "PadicExact":
        return PadicExact.from_fraction(self.p, self.value * other.value)

    def __neg__(self) -> "PadicExact":
        return PadicExact.from_fraction(self.p, -self.value)


# ---------------------------------------------------------------------------
# streams


class PadicStream:
    """A head plus a lazily produced, memoized base-p digit sequence."""

    def __init__(
        self,
        p: int,
        head: int,
        digit_fn: Callable[[int], int],
        provenance: str,
    ):
        if head < 0:
            raise ValueError("heads are natural numbers")
        if provenance not in ("exact", "transducer", "prefix"):
            raise ValueError(f"unknown provenance {provenance!r}")
        self.p = p
        self.head = head
        self.provenance = provenance
        self._digit_fn = digit_fn
        self._cache: list[int] = []

    def digit(self, i: int) -> int:
        while len(self._cache) <= i:
            d = self._digit_fn(len(self._cache))
            if not 0 <= d < self.p:
                raise ValueError(f"digit {d} out of range for p={self.p}")
            self._cache.append(d)
        return self._cache[i]

    def int_prefix(self, k: int) -> int:
        """The integer ``sum(digit(i) * p**i for i < k)``."""
        return sum(self.digit(i) * self.p**i for i in range(k))

    def prefix_string(self, n: int) -> NString:
        """The length-n expansion-tree string ``(head, d_0, ..., d_{n-2})``."""
        if n < 1:
            raise ValueError("prefix strings include the head; need n >= 1")
        return (self.head,) + tuple(self.digit(i) for i in range(n - 1))

    def __repr__(self):
        try:
            digits = "".join(str(self.digit(i)) for i in range(6))
            tail = "..."
        except PrecisionExhausted:
            digits = "".join(str(d) for d in self._cache)
            tail = ""
        return f"PadicStream(p={self.p}, {self.head}:{digits}{tail})"


def exact_stream(x: PadicExact | Fraction | int, p: int | None = None) -> PadicStream:
    if not isinstance(x, PadicExact):
        if p is None:
            raise ValueError("p required when building from a bare rational")
        x = PadicExact.from_fraction(p, x)
    return PadicStream(x.p, x.head, x.digit, "exact")


def prefix_stream(p: int, head: int, digits: Sequence[int]) -> PadicStream:
    digits = tuple(digits)
    if head > 0 and (not digits or digits[0] == 0):
        raise ValueError("positive head requires a known nonzero first digit")
    if any(not 0 <= d < p for d in digits):
        raise ValueError(f"digits out of range for p={p}")

    def digit(i: int) -> int:
        if i < len(digits):
            return digits[i]
        raise PrecisionExhausted(
            f"prefix stream holds {len(digits)} digits; digit {i} requested"
        )

    return PadicStream(p, head, digit, "prefix")


def _check_same_p(x: PadicStream, y: PadicStream) -> int:
    if x.p != y.p:
        raise ValueError(f"mixed primes {x.p} and {y.p}")
    return x.p


# ---------------------------------------------------------------------------
# arithmetic transducers with declared moduli


def neg_modulus(k: int) -> int:
    """Input digits needed for k output digits of negation."""
    return k


def add_modulus(x: PadicStream, y: PadicStream, k: int) -> int:
    """Input digits needed from each operand for k output digits of a sum."""
    return k + max(x.head, y.head)


def mul_modulus(x: PadicStream, y: PadicStream, k: int) -> int:
    """Input digits needed from each operand for k output digits of a product."""
    return k + x.head + y.head


def neg_stream(x: PadicStream) -> PadicStream:
    p = x.p

    def digit(k: int) -> int:
        mod = p ** (k + 1)
        return (mod - x.int_prefix(k + 1)) % mod // p**k

    return PadicStream(p, x.head, digit, "transducer")


def add_stream(x: PadicStream, y: PadicStream) -> PadicStream:
    """Sum stream.  The head drops by the number of leading zero digits of
    the aligned digitwise sum, scanned no deeper than the larger head, so
    construction itself consumes up to ``max(head)`` digits of each operand.
    """
    p = _check_same_p(x, y)
    r = max(x.head, y.head)

    def aligned(s: PadicStream, i: int) -> int:
        j = i - (r - s.head)
        return s.digit(j) if j >= 0 else 0

    digits: list[int] = []
    carry = [0]

    def raw_digit(i: int) -> int:
        while len(digits) <= i:
            j = len(digits)
            total = aligned(x, j) + aligned(y, j) + carry[0]
            digits.append(total % p)
            carry[0] = total // p
        return digits[i]

    t = 0
    while t < r and raw_digit(t) == 0:
        t += 1

    return PadicStream(p, r - t, lambda i: raw_digit(i + t), "transducer")


def mul_stream(x: PadicStream, y: PadicStream) -> PadicStream:
    """Product stream.  The head drops by the number of leading zero digits
    of the digitwise product, scanned no deeper than the sum of the heads.
    """
    p = _check_same_p(x, y)
    h = x.head + y.head

    def raw_digit(k: int) -> int:
        mod = p ** (k + 1)
        return x.int_prefix(k + 1) * y.int_prefix(k + 1) % mod // p**k

    t = 0
    while t < h and raw_digit(t) == 0:
        t += 1

    return PadicStream(p, h - t, lambda i, t=t: raw_digit(i + t), "transducer")


def padic_neg(x: PadicStream) -> PadicStream:
    return neg_stream(x)


def padic_add(x: PadicStream, y: PadicStream, n: int) -> NString:
    """Length-n expansion-tree prefix of ``x + y``."""
    return add_stream(x, y).prefix_string(n)


def padic_mul(x: PadicStream, y: PadicStream, n: int) -> NString:
    """Length-n expansion-tree prefix of ``x * y``."""
    return mul_stream(x, y).prefix_string(n)


# ---------------------------------------------------------------------------
# image containment for unary transducers


@dataclass(frozen=True)
class UnaryStreamOp:
    """A unary stream operation with its digit modulus: ``modulus(k)`` input
    digits determine k output digits and the output head."""

    name: str
    apply: Callable[[PadicStream], PadicStream]
    modulus: Callable[[int], int]


neg_op = UnaryStreamOp("neg", neg_stream, neg_modulus)


def decide_image_subset(op: UnaryStreamOp, u: CodeSet, w: CodeSet) -> bool:
    """Decide whether ``op`` maps the set coded by ``u`` into the set coded
    by ``w``, both over the same expansion tree.

    Each code string of ``u`` is expanded to enough digits that the output
    prefix reaches the length of the longest string of ``w``; by the
    modulus contract that output prefix is shared by every branch through
    the expanded stem, so a prefix check against ``w`` decides containment.
    """
    if u.tree.name != w.tree.name:
        raise ValueError(f"code sets over {u.tree.name} and {w.tree.name}")
    if not u.strings:
        return True
    if not w.strings:
        return False
    p = _infer_p(u)
    out_len = max(len(b) for b in w.strings)
    need = 1 + op.modulus(out_len - 1)
    for s in u.strings:
        for stem in u.tree.extensions_to_length(s, max(need, len(s))):
            x = prefix_stream(p, stem[0], stem[1:])
            out = op.apply(x).prefix_string(out_len)
            if not any(out[: len(b)] == b for b in w.strings):
                return False
    return True


def _infer_p(u: CodeSet) -> int:
    name = u.tree.name
    if not (name.startswith("qp(") and name.endswith(")")):
        raise ValueError(f"not an expansion tree: {name}")
    return int(name[3:-1])


# ---------------------------------------------------------------------------
# matrices


Matrix = Sequence[Sequence[PadicStream]]


def mat_neg(m: Matrix) -> list[list[PadicStream]]:
    return [[neg_stream(e) for e in row] for row in m]


def mat_add(a: Matrix, b: Matrix) -> list[list[PadicStream]]:
    if len(a) != len(b) or any(len(ra) != len(rb) for ra, rb in zip(a, b)):
        raise ValueError("shape mismatch")
    return [
        [add_stream(ea, eb) for ea, eb in zip(ra, rb)] for ra, rb in zip(a, b)
    ]


def mat_mul(a: Matrix, b: Matrix) -> list[list[PadicStream]]:
    if not a or not b or len(a[0]) != len(b):
        raise ValueError("shape mismatch")
    out = []
    for i in range(len(a)):
        row = []
        for j in range(len(b[0])):
            acc = mul_stream(a[i][0], b[0][j])
            for k in range(1, len(b)):
                acc = add_stream(acc, mul_stream(a[i][k], b[k][j]))
            row.append(acc)
        out.append(row)
    return out


def det_stream(m: Matrix) -> PadicStream:
    """Determinant by cofactor expansion along the first row."""
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValueError("determinant needs a square matrix")
    if n == 1:
        return m[0][0]
    acc: PadicStream | None = None
    for j in range(n):
        minor = [
            [m[i][jj] for jj in range(n) if jj != j] for i in range(1, n)
        ]
        term = mul_stream(m[0][j], det_stream(minor))
        if j % 2 == 1:
            term = neg_stream(term)
        acc = term if acc is None else add_stream(acc, term)
    assert acc is not None
    return acc


def adjugate_inverse(m: Matrix) -> list[list[PadicStream]]:
    """The adjugate matrix: the inverse whenever the determinant is 1."""
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValueError("adjugate needs a square matrix")
    if n == 1:
        raise ValueError("adjugate of a 1x1 matrix is the scalar 1; not a stream op")
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = [
                [m[ii][jj] for jj in range(n) if jj != i]
                for ii in range(n)
                if ii != j
            ]
            cof = det_stream(minor)
            if (i + j) % 2 == 1:
                cof = neg_stream(cof)
            row.append(cof)
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# pruning the determinant-one matrix tree


def _interleave_components(s: NString, width: int = 4) -> list[NString]:
    comps: list[list[int]] = [[] for _ in range(width)]
    for j, entry in enumerate(s):
        comps[j % width].append(entry)
    return [tuple(c) for c in comps]


@dataclass(frozen=True)
class SlPruneResult:
    status: str  # "witness" or "refuted"
    witness: tuple[tuple[PadicExact, ...], ...] | None
    stage: int


def sl_prune(
    s: NString,
    p: int,
    budget: int = 20_000,
) -> SlPruneResult:
    """Semi-decide whether the cone of a partially specified 2x2 matrix
    contains a matrix of determinant 1.

    The matrix tree interleaves the four entry expansions: position ``j``
    of ``s`` belongs to entry ``j % 4`` (row-major a, b, c, d) at branch
    position ``j // 4``.  All four heads must be present.

    Stages alternate a witness search (rational completions of bounded
    height, solved exactly for the last entry) with a refutation check
    (every digit completion to the stage depth leaves the determinant
    visibly different from 1 at that depth).  ``budget`` counts elementary
    candidate evaluations; exhaustion raises :class:`BudgetExceeded` whose
    ``state`` records the next stage.
    """
    comps = _interleave_components(s)
    if any(not c for c in comps):
        raise ValueError("need all four entry heads: give at least 4 positions")
    tree = qp_tree(p)
    for c in comps:
        if not tree.contains(c):
            raise ValueError(f"component {c} is not an expansion-tree string")
    heads = [c[0] for c in comps]
    knowns = [c[1:] for c in comps]

    spent = [0]

    def charge(state: dict) -> None:
        spent[0] += 1
        if spent[0] > budget:
            raise BudgetExceeded(
                f"no verdict within budget {budget}", state=state
            )

    stage = 1
    while True:
        witness = _sl_witness_stage(p, heads, knowns, stage, charge)
        if witness is not None:
            return SlPruneResult("witness", witness, stage)
        if _sl_refute_stage(p, heads, knowns, stage, charge):
            return SlPruneResult("refuted", None, stage)
        stage += 1


def _matches(x: PadicExact, head: int, known: NString) -> bool:
    if x.head != head:
        return False
    return all(x.digit(i) == d for i, d in enumerate(known))


def _sl_witness_stage(
    p: int,
    heads: list[int],
    knowns: list[NString],
    stage: int,
    charge: Callable[[dict], None],
):
    """Try completions ``p**(-h) * (known + p**k * m)`` with ``|m| <= stage``
    for entries a, b, c; solve ``d = (1 + b c) / a`` exactly and check its
    expansion against the d prefix."""
    candidates: list[list[Fraction]] = []
    for h, known in zip(heads[:3], knowns[:3]):
        base = sum(d * p**i for i, d in enumerate(known))
        opts = []
        for m in range(-stage, stage + 1):
            val = Fraction(base + p ** len(known) * m, p**h)
            x = PadicExact.from_fraction(p, val)
            if _matches(x, h, known):
                opts.append(val)
        candidates.append(opts)
    h_d, known_d = heads[3], knowns[3]
    for a, b, c in itertools.product(*candidates):
        charge({"phase": "witness", "stage": stage})
        if a == 0:
            continue
        d = (1 + b * c) / a
        x = PadicExact.from_fraction(p, d)
        if _matches(x, h_d, known_d):
            return (
                (PadicExact.from_fraction(p, a), PadicExact.from_fraction(p, b)),
                (PadicExact.from_fraction(p, c), x),
            )
    return None


def _sl_refute_stage(
    p: int,
    heads: list[int],
    knowns: list[NString],
    stage: int,
    charge: Callable[[dict], None],
) -> bool:
    """Check whether every completion of the four entries to the stage depth
    keeps the determinant visibly different from 1 at that depth.  Scaling
    clears the heads: with ``M = max(ha+hd, hb+hc)`` the condition
    ``ad - bc = 1`` becomes an integer congruence mod ``p**depth`` after
    multiplying through by ``p**M``."""
    depth = max(len(k) for k in knowns) + min(stage, 4)
    m_scale = max(heads[0] + heads[3], heads[1] + heads[2])
    mod = p**depth
    completions = []
    for known in knowns:
        base = sum(d * p**i for i, d in enumerate(known))
        free = depth - len(known)
        if free <= 0:
            completions.append([base % mod])
        else:
            step = p ** len(known)
            completions.append(
                [(base + step * t) % mod for t in range(p**free)]
            )
    for xa, xb, xc, xd in itertools.product(*completions):
        charge({"phase": "refute", "stage": stage})
        lhs = (
            p ** (m_scale - heads[0] - heads[3]) * xa * xd
            - p ** (m_scale - heads[1] - heads[2]) * xb * xc
            - p**m_scale
        ) % mod
        if lhs == 0:
            return False
    return True


# ---------------------------------------------------------------------------
# literals


def parse_stream_literal(text: str, p: int | None = None) -> PadicStream:
    """Parse ``head:digits`` (prime taken from ``p``) or ``p:head:digits``.

    Literals denote exact rationals: the written digits, extended by zeros.
    """
    parts = text.split(":")
    if len(parts) == 2:
        if p is None:
            raise ParseError(f"no prime given for literal {text!r}")
        head_text, digit_text = parts
    elif len(parts) == 3:
        p_text, head_text, digit_text = parts
        try:
            p = int(p_text)
        except ValueError:
            raise ParseError(f"bad prime in literal {text!r}", 0) from None
    else:
        raise ParseError(f"expected head:digits or p:head:digits, got {text!r}")
    if p < 2 or p > 10:
        raise ParseError(f"literal digits need 2 <= p <= 10, got {p}")
    try:
        head = int(head_text)
    except ValueError:
        raise ParseError(f"bad head in literal {text!r}") from None
    if head < 0:
        raise ParseError(f"negative head in literal {text!r}")
    if not digit_text.isdigit() and digit_text != "":
        raise ParseError(f"bad digits in literal {text!r}")
    digits = [int(ch) for ch in digit_text]
    if any(d >= p for d in digits):
        raise ParseError(f"digit out of range for p={p} in literal {text!r}")
    if head > 0 and (not digits or digits[0] == 0):
        raise ParseError(f"positive head needs a nonzero first digit: {text!r}")
    value = sum(
        (d * Fraction(p) ** (i - head) for i, d in enumerate(digits)),
        start=Fraction(0),
    )
    return exact_stream(PadicExact.from_fraction(p, value))
