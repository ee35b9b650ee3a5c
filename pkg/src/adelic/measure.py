"""Exact local measures of valuation constraints and their Euler products.

A constraint describes a one-variable subset of a p-adic field through the
valuation v(x) and the condition ac(x) = 1 on the leading digit (the residue
of x times the uniformizer to the power -v(x)).  Its measure under the Haar
normalization mu(Z_p) = 1 decomposes over the shells v = k:

    mu(v = k)              = p^-k (1 - 1/p)
    mu(v = k and ac = 1)   = p^-k-1
    mu(v = k and ac != 1)  = p^-k (p - 2)/p

Within a shell the only distinction the language can draw is ac(x) = 1, so a
constraint's measure is a sum of shell terms.  Comparisons and congruences
make the shell truth pattern eventually periodic in k, which turns the sum
into a rational function of p, kept exact throughout.

Products over all primes are truncated at a bound P with a rigorous interval
for the tail, derived from degree comparison of the local factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .primes import primes_up_to

__all__ = [
    "VGe", "VLe", "VCong", "Ac1", "CNot", "CAnd", "COr",
    "LocalConstraint", "parse_constraint", "constraint_to_text",
    "RationalFunction", "MeasureValue", "INFINITE_MEASURE",
    "local_measure_symbolic", "local_measure_at_p", "zeta_factor_set",
    "EulerBracket", "adelic_measure", "euler_truncation", "FACTOR_CATALOG",
]


# --------------------------------------------------------------------------
# constraint language


@dataclass(frozen=True)
class VGe:
    """v(x) >= bound."""
    bound: int


@dataclass(frozen=True)
class VLe:
    """v(x) <= bound."""
    bound: int


@dataclass(frozen=True)
class VCong:
    """v(x) = residue (mod modulus)."""
    modulus: int
    residue: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        object.__setattr__(self, "residue", self.residue % self.modulus)


@dataclass(frozen=True)
class Ac1:
    """The leading digit equals 1: ac(x) = 1."""


@dataclass(frozen=True)
class CNot:
    body: "LocalConstraint"


@dataclass(frozen=True)
class CAnd:
    lhs: "LocalConstraint"
    rhs: "LocalConstraint"


@dataclass(frozen=True)
class COr:
    lhs: "LocalConstraint"
    rhs: "LocalConstraint"


LocalConstraint = Union[VGe, VLe, VCong, Ac1, CNot, CAnd, COr]


def constraint_to_text(c: LocalConstraint) -> str:
    if isinstance(c, VGe):
        return f"v>={c.bound}"
    if isinstance(c, VLe):
        return f"v<={c.bound}"
    if isinstance(c, VCong):
        return f"v%{c.modulus}=={c.residue}"
    if isinstance(c, Ac1):
        return "ac=1"
    if isinstance(c, CNot):
        return f"!({constraint_to_text(c.body)})"
    if isinstance(c, CAnd):
        return f"({constraint_to_text(c.lhs)} & {constraint_to_text(c.rhs)})"
    if isinstance(c, COr):
        return f"({constraint_to_text(c.lhs)} | {constraint_to_text(c.rhs)})"
    raise TypeError(f"not a constraint: {c!r}")


_TOKENS = ("<=", ">=", "==", "=", "%", "&", "|", "!", "(", ")", "v", "ac")


def _tokenize_constraint(text: str) -> List[str]:
    out: List[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        matched = False
        for tok in _TOKENS:
            if text.startswith(tok, i):
                # 'v' must not swallow the start of an identifier
                out.append(tok)
                i += len(tok)
                matched = True
                break
        if matched:
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < len(text)
                            and text[i + 1].isdigit()):
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            out.append(text[i:j])
            i = j
            continue
        raise ValueError(f"cannot read constraint at: {text[i:]!r}")
    return out


class _ConstraintParser:
    def __init__(self, tokens: List[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, want: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise ValueError(f"expected {want or 'a token'}, found {tok!r}")
        self.pos += 1
        return tok

    def int_(self) -> int:
        tok = self.take()
        try:
            return int(tok)
        except ValueError:
            raise ValueError(f"expected an integer, found {tok!r}") from None

    def disjunction(self) -> LocalConstraint:
        out = self.conjunction()
        while self.peek() == "|":
            self.take()
            out = COr(out, self.conjunction())
        return out

    def conjunction(self) -> LocalConstraint:
        out = self.unit()
        while self.peek() == "&":
            self.take()
            out = CAnd(out, self.unit())
        return out

    def unit(self) -> LocalConstraint:
        tok = self.peek()
        if tok == "!":
            self.take()
            return CNot(self.unit())
        if tok == "(":
            self.take()
            out = self.disjunction()
            self.take(")")
            return out
        return self.atom()

    def atom(self) -> LocalConstraint:
        tok = self.peek()
        if tok == "ac":
            self.take()
            self.take("=")
            value = self.int_()
            if value != 1:
                raise ValueError("only the condition ac=1 is expressible")
            return Ac1()
        if tok == "v":
            self.take()
            op = self.take()
            if op == "=":
                k = self.int_()
                return CAnd(VGe(k), VLe(k))
            if op == ">=":
                return VGe(self.int_())
            if op == "<=":
                return VLe(self.int_())
            if op == "%":
                m = self.int_()
                self.take("==")
                return VCong(m, self.int_())
            raise ValueError(f"unexpected operator after v: {op!r}")
        # INT <= v [<= INT]
        lo = self.int_()
        self.take("<=")
        self.take("v")
        out: LocalConstraint = VGe(lo)
        if self.peek() == "<=":
            self.take()
            out = CAnd(out, VLe(self.int_()))
        return out


def parse_constraint(text: str) -> LocalConstraint:
    """Parse a constraint like ``0<=v<=1``, ``v=0`` or
    ``v>=0 & v%3==2 & ac=1``."""
    parser = _ConstraintParser(_tokenize_constraint(text))
    out = parser.disjunction()
    if parser.peek() is not None:
        raise ValueError(f"trailing input: {parser.tokens[parser.pos:]!r}")
    return out


# --------------------------------------------------------------------------
# rational functions of the prime


def _trim(xs: List[Fraction]) -> List[Fraction]:
    while xs and xs[-1] == 0:
        xs.pop()
    return xs


def _padd(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    out = [Fraction(0)] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def _pmul(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, c in enumerate(a):
        if c:
            for j, d in enumerate(b):
                out[i + j] += c * d
    return _trim(out)


def _pdivmod(a: Sequence[Fraction], b: Sequence[Fraction]):
    rem = list(a)
    quo = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    while len(rem) >= len(b) and _trim(rem):
        shift = len(rem) - len(b)
        c = rem[-1] / b[-1]
        quo[shift] = c
        for i, d in enumerate(b):
            rem[shift + i] -= c * d
        _trim(rem)
    return _trim(quo), _trim(rem)


def _pgcd(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    a, b = list(a), list(b)
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    if a:
        lead = a[-1]
        a = [c / lead for c in a]
    return a


@dataclass(frozen=True)
class RationalFunction:
    """A quotient of integer-coefficient polynomials in the prime symbol,
    kept in lowest terms with a positive leading denominator."""

    num: Tuple[int, ...] = ()
    den: Tuple[int, ...] = (1,)

    def __post_init__(self):
        num = _trim([Fraction(c) for c in self.num])
        den = _trim([Fraction(c) for c in self.den])
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            object.__setattr__(self, "num", ())
            object.__setattr__(self, "den", (1,))
            return
        g = _pgcd(num, den)
        if len(g) > 1:
            num, _ = _pdivmod(num, g)
            den, _ = _pdivmod(den, g)
        scale = math.lcm(*(c.denominator for c in num + den))
        ni = [int(c * scale) for c in num]
        di = [int(c * scale) for c in den]
        content = math.gcd(math.gcd(*map(abs, ni)) if ni else 0,
                           math.gcd(*map(abs, di)))
        if content > 1:
            ni = [c // content for c in ni]
            di = [c // content for c in di]
        if di[-1] < 0:
            ni = [-c for c in ni]
            di = [-c for c in di]
        object.__setattr__(self, "num", tuple(ni))
        object.__setattr__(self, "den", tuple(di))

    @staticmethod
    def constant(q) -> "RationalFunction":
        q = Fraction(q)
        return RationalFunction((q.numerator,), (q.denominator,))

    @staticmethod
    def p_power(k: int) -> "RationalFunction":
        if k >= 0:
            return RationalFunction((0,) * k + (1,), (1,))
        return RationalFunction((1,), (0,) * (-k) + (1,))

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(
            _padd(_pmul(list(map(Fraction, self.num)),
                        list(map(Fraction, other.den))),
                  _pmul(list(map(Fraction, other.num)),
                        list(map(Fraction, self.den)))),
            _pmul(list(map(Fraction, self.den)),
                  list(map(Fraction, other.den))))

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(
            _pmul(list(map(Fraction, self.num)),
                  list(map(Fraction, other.num))),
            _pmul(list(map(Fraction, self.den)),
                  list(map(Fraction, other.den))))

    def is_zero(self) -> bool:
        return not self.num

    def evaluate(self, p) -> Fraction:
        return Fraction(_horner(self.num, p), _horner(self.den, p))

    def __str__(self) -> str:
        num = _poly_text(self.num)
        if self.den == (1,):
            return num
        den = _poly_text(self.den)
        if len([c for c in self.num if c]) > 1:
            num = f"({num})"
        if len([c for c in self.den if c]) > 1:
            den = f"({den})"
        return f"{num}/{den}"


def _horner(coeffs: Sequence[int], p) -> int:
    out = 0
    for c in reversed(coeffs):
        out = out * p + c
    return out


def _poly_text(coeffs: Sequence[int]) -> str:
    if not coeffs:
        return "0"
    parts = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if c == 0:
            continue
        if i == 0:
            body = str(abs(c))
        else:
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            body = f"{mag}p" if i == 1 else f"{mag}p^{i}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(parts) if parts else "0"


@dataclass(frozen=True)
class MeasureValue:
    """A local measure: an exact rational function of p, or infinite."""

    symbolic: Optional[RationalFunction]
    infinite: bool = False

    def numeric_at(self, p: int):
        """The exact measure at a given prime (``math.inf`` if infinite)."""
        if self.infinite:
            return math.inf
        return self.symbolic.evaluate(p)

    def __str__(self) -> str:
        return "INFINITE" if self.infinite else str(self.symbolic)


INFINITE_MEASURE = MeasureValue(None, True)


# --------------------------------------------------------------------------
# shell decomposition


def _truth(c: LocalConstraint, k: int, ac1: bool) -> bool:
    if isinstance(c, VGe):
        return k >= c.bound
    if isinstance(c, VLe):
        return k <= c.bound
    if isinstance(c, VCong):
        return (k - c.residue) % c.modulus == 0
    if isinstance(c, Ac1):
        return ac1
    if isinstance(c, CNot):
        return not _truth(c.body, k, ac1)
    if isinstance(c, CAnd):
        return _truth(c.lhs, k, ac1) and _truth(c.rhs, k, ac1)
    if isinstance(c, COr):
        return _truth(c.lhs, k, ac1) or _truth(c.rhs, k, ac1)
    raise TypeError(f"not a constraint: {c!r}")


def _scan(c: LocalConstraint, bounds: List[int], moduli: List[int]):
    if isinstance(c, (VGe, VLe)):
        bounds.append(c.bound)
    elif isinstance(c, VCong):
        moduli.append(c.modulus)
    elif isinstance(c, CNot):
        _scan(c.body, bounds, moduli)
    elif isinstance(c, (CAnd, COr)):
        _scan(c.lhs, bounds, moduli)
        _scan(c.rhs, bounds, moduli)


def _shell_term(k: int, ac1: bool) -> RationalFunction:
    if ac1:
        return RationalFunction.p_power(-k - 1)
    return RationalFunction.p_power(-k) * RationalFunction((-2, 1), (0, 1))


def local_measure_symbolic(c: LocalConstraint) -> MeasureValue:
    """The Haar measure of the constraint set, exact in the prime.

    Shells below every stated bound repeat with the congruence period; if
    any of them is occupied the total diverges and the result is the
    INFINITE_MEASURE value rather than an exception.
    """
    bounds: List[int] = []
    moduli: List[int] = []
    _scan(c, bounds, moduli)
    period = math.lcm(*moduli) if moduli else 1
    hi = (max(bounds) if bounds else 0) + 1
    lo = (min(bounds) if bounds else 0) - 1

    for k in range(lo - period + 1, lo + 1):
        for ac1 in (True, False):
            if _truth(c, k, ac1):
                return INFINITE_MEASURE

    total = RationalFunction()
    for k in range(lo + 1, hi):
        for ac1 in (True, False):
            if _truth(c, k, ac1):
                total = total + _shell_term(k, ac1)
    # one period at and above every bound, each continuing geometrically
    geometric = RationalFunction((0,) * period + (1,),
                                 (-1,) + (0,) * (period - 1) + (1,))
    for offset in range(period):
        k = hi + offset
        for ac1 in (True, False):
            if _truth(c, k, ac1):
                total = total + _shell_term(k, ac1) * geometric
    return MeasureValue(total)


def local_measure_at_p(c: LocalConstraint, p: int):
    """The exact measure at one prime (``math.inf`` when unbounded)."""
    return local_measure_symbolic(c).numeric_at(p)


def zeta_factor_set(n: int) -> LocalConstraint:
    """A constraint set whose local measure is exactly (1 - p^-n)^-1.

    The set is the disjoint union of {v = -1, ac = 1} (measure 1) and
    {v >= 0, v = n-1 mod n, ac = 1} (measure p^-n + p^-2n + ...).
    """
    if not isinstance(n, int) or n < 2:
        raise ValueError("the exponent must be an integer >= 2; the case "
                         "n = 1 diverges in the product over primes")
    spike = CAnd(CAnd(VGe(-1), VLe(-1)), Ac1())
    ladder = CAnd(CAnd(VGe(0), VCong(n, n - 1)), Ac1())
    return COr(spike, ladder)


# --------------------------------------------------------------------------
# Euler products


@dataclass(frozen=True)
class EulerBracket:
    """A truncated product over primes with a rigorous enclosure.

    ``value`` is the exact truncation, correctly rounded to float64;
    [lo, hi] encloses the full product unless flagged divergent, in which
    case lo = 0 and the truncation is an upper bound.
    """

    P: int
    value: float
    lo: float
    hi: float
    flags: Tuple[str, ...] = ()


def _product(xs: List[int]) -> int:
    if not xs:
        return 1
    while len(xs) > 1:
        xs = [xs[i] * xs[i + 1] for i in range(0, len(xs) - 1, 2)] + \
            ([xs[-1]] if len(xs) % 2 else [])
    return xs[0]


def adelic_measure(c: LocalConstraint, P: int) -> EulerBracket:
    """The product of the local measures over all primes up to P, with a
    tail bound from degree comparison of the symbolic factor.

    Requires the factor to approach 1 like O(p^-2) (convergent case), or to
    stay below 1 while approaching it like O(p^-1), which is reported as
    DIVERGES_TO_ZERO with the truncation as an upper bound.
    """
    mv = local_measure_symbolic(c)
    if mv.infinite:
        raise ValueError("the local measure is infinite; no product over "
                         "primes exists")
    f = mv.symbolic
    num, den = list(f.num), list(f.den)
    diff = _trim([Fraction(a) - Fraction(b)
                  for a, b in zip(num + [0] * len(den),
                                  den + [0] * len(num))])
    deg_den = len(den) - 1
    flags: Tuple[str, ...] = ()
    if not diff:
        return EulerBracket(P, 1.0, 1.0, 1.0)
    deg_diff = len(diff) - 1
    if deg_diff >= deg_den:
        raise ValueError("the local factor does not approach 1; the product "
                         "over primes has no meaning")
    divergent = deg_diff == deg_den - 1
    if divergent and diff[-1] > 0:
        raise ValueError("the local factor exceeds 1 at rate 1/p; the "
                         "product over primes diverges")
    if divergent:
        flags = ("DIVERGES_TO_ZERO",)

    primes = primes_up_to(P)
    factors_num = []
    factors_den = []
    zero_factor = False
    for p in primes:
        a, b = _horner(f.num, p), _horner(f.den, p)
        if a == 0:
            zero_factor = True
            break
        if a < 0 or b <= 0:
            raise ValueError(f"the local factor is negative at {p}; it is "
                             "not a measure")
        factors_num.append(a)
        factors_den.append(b)
    if zero_factor:
        return EulerBracket(P, 0.0, 0.0, 0.0, flags + ("ZERO_FACTOR",))
    value = _product(factors_num) / _product(factors_den)

    if divergent:
        return EulerBracket(P, value, 0.0, value, flags)

    # |num(p) - den(p)| <= A p^deg_diff and den(p) >= L p^deg_den / 2 for
    # p >= 2S/L, so |log factor| <= (4A/L) p^-2 and the tail beyond P is at
    # most sum_{n>P} (4A/L) n^-2 <= (4A/L)/P.
    A = sum(abs(x) for x in diff)
    L = den[-1]
    S = sum(abs(x) for x in den[:-1])
    if P < max(2 * S / L, 2 * (2 * A / L), 16):
        raise ValueError("the truncation bound is too small for the tail "
                         "estimate")
    tail = float(4 * A / L) / P
    pad = 1e-12 * max(1.0, abs(value))
    lo = value * math.exp(-tail) - pad
    hi = value * math.exp(tail) + pad
    return EulerBracket(P, value, lo, hi)


def _shifted_geometric(p: int, s: Fraction) -> float:
    t = float(p) ** float(-s)
    return 1.0 + t / p / (1.0 - t)


FACTOR_CATALOG: Dict[str, object] = {
    # 1 + p^(-1-s) / (1 - p^-s): the classical factor whose abscissa wall
    # shows up when s approaches 0
    "shifted_geometric": _shifted_geometric,
    # (1 - p^-s)^-1: plain zeta factor
    "zeta": lambda p, s: 1.0 / (1.0 - float(p) ** float(-s)),
    # the constant factor, for calibration
    "one": lambda p, s: 1.0,
}


def euler_truncation(factor: str, s, P: int) -> List[Tuple[int, float]]:
    """Partial products of a catalog factor at checkpoints 10, 100, ..., P.

    Computed in float64 (the recorded precision); intended for convergence
    inspection, with no claims beyond the listed truncations.
    """
    if factor not in FACTOR_CATALOG:
        raise ValueError(f"unknown factor {factor!r}; catalog: "
                         f"{sorted(FACTOR_CATALOG)}")
    s = Fraction(s)
    if s <= 0:
        raise ValueError("the parameter must be positive")
    if P < 10:
        raise ValueError("the bound must be at least 10")
    fn = FACTOR_CATALOG[factor]
    checkpoints = []
    mark = 10
    while mark < P:
        checkpoints.append(mark)
        mark *= 10
    checkpoints.append(P)
    out: List[Tuple[int, float]] = []
    value = 1.0
    idx = 0
    primes = primes_up_to(P)
    for mark in checkpoints:
        while idx < len(primes) and primes[idx] <= mark:
            value *= fn(primes[idx], s)
            idx += 1
        out.append((mark, value))
    return out
