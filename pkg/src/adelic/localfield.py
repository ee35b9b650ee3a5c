"""Exact local arithmetic: p-adic valuations, power classes, Hilbert
symbols, finite quotient rings, and "eventual" truth of quantifier-free
ring formulas at all large primes.

Rational numbers sit inside every completion, so all computations here are
exact: a question about a rational point of Q_p reduces to valuations and
residue classes.  The *eventual* layer evaluates a term whose variables are
bound to tail patterns (a fixed rational, or a power of the local
uniformizer) into a Laurent polynomial in the prime itself, reads off the
asymptotic truth of each atom, and patches the finitely many exceptional
primes by direct evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Union

from .formula import (
    Add, And, Bottom, DividesAtom, Exists, Forall, Implies, IntegralAtom,
    Mul, Neg, Not, Or, PowerAtom, RatConst, RingEq, RingVar, Sub, Top,
)
from .placesets import PlaceSet
from .primes import factorize, prime_factors

__all__ = [
    "CostGuardError", "UnsupportedFragmentError",
    "padic_valuation", "unit_part", "unit_residue",
    "legendre", "kronecker", "is_square_in_Qp", "is_nth_power_in_Qp",
    "is_nth_power_in_Q", "squarefree_kernel",
    "hilbert_symbol",
    "FiniteRing", "eval_fo_finite_ring",
    "Laurent", "ConstTail", "UniformizerPow", "TailPattern",
    "term_to_laurent", "eval_ring_term", "eval_qf_local",
    "eventual_truth", "TailTruth",
]


class CostGuardError(RuntimeError):
    """Raised when a brute-force evaluation would exceed its budget."""


class UnsupportedFragmentError(RuntimeError):
    """Raised when an input falls outside the decidable fragment that the
    implementation commits to answering exactly."""


# --------------------------------------------------------------------------
# valuations and power classes


def padic_valuation(q, p: int):
    """v_p(q) for a rational q, with v_p(0) = +infinity."""
    q = Fraction(q)
    if q == 0:
        return math.inf
    v = 0
    num, den = q.numerator, q.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def unit_part(q, p: int) -> Fraction:
    """q / p^v_p(q), a p-adic unit (q must be nonzero)."""
    q = Fraction(q)
    if q == 0:
        raise ValueError("0 has no unit part")
    v = padic_valuation(q, p)
    return q / Fraction(p) ** v


def unit_residue(q, m: int) -> int:
    """The residue mod m of a rational with denominator invertible mod m."""
    q = Fraction(q)
    if math.gcd(q.denominator, m) != 1:
        raise ValueError(f"denominator of {q} is not invertible mod {m}")
    return q.numerator * pow(q.denominator, -1, m) % m


def legendre(a, p: int) -> int:
    """Legendre symbol (a|p) for an odd prime p; 0 when p divides a."""
    a = unit_residue(Fraction(a), p) if isinstance(a, Fraction) else a % p
    if a == 0:
        return 0
    s = pow(a, (p - 1) // 2, p)
    return 1 if s == 1 else -1


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n), the full multiplicative extension."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    s = 1
    if n < 0:
        n = -n
        if a < 0:
            s = -s
    twos = 0
    while n % 2 == 0:
        n //= 2
        twos += 1
    if twos:
        if a % 2 == 0:
            return 0
        if twos % 2 == 1 and a % 8 in (3, 5):
            s = -s
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                s = -s
        if a % 4 == 3 and n % 4 == 3:
            s = -s
        a, n = n % a, a
    return s if n == 1 else 0


def is_square_in_Qp(q, p: int) -> bool:
    """Whether a rational is a square in Q_p."""
    q = Fraction(q)
    if q == 0:
        return True
    if padic_valuation(q, p) % 2 != 0:
        return False
    u = unit_part(q, p)
    if p == 2:
        return unit_residue(u, 8) == 1
    return legendre(unit_residue(u, p), p) == 1


def is_nth_power_in_Qp(q, n: int, p: int) -> bool:
    """Whether a rational is an n-th power in Q_p (n >= 1).

    A unit u is an n-th power in Z_p iff x^n = u is solvable mod
    p^(2e+1) with e = v_p(n); a solution there has f(x) small enough
    relative to f'(x)^2 for the Newton iteration to converge.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    q = Fraction(q)
    if n == 1 or q == 0 or q == 1:
        return True
    v = padic_valuation(q, p)
    if v % n != 0:
        return False
    u = unit_part(q, p)
    e = 0
    nn = n
    while nn % p == 0:
        nn //= p
        e += 1
    m = p ** (2 * e + 1)
    r = unit_residue(u, m)
    if p == 2:
        return any(pow(x, n, m) == r for x in range(1, m, 2))
    phi = m // p * (p - 1)
    g = math.gcd(n, phi)
    return pow(r, phi // g, m) == 1


def is_nth_power_in_Q(q, n: int) -> bool:
    """Whether a rational is an n-th power in Q."""
    q = Fraction(q)
    if q == 0 or n == 1:
        return True
    if q < 0 and n % 2 == 0:
        return False
    for part in (abs(q.numerator), q.denominator):
        if part > 1:
            for _, e in factorize(part):
                if e % n != 0:
                    return False
    return True


def squarefree_kernel(q) -> int:
    """The squarefree integer representing q's class modulo squares."""
    q = Fraction(q)
    if q == 0:
        raise ValueError("0 has no squarefree kernel")
    n = abs(q.numerator * q.denominator)
    out = 1
    if n > 1:
        for p, e in factorize(n):
            if e % 2 == 1:
                out *= p
    return out if q > 0 else -out


# --------------------------------------------------------------------------
# Hilbert symbols


def hilbert_symbol(a, b, place) -> int:
    """Hilbert symbol (a, b) at a finite prime or at the real place.

    ``place`` is a prime number or the string ``"real"``.  Both arguments
    must be nonzero rationals.
    """
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol requires nonzero arguments")
    if place == "real":
        return -1 if a < 0 and b < 0 else 1
    p = int(place)
    alpha = padic_valuation(a, p)
    beta = padic_valuation(b, p)
    u = unit_part(a, p)
    w = unit_part(b, p)
    if p == 2:
        def eps(x):
            return (unit_residue(x, 4) - 1) // 2 % 2

        def omega(x):
            return 1 if unit_residue(x, 8) in (3, 5) else 0

        exp = eps(u) * eps(w) + alpha * omega(w) + beta * omega(u)
        return -1 if exp % 2 else 1
    sign = legendre(u, p) ** beta * legendre(w, p) ** alpha
    if alpha * beta % 2 == 1 and (p - 1) // 2 % 2 == 1:
        sign = -sign
    return sign


# --------------------------------------------------------------------------
# finite quotient rings Z/p^k


class FiniteRing:
    """The ring Z/p^k with the induced local predicates.

    Elements are the integers 0..p^k-1.  ``O`` is identically true,
    ``D`` compares valuations truncated at k (with the truncated
    valuation of 0 equal to k), and ``P[n]`` asks for an n-th power in
    the ring.
    """

    def __init__(self, p: int, k: int = 1):
        if k < 1:
            raise ValueError("exponent must be >= 1")
        self.p = p
        self.k = k
        self.modulus = p ** k
        self._powers: Dict[int, frozenset] = {}

    def __repr__(self):
        return f"FiniteRing({self.p}, {self.k})"

    def __eq__(self, other):
        return isinstance(other, FiniteRing) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self):
        return hash((FiniteRing, self.p, self.k))

    def elements(self) -> range:
        return range(self.modulus)

    def value_of_const(self, q: Fraction) -> int:
        q = Fraction(q)
        if math.gcd(q.denominator, self.p) != 1:
            raise ValueError(
                f"constant {q} is not integral at {self.p} and has no image "
                f"in Z/{self.p}^{self.k}")
        return unit_residue(q, self.modulus)

    def truncated_valuation(self, x: int) -> int:
        x %= self.modulus
        if x == 0:
            return self.k
        v = 0
        while x % self.p == 0:
            x //= self.p
            v += 1
        return v

    def nth_powers(self, n: int) -> frozenset:
        if n not in self._powers:
            self._powers[n] = frozenset(
                pow(x, n, self.modulus) for x in self.elements())
        return self._powers[n]


def _count_quantifiers(f) -> int:
    if isinstance(f, (Exists, Forall)):
        return 1 + _count_quantifiers(f.body)
    if isinstance(f, Not):
        return _count_quantifiers(f.body)
    if isinstance(f, (And, Or, Implies)):
        return _count_quantifiers(f.lhs) + _count_quantifiers(f.rhs)
    return 0


_FO_BUDGET = 10 ** 7


def eval_fo_finite_ring(formula, ring: FiniteRing, env: Optional[Dict[str, int]] = None) -> bool:
    """Evaluate a first-order ring formula over Z/p^k by enumeration.

    Guarded: refuses when ``modulus ** quantifier_count`` exceeds the
    evaluation budget.
    """
    q = _count_quantifiers(formula)
    if q and ring.modulus ** q > _FO_BUDGET:
        raise CostGuardError(
            f"{ring.modulus}^{q} assignments exceed the evaluation budget")
    m = ring.modulus

    def term(t, env) -> int:
        if isinstance(t, RingVar):
            try:
                return env[t.name]
            except KeyError:
                raise ValueError(f"unbound variable {t.name!r}") from None
        if isinstance(t, RatConst):
            return ring.value_of_const(t.value)
        if isinstance(t, Add):
            return (term(t.lhs, env) + term(t.rhs, env)) % m
        if isinstance(t, Sub):
            return (term(t.lhs, env) - term(t.rhs, env)) % m
        if isinstance(t, Mul):
            return (term(t.lhs, env) * term(t.rhs, env)) % m
        if isinstance(t, Neg):
            return -term(t.body, env) % m
        raise TypeError(f"not a ring term: {t!r}")

    def go(f, env) -> bool:
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Not):
            return not go(f.body, env)
        if isinstance(f, And):
            return go(f.lhs, env) and go(f.rhs, env)
        if isinstance(f, Or):
            return go(f.lhs, env) or go(f.rhs, env)
        if isinstance(f, Implies):
            return (not go(f.lhs, env)) or go(f.rhs, env)
        if isinstance(f, Exists):
            return any(go(f.body, {**env, f.var: x}) for x in ring.elements())
        if isinstance(f, Forall):
            return all(go(f.body, {**env, f.var: x}) for x in ring.elements())
        if isinstance(f, RingEq):
            return term(f.lhs, env) == term(f.rhs, env)
        if isinstance(f, IntegralAtom):
            term(f.term, env)
            return True
        if isinstance(f, DividesAtom):
            return (ring.truncated_valuation(term(f.lhs, env))
                    <= ring.truncated_valuation(term(f.rhs, env)))
        if isinstance(f, PowerAtom):
            return term(f.term, env) in ring.nth_powers(f.n)
        raise TypeError(f"not a ring formula: {f!r}")

    return go(formula, dict(env or {}))


# --------------------------------------------------------------------------
# exact evaluation at one prime


def eval_ring_term(t, env: Dict[str, Fraction]) -> Fraction:
    if isinstance(t, RingVar):
        try:
            return Fraction(env[t.name])
        except KeyError:
            raise ValueError(f"unbound variable {t.name!r}") from None
    if isinstance(t, RatConst):
        return t.value
    if isinstance(t, Add):
        return eval_ring_term(t.lhs, env) + eval_ring_term(t.rhs, env)
    if isinstance(t, Sub):
        return eval_ring_term(t.lhs, env) - eval_ring_term(t.rhs, env)
    if isinstance(t, Mul):
        return eval_ring_term(t.lhs, env) * eval_ring_term(t.rhs, env)
    if isinstance(t, Neg):
        return -eval_ring_term(t.body, env)
    raise TypeError(f"not a ring term: {t!r}")


def eval_qf_local(formula, p: int, env: Dict[str, Fraction]) -> bool:
    """Truth of a quantifier-free ring formula at rational points of Q_p."""
    if isinstance(formula, Top):
        return True
    if isinstance(formula, Bottom):
        return False
    if isinstance(formula, Not):
        return not eval_qf_local(formula.body, p, env)
    if isinstance(formula, And):
        return eval_qf_local(formula.lhs, p, env) and eval_qf_local(formula.rhs, p, env)
    if isinstance(formula, Or):
        return eval_qf_local(formula.lhs, p, env) or eval_qf_local(formula.rhs, p, env)
    if isinstance(formula, Implies):
        return (not eval_qf_local(formula.lhs, p, env)) or eval_qf_local(formula.rhs, p, env)
    if isinstance(formula, (Exists, Forall)):
        raise ValueError("quantifier-free evaluation only")
    if isinstance(formula, RingEq):
        return eval_ring_term(formula.lhs, env) == eval_ring_term(formula.rhs, env)
    if isinstance(formula, IntegralAtom):
        return padic_valuation(eval_ring_term(formula.term, env), p) >= 0
    if isinstance(formula, DividesAtom):
        return (padic_valuation(eval_ring_term(formula.lhs, env), p)
                <= padic_valuation(eval_ring_term(formula.rhs, env), p))
    if isinstance(formula, PowerAtom):
        return is_nth_power_in_Qp(eval_ring_term(formula.term, env), formula.n, p)
    raise TypeError(f"not a ring formula: {formula!r}")


# --------------------------------------------------------------------------
# Laurent polynomials in the prime


class Laurent:
    """Laurent polynomial in one symbol (the generic prime) over Q.

    These arise from evaluating ring terms whose variables are bound to
    tail patterns; the symbol stands for the prime p, so evaluating the
    polynomial at p recovers the component value at the place p.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Optional[Dict[int, Fraction]] = None):
        self.coeffs: Dict[int, Fraction] = {}
        for e, c in (coeffs or {}).items():
            c = Fraction(c)
            if c != 0:
                self.coeffs[int(e)] = c

    @staticmethod
    def zero() -> "Laurent":
        return Laurent()

    @staticmethod
    def constant(q) -> "Laurent":
        return Laurent({0: Fraction(q)})

    @staticmethod
    def uniformizer(exponent: int = 1) -> "Laurent":
        return Laurent({exponent: Fraction(1)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def min_exp(self) -> Optional[int]:
        return min(self.coeffs) if self.coeffs else None

    def trailing_coeff(self) -> Fraction:
        if self.is_zero():
            raise ValueError("zero polynomial")
        return self.coeffs[self.min_exp()]

    def __eq__(self, other):
        return isinstance(other, Laurent) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __add__(self, other: "Laurent") -> "Laurent":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Laurent(out)

    def __neg__(self) -> "Laurent":
        return Laurent({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: "Laurent") -> "Laurent":
        return self + (-other)

    def __mul__(self, other: "Laurent") -> "Laurent":
        out: Dict[int, Fraction] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Laurent(out)

    def evaluate(self, p: int) -> Fraction:
        return sum((c * Fraction(p) ** e for e, c in self.coeffs.items()),
                   Fraction(0))

    def coefficient_primes(self) -> frozenset:
        out = set()
        for c in self.coeffs.values():
            out.update(prime_factors(abs(c.numerator)))
            out.update(prime_factors(c.denominator))
        return frozenset(out)

    def __repr__(self):
        if self.is_zero():
            return "Laurent(0)"
        body = " + ".join(f"{c}*p^{e}" for e, c in sorted(self.coeffs.items()))
        return f"Laurent({body})"


@dataclass(frozen=True)
class ConstTail:
    """Tail pattern: the component equals a fixed rational at every place."""

    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def to_laurent(self) -> Laurent:
        return Laurent.constant(self.value)

    def value_at(self, p: int) -> Fraction:
        return self.value


@dataclass(frozen=True)
class UniformizerPow:
    """Tail pattern: the component equals p^exponent at the place p."""

    exponent: int = 1

    def to_laurent(self) -> Laurent:
        return Laurent.uniformizer(self.exponent)

    def value_at(self, p: int) -> Fraction:
        return Fraction(p) ** self.exponent


TailPattern = Union[ConstTail, UniformizerPow]


def _as_laurent(value) -> Laurent:
    if isinstance(value, Laurent):
        return value
    if isinstance(value, (ConstTail, UniformizerPow)):
        return value.to_laurent()
    return Laurent.constant(Fraction(value))


def term_to_laurent(t, env: Dict[str, object]) -> Laurent:
    """Evaluate a ring term into a Laurent polynomial in the prime."""
    if isinstance(t, RingVar):
        try:
            return _as_laurent(env[t.name])
        except KeyError:
            raise ValueError(f"unbound variable {t.name!r}") from None
    if isinstance(t, RatConst):
        return Laurent.constant(t.value)
    if isinstance(t, Add):
        return term_to_laurent(t.lhs, env) + term_to_laurent(t.rhs, env)
    if isinstance(t, Sub):
        return term_to_laurent(t.lhs, env) - term_to_laurent(t.rhs, env)
    if isinstance(t, Mul):
        return term_to_laurent(t.lhs, env) * term_to_laurent(t.rhs, env)
    if isinstance(t, Neg):
        return -term_to_laurent(t.body, env)
    raise TypeError(f"not a ring term: {t!r}")


# --------------------------------------------------------------------------
# eventual truth of quantifier-free formulas


def _value_env_at(env: Dict[str, object], p: int) -> Dict[str, Fraction]:
    out = {}
    for name, pat in env.items():
        if isinstance(pat, (ConstTail, UniformizerPow)):
            out[name] = pat.value_at(p)
        elif isinstance(pat, Laurent):
            out[name] = pat.evaluate(p)
        else:
            out[name] = Fraction(pat)
    return out


def _patched(base: PlaceSet, atom, env: Dict[str, object],
             candidates: Iterable[int]) -> PlaceSet:
    """Correct a base verdict at finitely many suspicious primes."""
    out = base
    for p in sorted(set(candidates)):
        direct = eval_qf_local(atom, p, _value_env_at(env, p))
        if direct and not out.member(p):
            out = out.join(PlaceSet.finite([p]))
        elif not direct and out.member(p):
            out = out.difference(PlaceSet.finite([p]))
    return out


def _min_exp_or_inf(L: Laurent):
    return math.inf if L.is_zero() else L.min_exp()


def _atom_places(atom, env: Dict[str, object]) -> PlaceSet:
    if isinstance(atom, RingEq):
        L = term_to_laurent(atom.lhs, env) - term_to_laurent(atom.rhs, env)
        if L.is_zero():
            return PlaceSet.all_primes()
        # A prime root of the cleared-denominator polynomial divides its
        # trailing integer coefficient.
        den = math.lcm(*(c.denominator for c in L.coeffs.values()))
        c0 = abs(L.trailing_coeff() * den)
        roots = [p for p in prime_factors(c0.numerator)
                 if L.evaluate(p) == 0]
        return PlaceSet.finite(roots)

    if isinstance(atom, IntegralAtom):
        L = term_to_laurent(atom.term, env)
        base = (PlaceSet.all_primes() if _min_exp_or_inf(L) >= 0
                else PlaceSet.empty())
        return _patched(base, atom, env, L.coefficient_primes())

    if isinstance(atom, DividesAtom):
        S = term_to_laurent(atom.lhs, env)
        T = term_to_laurent(atom.rhs, env)
        base = (PlaceSet.all_primes()
                if _min_exp_or_inf(S) <= _min_exp_or_inf(T)
                else PlaceSet.empty())
        return _patched(base, atom, env,
                        S.coefficient_primes() | T.coefficient_primes())

    if isinstance(atom, PowerAtom):
        n = atom.n
        L = term_to_laurent(atom.term, env)
        if L.is_zero():
            return PlaceSet.all_primes()
        candidates = set(L.coefficient_primes()) | {2} | set(prime_factors(n))
        m = L.min_exp()
        if m % n != 0:
            return _patched(PlaceSet.empty(), atom, env, candidates)
        a = L.trailing_coeff()
        if is_nth_power_in_Q(a, n):
            return _patched(PlaceSet.all_primes(), atom, env, candidates)
        if n == 2:
            # For large p the unit part reduces to the trailing
            # coefficient, whose square class is read off by the
            # Kronecker symbol; that symbol is periodic in p.
            d = squarefree_kernel(a)
            modulus = 8 * abs(d)
            residues = [u for u in range(modulus)
                        if math.gcd(u, modulus) == 1 and kronecker(d, u) == 1]
            base = PlaceSet.congruence(modulus, residues)
            candidates |= set(prime_factors(abs(d)))
            return _patched(base, atom, env, candidates)
        raise UnsupportedFragmentError(
            f"P[{n}] with a non-{n}-th-power leading coefficient does not "
            "have congruence-periodic truth in the prime")

    raise TypeError(f"not a ring atom: {atom!r}")


def eventual_truth(formula, env: Dict[str, object]) -> PlaceSet:
    """The set of primes at which a quantifier-free ring formula holds,
    when each variable follows its tail pattern.

    The result is exact: an asymptotic verdict per atom, with every
    potentially exceptional prime checked by direct evaluation.
    """
    if isinstance(formula, Top):
        return PlaceSet.all_primes()
    if isinstance(formula, Bottom):
        return PlaceSet.empty()
    if isinstance(formula, Not):
        return eventual_truth(formula.body, env).complement()
    if isinstance(formula, And):
        return eventual_truth(formula.lhs, env).meet(
            eventual_truth(formula.rhs, env))
    if isinstance(formula, Or):
        return eventual_truth(formula.lhs, env).join(
            eventual_truth(formula.rhs, env))
    if isinstance(formula, Implies):
        return eventual_truth(formula.lhs, env).complement().join(
            eventual_truth(formula.rhs, env))
    if isinstance(formula, (Exists, Forall)):
        raise ValueError("eventual truth is defined for quantifier-free "
                         "formulas; use the sentence decision layer instead")
    return _atom_places(formula, env)


# The truth locus of a tail formula is itself a finitely described set of
# primes, so it shares the PlaceSet representation.
TailTruth = PlaceSet
