"""Truncated finite adeles of the rationals and their Boolean-valued logic.

An element is stored as finitely many explicit rational components plus a
single tail pattern (a fixed rational, or a power of the local uniformizer)
used at every remaining prime.  That is enough to express the constructions
the package works with -- idempotents attached to sets of primes, principal
elements, inverse-uniformizer witnesses with finite support -- while keeping
every question about an element finitely checkable.

The quantified decision layer evaluates a formula place by place: a bounded
family of candidate witnesses (exact roots of the equality atoms plus a
diversity grid) provably covers every case the supported fragment can
distinguish, and the module raises ``UnsupportedFragmentError`` rather than
guess outside that fragment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Set, Tuple

from .boolqe import desugar_comparisons
from .formula import (
    Add, And, Bottom, DividesAtom, Exists, FinAtom, Forall, Implies,
    IntegralAtom, Mul, Neg, Not, Or, PowerAtom, RatConst, ResAtom, RingEq,
    RingVar, Sub, Top,
    free_term_variables, free_variables, is_quantifier_free,
)
from .localfield import (
    ConstTail, Laurent, TailPattern, UniformizerPow, UnsupportedFragmentError,
    eval_qf_local, eventual_truth, is_square_in_Qp,
)
from .placesets import PlaceSet
from .primes import is_prime, prime_factors, primes_up_to
from . import fvreduce

__all__ = [
    "TruncatedAdele", "Idempotent", "idempotent_adele",
    "place_set_algebra", "boolean_value", "support",
    "is_von_neumann_regular", "fin_ideal_witness",
    "TypeNormalForm", "normalize_type_I_II",
    "decide_at_prime", "formula_place_set", "eval_adelic_formula",
]


# --------------------------------------------------------------------------
# truncated adeles


def _coerce_tail(tail) -> TailPattern:
    if not isinstance(tail, (ConstTail, UniformizerPow)):
        tail = ConstTail(Fraction(tail))
    if isinstance(tail, UniformizerPow) and tail.exponent < 0:
        raise ValueError(
            "a negative uniformizer power in the tail would be non-integral "
            "at every remaining prime; elements like that exist only with "
            "the non-integral places listed explicitly")
    return tail


@dataclass(frozen=True)
class TruncatedAdele:
    """An element known exactly: explicit components at finitely many
    primes, one tail pattern everywhere else.

    Explicit entries that merely repeat the tail value are dropped, so
    structural equality of two elements means equality at every prime.
    """

    explicit: Tuple[Tuple[int, Fraction], ...] = ()
    tail: TailPattern = ConstTail(Fraction(0))

    def __post_init__(self):
        tail = _coerce_tail(self.tail)
        entries = self.explicit
        if isinstance(entries, Mapping):
            entries = entries.items()
        cleaned: Dict[int, Fraction] = {}
        for p, value in entries:
            p = int(p)
            if not is_prime(p):
                raise ValueError(f"explicit places must be primes, got {p}")
            value = Fraction(value)
            if p in cleaned and cleaned[p] != value:
                raise ValueError(f"conflicting components at {p}")
            cleaned[p] = value
        canon = tuple(sorted((p, v) for p, v in cleaned.items()
                             if v != tail.value_at(p)))
        object.__setattr__(self, "explicit", canon)
        object.__setattr__(self, "tail", tail)

    @staticmethod
    def principal(q) -> "TruncatedAdele":
        """The element with the same rational value at every prime."""
        return TruncatedAdele((), ConstTail(Fraction(q)))

    def explicit_primes(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.explicit)

    def component_at(self, p: int) -> Fraction:
        for q, value in self.explicit:
            if q == p:
                return value
        return self.tail.value_at(p)

    def __mul__(self, other):
        if not isinstance(other, TruncatedAdele):
            return NotImplemented
        tail = _tail_product(self.tail, other.tail)
        primes = {p for p, _ in self.explicit} | {p for p, _ in other.explicit}
        parts = tuple((p, self.component_at(p) * other.component_at(p))
                      for p in sorted(primes))
        return TruncatedAdele(parts, tail)

    def to_json(self) -> dict:
        if isinstance(self.tail, ConstTail):
            tail = {"const": str(self.tail.value)}
        else:
            tail = {"uniformizer_pow": self.tail.exponent}
        return {"explicit": {str(p): str(v) for p, v in self.explicit},
                "tail": tail}

    @staticmethod
    def from_json(data: dict) -> "TruncatedAdele":
        tail_data = data.get("tail", {"const": "0"})
        if "const" in tail_data:
            tail: TailPattern = ConstTail(Fraction(tail_data["const"]))
        elif "uniformizer_pow" in tail_data:
            tail = UniformizerPow(int(tail_data["uniformizer_pow"]))
        else:
            raise ValueError(f"unknown tail pattern: {tail_data!r}")
        explicit = tuple(sorted((int(p), Fraction(v))
                                for p, v in data.get("explicit", {}).items()))
        return TruncatedAdele(explicit, tail)

    def __str__(self) -> str:
        parts = [f"{p}->{v}" for p, v in self.explicit]
        if isinstance(self.tail, ConstTail):
            parts.append(f"tail {self.tail.value}")
        else:
            parts.append(f"tail p^{self.tail.exponent}")
        return "{" + ", ".join(parts) + "}"


def _tail_product(a: TailPattern, b: TailPattern) -> TailPattern:
    if isinstance(a, ConstTail) and isinstance(b, ConstTail):
        return ConstTail(a.value * b.value)
    if isinstance(a, ConstTail):
        a, b = b, a
    if isinstance(b, UniformizerPow):
        return UniformizerPow(a.exponent + b.exponent)
    if b.value == 0:
        return ConstTail(Fraction(0))
    if b.value == 1:
        return a
    raise ValueError(
        "the product's tail is neither a constant nor a uniformizer power; "
        "it cannot be stored in truncated form")


# An idempotent is determined by the set of primes where its component is 1,
# and the PlaceSet is the canonical representation: meet, join and
# complement are the ring operations e*f, e+f-e*f and 1-e.
Idempotent = PlaceSet


def idempotent_adele(e: PlaceSet) -> TruncatedAdele:
    """The 0/1-valued element whose unit locus is the given place set."""
    if e.is_finite():
        return TruncatedAdele(tuple((p, Fraction(1)) for p in e.elements()),
                              ConstTail(Fraction(0)))
    comp = e.complement()
    if comp.is_finite():
        return TruncatedAdele(tuple((p, Fraction(0)) for p in comp.elements()),
                              ConstTail(Fraction(1)))
    raise ValueError(
        "only finite and cofinite place sets fit the truncated form; a "
        "congruence-described idempotent has infinitely many components "
        "of both values")


def place_set_algebra(op: str, *args: PlaceSet) -> PlaceSet:
    """Exact set algebra on place sets, dispatched by operation name."""
    if op == "complement":
        if len(args) != 1:
            raise ValueError("complement takes exactly one argument")
        return args[0].complement()
    if op in ("meet", "join"):
        if not args:
            raise ValueError(f"{op} needs at least one argument")
        out = args[0]
        for s in args[1:]:
            out = out.meet(s) if op == "meet" else out.join(s)
        return out
    raise ValueError(f"unknown operation {op!r}")


# --------------------------------------------------------------------------
# Boolean values of quantifier-free formulas


def _with_member(s: PlaceSet, p: int, want: bool) -> PlaceSet:
    if want and not s.member(p):
        return s.join(PlaceSet.finite([p]))
    if not want and s.member(p):
        return s.difference(PlaceSet.finite([p]))
    return s


def boolean_value(f, env: Mapping[str, TruncatedAdele]) -> PlaceSet:
    """The set of primes at which a quantifier-free formula holds
    componentwise.

    The tail patterns are evaluated once and for all by ``eventual_truth``;
    the finitely many explicit components are then checked directly and
    glued in.
    """
    if not is_quantifier_free(f):
        raise ValueError("boolean_value takes a quantifier-free formula; "
                         "use eval_adelic_formula for quantified ones")
    missing = [v for v in free_variables(f) if v not in env]
    if missing:
        raise ValueError(f"unbound variables: {missing}")
    tails = {name: a.tail for name, a in env.items()}
    out = eventual_truth(f, tails)
    explicit = sorted({p for a in env.values() for p, _ in a.explicit})
    for p in explicit:
        values = {name: a.component_at(p) for name, a in env.items()}
        out = _with_member(out, p, eval_qf_local(f, p, values))
    return out


def support(a: TruncatedAdele) -> PlaceSet:
    """The primes where the component is nonzero."""
    x = RingVar("x")
    return boolean_value(Not(RingEq(x, RatConst(0))), {"x": a})


def is_von_neumann_regular(a: TruncatedAdele) -> Tuple[bool, PlaceSet]:
    """Whether the element has a quasi-inverse, with its obstruction set.

    An element is regular exactly when the set of primes whose component is
    nonzero but of strictly positive valuation is finite; that set is
    returned alongside the verdict.
    """
    x = RingVar("x")
    strictly_positive = And(Not(DividesAtom(x, RatConst(1))),
                            Not(RingEq(x, RatConst(0))))
    obstruction = boolean_value(strictly_positive, {"x": a})
    return obstruction.is_finite(), obstruction


def fin_ideal_witness(e: PlaceSet) -> TruncatedAdele:
    """The finitely supported element whose non-integral locus is exactly
    the given finite set: 1/p at each member, 0 elsewhere."""
    if not e.is_finite():
        raise ValueError("only a finite set of primes admits an "
                         "inverse-uniformizer witness")
    a = TruncatedAdele(tuple((p, Fraction(1, p)) for p in e.elements()),
                       ConstTail(Fraction(0)))
    realized = boolean_value(Not(IntegralAtom(RingVar("x"))), {"x": a})
    if realized != e:
        raise RuntimeError("internal check failed: the witness has "
                           f"non-integral locus {realized}, wanted {e}")
    return a


# --------------------------------------------------------------------------
# counting/finiteness normal form


@dataclass(frozen=True)
class TypeNormalForm:
    """A condition whose leaves are only counting and finiteness atoms.

    ``flavor`` is "fin" when every leaf is C[j] or Fin, and "fin,res" when
    residue-count atoms from the extended language remain.
    """

    formula: object
    flavor: str


def _rewrite_res(f):
    if isinstance(f, ResAtom) and f.n == 1:
        # counting mod 1 says nothing beyond finiteness
        return FinAtom(f.term)
    if isinstance(f, Not):
        return Not(_rewrite_res(f.body))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_rewrite_res(f.lhs), _rewrite_res(f.rhs))
    return f


def _has_res(f) -> bool:
    if isinstance(f, ResAtom):
        return True
    if isinstance(f, Not):
        return _has_res(f.body)
    if isinstance(f, (And, Or, Implies)):
        return _has_res(f.lhs) or _has_res(f.rhs)
    return False


def normalize_type_I_II(theta) -> TypeNormalForm:
    """Rewrite a quantifier-free condition so every leaf is a counting atom
    C[j](term) or a finiteness atom Fin(term).

    Equalities become "the symmetric difference is empty" and inclusions
    "the difference is empty", both expressed through C[1].
    """
    if not is_quantifier_free(theta):
        raise ValueError("normalization expects a quantifier-free formula")
    g = _rewrite_res(desugar_comparisons(theta))
    return TypeNormalForm(g, "fin,res" if _has_res(g) else "fin")


# --------------------------------------------------------------------------
# placewise decision of quantified formulas
#
# Soundness contract: a "true" answer always comes from an explicit witness,
# and a "false" answer is only given when the candidate family provably
# covers every case the body can distinguish.  The fragment check enforces
# the covering argument:
#   * equality atoms in the decided variable have degree at most 2;
#   * an equality atom that also mentions a not-yet-bound inner variable
#     must have the shape c(u) * v = 0, so the inner solution set is {0}
#     except at the roots of c;
#   * integrality tests on the decided variable apply to the bare variable;
#   * valuation comparisons and power predicates never touch it.
# Distinct rationals stay distinct in every completion, so the candidate
# grid always reaches each equivalence class the atoms can cut out.

_PATCH_LIMIT = 13
_MAX_WITNESS_DEPTH = 6
_MAX_ROOTS = 12


def _pattern_laurent(value) -> Laurent:
    if isinstance(value, Laurent):
        return value
    if isinstance(value, (ConstTail, UniformizerPow)):
        return value.to_laurent()
    return Laurent.constant(Fraction(value))


def _term_poly(t, names: Tuple[str, ...], env) -> Dict[Tuple[int, ...], Laurent]:
    """A term as a polynomial in the named unbound variables.

    Coefficients are Laurent polynomials in the generic prime; all other
    variables must resolve through the environment.
    """
    zero = (0,) * len(names)

    def go(t) -> Dict[Tuple[int, ...], Laurent]:
        if isinstance(t, RingVar):
            if t.name in names:
                exps = tuple(1 if n == t.name else 0 for n in names)
                return {exps: Laurent.constant(1)}
            if t.name in env:
                return {zero: _pattern_laurent(env[t.name])}
            raise ValueError(f"unbound variable {t.name!r}")
        if isinstance(t, RatConst):
            return {zero: Laurent.constant(t.value)}
        if isinstance(t, Neg):
            return {e: -c for e, c in go(t.body).items()}
        if isinstance(t, (Add, Sub)):
            out = dict(go(t.lhs))
            flip = isinstance(t, Sub)
            for e, c in go(t.rhs).items():
                cur = out.get(e, Laurent.zero())
                out[e] = cur - c if flip else cur + c
            return {e: c for e, c in out.items() if not c.is_zero()}
        if isinstance(t, Mul):
            left, right = go(t.lhs), go(t.rhs)
            out: Dict[Tuple[int, ...], Laurent] = {}
            for e1, c1 in left.items():
                for e2, c2 in right.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    if sum(e) > 4:
                        raise UnsupportedFragmentError(
                            "witness search only covers equality atoms of "
                            "low polynomial degree")
                    out[e] = out.get(e, Laurent.zero()) + c1 * c2
            return {e: c for e, c in out.items() if not c.is_zero()}
        raise TypeError(f"not a ring term: {t!r}")

    return go(t)


def _exact_div(num: Laurent, den: Laurent) -> Optional[Laurent]:
    """num / den when the quotient is again a Laurent polynomial."""
    if den.is_zero():
        return None
    if num.is_zero():
        return Laurent.zero()
    lead = max(den.coeffs)
    out: Dict[int, Fraction] = {}
    rem = dict(num.coeffs)
    for _ in range(64):
        if not rem:
            return Laurent(out)
        top = max(rem)
        e = top - lead
        c = rem[top] / den.coeffs[lead]
        out[e] = c
        for k, v in den.coeffs.items():
            nk = k + e
            nv = rem.get(nk, Fraction(0)) - c * v
            if nv:
                rem[nk] = nv
            else:
                rem.pop(nk, None)
    return None


def _sqrt_fraction(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def _const_value(L: Laurent) -> Optional[Fraction]:
    if L.is_zero():
        return Fraction(0)
    if set(L.coeffs) == {0}:
        return L.coeffs[0]
    return None


def _atom_term_vars(atom) -> Set[str]:
    out: Set[str] = set()
    for attr in ("term", "lhs", "rhs"):
        t = getattr(atom, attr, None)
        if t is not None:
            out.update(free_term_variables(t))
    return out


def _witness_candidates(body, var: str, env, window: Set[int],
                        concrete_prime: Optional[int] = None):
    """Root candidates for an existentially quantified variable.

    Returns ``(candidates, None)`` normally.  When the body is a single
    quadratic equality with irrational roots, returns ``([], disc)`` so the
    caller can decide pure existence through the square class of the
    discriminant instead.
    """
    roots: List[Laurent] = []
    existence: List[Fraction] = []

    def note(root: Laurent):
        window.update(root.coefficient_primes())
        if root not in roots:
            roots.append(root)

    def univariate(coeffs: Dict[int, Laurent], whole_body: bool):
        for c in coeffs.values():
            window.update(c.coefficient_primes())
        degree = max((k for k, c in coeffs.items() if not c.is_zero()),
                     default=0)
        if degree > 2:
            raise UnsupportedFragmentError(
                "witness search covers equality atoms of degree at most 2 "
                "in the quantified variable")
        if degree == 0:
            return
        if degree == 1:
            c0 = coeffs.get(0, Laurent.zero())
            c1 = coeffs[1]
            if c0.is_zero():
                note(Laurent.zero())
                return
            q = _exact_div(c0, c1)
            if q is None:
                raise UnsupportedFragmentError(
                    "the root of an equality atom is not expressible as a "
                    "tail pattern")
            note(-q)
            return
        a2 = _const_value(coeffs[2])
        a1 = _const_value(coeffs.get(1, Laurent.zero()))
        a0 = _const_value(coeffs.get(0, Laurent.zero()))
        if a2 is None or a1 is None or a0 is None:
            raise UnsupportedFragmentError(
                "quadratic equality atoms need constant coefficients")
        disc = a1 * a1 - 4 * a0 * a2
        window.update(prime_factors(abs(disc.numerator)))
        window.update(prime_factors(disc.denominator))
        r = _sqrt_fraction(disc)
        if r is not None:
            note(Laurent.constant((-a1 + r) / (2 * a2)))
            note(Laurent.constant((-a1 - r) / (2 * a2)))
            return
        if whole_body:
            existence.append(disc)
            return
        if concrete_prime is not None and \
                not is_square_in_Qp(disc, concrete_prime):
            return  # the atom is false for every value here
        raise UnsupportedFragmentError(
            "irrational roots of an equality atom interact with the other "
            "conditions")

    def walk(f):
        if isinstance(f, (Top, Bottom)):
            return
        if isinstance(f, Not):
            walk(f.body)
            return
        if isinstance(f, (And, Or, Implies)):
            walk(f.lhs)
            walk(f.rhs)
            return
        if isinstance(f, (Exists, Forall)):
            walk(f.body)
            return
        term_vars = _atom_term_vars(f)
        if var not in term_vars:
            return
        if isinstance(f, IntegralAtom):
            if f.term == RingVar(var):
                return
            raise UnsupportedFragmentError(
                "integrality tests on compound terms of the quantified "
                "variable are outside the witness-search fragment")
        if isinstance(f, (DividesAtom, PowerAtom)):
            raise UnsupportedFragmentError(
                "valuation comparisons and power predicates on the "
                "quantified variable are outside the witness-search "
                "fragment")
        # equality atom
        others = term_vars - {var} - set(env)
        diff = Sub(f.lhs, f.rhs)
        if not others:
            poly = _term_poly(diff, (var,), env)
            univariate({k[0]: c for k, c in poly.items()}, f is body)
            return
        if len(others) > 1:
            raise UnsupportedFragmentError(
                "equality atoms mixing three or more open variables are "
                "outside the witness-search fragment")
        (other,) = others
        mixed = _term_poly(diff, (var, other), env)
        if any(ey > 1 for (_, ey) in mixed):
            raise UnsupportedFragmentError(
                "inner variables must appear linearly in mixed equality "
                "atoms")
        lead = {ex: c for (ex, ey), c in mixed.items() if ey == 1}
        rest = {ex: c for (ex, ey), c in mixed.items() if ey == 0}
        if rest:
            # any offset makes the inner solution drift with the outer
            # variable in a way the cell partition cannot see
            raise UnsupportedFragmentError(
                "mixed equality atoms must have the shape c(u)*v = 0")
        univariate(lead, False)

    walk(body)
    if len(roots) > _MAX_ROOTS:
        raise UnsupportedFragmentError("too many root candidates")
    if existence:
        if len(existence) == 1 and not roots:
            return [], existence[0]
        raise UnsupportedFragmentError(
            "irrational roots of an equality atom interact with the other "
            "conditions")
    return roots, None


_INT_SEQ = (0, 1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 6, -6, 7, -7)


def _grid(n_roots: int) -> List[Laurent]:
    """Fallback witnesses: enough distinct integers to dodge every root,
    plus non-integral and high-valuation uniformizer powers."""
    need = n_roots + 2
    ints = [Laurent.constant(k) for k in _INT_SEQ[:max(need, 6)]]
    negs = [Laurent.uniformizer(-k) for k in range(1, max(need, 3))]
    pos = [Laurent.uniformizer(1), Laurent.uniformizer(2)]
    return ints + negs + pos


def _places(f, env: Dict[str, object], window: Set[int],
            depth: int) -> PlaceSet:
    """The set of primes where the formula holds with every variable bound
    to a tail pattern; exact away from the accumulated window."""
    if isinstance(f, Top):
        return PlaceSet.all_primes()
    if isinstance(f, Bottom):
        return PlaceSet.empty()
    if isinstance(f, Not):
        return _places(f.body, env, window, depth).complement()
    if isinstance(f, And):
        return _places(f.lhs, env, window, depth).meet(
            _places(f.rhs, env, window, depth))
    if isinstance(f, Or):
        return _places(f.lhs, env, window, depth).join(
            _places(f.rhs, env, window, depth))
    if isinstance(f, Implies):
        return _places(f.lhs, env, window, depth).complement().join(
            _places(f.rhs, env, window, depth))
    if isinstance(f, Forall):
        inner = Exists(f.var, Not(f.body))
        return _places(inner, env, window, depth).complement()
    if isinstance(f, Exists):
        if depth >= _MAX_WITNESS_DEPTH:
            raise UnsupportedFragmentError(
                "quantifier nesting beyond the witness-search depth")
        roots, disc = _witness_candidates(f.body, f.var, env, window)
        if disc is not None:
            return eventual_truth(PowerAtom(2, RatConst(disc)), {})
        out = PlaceSet.empty()
        for cand in roots + _grid(len(roots)):
            window.update(cand.coefficient_primes())
            sub = dict(env)
            sub[f.var] = cand
            out = out.join(_places(f.body, sub, window, depth + 1))
        return out
    return eventual_truth(f, env)


def _decide(f, p: int, env: Dict[str, Fraction], depth: int) -> bool:
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Not):
        return not _decide(f.body, p, env, depth)
    if isinstance(f, And):
        return _decide(f.lhs, p, env, depth) and _decide(f.rhs, p, env, depth)
    if isinstance(f, Or):
        return _decide(f.lhs, p, env, depth) or _decide(f.rhs, p, env, depth)
    if isinstance(f, Implies):
        return (not _decide(f.lhs, p, env, depth)
                or _decide(f.rhs, p, env, depth))
    if isinstance(f, Forall):
        return not _decide(Exists(f.var, Not(f.body)), p, env, depth)
    if isinstance(f, Exists):
        if depth >= _MAX_WITNESS_DEPTH:
            raise UnsupportedFragmentError(
                "quantifier nesting beyond the witness-search depth")
        roots, disc = _witness_candidates(f.body, f.var, env, set(), p)
        if disc is not None:
            return is_square_in_Qp(disc, p)
        for cand in roots + _grid(len(roots)):
            sub = dict(env)
            sub[f.var] = cand.evaluate(p)
            if _decide(f.body, p, sub, depth + 1):
                return True
        return False
    return eval_qf_local(f, p, env)


def decide_at_prime(f, p: int, env: Optional[Mapping] = None) -> bool:
    """Truth of a ring formula at a single prime, components as rationals."""
    if not is_prime(p):
        raise ValueError(f"not a prime: {p}")
    values = {name: Fraction(v) for name, v in (env or {}).items()}
    missing = [v for v in free_variables(f) if v not in values]
    if missing:
        raise ValueError(f"unbound variables: {missing}")
    return _decide(f, p, values, 0)


def _constant_primes(f) -> Set[int]:
    out: Set[int] = set()

    def from_term(t):
        if isinstance(t, RatConst):
            out.update(prime_factors(abs(t.value.numerator)))
            out.update(prime_factors(t.value.denominator))
        elif isinstance(t, Neg):
            from_term(t.body)
        elif isinstance(t, (Add, Sub, Mul)):
            from_term(t.lhs)
            from_term(t.rhs)

    def go(f):
        if isinstance(f, Not):
            go(f.body)
        elif isinstance(f, (And, Or, Implies)):
            go(f.lhs)
            go(f.rhs)
        elif isinstance(f, (Exists, Forall)):
            go(f.body)
        else:
            for attr in ("term", "lhs", "rhs"):
                t = getattr(f, attr, None)
                if t is not None and not isinstance(t, (int, str)):
                    from_term(t)

    go(f)
    return out


def formula_place_set(f, env: Mapping[str, TruncatedAdele]) -> PlaceSet:
    """The set of primes at which the formula holds componentwise, with
    quantifiers resolved by exact bounded witness search."""
    missing = [v for v in free_variables(f) if v not in env]
    if missing:
        raise ValueError(f"unbound variables: {missing}")
    if is_quantifier_free(f):
        return boolean_value(f, env)
    window: Set[int] = set(primes_up_to(_PATCH_LIMIT))
    window.update(_constant_primes(f))
    for a in env.values():
        window.update(p for p, _ in a.explicit)
        if isinstance(a.tail, ConstTail):
            window.update(prime_factors(abs(a.tail.value.numerator)))
            window.update(prime_factors(a.tail.value.denominator))
    tails = {name: a.tail for name, a in env.items()}
    base = _places(f, tails, window, 0)
    for p in sorted(window):
        values = {name: a.component_at(p) for name, a in env.items()}
        base = _with_member(base, p, _decide(f, p, values, 0))
    return base


def eval_adelic_formula(f, env: Optional[Mapping[str, TruncatedAdele]] = None) -> bool:
    """Truth of a ring formula over the restricted product of all the
    p-adic completions.

    Pipeline: reduce the formula to per-place tests plus a counting
    condition, evaluate each test into a place set, then evaluate the
    condition on those sets.
    """
    env = dict(env or {})
    r = fvreduce.reduce(f, fvreduce.Restricted())
    values: Dict[str, PlaceSet] = {}
    for i, psi in enumerate(r.psis):
        values[f"X{i + 1}"] = formula_place_set(psi, env)
    return fvreduce.eval_theta_places(r.theta, values)
