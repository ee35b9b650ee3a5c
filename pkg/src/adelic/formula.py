"""Abstract syntax, parsing and printing for the two input languages.

Ring formulas speak about elements of a commutative ring (locally, a
p-adic field or a finite ring): polynomial equalities plus the predicates
``O(t)`` (integrality), ``D(t, u)`` (valuation comparison) and ``P[n](t)``
(being an n-th power).

Boolean formulas speak about an algebra of sets with the predicates
``C[j]`` (cardinality at least j), ``Fin`` (finiteness) and ``Res[n, r]``
(finite with cardinality congruent to r mod n).

Both languages share their propositional connectives and quantifiers, so
those node types are common.  All nodes are immutable; structural equality
is the intended notion of sameness.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple, Union

__all__ = [
    "Top", "Bottom", "Not", "And", "Or", "Implies", "Exists", "Forall",
    "RingVar", "RatConst", "Add", "Sub", "Mul", "Neg",
    "RingEq", "IntegralAtom", "DividesAtom", "PowerAtom",
    "BoolVar", "ZeroSet", "OneSet", "Meet", "Join", "Compl",
    "SetEq", "SetLe", "CardAtom", "FinAtom", "ResAtom",
    "FormulaSyntaxError",
    "parse_ring_formula", "parse_bool_formula", "parse_bool_term",
    "to_text", "term_to_text",
    "free_variables", "free_term_variables",
    "eliminate_implications", "to_nnf", "rename_apart", "normalize",
    "quantifier_depth", "is_quantifier_free", "is_atom",
]


# --------------------------------------------------------------------------
# shared connectives and quantifiers


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


# --------------------------------------------------------------------------
# ring terms and atoms


@dataclass(frozen=True)
class RingVar:
    name: str


@dataclass(frozen=True)
class RatConst:
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Add:
    lhs: "RingTerm"
    rhs: "RingTerm"


@dataclass(frozen=True)
class Sub:
    lhs: "RingTerm"
    rhs: "RingTerm"


@dataclass(frozen=True)
class Mul:
    lhs: "RingTerm"
    rhs: "RingTerm"


@dataclass(frozen=True)
class Neg:
    body: "RingTerm"


@dataclass(frozen=True)
class RingEq:
    lhs: "RingTerm"
    rhs: "RingTerm"


@dataclass(frozen=True)
class IntegralAtom:
    term: "RingTerm"


@dataclass(frozen=True)
class DividesAtom:
    lhs: "RingTerm"
    rhs: "RingTerm"


@dataclass(frozen=True)
class PowerAtom:
    n: int
    term: "RingTerm"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("P[n] requires n >= 2")


RingTerm = Union[RingVar, RatConst, Add, Sub, Mul, Neg]


# --------------------------------------------------------------------------
# Boolean terms and atoms


@dataclass(frozen=True)
class BoolVar:
    name: str


@dataclass(frozen=True)
class ZeroSet:
    pass


@dataclass(frozen=True)
class OneSet:
    pass


@dataclass(frozen=True)
class Meet:
    lhs: "BoolTerm"
    rhs: "BoolTerm"


@dataclass(frozen=True)
class Join:
    lhs: "BoolTerm"
    rhs: "BoolTerm"


@dataclass(frozen=True)
class Compl:
    body: "BoolTerm"


@dataclass(frozen=True)
class SetEq:
    lhs: "BoolTerm"
    rhs: "BoolTerm"


@dataclass(frozen=True)
class SetLe:
    lhs: "BoolTerm"
    rhs: "BoolTerm"


@dataclass(frozen=True)
class CardAtom:
    j: int
    term: "BoolTerm"

    def __post_init__(self):
        if self.j < 1:
            raise ValueError("C[j] requires j >= 1")


@dataclass(frozen=True)
class FinAtom:
    term: "BoolTerm"


@dataclass(frozen=True)
class ResAtom:
    n: int
    r: int
    term: "BoolTerm"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("Res[n, r] requires n >= 1")
        if not 0 <= self.r < self.n:
            raise ValueError("Res[n, r] requires 0 <= r < n")


BoolTerm = Union[BoolVar, ZeroSet, OneSet, Meet, Join, Compl]

Formula = Union[
    Top, Bottom, Not, And, Or, Implies, Exists, Forall,
    RingEq, IntegralAtom, DividesAtom, PowerAtom,
    SetEq, SetLe, CardAtom, FinAtom, ResAtom,
]

_CONNECTIVES = (Not, And, Or, Implies, Exists, Forall, Top, Bottom)
_RING_ATOMS = (RingEq, IntegralAtom, DividesAtom, PowerAtom)
_BOOL_ATOMS = (SetEq, SetLe, CardAtom, FinAtom, ResAtom)


def is_atom(f) -> bool:
    return isinstance(f, _RING_ATOMS + _BOOL_ATOMS)


# --------------------------------------------------------------------------
# printing


def _ring_term_prec(t) -> int:
    if isinstance(t, (Add, Sub)):
        return 1
    if isinstance(t, Mul):
        return 2
    if isinstance(t, Neg):
        return 3
    if isinstance(t, RatConst) and t.value < 0:
        return 3
    return 4


def _bool_term_prec(t) -> int:
    if isinstance(t, Join):
        return 1
    if isinstance(t, Meet):
        return 2
    if isinstance(t, Compl):
        return 3
    return 4


def term_to_text(t) -> str:
    """Render a ring or Boolean term canonically."""

    def ring(t, ctx: int) -> str:
        if isinstance(t, RingVar):
            s = t.name
        elif isinstance(t, RatConst):
            s = str(t.value)
        elif isinstance(t, Add):
            s = f"{ring(t.lhs, 1)} + {ring(t.rhs, 2)}"
        elif isinstance(t, Sub):
            s = f"{ring(t.lhs, 1)} - {ring(t.rhs, 2)}"
        elif isinstance(t, Mul):
            s = f"{ring(t.lhs, 2)} * {ring(t.rhs, 3)}"
        elif isinstance(t, Neg):
            # A constant directly after "-" would lex as a signed literal,
            # so force parentheses around it.
            s = f"-{ring(t.body, 5 if isinstance(t.body, RatConst) else 4)}"
        else:
            raise TypeError(f"not a ring term: {t!r}")
        return f"({s})" if _ring_term_prec(t) < ctx else s

    def bool_(t, ctx: int) -> str:
        if isinstance(t, BoolVar):
            s = t.name
        elif isinstance(t, ZeroSet):
            s = "0"
        elif isinstance(t, OneSet):
            s = "1"
        elif isinstance(t, Join):
            s = f"{bool_(t.lhs, 1)} v {bool_(t.rhs, 2)}"
        elif isinstance(t, Meet):
            s = f"{bool_(t.lhs, 2)} ^ {bool_(t.rhs, 3)}"
        elif isinstance(t, Compl):
            s = f"~{bool_(t.body, 4)}"
        else:
            raise TypeError(f"not a term: {t!r}")
        return f"({s})" if _bool_term_prec(t) < ctx else s

    if isinstance(t, (BoolVar, ZeroSet, OneSet, Meet, Join, Compl)):
        return bool_(t, 0)
    return ring(t, 0)


def _formula_prec(f) -> int:
    if isinstance(f, (Exists, Forall)):
        return 0
    if isinstance(f, Implies):
        return 1
    if isinstance(f, Or):
        return 2
    if isinstance(f, And):
        return 3
    if isinstance(f, Not):
        return 4
    return 5


def to_text(f) -> str:
    """Render a formula canonically; ``parse . to_text`` is the identity."""

    def go(f, ctx: int) -> str:
        if isinstance(f, Top):
            s = "true"
        elif isinstance(f, Bottom):
            s = "false"
        elif isinstance(f, Not):
            s = f"!{go(f.body, 5)}"
        elif isinstance(f, And):
            s = f"{go(f.lhs, 3)} & {go(f.rhs, 4)}"
        elif isinstance(f, Or):
            s = f"{go(f.lhs, 2)} | {go(f.rhs, 3)}"
        elif isinstance(f, Implies):
            s = f"{go(f.lhs, 2)} -> {go(f.rhs, 1)}"
        elif isinstance(f, Exists):
            s = f"exists {f.var} . {go(f.body, 0)}"
        elif isinstance(f, Forall):
            s = f"forall {f.var} . {go(f.body, 0)}"
        elif isinstance(f, RingEq):
            s = f"{term_to_text(f.lhs)} = {term_to_text(f.rhs)}"
        elif isinstance(f, IntegralAtom):
            s = f"O({term_to_text(f.term)})"
        elif isinstance(f, DividesAtom):
            s = f"D({term_to_text(f.lhs)}, {term_to_text(f.rhs)})"
        elif isinstance(f, PowerAtom):
            s = f"P[{f.n}]({term_to_text(f.term)})"
        elif isinstance(f, SetEq):
            s = f"{term_to_text(f.lhs)} = {term_to_text(f.rhs)}"
        elif isinstance(f, SetLe):
            s = f"{term_to_text(f.lhs)} <= {term_to_text(f.rhs)}"
        elif isinstance(f, CardAtom):
            s = f"C[{f.j}]({term_to_text(f.term)})"
        elif isinstance(f, FinAtom):
            s = f"Fin({term_to_text(f.term)})"
        elif isinstance(f, ResAtom):
            s = f"Res[{f.n},{f.r}]({term_to_text(f.term)})"
        else:
            raise TypeError(f"not a formula: {f!r}")
        return f"({s})" if _formula_prec(f) < ctx else s

    return go(f, 0)


# --------------------------------------------------------------------------
# lexing


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int = 0):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_SYMBOLS = ("->", "<=", "(", ")", "[", "]", ",", "=", "+", "-", "*", "^",
            "~", "!", "&", "|", ".", "/")


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(("sym", sym, i))
                i += len(sym)
                break
        else:
            raise FormulaSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    """Recursive-descent parser over the shared token stream."""

    def __init__(self, text: str, lang: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.lang = lang  # "ring" | "bool"

    # token helpers

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.pos]

    def next(self) -> Tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, kind: str, value: str = None) -> bool:
        k, v, _ = self.peek()
        if k == kind and (value is None or v == value):
            self.pos += 1
            return True
        return False

    def expect(self, kind: str, value: str = None):
        k, v, p = self.peek()
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            raise FormulaSyntaxError(f"expected {want!r}, found {v!r}", p)
        self.pos += 1
        return v

    # formula grammar (shared shape)

    def formula(self):
        lhs = self.or_formula()
        if self.accept("sym", "->"):
            return Implies(lhs, self.formula())
        return lhs

    def or_formula(self):
        f = self.and_formula()
        while self.accept("sym", "|"):
            f = Or(f, self.and_formula())
        return f

    def and_formula(self):
        f = self.unary_formula()
        while self.accept("sym", "&"):
            f = And(f, self.unary_formula())
        return f

    def unary_formula(self):
        k, v, p = self.peek()
        if k == "sym" and v == "!":
            self.next()
            return Not(self.unary_formula())
        if k == "name" and v in ("exists", "forall"):
            self.next()
            var = self.expect("name")
            self._check_var_name(var)
            self.expect("sym", ".")
            body = self.formula()
            return Exists(var, body) if v == "exists" else Forall(var, body)
        if k == "name" and v == "true":
            self.next()
            return Top()
        if k == "name" and v == "false":
            self.next()
            return Bottom()
        if k == "sym" and v == "(":
            # Could enclose a formula or the left term of a comparison;
            # try the comparison reading first and fall back.
            save = self.pos
            try:
                return self.comparison_atom()
            except FormulaSyntaxError:
                self.pos = save
            self.next()
            f = self.formula()
            self.expect("sym", ")")
            return f
        return self.atom()

    def _check_var_name(self, name: str):
        if name in self._reserved():
            raise FormulaSyntaxError(f"{name!r} is reserved", self.peek()[2])

    def _reserved(self):
        if self.lang == "ring":
            return {"exists", "forall", "true", "false", "O", "D", "P"}
        return {"exists", "forall", "true", "false", "C", "Fin", "Res", "v"}

    # language-specific atoms

    def atom(self):
        k, v, p = self.peek()
        if self.lang == "ring":
            if k == "name" and v == "O":
                self.next()
                self.expect("sym", "(")
                t = self.term()
                self.expect("sym", ")")
                return IntegralAtom(t)
            if k == "name" and v == "D":
                self.next()
                self.expect("sym", "(")
                lhs = self.term()
                self.expect("sym", ",")
                rhs = self.term()
                self.expect("sym", ")")
                return DividesAtom(lhs, rhs)
            if k == "name" and v == "P":
                self.next()
                self.expect("sym", "[")
                n = int(self.expect("int"))
                self.expect("sym", "]")
                self.expect("sym", "(")
                t = self.term()
                self.expect("sym", ")")
                if n < 2:
                    raise FormulaSyntaxError("P[n] requires n >= 2", p)
                return PowerAtom(n, t)
        else:
            if k == "name" and v == "C":
                self.next()
                self.expect("sym", "[")
                j = int(self.expect("int"))
                self.expect("sym", "]")
                self.expect("sym", "(")
                t = self.term()
                self.expect("sym", ")")
                if j < 1:
                    raise FormulaSyntaxError("C[j] requires j >= 1", p)
                return CardAtom(j, t)
            if k == "name" and v == "Fin":
                self.next()
                self.expect("sym", "(")
                t = self.term()
                self.expect("sym", ")")
                return FinAtom(t)
            if k == "name" and v == "Res":
                self.next()
                self.expect("sym", "[")
                n = int(self.expect("int"))
                self.expect("sym", ",")
                r = int(self.expect("int"))
                self.expect("sym", "]")
                self.expect("sym", "(")
                t = self.term()
                self.expect("sym", ")")
                if n < 1 or not 0 <= r < n:
                    raise FormulaSyntaxError(
                        "Res[n, r] requires n >= 1 and 0 <= r < n", p)
                return ResAtom(n, r, t)
        return self.comparison_atom()

    def comparison_atom(self):
        lhs = self.term()
        k, v, p = self.peek()
        if self.accept("sym", "="):
            if self.lang == "ring":
                return RingEq(lhs, self.term())
            return SetEq(lhs, self.term())
        if self.lang == "bool" and self.accept("sym", "<="):
            return SetLe(lhs, self.term())
        raise FormulaSyntaxError(f"expected comparison, found {v!r}", p)

    # terms

    def term(self):
        if self.lang == "ring":
            return self.ring_sum()
        return self.bool_join()

    def ring_sum(self):
        t = self.ring_product()
        while True:
            if self.accept("sym", "+"):
                t = Add(t, self.ring_product())
            elif self.accept("sym", "-"):
                t = Sub(t, self.ring_product())
            else:
                return t

    def ring_product(self):
        t = self.ring_primary()
        while self.accept("sym", "*"):
            t = Mul(t, self.ring_primary())
        return t

    def ring_primary(self):
        k, v, p = self.peek()
        if k == "sym" and v == "-":
            self.next()
            if self.peek()[0] == "int":
                # signed literal: the sign folds into the constant
                inner = self.ring_primary()
                return RatConst(-inner.value)
            return Neg(self.ring_primary())
        if k == "sym" and v == "(":
            self.next()
            t = self.ring_sum()
            self.expect("sym", ")")
            return t
        if k == "int":
            self.next()
            num = int(v)
            if self.accept("sym", "/"):
                den = int(self.expect("int"))
                if den == 0:
                    raise FormulaSyntaxError("zero denominator", p)
                return RatConst(Fraction(num, den))
            return RatConst(Fraction(num))
        if k == "name":
            if v in self._reserved():
                raise FormulaSyntaxError(f"{v!r} is reserved", p)
            self.next()
            return RingVar(v)
        raise FormulaSyntaxError(f"expected a term, found {v!r}", p)

    def bool_join(self):
        t = self.bool_meet()
        while True:
            k, v, _ = self.peek()
            if k == "name" and v == "v":
                self.next()
                t = Join(t, self.bool_meet())
            else:
                return t

    def bool_meet(self):
        t = self.bool_primary()
        while self.accept("sym", "^"):
            t = Meet(t, self.bool_primary())
        return t

    def bool_primary(self):
        k, v, p = self.peek()
        if k == "sym" and v == "~":
            self.next()
            return Compl(self.bool_primary())
        if k == "sym" and v == "(":
            self.next()
            t = self.bool_join()
            self.expect("sym", ")")
            return t
        if k == "int" and v == "0":
            self.next()
            return ZeroSet()
        if k == "int" and v == "1":
            self.next()
            return OneSet()
        if k == "name":
            if v in self._reserved():
                raise FormulaSyntaxError(f"{v!r} is reserved", p)
            self.next()
            return BoolVar(v)
        raise FormulaSyntaxError(f"expected a set term, found {v!r}", p)


def parse_ring_formula(text: str):
    p = _Parser(text, "ring")
    f = p.formula()
    p.expect("end")
    return f


def parse_bool_formula(text: str):
    p = _Parser(text, "bool")
    f = p.formula()
    p.expect("end")
    return f


def parse_bool_term(text: str):
    p = _Parser(text, "bool")
    t = p.bool_join()
    p.expect("end")
    return t


# --------------------------------------------------------------------------
# structural utilities


def free_term_variables(t) -> List[str]:
    """Variables of a term, in first-occurrence order."""
    out: Dict[str, None] = {}
    visited: set = set()

    def walk(t):
        if id(t) in visited:
            return
        visited.add(id(t))
        if isinstance(t, (RingVar, BoolVar)):
            out.setdefault(t.name)
        elif isinstance(t, (Add, Sub, Mul, Meet, Join)):
            walk(t.lhs)
            walk(t.rhs)
        elif isinstance(t, (Neg, Compl)):
            walk(t.body)

    walk(t)
    return list(out)


def _atom_terms(f) -> list:
    if isinstance(f, (RingEq, DividesAtom, SetEq, SetLe)):
        return [f.lhs, f.rhs]
    if isinstance(f, (IntegralAtom, PowerAtom)):
        return [f.term]
    if isinstance(f, (CardAtom, FinAtom, ResAtom)):
        return [f.term]
    return []


def free_variables(f) -> List[str]:
    """Free variables of a formula, ordered by first free occurrence."""
    out: Dict[str, None] = {}
    visited: set = set()

    def walk(f, bound: tuple):
        if (id(f), bound) in visited:
            return
        visited.add((id(f), bound))
        if isinstance(f, (Top, Bottom)):
            return
        if isinstance(f, Not):
            walk(f.body, bound)
        elif isinstance(f, (And, Or, Implies)):
            walk(f.lhs, bound)
            walk(f.rhs, bound)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, bound + (f.var,))
        else:
            for t in _atom_terms(f):
                for name in free_term_variables(t):
                    if name not in bound:
                        out.setdefault(name)

    walk(f, ())
    return list(out)


def eliminate_implications(f):
    """Rewrite ``a -> b`` into ``!a | b`` throughout."""
    if isinstance(f, Implies):
        return Or(Not(eliminate_implications(f.lhs)),
                  eliminate_implications(f.rhs))
    if isinstance(f, Not):
        return Not(eliminate_implications(f.body))
    if isinstance(f, (And, Or)):
        return type(f)(eliminate_implications(f.lhs),
                       eliminate_implications(f.rhs))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, eliminate_implications(f.body))
    return f


def to_nnf(f):
    """Negation normal form: negations pushed onto atoms."""
    f = eliminate_implications(f)

    def push(f, negate: bool):
        if isinstance(f, Top):
            return Bottom() if negate else f
        if isinstance(f, Bottom):
            return Top() if negate else f
        if isinstance(f, Not):
            return push(f.body, not negate)
        if isinstance(f, And):
            cls = Or if negate else And
            return cls(push(f.lhs, negate), push(f.rhs, negate))
        if isinstance(f, Or):
            cls = And if negate else Or
            return cls(push(f.lhs, negate), push(f.rhs, negate))
        if isinstance(f, Exists):
            cls = Forall if negate else Exists
            return cls(f.var, push(f.body, negate))
        if isinstance(f, Forall):
            cls = Exists if negate else Forall
            return cls(f.var, push(f.body, negate))
        return Not(f) if negate else f

    return push(f, False)


def _subst_var(f, old: str, new: str):
    """Rename free occurrences of a variable (both languages)."""

    def term(t):
        if isinstance(t, RingVar) and t.name == old:
            return RingVar(new)
        if isinstance(t, BoolVar) and t.name == old:
            return BoolVar(new)
        if isinstance(t, (Add, Sub, Mul, Meet, Join)):
            return type(t)(term(t.lhs), term(t.rhs))
        if isinstance(t, (Neg, Compl)):
            return type(t)(term(t.body))
        return t

    def go(f):
        if isinstance(f, (Top, Bottom)):
            return f
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(go(f.lhs), go(f.rhs))
        if isinstance(f, (Exists, Forall)):
            if f.var == old:
                return f
            return type(f)(f.var, go(f.body))
        if isinstance(f, (RingEq, DividesAtom, SetEq, SetLe)):
            return type(f)(term(f.lhs), term(f.rhs))
        if isinstance(f, IntegralAtom):
            return IntegralAtom(term(f.term))
        if isinstance(f, PowerAtom):
            return PowerAtom(f.n, term(f.term))
        if isinstance(f, CardAtom):
            return CardAtom(f.j, term(f.term))
        if isinstance(f, FinAtom):
            return FinAtom(term(f.term))
        if isinstance(f, ResAtom):
            return ResAtom(f.n, f.r, term(f.term))
        raise TypeError(f"not a formula: {f!r}")

    return go(f)


def rename_apart(f):
    """Give every binder a name distinct from all other binders and free
    variables.  Free variables are untouched; the pass is idempotent."""
    used = set(free_variables(f))

    def fresh(name: str) -> str:
        if name not in used:
            return name
        i = 1
        while f"{name}_{i}" in used:
            i += 1
        return f"{name}_{i}"

    def go(f):
        if isinstance(f, (Top, Bottom)) or is_atom(f):
            return f
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, (And, Or, Implies)):
            return type(f)(go(f.lhs), go(f.rhs))
        if isinstance(f, (Exists, Forall)):
            name = fresh(f.var)
            used.add(name)
            body = f.body if name == f.var else _subst_var(f.body, f.var, name)
            return type(f)(name, go(body))
        raise TypeError(f"not a formula: {f!r}")

    return go(f)


def normalize(f):
    """Implications gone, negation normal form, binders renamed apart."""
    return rename_apart(to_nnf(f))


def quantifier_depth(f) -> int:
    memo: Dict[int, int] = {}

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, (Exists, Forall)):
            out = 1 + go(f.body)
        elif isinstance(f, Not):
            out = go(f.body)
        elif isinstance(f, (And, Or, Implies)):
            out = max(go(f.lhs), go(f.rhs))
        else:
            out = 0
        memo[key] = out
        return out

    return go(f)


def is_quantifier_free(f) -> bool:
    return quantifier_depth(f) == 0
