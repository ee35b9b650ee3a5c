"""Quantifier elimination and decision for the set-algebra language.

The intended models are full powersets P(Omega) with the predicates
``C[j]`` (at least j elements), ``Fin`` (finite) and ``Res[n, r]``
(finite of size congruent to r mod n).  Quantified variables range over
*all* subsets.  For infinite Omega the first-order theory does not depend
on Omega, and quantifiers can be eliminated exactly.

The elimination of ``exists X . phi`` works at the granularity of
cardinality classes.  With ``t = 1 + (largest C-index in phi)`` and ``L``
the lcm of the Res moduli, the class of a set is

* ``("E", a)``    -- exactly ``a`` elements, ``a < t``;
* ``("LF", r)``   -- finite with at least ``t`` elements, size ``r mod L``;
* ``("INF",)``    -- infinite.

phi cannot distinguish two choices of X whose intersections with each
minterm of the remaining variables have equal classes, so the existential
quantifier reduces to a finite disjunction over class assignments.  Each
assignment contributes the exact condition on the minterm sizes under
which it is realizable by an actual subset; those conditions use C-indices
up to ``2t + L - 1``, which is how the indices grow per eliminated
quantifier.
"""

from __future__ import annotations

import math
import sys
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .formula import (
    And, Bottom, BoolVar, CardAtom, Compl, Exists, FinAtom, Forall, Implies,
    Join, Meet, Not, OneSet, Or, ResAtom, SetEq, SetLe, Top, ZeroSet,
    free_variables, quantifier_depth,
)
from .localfield import CostGuardError
from .placesets import PlaceSet

__all__ = [
    "max_card_index", "res_modulus_lcm", "desugar_comparisons",
    "eliminate_quantifiers", "decide_sentence", "eval_bool_formula",
    "eval_bool_term", "bounded_witness_eval",
]

_MAX_PARAMS = 6
_MAX_THRESHOLD = 64
_MAX_WITNESS_PRODUCT = 200_000
_WITNESS_BUDGET = 40_000
_MAX_WITNESS_DEPTH = 3

# Eliminated formulas nest a few hundred levels deep in the worst case;
# the walkers here recurse over them, so give them headroom.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 10_000))


def _or_all(pieces: List) -> object:
    """Balanced disjunction; keeps formula depth logarithmic."""
    if not pieces:
        return Bottom()
    while len(pieces) > 1:
        paired = [Or(pieces[i], pieces[i + 1])
                  for i in range(0, len(pieces) - 1, 2)]
        if len(pieces) % 2:
            paired.append(pieces[-1])
        pieces = paired
    return pieces[0]


# --------------------------------------------------------------------------
# formula measurements


def max_card_index(f) -> int:
    """Largest j among C[j] atoms (0 when there are none)."""
    memo: Dict[int, int] = {}

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, CardAtom):
            out = f.j
        elif isinstance(f, Not):
            out = go(f.body)
        elif isinstance(f, (And, Or, Implies)):
            out = max(go(f.lhs), go(f.rhs))
        elif isinstance(f, (Exists, Forall)):
            out = go(f.body)
        else:
            out = 0
        memo[key] = out
        return out

    return go(f)


def res_modulus_lcm(f) -> int:
    """lcm of the moduli of all Res atoms (1 when there are none)."""
    memo: Dict[int, int] = {}

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, ResAtom):
            out = f.n
        elif isinstance(f, Not):
            out = go(f.body)
        elif isinstance(f, (And, Or, Implies)):
            out = math.lcm(go(f.lhs), go(f.rhs))
        elif isinstance(f, (Exists, Forall)):
            out = go(f.body)
        else:
            out = 1
        memo[key] = out
        return out

    return go(f)


def desugar_comparisons(f):
    """Rewrite term equalities and inclusions into C[1] atoms.

    ``s = u`` becomes "the symmetric difference is empty" and ``s <= u``
    becomes "s minus u is empty".
    """
    memo: Dict[int, object] = {}
    keep: List[object] = []

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, SetEq):
            delta = Join(Meet(f.lhs, Compl(f.rhs)), Meet(Compl(f.lhs), f.rhs))
            out = Not(CardAtom(1, delta))
        elif isinstance(f, SetLe):
            out = Not(CardAtom(1, Meet(f.lhs, Compl(f.rhs))))
        elif isinstance(f, Not):
            out = Not(go(f.body))
        elif isinstance(f, (And, Or, Implies)):
            out = type(f)(go(f.lhs), go(f.rhs))
        elif isinstance(f, (Exists, Forall)):
            out = type(f)(f.var, go(f.body))
        else:
            out = f
        memo[key] = out
        keep.append(f)
        return out

    return go(f)


# --------------------------------------------------------------------------
# structural simplification (keeps eliminated formulas readable and small)


def _simplify(f):
    memo: Dict[int, object] = {}
    keep: List[object] = []

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        out = build(f)
        memo[key] = out
        keep.append(f)
        return out

    def build(f):
        if isinstance(f, Not):
            b = go(f.body)
            if isinstance(b, Top):
                return Bottom()
            if isinstance(b, Bottom):
                return Top()
            if isinstance(b, Not):
                return b.body
            return Not(b)
        if isinstance(f, And):
            l, r = go(f.lhs), go(f.rhs)
            if isinstance(l, Bottom) or isinstance(r, Bottom):
                return Bottom()
            if isinstance(l, Top):
                return r
            if isinstance(r, Top):
                return l
            if l == r:
                return l
            return And(l, r)
        if isinstance(f, Or):
            l, r = go(f.lhs), go(f.rhs)
            if isinstance(l, Top) or isinstance(r, Top):
                return Top()
            if isinstance(l, Bottom):
                return r
            if isinstance(r, Bottom):
                return l
            if l == r:
                return l
            return Or(l, r)
        if isinstance(f, Implies):
            l, r = go(f.lhs), go(f.rhs)
            if isinstance(l, Bottom) or isinstance(r, Top):
                return Top()
            if isinstance(l, Top):
                return r
            if isinstance(r, Bottom):
                return Not(l) if not isinstance(l, Not) else l.body
            return Implies(l, r)
        if isinstance(f, (Exists, Forall)):
            b = go(f.body)
            if isinstance(b, (Top, Bottom)):
                return b
            return type(f)(f.var, b)
        return f

    return go(f)


# --------------------------------------------------------------------------
# cardinality classes


def _classes(t: int, L: int) -> List[tuple]:
    out: List[tuple] = [("E", a) for a in range(t)]
    out.extend(("LF", r) for r in range(L))
    out.append(("INF",))
    return out


def _exact_size(c: int, term) -> object:
    """Formula stating |term| = c."""
    if c == 0:
        return Not(CardAtom(1, term))
    return And(CardAtom(c, term), Not(CardAtom(c + 1, term)))


def _at_least_congruent(c: int, r: int, L: int, term) -> object:
    """Formula stating |term| finite, >= c, and congruent to r mod L."""
    if L == 1:
        return And(CardAtom(c, term), FinAtom(term))
    return And(CardAtom(c, term), ResAtom(L, r % L, term))


def _split_condition(alpha: tuple, beta: tuple, term, t: int, L: int):
    """Exact condition on |term| for a partition with classes alpha, beta."""
    if alpha[0] == "INF" or beta[0] == "INF":
        # An infinite set can always shed an arbitrary finite-class part
        # or split into two infinite halves, and a finite set can do
        # neither with an infinite part.
        return Not(FinAtom(term))
    if alpha[0] == "E" and beta[0] == "E":
        return _exact_size(alpha[1] + beta[1], term)
    if alpha[0] == "E" or beta[0] == "E":
        a = alpha[1] if alpha[0] == "E" else beta[1]
        r = beta[1] if alpha[0] == "E" else alpha[1]
        return _at_least_congruent(t + a, a + r, L, term)
    # both large finite: sizes b1, b2 >= t with b1 = r1, b2 = r2 (mod L)
    r1, r2 = alpha[1], beta[1]
    main = _at_least_congruent(2 * t + L - 1, r1 + r2, L, term)
    if L == 1:
        return main
    out = main
    for n in range(2 * t, 2 * t + L - 1):
        if n % L != (r1 + r2) % L:
            continue
        if any(b1 % L == r1 % L for b1 in range(t, n - t + 1)):
            out = Or(out, _exact_size(n, term))
    return out


# --------------------------------------------------------------------------
# atom bookkeeping for the minterm DP


class _AtomTracker:
    """Per-atom running state over the minterm scan.

    C[j]:      count capped at j.
    Fin:       1 when an infinite cell has been seen.
    Res[n,r]:  (infinite-seen, running size mod n).
    """

    def __init__(self, atom, t: int):
        self.atom = atom
        self.t = t
        if isinstance(atom, CardAtom):
            self.start = 0
        elif isinstance(atom, FinAtom):
            self.start = 0
        elif isinstance(atom, ResAtom):
            self.start = (0, 0)
        else:
            raise TypeError(f"untracked atom {atom!r}")

    def contribution(self, cls: tuple):
        a = self.atom
        if isinstance(a, CardAtom):
            if cls[0] == "E":
                return min(cls[1], a.j)
            return a.j  # LF has >= t > j elements; INF is infinite
        if isinstance(a, FinAtom):
            return 1 if cls[0] == "INF" else 0
        if cls[0] == "INF":
            return (1, 0)
        size_mod = cls[1] % a.n
        return (0, size_mod)

    def add(self, state, contrib):
        a = self.atom
        if isinstance(a, CardAtom):
            return min(a.j, state + contrib)
        if isinstance(a, FinAtom):
            return state | contrib
        return (state[0] | contrib[0], (state[1] + contrib[1]) % a.n)

    def truth(self, state) -> bool:
        a = self.atom
        if isinstance(a, CardAtom):
            return state >= a.j
        if isinstance(a, FinAtom):
            return state == 0
        return state[0] == 0 and state[1] == a.r % a.n


def _collect_atoms(f, out: List, _visited: Optional[set] = None) -> None:
    visited = set() if _visited is None else _visited
    if id(f) in visited:
        return
    visited.add(id(f))
    if isinstance(f, (CardAtom, FinAtom, ResAtom)):
        if f not in out:
            out.append(f)
    elif isinstance(f, Not):
        _collect_atoms(f.body, out, visited)
    elif isinstance(f, (And, Or, Implies)):
        _collect_atoms(f.lhs, out, visited)
        _collect_atoms(f.rhs, out, visited)
    elif isinstance(f, (Exists, Forall)):
        raise ValueError("matrix must be quantifier-free")
    elif not isinstance(f, (Top, Bottom)):
        raise TypeError(f"unexpected node in matrix: {f!r}")


def _eval_with_atom_truths(f, truths: Dict) -> bool:
    memo: Dict[int, bool] = {}

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, Top):
            out = True
        elif isinstance(f, Bottom):
            out = False
        elif isinstance(f, Not):
            out = not go(f.body)
        elif isinstance(f, And):
            out = go(f.lhs) and go(f.rhs)
        elif isinstance(f, Or):
            out = go(f.lhs) or go(f.rhs)
        elif isinstance(f, Implies):
            out = (not go(f.lhs)) or go(f.rhs)
        else:
            out = truths[f]
        memo[key] = out
        return out

    return go(f)


def _term_bit(term, assignment: Dict[str, bool]) -> bool:
    if isinstance(term, BoolVar):
        return assignment[term.name]
    if isinstance(term, ZeroSet):
        return False
    if isinstance(term, OneSet):
        return True
    if isinstance(term, Meet):
        return _term_bit(term.lhs, assignment) and _term_bit(term.rhs, assignment)
    if isinstance(term, Join):
        return _term_bit(term.lhs, assignment) or _term_bit(term.rhs, assignment)
    if isinstance(term, Compl):
        return not _term_bit(term.body, assignment)
    raise TypeError(f"not a term: {term!r}")


def _minterm_term(params: Sequence[str], sigma: Tuple[bool, ...]):
    if not params:
        return OneSet()
    out = None
    for name, bit in zip(params, sigma):
        lit = BoolVar(name) if bit else Compl(BoolVar(name))
        out = lit if out is None else Meet(out, lit)
    return out


# --------------------------------------------------------------------------
# the existential step


def _eliminate_exists(var: str, matrix, L: int):
    if var not in free_variables(matrix):
        return _simplify(matrix)
    params = [v for v in free_variables(matrix) if v != var]
    if len(params) > _MAX_PARAMS:
        raise CostGuardError(
            f"{len(params)} parameters in one elimination exceed the limit "
            f"of {_MAX_PARAMS}")
    atoms: List = []
    _collect_atoms(matrix, atoms)
    t = max_card_index(matrix) + 1
    if t > _MAX_THRESHOLD:
        raise CostGuardError(
            f"cardinality threshold {t} exceeds the limit of {_MAX_THRESHOLD}")
    trackers = [_AtomTracker(a, t) for a in atoms]
    classes = _classes(t, L)

    sigmas = [tuple(bool(i >> b & 1) for b in range(len(params)))
              for i in range(1 << len(params))]

    # Which atoms' terms contain the X-cell / complement-cell of each
    # minterm, and the grouped class-pair transitions per minterm.
    layers = []
    for sigma in sigmas:
        assignment = dict(zip(params, sigma))
        in_bits = [_term_bit(tr.atom.term, {**assignment, var: True})
                   for tr in trackers]
        out_bits = [_term_bit(tr.atom.term, {**assignment, var: False})
                    for tr in trackers]
        groups: Dict[tuple, List[Tuple[tuple, tuple]]] = {}
        for alpha in classes:
            for beta in classes:
                effect = tuple(
                    (tr.contribution(alpha) if inb else None,
                     tr.contribution(beta) if outb else None)
                    for tr, inb, outb in zip(trackers, in_bits, out_bits))
                groups.setdefault(effect, []).append((alpha, beta))
        layers.append(sorted(groups.items(), key=lambda kv: repr(kv[0])))

    minterm_terms = [_minterm_term(params, sigma) for sigma in sigmas]

    def apply_effect(states: tuple, effect: tuple) -> tuple:
        out = []
        for tr, st, (cin, cout) in zip(trackers, states, effect):
            if cin is not None:
                st = tr.add(st, cin)
            if cout is not None:
                st = tr.add(st, cout)
            out.append(st)
        return tuple(out)

    memo: Dict[Tuple[int, tuple], object] = {}

    def rec(idx: int, states: tuple):
        key = (idx, states)
        if key in memo:
            return memo[key]
        if idx == len(sigmas):
            truths = {tr.atom: tr.truth(st) for tr, st in zip(trackers, states)}
            out = Top() if _eval_with_atom_truths(matrix, truths) else Bottom()
        else:
            term = minterm_terms[idx]
            branches = []
            for effect, pairs in layers[idx]:
                tail = rec(idx + 1, apply_effect(states, effect))
                if isinstance(tail, Bottom):
                    continue
                pieces, seen = [], set()
                for alpha, beta in pairs:
                    piece = _split_condition(alpha, beta, term, t, L)
                    if piece in seen:
                        continue
                    seen.add(piece)
                    pieces.append(piece)
                cond = _or_all(pieces)
                branches.append(cond if isinstance(tail, Top)
                                else And(cond, tail))
            out = _or_all(branches)
        memo[key] = out
        return out

    start = tuple(tr.start for tr in trackers)
    return _simplify(rec(0, start))


def eliminate_quantifiers(f):
    """Equivalent quantifier-free formula, valid in every powerset of an
    infinite set.  Comparisons are desugared into C[1] atoms."""
    L = res_modulus_lcm(f)
    f = desugar_comparisons(f)
    memo: Dict[int, object] = {}
    keep: List[object] = []

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, Not):
            out = Not(go(f.body))
        elif isinstance(f, (And, Or, Implies)):
            out = type(f)(go(f.lhs), go(f.rhs))
        elif isinstance(f, Exists):
            out = _eliminate_exists(f.var, go(f.body), L)
        elif isinstance(f, Forall):
            out = _simplify(Not(_eliminate_exists(f.var, Not(go(f.body)), L)))
        else:
            out = f
        memo[key] = out
        keep.append(f)
        return out

    return _simplify(go(f))


# --------------------------------------------------------------------------
# evaluation over concrete set algebras


def eval_bool_term(term, env: Dict[str, PlaceSet]) -> PlaceSet:
    if isinstance(term, BoolVar):
        try:
            return env[term.name]
        except KeyError:
            raise ValueError(f"unbound variable {term.name!r}") from None
    if isinstance(term, ZeroSet):
        return PlaceSet.empty()
    if isinstance(term, OneSet):
        return PlaceSet.all_primes()
    if isinstance(term, Meet):
        return eval_bool_term(term.lhs, env).meet(eval_bool_term(term.rhs, env))
    if isinstance(term, Join):
        return eval_bool_term(term.lhs, env).join(eval_bool_term(term.rhs, env))
    if isinstance(term, Compl):
        return eval_bool_term(term.body, env).complement()
    raise TypeError(f"not a term: {term!r}")


def _eval_qf_places(f, env: Dict[str, PlaceSet]) -> bool:
    memo: Dict[int, bool] = {}
    terms: Dict[int, PlaceSet] = {}

    def term(t):
        key = id(t)
        if key not in terms:
            terms[key] = eval_bool_term(t, env)
        return terms[key]

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, Top):
            out = True
        elif isinstance(f, Bottom):
            out = False
        elif isinstance(f, Not):
            out = not go(f.body)
        elif isinstance(f, And):
            out = go(f.lhs) and go(f.rhs)
        elif isinstance(f, Or):
            out = go(f.lhs) or go(f.rhs)
        elif isinstance(f, Implies):
            out = (not go(f.lhs)) or go(f.rhs)
        elif isinstance(f, SetEq):
            s, u = term(f.lhs), term(f.rhs)
            out = s.difference(u).is_empty() and u.difference(s).is_empty()
        elif isinstance(f, SetLe):
            out = term(f.lhs).difference(term(f.rhs)).is_empty()
        elif isinstance(f, CardAtom):
            card = term(f.term).cardinality()
            out = card is None or card >= f.j
        elif isinstance(f, FinAtom):
            out = term(f.term).is_finite()
        elif isinstance(f, ResAtom):
            card = term(f.term).cardinality()
            out = card is not None and card % f.n == f.r
        else:
            raise TypeError(f"not a formula: {f!r}")
        memo[key] = out
        return out

    return go(f)


def eval_bool_formula(f, env: Optional[Dict[str, PlaceSet]] = None) -> bool:
    """Truth of a formula whose free variables are bound to PlaceSets.

    Quantifiers range over all subsets of the (infinite) universe of
    primes; they are removed by exact elimination before evaluating.
    """
    env = dict(env or {})
    missing = [v for v in free_variables(f) if v not in env]
    if missing:
        raise ValueError(f"unbound variables: {missing}")
    g = eliminate_quantifiers(f)
    return _eval_qf_places(g, env)


def decide_sentence(f) -> bool:
    """Decide a closed formula in the theory of infinite powersets."""
    if free_variables(f):
        raise ValueError("decide_sentence requires a closed formula")
    return eval_bool_formula(f, {})


# --------------------------------------------------------------------------
# bounded witness search (an independent, slower evaluation path)


def _witness_options(minterm: PlaceSet, K: int) -> List[PlaceSet]:
    out: List[PlaceSet] = []
    card = minterm.cardinality()
    if card is not None:
        elems = minterm.elements()
        for j in range(min(K, card) + 1):
            out.append(PlaceSet.finite(elems[:j]))
            out.append(PlaceSet.finite(elems[j:]))
    else:
        for j in range(K + 1):
            out.append(PlaceSet.finite(minterm.first_n(j)))
        for j in range(K + 1):
            out.append(minterm.difference(
                PlaceSet.finite(minterm.first_n(j))))
        out.append(minterm.split_infinite()[0])
    # Canonical PlaceSets make exact deduplication safe.
    dedup: List[PlaceSet] = []
    for s in out:
        if s not in dedup:
            dedup.append(s)
    return dedup


def bounded_witness_eval(f, env: Optional[Dict[str, PlaceSet]] = None) -> bool:
    """Evaluate by trying explicit witnesses for each quantifier.

    For every minterm of the parameters relevant to a quantifier body the
    candidates realize all cardinality classes up to a threshold ``K``
    (small finite parts, small-complement parts, one infinite/infinite
    split), where ``K`` is recomputed from the body so inner searches stay
    as coarse as the remaining formula allows.  Truth only depends on the
    classes of the parts, so the search is exhaustive at that granularity.

    The search carries a global work budget on top of the per-level
    candidate cap; pathological formulas raise :class:`CostGuardError`
    instead of running for hours.
    """
    env = dict(env or {})
    missing = [v for v in free_variables(f) if v not in env]
    if missing:
        raise ValueError(f"unbound variables: {missing}")
    if quantifier_depth(f) > _MAX_WITNESS_DEPTH:
        raise CostGuardError(
            f"witness search supports quantifier depth "
            f"<= {_MAX_WITNESS_DEPTH}")
    budget = [_WITNESS_BUDGET]

    def candidates(current: Dict[str, PlaceSet], body) -> Iterable[PlaceSet]:
        K = (max_card_index(body) + res_modulus_lcm(body)
             + quantifier_depth(body) + 1)
        relevant = set(free_variables(body))
        names = sorted(v for v in current if v in relevant)
        sigmas = [tuple(bool(i >> b & 1) for b in range(len(names)))
                  for i in range(1 << len(names))]
        minterms = []
        for sigma in sigmas:
            m = PlaceSet.all_primes()
            for name, bit in zip(names, sigma):
                part = current[name] if bit else current[name].complement()
                m = m.meet(part)
            minterms.append(m)
        per = [_witness_options(m, K) for m in minterms]
        total = math.prod(len(opts) for opts in per)
        if total > _MAX_WITNESS_PRODUCT:
            raise CostGuardError(
                f"witness search would try {total} candidates")

        def assemble(idx: int, acc: PlaceSet):
            if idx == len(per):
                budget[0] -= 1
                if budget[0] < 0:
                    raise CostGuardError("witness search budget exhausted")
                yield acc
                return
            for part in per[idx]:
                yield from assemble(idx + 1, acc.join(part))

        yield from assemble(0, PlaceSet.empty())

    def go(f, env):
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
            return any(go(f.body, {**env, f.var: X})
                       for X in candidates(env, f.body))
        if isinstance(f, Forall):
            return all(go(f.body, {**env, f.var: X})
                       for X in candidates(env, f.body))
        return _eval_qf_places(f, env)

    return go(f, env)
