"""Feferman-Vaught-style reduction of ring formulas over products.

A first-order ring formula evaluated in a product of rings (all factors at
once) is compiled into finitely many ring formulas evaluated in the single
factors plus one quantifier-free set-algebra condition on the index sets
where those factor formulas hold.  Two product semantics are supported:

* ``FiniteProduct`` -- the direct product of finitely many factors;
* ``Restricted``    -- the subring of a product over an infinite index set
  whose elements satisfy a fixed one-variable formula (concretely ``O(x)``)
  at all but finitely many indices.

The existential step turns a quantifier over product elements into a
choice, at every index, of which sign pattern of the current factor
formulas the witness component realizes.  Each pattern (plus, in
restricted mode, an in/out flag recording whether the component satisfies
the restricting formula) contributes one new factor formula asserting that
some element realizes it; the set condition then states that the index
sets where these pattern formulas hold can be partitioned into choices
whose pattern counts satisfy the previous condition, with only finitely
many out-flag choices.  That partition condition is eliminated exactly, at
the granularity of the cardinality classes used by :mod:`adelic.boolqe`.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .boolqe import (
    _AtomTracker, _at_least_congruent, _classes, _collect_atoms,
    _eval_with_atom_truths, _exact_size, _simplify, _term_bit,
    desugar_comparisons, max_card_index, res_modulus_lcm,
)
from .formula import (
    Add, And, Bottom, BoolVar, CardAtom, Compl, DividesAtom, Exists, FinAtom,
    Forall, Implies, IntegralAtom, Join, Meet, Mul, Neg, Not, OneSet, Or,
    PowerAtom, RatConst, ResAtom, RingEq, RingVar, SetEq, SetLe, Sub, Top,
    ZeroSet, _subst_var, eliminate_implications, free_variables, is_atom,
    is_quantifier_free, parse_bool_formula, parse_ring_formula, rename_apart,
    to_text,
)
from .localfield import (
    CostGuardError, FiniteRing, _count_quantifiers, eval_fo_finite_ring,
)
from .placesets import PlaceSet

__all__ = [
    "FiniteProduct", "Restricted", "Reduction", "ProductStructure",
    "reduce", "brute_force_product_eval", "eval_via_reduction",
    "eval_theta_finite", "eval_theta_places", "rectangles", "parse_factors",
]

_MAX_PSIS = 12           # factor formulas admitted into one existential step
_MAX_PROP_UNITS = 16     # propositional units for the pattern pruning pass
_MAX_SINGLE_PASS = 8     # effect groups handled without state targeting
_MAX_TARGETED = 10       # effect groups per targeted elimination
_MAX_JOINT_STATES = 4096
_MAX_THRESHOLD = 64      # largest exact size the eliminations may pin
_MAX_SERIALIZED_NODES = 200_000
_FO_BUDGET = 10 ** 7


# --------------------------------------------------------------------------
# modes and the reduction record


@dataclass(frozen=True)
class FiniteProduct:
    """Direct product of finitely many factors."""


@dataclass(frozen=True)
class Restricted:
    """Product over an infinite index set, restricted by a one-variable
    formula that witnesses must satisfy at all but finitely many indices."""

    phi: object = field(default_factory=lambda: IntegralAtom(RingVar("x")))

    def __post_init__(self):
        if not is_quantifier_free(self.phi):
            raise ValueError("restricting formula must be quantifier-free")
        if len(free_variables(self.phi)) != 1:
            raise ValueError("restricting formula must have one free variable")


@dataclass(frozen=True)
class Reduction:
    """Factor formulas psi_1..psi_m plus a quantifier-free set condition
    over the variables X1..Xm naming their truth index sets."""

    psis: Tuple
    theta: object
    mode: object

    def to_json(self) -> dict:
        size = _tree_size(self.theta)
        if size > _MAX_SERIALIZED_NODES:
            raise CostGuardError(
                f"set condition with {size} nodes is too large to serialize")
        doc = {
            "psis": [to_text(p) for p in self.psis],
            "theta": to_text(self.theta),
            "mode": "restricted" if isinstance(self.mode, Restricted) else "finite",
        }
        if isinstance(self.mode, Restricted):
            doc["phi"] = to_text(self.mode.phi)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Reduction":
        if doc["mode"] == "restricted":
            mode = Restricted(parse_ring_formula(doc["phi"]))
        else:
            mode = FiniteProduct()
        return cls(
            psis=tuple(parse_ring_formula(s) for s in doc["psis"]),
            theta=parse_bool_formula(doc["theta"]),
            mode=mode,
        )


@dataclass(frozen=True)
class ProductStructure:
    """A direct product of finite rings used as the evaluation harness."""

    factors: Tuple[FiniteRing, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a product needs at least one factor")


def parse_factors(text: str) -> ProductStructure:
    """Parse a factor list such as ``F2,F3,Z4``.

    ``F<p>`` is the prime field Z/p and ``Z<n>`` is Z/n for a prime
    power n.
    """
    from .primes import factorize, is_prime

    factors = []
    for tok in text.split(","):
        tok = tok.strip()
        if len(tok) < 2 or tok[0] not in "FZ" or not tok[1:].isdigit():
            raise ValueError(f"bad factor {tok!r}: expected F<p> or Z<p^k>")
        n = int(tok[1:])
        if tok[0] == "F":
            if not is_prime(n):
                raise ValueError(f"bad factor {tok!r}: {n} is not prime")
            factors.append(FiniteRing(n, 1))
        else:
            parts = factorize(n) if n > 1 else []
            if len(parts) != 1:
                raise ValueError(f"bad factor {tok!r}: {n} is not a prime power")
            factors.append(FiniteRing(parts[0][0], parts[0][1]))
    return ProductStructure(tuple(factors))


def _tree_size(f) -> int:
    """Printed-tree node count of a possibly shared formula DAG."""
    memo: Dict[int, int] = {}
    keep: List[object] = []

    def go(f) -> int:
        key = id(f)
        if key in memo:
            return memo[key]
        kids = []
        for name in ("body", "lhs", "rhs", "term"):
            kid = getattr(f, name, None)
            if kid is not None and not isinstance(kid, (str, int)):
                kids.append(kid)
        out = 1 + sum(go(k) for k in kids)
        memo[key] = out
        keep.append(f)
        return out

    return go(f)


# --------------------------------------------------------------------------
# the reduction proper


def _xvar(i: int) -> BoolVar:
    return BoolVar(f"X{i + 1}")


def _rename_xvars(f, mapping: Dict[str, str]):
    """Rename set variables in a bool formula or term."""
    if isinstance(f, BoolVar):
        return BoolVar(mapping.get(f.name, f.name))
    if isinstance(f, (Top, Bottom, ZeroSet, OneSet)):
        return f
    if isinstance(f, (Not, Compl)):
        return type(f)(_rename_xvars(f.body, mapping))
    if isinstance(f, (And, Or, Implies, Meet, Join, SetEq, SetLe)):
        return type(f)(_rename_xvars(f.lhs, mapping), _rename_xvars(f.rhs, mapping))
    if isinstance(f, CardAtom):
        return CardAtom(f.j, _rename_xvars(f.term, mapping))
    if isinstance(f, FinAtom):
        return FinAtom(_rename_xvars(f.term, mapping))
    if isinstance(f, ResAtom):
        return ResAtom(f.n, f.r, _rename_xvars(f.term, mapping))
    raise TypeError(f"unexpected node: {f!r}")


def _dedup_psis(psis: List, theta):
    """Merge structurally identical factor formulas, renaming theta."""
    seen: Dict[str, int] = {}
    out: List = []
    mapping: Dict[str, str] = {}
    for i, psi in enumerate(psis):
        key = to_text(psi)
        if key not in seen:
            seen[key] = len(out)
            out.append(psi)
        mapping[f"X{i + 1}"] = f"X{seen[key] + 1}"
    if mapping and any(k != v for k, v in mapping.items()):
        theta = _rename_xvars(theta, mapping)
    return out, theta


def _prop_types(formulas: Sequence) -> Optional[List[int]]:
    """Bitmasks of the propositionally realizable truth vectors.

    Distinct atoms and quantified subformulas are treated as independent
    propositional units.  Returns None when there are too many units to
    enumerate, in which case no pruning happens.
    """
    units: Dict[str, int] = {}

    def compile_prop(f):
        if isinstance(f, Top):
            return lambda bits: True
        if isinstance(f, Bottom):
            return lambda bits: False
        if isinstance(f, Not):
            sub = compile_prop(f.body)
            return lambda bits: not sub(bits)
        if isinstance(f, (And, Or, Implies)):
            l, r = compile_prop(f.lhs), compile_prop(f.rhs)
            if isinstance(f, And):
                return lambda bits: l(bits) and r(bits)
            if isinstance(f, Or):
                return lambda bits: l(bits) or r(bits)
            return lambda bits: (not l(bits)) or r(bits)
        idx = units.setdefault(to_text(f), len(units))
        return lambda bits: bool(bits >> idx & 1)

    compiled = [compile_prop(f) for f in formulas]
    if len(units) > _MAX_PROP_UNITS:
        return None
    realizable = set()
    for bits in range(1 << len(units)):
        vec = 0
        for j, fn in enumerate(compiled):
            if fn(bits):
                vec |= 1 << j
        realizable.add(vec)
    return sorted(realizable)


def _conjunction(parts: Sequence):
    out = None
    for p in parts:
        out = p if out is None else And(out, p)
    return Top() if out is None else out


def _exists_step(var: str, psis: List, theta, mode):
    """One existential quantifier over the product, spent against the
    current reduction (theta; psis)."""
    m = len(psis)
    if m > _MAX_PSIS:
        raise CostGuardError(
            f"existential step over {m} factor formulas exceeds the limit "
            f"of {_MAX_PSIS}")
    restricted = isinstance(mode, Restricted)

    if restricted:
        phi_var = next(iter(free_variables(mode.phi)))
        phi = mode.phi if phi_var == var else _subst_var(mode.phi, phi_var, var)
        types = _prop_types(list(psis) + [phi])
        flags: Tuple[Optional[bool], ...] = (False, True)  # in, out
    else:
        phi = None
        types = _prop_types(psis)
        flags = (None,)

    # Build one candidate formula per propositionally consistent sign
    # pattern (and flag).
    if types is None:
        live_patterns = list(range(1 << m))
        live_with_phi = live_without_phi = set(live_patterns)
    elif restricted:
        live_with_phi = {v & ((1 << m) - 1) for v in types if v >> m & 1}
        live_without_phi = {v & ((1 << m) - 1) for v in types if not v >> m & 1}
        live_patterns = sorted(live_with_phi | live_without_phi)
    else:
        live_patterns = sorted(types)
        live_with_phi = live_without_phi = set(live_patterns)

    cells: List[Tuple[int, bool, str]] = []
    chi_index: Dict[str, int] = {}
    chis: List = []
    for pattern in live_patterns:
        for out_flag in flags:
            if restricted and pattern not in (
                    live_without_phi if out_flag else live_with_phi):
                continue
            lits = [psis[i] if pattern >> i & 1 else Not(psis[i]) for i in range(m)]
            if restricted:
                lits.append(Not(phi) if out_flag else phi)
            chi = Exists(var, _conjunction(lits))
            key = to_text(chi)
            if key not in chi_index:
                chi_index[key] = len(chis)
                chis.append(chi)
            cells.append((pattern, bool(out_flag), f"X{chi_index[key] + 1}"))

    new_theta = _eliminate_partition(theta, m, cells, restricted)
    return chis, new_theta


# --------------------------------------------------------------------------
# exact elimination of the index-choice condition


def _sum_compose(s, alpha, t: int, L: int):
    """Compose achievable-total classes.  ("E", a) is an exact total,
    ("GE", c) a finite total >= c congruent to c mod L, ("INF",) infinite."""
    if alpha == ("E", 0):
        return s
    if s[0] == "INF" or alpha[0] == "INF":
        return ("INF",)
    if alpha[0] == "E":
        v = s[1] + alpha[1]
    else:  # LF r: least realization t + ((r - t) mod L)
        v = s[1] + t + ((alpha[1] - t) % L)
        return _cap(("GE", v))
    return _cap((s[0], v))


def _cap(s):
    if s[0] != "INF" and s[1] > _MAX_THRESHOLD:
        raise CostGuardError(
            f"exact index count {s[1]} exceeds the limit of {_MAX_THRESHOLD}")
    return s


def _sum_condition(s, term, L: int):
    if s[0] == "INF":
        return Not(FinAtom(term))
    if s[0] == "E":
        return _exact_size(s[1], term)
    return _at_least_congruent(s[1], s[1] % L, L, term)


def _is_fin_like(atom) -> bool:
    """Atoms whose tracker truth says exactly `finitely many indices`."""
    return isinstance(atom, FinAtom) or (isinstance(atom, ResAtom) and atom.n == 1)


def _join_or_zero(terms: Sequence):
    out = None
    for term in terms:
        out = term if out is None else Join(out, term)
    return ZeroSet() if out is None else out


_MAX_WITNESS_GROUPS = 10


def _eliminate_monotone(trackers, spaces, accepts, group_touch, group_terms):
    """Closed-form choice elimination when every count the condition
    inspects is a zero test, a nonemptiness test, or a finiteness test.

    Extra indices never hurt such a condition, so after pinning the zero
    counts (no index may choose a cell group feeding them) feasibility
    splits into independent requirements: every index still has a choice;
    the counts that must be nonempty are fed by distinct witness indices,
    one per cell group of some covering family -- a system of distinct
    representatives, so Hall's condition over the family is exact; each
    infinite count is fed by infinitely many indices avoiding
    finiteness-pinned groups; and only finitely many indices are forced
    into finiteness-pinned groups, since were infinitely many forced, one
    of the finitely many pinned counts would come out infinite.
    """
    E = len(group_touch)
    out = Bottom()
    seen = set()
    for combo in itertools.product(*spaces):
        if not accepts(combo):
            continue
        zero = {i for i, st in enumerate(combo)
                if isinstance(trackers[i].atom, CardAtom) and st == 0}
        need = {i for i, st in enumerate(combo)
                if isinstance(trackers[i].atom, CardAtom) and st != 0}
        fin_pinned = {i for i, tr in enumerate(trackers)
                      if _is_fin_like(tr.atom) and tr.truth(combo[i])}
        inf_pinned = [i for i, tr in enumerate(trackers)
                      if _is_fin_like(tr.atom) and not tr.truth(combo[i])]
        active = [e for e in range(E) if not zero & set(group_touch[e])]
        covered = _join_or_zero([group_terms[e] for e in active])
        parts = [Not(CardAtom(1, Compl(covered)))]
        if fin_pinned:
            unforced = _join_or_zero(
                [group_terms[e] for e in active
                 if not fin_pinned & set(group_touch[e])])
            parts.append(FinAtom(Meet(covered, Compl(unforced))))
        if need:
            parts.append(_witness_cover(
                need, [e for e in active if set(group_touch[e]) & need],
                group_touch, group_terms))
        for i in inf_pinned:
            parts.append(Not(FinAtom(_join_or_zero(
                [group_terms[e] for e in active
                 if i in group_touch[e]
                 and not fin_pinned & set(group_touch[e])]))))
        branch = parts[0]
        for p in parts[1:]:
            branch = And(branch, p)
        key = to_text(branch)
        if key in seen:
            continue
        seen.add(key)
        out = branch if isinstance(out, Bottom) else Or(out, branch)
    return _simplify(out)


def _witness_cover(need: set, relevant: List[int], group_touch, group_terms):
    """Condition for distinct witness indices jointly feeding every needed
    count: some family of cell groups covers the needed counts and admits
    a system of distinct representatives (Hall's condition, with each
    group's representative drawn from the indices where the group is
    available)."""
    if len(relevant) > _MAX_WITNESS_GROUPS:
        raise CostGuardError(
            f"{len(relevant)} witness cell groups exceed the limit of "
            f"{_MAX_WITNESS_GROUPS}")
    touch_sets = {e: set(group_touch[e]) & need for e in relevant}
    out = Bottom()
    for smask in range(1, 1 << len(relevant)):
        fam = [relevant[k] for k in range(len(relevant)) if smask >> k & 1]
        touched = set()
        for e in fam:
            touched.update(touch_sets[e])
        if not need <= touched:
            continue
        # Only minimal covering families: a distinct-representative system
        # for a larger family restricts to one for any covering subfamily,
        # so non-minimal disjuncts are subsumed.
        minimal = True
        for e in fam:
            rest = set()
            for d in fam:
                if d != e:
                    rest.update(touch_sets[d])
            if need <= rest:
                minimal = False
                break
        if not minimal:
            continue
        cond = None
        for tmask in range(1, 1 << len(fam)):
            sub = [fam[k] for k in range(len(fam)) if tmask >> k & 1]
            atom = CardAtom(len(sub),
                            _join_or_zero([group_terms[e] for e in sub]))
            cond = atom if cond is None else And(cond, atom)
        out = cond if isinstance(out, Bottom) else Or(out, cond)
    return out


def _eliminate_partition(theta, m: int, cells: List[Tuple[int, bool, str]],
                         restricted: bool):
    """Quantifier-free condition on the cell variables for a consistent
    index-by-index choice of cells.

    Every index of the product must pick one cell whose formula holds
    there; theta constrains, through its atoms, the number of indices
    picking each sign pattern; in restricted mode only finitely many
    indices may pick an out-flagged cell.
    """
    matrix = desugar_comparisons(theta)
    L = res_modulus_lcm(matrix)
    t = max_card_index(matrix) + 1
    if t > _MAX_THRESHOLD:
        raise CostGuardError(
            f"cardinality threshold {t} exceeds the limit of {_MAX_THRESHOLD}")
    atoms: List = []
    _collect_atoms(matrix, atoms)
    trackers = [_AtomTracker(a, t) for a in atoms]
    fin_idx = None
    if restricted:
        fin_idx = len(trackers)
        trackers.append(_AtomTracker(FinAtom(OneSet()), t))
    classes = _classes(t, L)

    # Group cells by which trackers an index choosing them feeds.
    touch_of_cell: List[tuple] = []
    for pattern, out_flag, _name in cells:
        assignment = {f"X{i + 1}": bool(pattern >> i & 1) for i in range(m)}
        touched = [i for i, tr in enumerate(trackers[:len(atoms)])
                   if _term_bit(tr.atom.term, assignment)]
        if out_flag and fin_idx is not None:
            touched.append(fin_idx)
        touch_of_cell.append(tuple(touched))
    groups: Dict[tuple, List[str]] = {}
    for (pattern, out_flag, name), touched in zip(cells, touch_of_cell):
        names = groups.setdefault(touched, [])
        if name not in names:
            names.append(name)
    group_touch = list(groups)
    group_terms = []
    for touched in group_touch:
        parts = [BoolVar(n) for n in groups[touched]]
        term = parts[0]
        for p in parts[1:]:
            term = Join(term, p)
        group_terms.append(term)

    start = tuple(tr.start for tr in trackers)

    def accepts(states: tuple) -> bool:
        truths = {tr.atom: tr.truth(st)
                  for tr, st in zip(trackers[:len(atoms)], states)}
        if not _eval_with_atom_truths(matrix, truths):
            return False
        if fin_idx is not None and not trackers[fin_idx].truth(states[fin_idx]):
            return False
        return True

    def state_spaces() -> List[list]:
        spaces = []
        for tr in trackers:
            a = tr.atom
            if isinstance(a, CardAtom):
                spaces.append(list(range(a.j + 1)))
            elif isinstance(a, FinAtom):
                spaces.append([0, 1])
            else:
                spaces.append([(b, r) for b in (0, 1) for r in range(a.n)])
        total = math.prod(len(s) for s in spaces)
        if total > _MAX_JOINT_STATES:
            raise CostGuardError(
                f"{total} tracker states exceed the limit of "
                f"{_MAX_JOINT_STATES}")
        return spaces

    if t <= 2 and L == 1 and all(
            isinstance(tr.atom, CardAtom) or _is_fin_like(tr.atom)
            for tr in trackers):
        return _eliminate_monotone(
            trackers, state_spaces(), accepts, group_touch, group_terms)

    def run_dp(active: List[int], target: Optional[tuple]):
        """Disjunction over ways the index sets can populate the active
        cell groups; None target accepts any state satisfying theta."""
        E = len(active)
        terms = [group_terms[e] for e in active]
        uncovered = None
        for term in terms:
            c = Compl(term)
            uncovered = c if uncovered is None else Meet(uncovered, c)
        coverage = Not(CardAtom(1, uncovered if uncovered is not None else OneSet()))

        sup_terms = []
        for sigma in range(1, 1 << E):
            parts = [terms[e] if sigma >> e & 1 else Compl(terms[e])
                     for e in range(E)]
            acc = parts[0]
            for p in parts[1:]:
                acc = Meet(acc, p)
            sup_terms.append((sigma, acc))

        memo: Dict[Tuple[int, tuple], object] = {}

        def rec(idx: int, states: tuple):
            key = (idx, states)
            if key in memo:
                return memo[key]
            if idx == len(sup_terms):
                ok = states == target if target is not None else accepts(states)
                out = Top() if ok else Bottom()
            else:
                sigma, term = sup_terms[idx]
                here = [active[e] for e in range(E) if sigma >> e & 1]
                # All ways of splitting this supplier's indices among its
                # available groups, at class granularity.
                outcomes: Dict[Tuple[tuple, tuple], None] = {(("E", 0), states): None}
                for e in here:
                    touched = group_touch[e]
                    nxt: Dict[Tuple[tuple, tuple], None] = {}
                    for (total, sts) in outcomes:
                        for alpha in classes:
                            ntotal = _sum_compose(total, alpha, t, L)
                            if alpha == ("E", 0):
                                nsts = sts
                            else:
                                lst = list(sts)
                                for i in touched:
                                    lst[i] = trackers[i].add(
                                        lst[i], trackers[i].contribution(alpha))
                                nsts = tuple(lst)
                            nxt[(ntotal, nsts)] = None
                    outcomes = nxt
                by_tail: Dict[tuple, List[tuple]] = {}
                for (total, sts) in outcomes:
                    by_tail.setdefault(sts, []).append(total)
                out = Bottom()
                for sts, totals in by_tail.items():
                    tail = rec(idx + 1, sts)
                    if isinstance(tail, Bottom):
                        continue
                    cond = Bottom()
                    seen = set()
                    for total in totals:
                        piece = _sum_condition(total, term, L)
                        pkey = to_text(piece)
                        if pkey in seen:
                            continue
                        seen.add(pkey)
                        cond = piece if isinstance(cond, Bottom) else Or(cond, piece)
                    branch = cond if isinstance(tail, Top) else And(cond, tail)
                    out = branch if isinstance(out, Bottom) else Or(out, branch)
            memo[key] = out
            return out

        body = rec(0, start)
        return And(coverage, body)

    E = len(group_touch)
    if E <= _MAX_SINGLE_PASS:
        return _simplify(run_dp(list(range(E)), None))

    # Too many groups for one pass: handle each acceptable final state
    # separately, which lets groups that feed a count pinned at zero be
    # dropped (any index choosing such a group would overshoot the pin).
    spaces = state_spaces()
    out = Bottom()
    for combo in itertools.product(*spaces):
        if not accepts(combo):
            continue
        zero = {i for i, st in enumerate(combo)
                if isinstance(trackers[i].atom, CardAtom) and st == 0}
        active = [e for e in range(E)
                  if not any(i in zero for i in group_touch[e])]
        if len(active) > _MAX_TARGETED:
            raise CostGuardError(
                f"{len(active)} cell groups exceed the limit of "
                f"{_MAX_TARGETED} for one elimination")
        branch = run_dp(active, combo)
        out = branch if isinstance(out, Bottom) else Or(out, branch)
    return _simplify(out)


# --------------------------------------------------------------------------
# the compiler


_reduce_cache: Dict[Tuple[str, str], Reduction] = {}


def reduce(f, mode) -> Reduction:
    """Compile a ring formula into a Reduction for the given mode.

    The result depends only on the formula and the mode, never on any
    concrete product structure.
    """
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))
    mode_key = ("restricted " + to_text(mode.phi)
                if isinstance(mode, Restricted) else "finite")
    cache_key = (to_text(f), mode_key)
    if cache_key in _reduce_cache:
        return _reduce_cache[cache_key]

    g = rename_apart(eliminate_implications(f))

    def go(f):
        if isinstance(f, (Top, Bottom)):
            return [], f
        if is_atom(f):
            return [f], SetEq(_xvar(0), OneSet())
        if isinstance(f, Not):
            psis, theta = go(f.body)
            return psis, Not(theta)
        if isinstance(f, (And, Or)):
            lp, lt = go(f.lhs)
            rp, rt = go(f.rhs)
            offset = len(lp)
            if offset:
                rt = _rename_xvars(
                    rt, {f"X{i + 1}": f"X{i + 1 + offset}" for i in range(len(rp))})
            psis, theta = _dedup_psis(lp + rp, type(f)(lt, rt))
            return psis, theta
        if isinstance(f, Exists):
            psis, theta = go(f.body)
            return _exists_step(f.var, psis, theta, mode)
        if isinstance(f, Forall):
            psis, theta = go(f.body)
            new_psis, new_theta = _exists_step(f.var, psis, Not(theta), mode)
            return new_psis, Not(new_theta)
        raise TypeError(f"not a ring formula: {f!r}")

    psis, theta = go(g)
    result = Reduction(tuple(psis), _simplify(theta), mode)
    _reduce_cache[cache_key] = result
    return result


# --------------------------------------------------------------------------
# evaluation harnesses


def brute_force_product_eval(f, P: ProductStructure,
                             env: Optional[Dict[str, Sequence[int]]] = None) -> bool:
    """Truth of the formula in the direct product, by enumeration."""
    rings = P.factors
    card = math.prod(r.modulus for r in rings)
    q = _count_quantifiers(f)
    if q and card ** q > _FO_BUDGET:
        raise CostGuardError(
            f"{card}^{q} assignments exceed the evaluation budget")
    env = {k: tuple(v) for k, v in (env or {}).items()}
    for k, v in env.items():
        if len(v) != len(rings):
            raise ValueError(f"assignment for {k!r} has {len(v)} components, "
                             f"expected {len(rings)}")
    domain = list(itertools.product(*[r.elements() for r in rings]))

    def term(tm, env) -> tuple:
        if isinstance(tm, RingVar):
            try:
                return env[tm.name]
            except KeyError:
                raise ValueError(f"unbound variable {tm.name!r}") from None
        if isinstance(tm, RatConst):
            return tuple(r.value_of_const(tm.value) for r in rings)
        if isinstance(tm, Add):
            a, b = term(tm.lhs, env), term(tm.rhs, env)
            return tuple((x + y) % r.modulus for x, y, r in zip(a, b, rings))
        if isinstance(tm, Sub):
            a, b = term(tm.lhs, env), term(tm.rhs, env)
            return tuple((x - y) % r.modulus for x, y, r in zip(a, b, rings))
        if isinstance(tm, Mul):
            a, b = term(tm.lhs, env), term(tm.rhs, env)
            return tuple((x * y) % r.modulus for x, y, r in zip(a, b, rings))
        if isinstance(tm, Neg):
            return tuple(-x % r.modulus for x, r in zip(term(tm.body, env), rings))
        raise TypeError(f"not a ring term: {tm!r}")

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
            return any(go(f.body, {**env, f.var: x}) for x in domain)
        if isinstance(f, Forall):
            return all(go(f.body, {**env, f.var: x}) for x in domain)
        if isinstance(f, RingEq):
            return term(f.lhs, env) == term(f.rhs, env)
        if isinstance(f, IntegralAtom):
            term(f.term, env)
            return True
        if isinstance(f, DividesAtom):
            a, b = term(f.lhs, env), term(f.rhs, env)
            return all(r.truncated_valuation(x) <= r.truncated_valuation(y)
                       for x, y, r in zip(a, b, rings))
        if isinstance(f, PowerAtom):
            return all(x in r.nth_powers(f.n)
                       for x, r in zip(term(f.term, env), rings))
        raise TypeError(f"not a ring formula: {f!r}")

    return go(f, env)


def eval_theta_finite(theta, env: Dict[str, frozenset], size: int) -> bool:
    """Evaluate a quantifier-free set condition over a finite index set
    {0..size-1}; every set is finite there, so Fin holds throughout."""
    universe = frozenset(range(size))
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
        if isinstance(f, BoolVar):
            try:
                return env[f.name]
            except KeyError:
                raise ValueError(f"unbound variable {f.name!r}") from None
        if isinstance(f, ZeroSet):
            return frozenset()
        if isinstance(f, OneSet):
            return universe
        if isinstance(f, Meet):
            return go(f.lhs) & go(f.rhs)
        if isinstance(f, Join):
            return go(f.lhs) | go(f.rhs)
        if isinstance(f, Compl):
            return universe - go(f.body)
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Not):
            return not go(f.body)
        if isinstance(f, And):
            return go(f.lhs) and go(f.rhs)
        if isinstance(f, Or):
            return go(f.lhs) or go(f.rhs)
        if isinstance(f, Implies):
            return (not go(f.lhs)) or go(f.rhs)
        if isinstance(f, SetEq):
            return go(f.lhs) == go(f.rhs)
        if isinstance(f, SetLe):
            return go(f.lhs) <= go(f.rhs)
        if isinstance(f, CardAtom):
            return len(go(f.term)) >= f.j
        if isinstance(f, FinAtom):
            go(f.term)
            return True
        if isinstance(f, ResAtom):
            return len(go(f.term)) % f.n == f.r
        if isinstance(f, (Exists, Forall)):
            raise ValueError("set condition must be quantifier-free")
        raise TypeError(f"unexpected node: {f!r}")

    result = go(theta)
    assert isinstance(result, bool)
    return result


def eval_theta_places(theta, env: Dict[str, PlaceSet]) -> bool:
    """Evaluate a quantifier-free set condition over sets of primes."""
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
        if isinstance(f, BoolVar):
            try:
                return env[f.name]
            except KeyError:
                raise ValueError(f"unbound variable {f.name!r}") from None
        if isinstance(f, ZeroSet):
            return PlaceSet.empty()
        if isinstance(f, OneSet):
            return PlaceSet.all_primes()
        if isinstance(f, Meet):
            return go(f.lhs).meet(go(f.rhs))
        if isinstance(f, Join):
            return go(f.lhs).join(go(f.rhs))
        if isinstance(f, Compl):
            return go(f.body).complement()
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Not):
            return not go(f.body)
        if isinstance(f, And):
            return go(f.lhs) and go(f.rhs)
        if isinstance(f, Or):
            return go(f.lhs) or go(f.rhs)
        if isinstance(f, Implies):
            return (not go(f.lhs)) or go(f.rhs)
        if isinstance(f, SetEq):
            l, r = go(f.lhs), go(f.rhs)
            return l.difference(r).is_empty() and r.difference(l).is_empty()
        if isinstance(f, SetLe):
            return go(f.lhs).difference(go(f.rhs)).is_empty()
        if isinstance(f, CardAtom):
            card = go(f.term).cardinality()
            return card is None or card >= f.j
        if isinstance(f, FinAtom):
            return go(f.term).is_finite()
        if isinstance(f, ResAtom):
            card = go(f.term).cardinality()
            return card is not None and card % f.n == f.r
        if isinstance(f, (Exists, Forall)):
            raise ValueError("set condition must be quantifier-free")
        raise TypeError(f"unexpected node: {f!r}")

    result = go(theta)
    assert isinstance(result, bool)
    return result


def eval_via_reduction(r: Reduction, P: ProductStructure,
                       env: Optional[Dict[str, Sequence[int]]] = None) -> bool:
    """Evaluate a finite-product reduction: compute the index set where
    each factor formula holds, then decide the set condition over them."""
    if not isinstance(r.mode, FiniteProduct):
        raise ValueError(
            "eval_via_reduction handles finite-product reductions only")
    env = {k: tuple(v) for k, v in (env or {}).items()}
    benv: Dict[str, frozenset] = {}
    for j, psi in enumerate(r.psis):
        members = []
        for i, ring in enumerate(P.factors):
            local = {k: v[i] for k, v in env.items()}
            if eval_fo_finite_ring(psi, ring, local):
                members.append(i)
        benv[f"X{j + 1}"] = frozenset(members)
    return eval_theta_finite(r.theta, benv, len(P.factors))


def rectangles(r: Reduction, P: ProductStructure,
               target_vars: Sequence[str]) -> List[List]:
    """The set defined by the reduction, as a union of rectangles.

    Each rectangle lists, per factor, the admissible values of the target
    variables there (elements for one variable, tuples otherwise); the
    defined set is exactly the union of the per-factor products.  Factors
    with equal formula signatures land in the same rectangle, so the list
    is finite regardless of the factor sizes.
    """
    if not isinstance(r.mode, FiniteProduct):
        raise ValueError("rectangles handles finite-product reductions only")
    names = list(target_vars)
    if not names:
        raise ValueError("need at least one target variable")
    for psi in r.psis:
        extra = [v for v in free_variables(psi) if v not in names]
        if extra:
            raise ValueError(f"factor formula has unexpected free variables: {extra}")
    single = len(names) == 1

    per_factor: List[Dict[tuple, List]] = []
    for ring in P.factors:
        if ring.modulus ** len(names) > 10 ** 4:
            raise CostGuardError(
                f"{ring.modulus}^{len(names)} local assignments exceed the "
                "rectangle enumeration budget")
        sigs: Dict[tuple, List] = {}
        for values in itertools.product(ring.elements(), repeat=len(names)):
            local = dict(zip(names, values))
            sig = tuple(eval_fo_finite_ring(psi, ring, local) for psi in r.psis)
            sigs.setdefault(sig, []).append(values[0] if single else values)
        per_factor.append(sigs)

    total = math.prod(len(s) for s in per_factor)
    if total > 10 ** 5:
        raise CostGuardError(
            f"{total} signature combinations exceed the rectangle budget")

    out: List[List] = []
    for combo in itertools.product(*[list(s) for s in per_factor]):
        benv = {f"X{j + 1}": frozenset(i for i, sig in enumerate(combo) if sig[j])
                for j in range(len(r.psis))}
        if eval_theta_finite(r.theta, benv, len(P.factors)):
            out.append([per_factor[i][sig] for i, sig in enumerate(combo)])
    return out
