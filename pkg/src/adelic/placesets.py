"""Finitely described sets of finite places (primes).

A ``PlaceSet`` is a base pattern plus finitely many corrections:

* base ``FINITE``      -- no prime matches the base; the set equals ``include``;
* base ``COFINITE``    -- every prime matches the base;
* base ``CONGRUENCE``  -- primes ``p`` with ``p mod modulus`` in ``residues``
  (residues coprime to the modulus, so by Dirichlet the base is infinite);

``include`` adds finitely many primes that the base misses, ``exclude``
removes finitely many that it hits.  All three base kinds are stored
uniformly as a pair ``(modulus, residues)``: ``FINITE`` is ``(1, ())``,
``COFINITE`` is ``(1, (0,))`` and ``CONGRUENCE`` has ``modulus > 1``.

Instances are canonical: the congruence base is reduced to its minimal
modulus (conductor), corrections touched by the reduction are folded into
``include``/``exclude``, and redundant corrections are dropped.  Equal sets
therefore compare equal structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, lcm
from typing import Dict, Iterator, List, Optional, Tuple

from .primes import divisors, is_prime, prime_factors, primes

__all__ = ["PlaceSet"]


def _units(m: int) -> Tuple[int, ...]:
    if m == 1:
        return (0,)
    return tuple(r for r in range(m) if gcd(r, m) == 1)


@dataclass(frozen=True)
class PlaceSet:
    """Canonical finitely-described set of primes."""

    modulus: int = 1
    residues: Tuple[int, ...] = ()
    include: Tuple[int, ...] = ()
    exclude: Tuple[int, ...] = ()

    # -- construction -------------------------------------------------

    @staticmethod
    def finite(members) -> "PlaceSet":
        return _build(1, (), {p: True for p in members})

    @staticmethod
    def cofinite(excluded=()) -> "PlaceSet":
        return _build(1, (0,), {p: False for p in excluded})

    @staticmethod
    def congruence(modulus: int, residues, include=(), exclude=()) -> "PlaceSet":
        if modulus < 1:
            raise ValueError("modulus must be >= 1")
        res = tuple(sorted(set(int(r) % modulus for r in residues)))
        for r in res:
            if gcd(r, modulus) != 1 and modulus > 1:
                raise ValueError(f"residue {r} not coprime to modulus {modulus}")
        fix: Dict[int, bool] = {}
        for p in include:
            fix[p] = True
        for p in exclude:
            fix[p] = False
        return _build(modulus, res, fix)

    @staticmethod
    def empty() -> "PlaceSet":
        return PlaceSet()

    @staticmethod
    def all_primes() -> "PlaceSet":
        return PlaceSet(1, (0,))

    def __post_init__(self):
        for p in self.include + self.exclude:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")

    # -- predicates ----------------------------------------------------

    @property
    def base_kind(self) -> str:
        if self.modulus == 1:
            return "COFINITE" if self.residues else "FINITE"
        return "CONGRUENCE"

    def _base_matches(self, p: int) -> bool:
        return (p % self.modulus) in self.residues

    def member(self, p: int) -> bool:
        if p in self.include:
            return True
        if p in self.exclude:
            return False
        return self._base_matches(p)

    def is_finite(self) -> bool:
        # A nonempty coprime residue class contains infinitely many primes
        # (Dirichlet); so the set is finite exactly when the base is empty.
        return not self.residues

    def is_infinite(self) -> bool:
        return not self.is_finite()

    def is_empty(self) -> bool:
        return self.is_finite() and not self.include

    def cardinality(self) -> Optional[int]:
        """Number of members, or None when infinite."""
        return len(self.include) if self.is_finite() else None

    def elements(self) -> Tuple[int, ...]:
        if not self.is_finite():
            raise ValueError("infinite place set has no element tuple")
        return self.include

    def iter_members(self) -> Iterator[int]:
        for p in primes():
            if self.member(p):
                yield p

    def first_n(self, n: int) -> List[int]:
        out: List[int] = []
        if self.is_finite():
            return list(self.include[:n])
        it = self.iter_members()
        while len(out) < n:
            out.append(next(it))
        return out

    # -- Boolean algebra ----------------------------------------------

    def complement(self) -> "PlaceSet":
        m = self.modulus
        new_res = tuple(r for r in _units(m) if r not in self.residues)
        fix: Dict[int, bool] = {}
        for p in set(self.include) | set(self.exclude) | set(prime_factors(m)):
            fix[p] = not self.member(p)
        return _build(m, new_res, fix)

    def meet(self, other: "PlaceSet") -> "PlaceSet":
        m = lcm(self.modulus, other.modulus)
        res = tuple(
            s
            for s in _units(m)
            if (s % self.modulus) in self.residues
            and (s % other.modulus) in other.residues
        )
        fix: Dict[int, bool] = {}
        touched = (
            set(self.include)
            | set(self.exclude)
            | set(other.include)
            | set(other.exclude)
            | set(prime_factors(m))
        )
        for p in touched:
            fix[p] = self.member(p) and other.member(p)
        return _build(m, res, fix)

    def join(self, other: "PlaceSet") -> "PlaceSet":
        return self.complement().meet(other.complement()).complement()

    def difference(self, other: "PlaceSet") -> "PlaceSet":
        return self.meet(other.complement())

    def split_infinite(self) -> Tuple["PlaceSet", "PlaceSet"]:
        """Split an infinite set into two disjoint infinite halves."""
        if self.is_finite():
            raise ValueError("cannot split a finite set into infinite halves")
        for q in primes():
            if self.modulus % q != 0:
                half = self.meet(PlaceSet.congruence(q, (1,)))
                rest = self.difference(half)
                if half.is_infinite() and rest.is_infinite():
                    return half, rest
        raise AssertionError("unreachable")

    # -- serialization -------------------------------------------------

    def to_json(self) -> dict:
        if self.base_kind == "CONGRUENCE":
            base = {"modulus": self.modulus, "residues": list(self.residues)}
        else:
            base = self.base_kind
        return {
            "base": base,
            "include": list(self.include),
            "exclude": list(self.exclude),
        }

    @staticmethod
    def from_json(data: dict) -> "PlaceSet":
        base = data.get("base", "FINITE")
        inc = data.get("include", ())
        exc = data.get("exclude", ())
        if base == "FINITE":
            if exc:
                raise ValueError("FINITE base cannot carry exclusions")
            return PlaceSet.finite(inc)
        if base == "COFINITE":
            out = PlaceSet.cofinite(exc)
            for p in inc:
                out = out.join(PlaceSet.finite([p]))
            return out
        return PlaceSet.congruence(
            base["modulus"], base["residues"], include=inc, exclude=exc
        )

    def __str__(self) -> str:
        if self.base_kind == "FINITE":
            return "{" + ", ".join(str(p) for p in self.include) + "}"
        if self.base_kind == "COFINITE":
            body = "all primes"
        else:
            res = ",".join(str(r) for r in self.residues)
            body = f"p = {res} (mod {self.modulus})"
        if self.exclude:
            body += " minus {" + ", ".join(str(p) for p in self.exclude) + "}"
        if self.include:
            body += " plus {" + ", ".join(str(p) for p in self.include) + "}"
        return body


def _reduce_conductor(modulus: int, residues: Tuple[int, ...]):
    """Minimal modulus presenting the same unions of coprime classes.

    Returns ``(d, reduced_residues, forced_exclusions)`` where the
    exclusions are primes dividing the old modulus that the reduced base
    would wrongly pick up.
    """
    if not residues:
        return 1, (), ()
    units = _units(modulus)
    for d in divisors(modulus):
        rd = tuple(sorted({r % d for r in residues}))
        induced = tuple(u for u in units if (u % d) in rd)
        if induced == residues:
            dropped = tuple(
                p
                for p in prime_factors(modulus)
                if d % p != 0 and (p % d) in rd
            )
            return d, rd, dropped
    return modulus, residues, ()


def _build(modulus: int, residues: Tuple[int, ...], fix: Dict[int, bool]) -> PlaceSet:
    """Canonicalize a base plus membership corrections into a PlaceSet."""
    d, res, dropped = _reduce_conductor(modulus, residues)
    desired = dict(fix)
    for p in dropped:
        desired.setdefault(p, False)
    include: List[int] = []
    exclude: List[int] = []
    for p, want in desired.items():
        matches = (p % d) in res
        if want and not matches:
            include.append(p)
        elif not want and matches:
            exclude.append(p)
    return PlaceSet(d, res, tuple(sorted(include)), tuple(sorted(exclude)))
