"""Batch command-line front end with deterministic JSON output.

Every command reads plain-text formula files (in the ring or Boolean-pair
grammar) or JSON adele files, and writes a single JSON document to stdout:
``{"status": "ok", "payload": ...}`` on success, or ``{"status": "error",
"code": ..., "message": ...}`` with exit code 1 for parse and guard
failures and 2 for inputs outside the supported decision fragment.  Keys
are sorted, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from typing import Dict, List, Optional

from . import adeles, boolqe, fvreduce, measure
from .formula import (
    FormulaSyntaxError,
    free_variables,
    parse_bool_formula,
    parse_ring_formula,
    to_text,
)
from .localfield import (
    CostGuardError,
    UnsupportedFragmentError,
    hilbert_symbol,
)
from .placesets import PlaceSet
from .primes import prime_factors

__all__ = ["main"]


class _UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports problems as JSON instead of printing usage."""

    def error(self, message):
        raise _UsageError(message)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().strip()


def _read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _seed() -> int:
    raw = os.environ.get("ADELIC_FV_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"ADELIC_FV_SEED must be an integer, got {raw!r}")


# --------------------------------------------------------------------------
# commands


def _cmd_qe_bool(args) -> dict:
    f = parse_bool_formula(_read_text(args.file))
    return {"formula": to_text(boolqe.eliminate_quantifiers(f))}


def _cmd_decide_bool(args) -> dict:
    f = parse_bool_formula(_read_text(args.file))
    return {"value": boolqe.decide_sentence(f)}


def _cmd_fv_reduce(args) -> dict:
    f = parse_ring_formula(_read_text(args.file))
    mode = fvreduce.Restricted() if args.restricted else fvreduce.FiniteProduct()
    return fvreduce.reduce(f, mode).to_json()


def _cmd_fv_check(args) -> dict:
    f = parse_ring_formula(_read_text(args.file))
    product = fvreduce.parse_factors(args.factors)
    if args.trials < 1:
        raise _UsageError("--trials must be at least 1")
    reduction = fvreduce.reduce(f, fvreduce.FiniteProduct())
    names = sorted(free_variables(f))
    rng = random.Random(_seed())
    agreements = 0
    mismatches: List[dict] = []
    for _ in range(args.trials):
        env = {
            name: tuple(rng.randrange(ring.modulus)
                        for ring in product.factors)
            for name in names
        }
        got = fvreduce.eval_via_reduction(reduction, product, env)
        want = fvreduce.brute_force_product_eval(f, product, env)
        if got == want:
            agreements += 1
        elif len(mismatches) < 10:
            mismatches.append({"env": {k: list(v) for k, v in env.items()},
                               "reduction": got, "brute_force": want})
    return {
        "factors": args.factors,
        "trials": args.trials,
        "agreements": agreements,
        "all_agree": agreements == args.trials,
        "seed": _seed(),
        "mismatches": mismatches,
    }


def _adele_env(path: str) -> Dict[str, adeles.TruncatedAdele]:
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise _UsageError("adele environment must be a JSON object")
    return {name: adeles.TruncatedAdele.from_json(entry)
            for name, entry in doc.items()}


def _cmd_eval(args) -> dict:
    f = parse_ring_formula(_read_text(args.file))
    env = _adele_env(args.adele_env) if args.adele_env else {}
    return {"value": adeles.eval_adelic_formula(f, env)}


def _cmd_regular(args) -> dict:
    a = adeles.TruncatedAdele.from_json(_read_json(args.adele))
    regular, positive = adeles.is_von_neumann_regular(a)
    return {"regular": regular, "positive_support": positive.to_json()}


def _cmd_fin_witness(args) -> dict:
    try:
        places = sorted({int(tok) for tok in args.places.split(",") if tok})
    except ValueError:
        raise _UsageError(f"--places must be a comma list of primes, "
                          f"got {args.places!r}")
    e = PlaceSet.finite(places)
    witness = adeles.fin_ideal_witness(e)
    recovered = adeles.boolean_value(
        parse_ring_formula("!O(x)"), {"x": witness})
    return {
        "places": list(places),
        "adele": witness.to_json(),
        "round_trip": sorted(recovered.elements()),
        "ok": recovered == e,
    }


_MEASURE_PRIMES = (2, 3, 5, 7, 11)


def _cmd_measure(args) -> dict:
    if (args.set is None) == (args.zeta is None):
        raise _UsageError("give exactly one of --set CONSTRAINT or --zeta N")
    if args.zeta is not None:
        constraint = measure.zeta_factor_set(args.zeta)
        shown = measure.constraint_to_text(constraint)
    else:
        constraint = measure.parse_constraint(args.set)
        shown = args.set
    mv = measure.local_measure_symbolic(constraint)
    out: dict = {"set": shown, "symbolic": str(mv)}
    at = (args.p,) if args.p is not None else _MEASURE_PRIMES
    out["at_p"] = {str(p): str(mv.numeric_at(p)) for p in at}
    if args.euler is not None:
        br = measure.adelic_measure(constraint, args.euler)
        out["euler"] = {"P": br.P, "value": br.value, "lo": br.lo,
                        "hi": br.hi, "flags": list(br.flags)}
    return out


def _cmd_hilbert(a_text: str, b_text: str) -> dict:
    try:
        a, b = Fraction(a_text), Fraction(b_text)
    except (ValueError, ZeroDivisionError):
        raise _UsageError(f"hilbert expects two rationals, got "
                          f"{a_text!r} {b_text!r}")
    if a == 0 or b == 0:
        raise _UsageError("hilbert symbols need nonzero arguments")
    relevant = {2}
    for q in (a, b):
        relevant.update(prime_factors(q.numerator))
        relevant.update(prime_factors(q.denominator))
    symbols: Dict[str, int] = {"real": hilbert_symbol(a, b, "real")}
    product = symbols["real"]
    for p in sorted(relevant):
        s = hilbert_symbol(a, b, p)
        symbols[str(p)] = s
        product *= s
    return {"a": str(a), "b": str(b), "symbols": symbols, "product": product}


# --------------------------------------------------------------------------
# dispatch


def _build_parser() -> _Parser:
    parser = _Parser(prog="adelic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qe-bool", help="eliminate Boolean-pair quantifiers")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_qe_bool)

    p = sub.add_parser("decide-bool", help="decide a closed Boolean sentence")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_decide_bool)

    p = sub.add_parser("fv-reduce",
                       help="reduce a ring formula to factor formulas "
                            "plus a set condition")
    p.add_argument("file")
    p.add_argument("--restricted", action="store_true",
                   help="use the restricted-product rule (witnesses "
                        "integral almost everywhere)")
    p.set_defaults(fn=_cmd_fv_reduce)

    p = sub.add_parser("fv-check",
                       help="compare the reduction against brute force on "
                            "random assignments")
    p.add_argument("file")
    p.add_argument("--factors", required=True,
                   help="comma list like F2,F3,Z4")
    p.add_argument("--trials", type=int, required=True)
    p.set_defaults(fn=_cmd_fv_check)

    p = sub.add_parser("eval", help="decide a ring formula over the "
                                    "truncated adeles")
    p.add_argument("file")
    p.add_argument("--adele-env", dest="adele_env",
                   help="JSON file assigning adeles to free variables")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("regular",
                       help="test an adele for von Neumann regularity")
    p.add_argument("--adele", required=True, help="JSON adele file")
    p.set_defaults(fn=_cmd_regular)

    p = sub.add_parser("fin-witness",
                       help="build the canonical adele whose non-integral "
                            "locus is a given finite set of primes")
    p.add_argument("--places", required=True, help="comma list like 2,3,5")
    p.set_defaults(fn=_cmd_fin_witness)

    p = sub.add_parser("measure",
                       help="measure a valuation constraint set")
    p.add_argument("--set", help="constraint like '0<=v<=1'")
    p.add_argument("--zeta", type=int,
                   help="use the set whose measure is (1-p^-N)^-1")
    p.add_argument("--p", type=int, help="evaluate at this prime only")
    p.add_argument("--euler", type=int, metavar="LIMIT",
                   help="truncated product over primes up to LIMIT")
    p.set_defaults(fn=_cmd_measure)

    return parser


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        # argparse would read hilbert's negative arguments as flags
        if argv and argv[0] == "hilbert":
            if len(argv) != 3:
                raise _UsageError("hilbert takes exactly two arguments")
            payload = _cmd_hilbert(argv[1], argv[2])
        else:
            args = _build_parser().parse_args(argv)
            payload = args.fn(args)
    except UnsupportedFragmentError as exc:
        _emit({"status": "error", "code": "unsupported-fragment",
               "message": str(exc)})
        return 2
    except FormulaSyntaxError as exc:
        _emit({"status": "error", "code": "parse", "message": str(exc)})
        return 1
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        _emit({"status": "error", "code": "parse", "message": str(exc)})
        return 1
    except _UsageError as exc:
        _emit({"status": "error", "code": "usage", "message": str(exc)})
        return 1
    except (CostGuardError, ValueError, KeyError, TypeError,
            OSError, RuntimeError) as exc:
        _emit({"status": "error", "code": "guard", "message": str(exc)})
        return 1
    _emit({"status": "ok", "payload": payload})
    return 0


if __name__ == "__main__":
    sys.exit(main())
