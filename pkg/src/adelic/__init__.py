"""Exact first-order reasoning over products of p-adic fields.

The package decides formulas in two intertwined languages — the ring
language of restricted products of local fields, and the language of the
Boolean algebra of index sets with cardinality and congruence predicates —
and measures one-variable valuation constraint sets exactly, locally and
as truncated Euler products with rigorous tail brackets.

Layering, bottom up:

- :mod:`adelic.primes` — exact prime utilities.
- :mod:`adelic.formula` — ASTs, parsers and printers for both languages.
- :mod:`adelic.placesets` — finitely describable sets of primes.
- :mod:`adelic.localfield` — exact p-adic arithmetic, one-prime formula
  evaluation, eventual truth over all large primes, Hilbert symbols,
  finite quotient rings.
- :mod:`adelic.boolqe` — quantifier elimination and decision for the
  Boolean-pair language.
- :mod:`adelic.fvreduce` — reduction of a product-ring formula to factor
  formulas plus a quantifier-free set condition, with brute-force oracles.
- :mod:`adelic.adeles` — truncated adeles, Boolean values of formulas,
  regularity, and the adelic decision procedure built on the above.
- :mod:`adelic.measure` — exact local measures and Euler products.
- :mod:`adelic.cli` — deterministic JSON command-line front end.
"""

from .adeles import (
    Idempotent,
    TruncatedAdele,
    TypeNormalForm,
    boolean_value,
    decide_at_prime,
    eval_adelic_formula,
    fin_ideal_witness,
    formula_place_set,
    idempotent_adele,
    is_von_neumann_regular,
    normalize_type_I_II,
    place_set_algebra,
    support,
)
from .boolqe import (
    bounded_witness_eval,
    decide_sentence,
    eliminate_quantifiers,
    eval_bool_formula,
)
from .formula import (
    FormulaSyntaxError,
    parse_bool_formula,
    parse_ring_formula,
    to_text,
)
from .fvreduce import (
    FiniteProduct,
    ProductStructure,
    Reduction,
    Restricted,
    brute_force_product_eval,
    eval_via_reduction,
    parse_factors,
    rectangles,
    reduce,
)
from .localfield import (
    ConstTail,
    CostGuardError,
    FiniteRing,
    UniformizerPow,
    UnsupportedFragmentError,
    eval_fo_finite_ring,
    hilbert_symbol,
)
from .measure import (
    EulerBracket,
    LocalConstraint,
    MeasureValue,
    RationalFunction,
    adelic_measure,
    euler_truncation,
    local_measure_at_p,
    local_measure_symbolic,
    parse_constraint,
    zeta_factor_set,
)
from .placesets import PlaceSet

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # formulas
    "FormulaSyntaxError", "parse_ring_formula", "parse_bool_formula",
    "to_text",
    # place sets
    "PlaceSet",
    # local fields and finite rings
    "ConstTail", "UniformizerPow", "FiniteRing", "eval_fo_finite_ring",
    "hilbert_symbol", "CostGuardError", "UnsupportedFragmentError",
    # Boolean-pair decision
    "eliminate_quantifiers", "decide_sentence", "eval_bool_formula",
    "bounded_witness_eval",
    # product reduction
    "FiniteProduct", "Restricted", "Reduction", "ProductStructure",
    "reduce", "brute_force_product_eval", "eval_via_reduction",
    "rectangles", "parse_factors",
    # adeles
    "TruncatedAdele", "Idempotent", "idempotent_adele", "place_set_algebra",
    "boolean_value", "support", "is_von_neumann_regular",
    "fin_ideal_witness", "TypeNormalForm", "normalize_type_I_II",
    "decide_at_prime", "formula_place_set", "eval_adelic_formula",
    # measures
    "LocalConstraint", "parse_constraint", "RationalFunction",
    "MeasureValue", "local_measure_symbolic", "local_measure_at_p",
    "zeta_factor_set", "EulerBracket", "adelic_measure",
    "euler_truncation",
]
