import random
from fractions import Fraction

import pytest

from adelic import adeles as ad
from adelic import boolqe
from adelic.adeles import TruncatedAdele
from adelic.formula import parse_bool_formula, parse_ring_formula, to_text
from adelic.localfield import (
    ConstTail, FiniteRing, UniformizerPow, UnsupportedFragmentError,
    eval_fo_finite_ring,
)
from adelic.placesets import PlaceSet
from adelic.primes import primes_up_to

_SMALL_PRIMES = primes_up_to(50)


# --------------------------------------------------------------------------
# truncated adeles as data


def test_components_and_tail():
    a = TruncatedAdele({2: Fraction(1, 2)}, ConstTail(Fraction(1)))
    assert a.component_at(2) == Fraction(1, 2)
    assert a.component_at(7) == 1
    assert TruncatedAdele({3: Fraction(1)}, 1).explicit == ()


def test_constructor_validation():
    with pytest.raises(ValueError):
        TruncatedAdele((), UniformizerPow(-1))
    with pytest.raises(ValueError):
        TruncatedAdele({4: Fraction(1)}, 0)


def test_json_round_trips():
    a = TruncatedAdele({2: Fraction(1, 2)}, ConstTail(Fraction(1)))
    assert TruncatedAdele.from_json(a.to_json()) == a
    u = TruncatedAdele((), UniformizerPow(1))
    assert TruncatedAdele.from_json(u.to_json()) == u


def test_products_of_tails():
    six = TruncatedAdele.principal(6)
    u = TruncatedAdele((), UniformizerPow(1))
    assert (six * TruncatedAdele.principal(Fraction(1, 2))).tail \
        == ConstTail(Fraction(3))
    assert (u * u).tail == UniformizerPow(2)
    assert (TruncatedAdele.principal(1) * u).tail == UniformizerPow(1)
    assert TruncatedAdele.principal(0) * u == TruncatedAdele.principal(0)
    with pytest.raises(ValueError):
        six * u  # constant-times-uniformizer tail has no representation


# --------------------------------------------------------------------------
# the idempotent/place-set dictionary


def test_place_set_algebra():
    s23 = PlaceSet.finite([2, 3])
    s35 = PlaceSet.finite([3, 5])
    assert ad.place_set_algebra("meet", s23, s35) == PlaceSet.finite([3])
    assert ad.place_set_algebra("complement", PlaceSet.cofinite([7])) \
        == PlaceSet.finite([7])
    got = ad.place_set_algebra(
        "meet", PlaceSet.congruence(4, [1]), PlaceSet.congruence(3, [2]))
    assert got == PlaceSet.congruence(12, [5])
    with pytest.raises(ValueError):
        ad.place_set_algebra("xor", s23, s35)


def test_idempotent_adele_round_trip(fixed_rng):
    for _ in range(20):
        members = fixed_rng.sample(_SMALL_PRIMES, fixed_rng.randint(0, 5))
        e = PlaceSet.finite(members)
        if fixed_rng.random() < 0.5:
            e = e.complement()
        a = ad.idempotent_adele(e)
        assert ad.support(a) == e
        verdict, obstruction = ad.is_von_neumann_regular(a)
        assert verdict is True
        assert obstruction == PlaceSet.empty()


# --------------------------------------------------------------------------
# boolean values of formulas at adeles


def test_boolean_value_integrality():
    a1 = TruncatedAdele({2: Fraction(1, 2)}, ConstTail(Fraction(1)))
    got = ad.boolean_value(parse_ring_formula("O(x)"), {"x": a1})
    assert got == PlaceSet.cofinite([2])


def test_boolean_value_support():
    e35 = TruncatedAdele({3: Fraction(1), 5: Fraction(1)},
                         ConstTail(Fraction(0)))
    got = ad.boolean_value(parse_ring_formula("!(x = 0)"), {"x": e35})
    assert got == PlaceSet.finite([3, 5])


def test_boolean_value_square_classes():
    got = ad.boolean_value(parse_ring_formula("P[2](x)"),
                           {"x": TruncatedAdele.principal(2)})
    # 2 has odd valuation at 2; at odd p it is a square iff p = +-1 mod 8
    for p, want in [(2, False), (3, False), (5, False), (7, True),
                    (11, False), (13, False), (17, True), (23, True),
                    (31, True), (41, True)]:
        assert got.member(p) == want, p


def _random_adele(rng):
    explicit = {}
    for p in rng.sample(_SMALL_PRIMES, rng.randint(0, 3)):
        explicit[p] = rng.choice([
            Fraction(0), Fraction(1), Fraction(p), Fraction(1, p),
            Fraction(rng.randint(1, 6))])
    if rng.random() < 0.6:
        tail = ConstTail(Fraction(rng.randint(-3, 3)))
    else:
        tail = UniformizerPow(rng.randint(0, 2))
    return TruncatedAdele(explicit, tail)


def _random_supported_formula(rng):
    x_or_y = lambda: rng.choice(["x", "y"])
    atoms = [
        f"O({x_or_y()})",
        f"!({x_or_y()} = 0)",
        f"{x_or_y()} = {x_or_y()}",
        f"P[2]({x_or_y()})",
        f"D({x_or_y()}, {x_or_y()})",
        f"{x_or_y()} * {x_or_y()} = {x_or_y()}",
    ]
    f = rng.choice(atoms)
    for _ in range(rng.randint(0, 2)):
        f = f"({f}) {rng.choice(['&', '|'])} ({rng.choice(atoms)})"
    if rng.random() < 0.3:
        f = f"!({f})"
    return parse_ring_formula(f)


def test_boolean_value_is_a_homomorphism(seed):
    rng = random.Random(seed)
    checked = 0
    for _ in range(40):
        env = {"x": _random_adele(rng), "y": _random_adele(rng)}
        f = _random_supported_formula(rng)
        g = _random_supported_formula(rng)
        try:
            vf = ad.boolean_value(f, env)
            vg = ad.boolean_value(g, env)
            both = ad.boolean_value(
                parse_ring_formula(f"({to_text(f)}) & ({to_text(g)})"), env)
            either = ad.boolean_value(
                parse_ring_formula(f"({to_text(f)}) | ({to_text(g)})"), env)
            neg = ad.boolean_value(
                parse_ring_formula(f"!({to_text(f)})"), env)
        except UnsupportedFragmentError:
            continue
        assert both == vf.meet(vg)
        assert either == vf.join(vg)
        assert neg == vf.complement()
        checked += 1
    assert checked >= 25


# --------------------------------------------------------------------------
# support and regularity


def test_support_spot_cases():
    six = TruncatedAdele.principal(6)
    assert ad.support(six) == PlaceSet.all_primes()
    e2 = TruncatedAdele({2: Fraction(1)}, ConstTail(Fraction(0)))
    assert ad.support(e2) == PlaceSet.finite([2])
    a3 = TruncatedAdele({3: Fraction(0)}, ConstTail(Fraction(1)))
    assert ad.support(a3) == PlaceSet.cofinite([3])


def test_regularity_triple():
    six = TruncatedAdele.principal(6)
    verdict, obstruction = ad.is_von_neumann_regular(six)
    assert verdict is True and obstruction == PlaceSet.finite([2, 3])

    u = TruncatedAdele((), UniformizerPow(1))
    verdict, obstruction = ad.is_von_neumann_regular(u)
    assert verdict is False and obstruction == PlaceSet.all_primes()

    e2 = TruncatedAdele({2: Fraction(1)}, ConstTail(Fraction(0)))
    verdict, obstruction = ad.is_von_neumann_regular(e2)
    assert verdict is True and obstruction == PlaceSet.empty()


def test_support_is_multiplicative(seed):
    rng = random.Random(seed)
    checked = 0
    for _ in range(40):
        a, b = _random_adele(rng), _random_adele(rng)
        try:
            prod = a * b
        except ValueError:
            continue
        assert ad.support(prod) == ad.support(a).meet(ad.support(b))
        checked += 1
    assert checked >= 10


# --------------------------------------------------------------------------
# witnesses for the ideal of finitely supported adeles


def test_fin_ideal_witness_round_trip():
    for members in [(), (3,), (2, 5), (2, 3, 5, 7, 11, 13)]:
        e = PlaceSet.finite(members)
        w = ad.fin_ideal_witness(e)
        got = ad.boolean_value(parse_ring_formula("!O(x)"), {"x": w})
        assert got == e, members


def test_fin_ideal_witness_random(seed):
    rng = random.Random(seed)
    for _ in range(10):
        members = rng.sample(_SMALL_PRIMES, rng.randint(0, 6))
        e = PlaceSet.finite(members)
        w = ad.fin_ideal_witness(e)
        got = ad.boolean_value(parse_ring_formula("!O(x)"), {"x": w})
        assert got == e, members


def test_fin_ideal_witness_rejects_infinite_sets():
    with pytest.raises(ValueError):
        ad.fin_ideal_witness(PlaceSet.cofinite([2]))


# --------------------------------------------------------------------------
# normal forms


def test_normalize_shapes():
    nf = ad.normalize_type_I_II(parse_bool_formula("X = 1"))
    assert nf.flavor == "fin"
    assert "C[1]" in to_text(nf.formula)

    nf2 = ad.normalize_type_I_II(parse_bool_formula("Fin(X ^ Y)"))
    assert to_text(nf2.formula) == "Fin(X ^ Y)"

    nf3 = ad.normalize_type_I_II(parse_bool_formula("Res[3,1](X) & X <= Y"))
    assert nf3.flavor == "fin,res"


def test_normalize_preserves_verdicts(seed):
    rng = random.Random(seed)
    pool = [
        "X = Y", "X <= Y", "Fin(X ^ Y)", "C[2](X v Y) & !(X = 0)",
        "Res[2,1](X) | C[1](Y)", "!(X <= Y) -> C[3](X)",
    ]
    xs = [PlaceSet.finite([2, 3]), PlaceSet.cofinite([5]),
          PlaceSet.congruence(4, [1]), PlaceSet.empty()]
    ys = [PlaceSet.finite([3]), PlaceSet.all_primes(),
          PlaceSet.congruence(3, [1]), PlaceSet.empty()]
    for _ in range(20):
        formula = parse_bool_formula(rng.choice(pool))
        env = {"X": rng.choice(xs), "Y": rng.choice(ys)}
        nf = ad.normalize_type_I_II(formula)
        assert boolqe.eval_bool_formula(formula, env) \
            == boolqe.eval_bool_formula(nf.formula, env), to_text(formula)


# --------------------------------------------------------------------------
# per-prime decisions


def test_no_nontrivial_idempotents_locally():
    f = parse_ring_formula("exists x . x * x = x & !(x = 0) & !(x = 1)")
    for p in (2, 3, 5, 7):
        assert ad.decide_at_prime(f, p) is False


def test_square_roots_of_two_locally():
    f = parse_ring_formula("exists x . x * x = 2")
    for p, want in [(2, False), (3, False), (5, False), (7, True),
                    (17, True)]:
        assert ad.decide_at_prime(f, p) is want, p


def test_inverses_and_units_locally():
    f_inv = parse_ring_formula("exists y . x * y = 1")
    assert ad.decide_at_prime(f_inv, 5, {"x": Fraction(3)}) is True
    assert ad.decide_at_prime(f_inv, 5, {"x": Fraction(0)}) is False
    f_unit = parse_ring_formula("exists y . x * y = 1 & O(y)")
    assert ad.decide_at_prime(f_unit, 5, {"x": Fraction(3)}) is True
    assert ad.decide_at_prime(f_unit, 5, {"x": Fraction(5)}) is False
    assert ad.decide_at_prime(f_unit, 5, {"x": Fraction(1, 5)}) is True


def test_universal_statements_locally():
    f = parse_ring_formula("forall y . x * y = y")
    assert ad.decide_at_prime(f, 3, {"x": Fraction(1)}) is True
    assert ad.decide_at_prime(f, 3, {"x": Fraction(2)}) is False


def test_quadratic_roots_locally():
    f = parse_ring_formula("exists x . x * x + -1 = 0 & O(x)")
    for p in (2, 3, 5, 7, 11):
        assert ad.decide_at_prime(f, p) is True, p


# --------------------------------------------------------------------------
# place sets cut out by formulas


def test_formula_place_set_identity():
    g = parse_ring_formula("exists y . x * y = y & !O(y)")
    assert ad.formula_place_set(g, {"x": TruncatedAdele.principal(1)}) \
        == PlaceSet.all_primes()
    assert ad.formula_place_set(g, {"x": TruncatedAdele.principal(2)}) \
        == PlaceSet.empty()


def test_formula_place_set_sqrt_two():
    h = parse_ring_formula("exists x . x * x = 2")
    ps = ad.formula_place_set(h, {})
    got = [ps.member(p) for p in (2, 3, 5, 7, 17, 23, 31)]
    assert got == [False, False, False, True, True, True, True]


# --------------------------------------------------------------------------
# full first-order evaluation over the adeles


def test_nontrivial_idempotents_exist_adelically():
    s = parse_ring_formula("exists x . x * x = x & !(x = 0) & !(x = 1)")
    assert ad.eval_adelic_formula(s) is True
    # ... but in no finite quotient ring of this family
    for n in (2, 3, 4, 5, 8, 9, 25, 27):
        assert eval_fo_finite_ring(s, FiniteRing(n)) is False, n


def test_multiplicative_identity_exists_adelically():
    s = parse_ring_formula("exists x . forall y . x * y = y")
    assert ad.eval_adelic_formula(s) is True


def test_eval_adelic_formula_with_environment():
    qf = parse_ring_formula("x * x = x")
    e2 = TruncatedAdele({2: Fraction(1)}, 0)
    assert ad.eval_adelic_formula(qf, {"x": e2}) is True
    assert ad.eval_adelic_formula(parse_ring_formula("!(x = x)"),
                                  {"x": TruncatedAdele.principal(3)}) is False


def test_eval_adelic_formula_negation_consistency():
    s = parse_ring_formula(
        "!(exists x . x * x = x & !(x = 0) & !(x = 1))")
    assert ad.eval_adelic_formula(s) is False


def test_invertibility_distinguishes_adeles():
    inv = parse_ring_formula("exists y . x * y = 1")
    assert ad.eval_adelic_formula(
        inv, {"x": TruncatedAdele.principal(6)}) is True
    assert ad.eval_adelic_formula(
        inv, {"x": TruncatedAdele({2: Fraction(1)}, 0)}) is False
