import math
import random
from fractions import Fraction

import pytest

from adelic.measure import (
    Ac1, CAnd, CNot, COr, VCong, VGe, VLe,
    RationalFunction, _truth, adelic_measure, constraint_to_text,
    euler_truncation, local_measure_at_p, local_measure_symbolic,
    parse_constraint, zeta_factor_set,
)

F = Fraction


# --------------------------------------------------------------------------
# constraint parsing


def test_parse_constraint_shapes():
    assert parse_constraint("0<=v<=1") == CAnd(VGe(0), VLe(1))
    assert parse_constraint("v=0") == CAnd(VGe(0), VLe(0))
    assert parse_constraint("v>=3") == VGe(3)
    assert parse_constraint("v%3==2") == VCong(3, 2)
    assert parse_constraint("ac=1") == Ac1()
    assert parse_constraint("v>=0 & v%2==1 & ac=1") == CAnd(
        CAnd(VGe(0), VCong(2, 1)), Ac1())
    assert parse_constraint("!(v=0) & v>=-1") == CAnd(
        CNot(CAnd(VGe(0), VLe(0))), VGe(-1))
    assert parse_constraint("v=-1 | v=2") == COr(
        CAnd(VGe(-1), VLe(-1)), CAnd(VGe(2), VLe(2)))


@pytest.mark.parametrize(
    "bad", ["ac=2", "v==1", "x<=v", "v>=", "(v=0", "v=0 v=1"])
def test_parse_constraint_rejects(bad):
    with pytest.raises(ValueError):
        parse_constraint(bad)


def test_constraint_text_round_trip():
    c = parse_constraint("(v>=0 & v%3==2) | !(ac=1)")
    assert parse_constraint(constraint_to_text(c)) == c


# --------------------------------------------------------------------------
# rational functions of p


def test_rational_function_arithmetic():
    one = RationalFunction.constant(1)
    half = RationalFunction.constant(F(1, 2))
    assert str(one) == "1"
    assert (half + half).num == (1,) and (half + half).den == (1,)
    assert RationalFunction.p_power(-2).evaluate(3) == F(1, 9)
    assert RationalFunction((0,), (5,)).is_zero()


def test_rational_function_canonical_form():
    assert str(RationalFunction((-1, 0, 1), (0, 0, 1))) == "(p^2 - 1)/p^2"
    # (p^2 - 1)/(p - 1) cancels to p + 1
    c = RationalFunction((-1, 0, 1), (-1, 1))
    assert c.num == (1, 1) and c.den == (1,)


# --------------------------------------------------------------------------
# symbolic local measures


def test_measure_of_two_shells():
    mv = local_measure_symbolic(parse_constraint("0<=v<=1"))
    assert not mv.infinite
    for p in (2, 3, 5, 7):
        assert mv.numeric_at(p) == 1 - F(1, p * p)
    assert mv.numeric_at(2) == F(3, 4)


def test_measure_of_unit_shell():
    mv = local_measure_symbolic(parse_constraint("v=0"))
    for p in (2, 3, 5, 7):
        assert mv.numeric_at(p) == 1 - F(1, p)
    assert mv.numeric_at(5) == F(4, 5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_measure_of_ball(n):
    mv = local_measure_symbolic(parse_constraint(f"v={n - 1} & ac=1"))
    for p in (2, 3, 5, 7):
        assert mv.numeric_at(p) == F(1, p ** n)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_measure_of_zeta_factor_set(n):
    mv = local_measure_symbolic(zeta_factor_set(n))
    for p in (2, 3, 5, 7):
        assert mv.numeric_at(p) == F(p ** n, p ** n - 1)


def test_zeta_factor_symbolic_text():
    assert str(local_measure_symbolic(zeta_factor_set(2)).symbolic) \
        == "p^2/(p^2 - 1)"
    assert local_measure_at_p(zeta_factor_set(2), 3) == F(9, 8)
    assert local_measure_at_p(zeta_factor_set(3), 2) == F(8, 7)


def test_zeta_factor_set_validation():
    for bad in (1, 0, -3):
        with pytest.raises(ValueError):
            zeta_factor_set(bad)


def test_normalization_and_small_shells():
    assert local_measure_symbolic(VGe(0)).numeric_at(11) == 1
    assert local_measure_symbolic(
        parse_constraint("v=1 & ac=1")).numeric_at(3) == F(1, 9)
    assert local_measure_symbolic(
        CAnd(VGe(1), VLe(0))).numeric_at(2) == 0  # empty set


def test_infinite_measures():
    assert local_measure_symbolic(VLe(0)).infinite
    assert local_measure_symbolic(VCong(3, 1)).infinite
    assert local_measure_symbolic(Ac1()).infinite
    assert local_measure_symbolic(CNot(VGe(0))).infinite
    assert local_measure_at_p(VLe(0), 5) == math.inf
    assert not local_measure_symbolic(CAnd(VCong(3, 1), VGe(-4))).infinite


def test_additivity_of_disjoint_shells():
    a = parse_constraint("v=0")
    b = parse_constraint("v=1")
    ab = parse_constraint("0<=v<=1")
    for p in (2, 3, 5, 7, 11):
        assert (local_measure_at_p(a, p) + local_measure_at_p(b, p)
                == local_measure_at_p(ab, p))


def test_complement_inside_the_integers():
    inside = parse_constraint("v>=0 & ac=1")
    outside = parse_constraint("v>=0 & !(ac=1)")
    for p in (2, 3, 5, 7, 11):
        assert (local_measure_at_p(inside, p)
                + local_measure_at_p(outside, p) == 1)
        assert local_measure_at_p(inside, p) == F(1, p - 1)


def test_numeric_at_matches_symbolic_evaluation():
    for text in ("0<=v<=1", "v=0", "v>=0 & v%2==1", "v=2 & ac=1",
                 "(0<=v<=2 & ac=1) | v=4"):
        mv = local_measure_symbolic(parse_constraint(text))
        for p in (2, 3, 5, 7, 11):
            assert mv.numeric_at(p) == mv.symbolic.evaluate(p), (text, p)


def test_monte_carlo_shell_oracle(seed):
    rng = random.Random(seed)
    c = parse_constraint("(0<=v<=2 & ac=1) | v=4 | (v>=1 & v%2==1)")
    for p in (2, 3, 5):
        vs = list(range(-2, 7))
        units = [u for u in range(1, p ** 3) if u % p]
        n_ac1 = sum(1 for u in units if u % p == 1)
        theory = F(0)
        for k in vs:
            t_t = _truth(c, k, True)
            t_f = _truth(c, k, False)
            theory += F(t_t * n_ac1 + t_f * (len(units) - n_ac1),
                        len(vs) * len(units))
        n, hits = 20000, 0
        for _ in range(n):
            k = rng.choice(vs)
            u = rng.choice(units)
            if _truth(c, k, (u % p) == 1):
                hits += 1
        mean = float(theory)
        sigma = math.sqrt(mean * (1 - mean) / n)
        assert abs(hits / n - mean) <= 4 * sigma + 1e-12, (p, hits / n, mean)


# --------------------------------------------------------------------------
# Euler products over all primes


def test_euler_product_of_two_shells():
    br = adelic_measure(parse_constraint("0<=v<=1"), 10 ** 5)
    target = 6 / math.pi ** 2
    assert br.lo <= target <= br.hi
    assert br.hi - br.lo <= 1e-3
    assert br.flags == ()


def test_euler_product_of_zeta_factors():
    br = adelic_measure(zeta_factor_set(2), 10 ** 5)
    target = math.pi ** 2 / 6
    assert br.lo <= target <= br.hi
    assert br.hi - br.lo <= 1e-3


def test_euler_product_diverging_to_zero():
    br = adelic_measure(parse_constraint("v=0"), 10 ** 6)
    assert br.value < 0.05
    assert "DIVERGES_TO_ZERO" in br.flags
    assert br.lo == 0.0 and br.hi == br.value


def test_euler_brackets_nest():
    prev = None
    for P in (100, 1000, 10000, 100000):
        bp = adelic_measure(parse_constraint("0<=v<=1"), P)
        if prev is not None:
            assert prev.lo <= bp.lo + 1e-9 and bp.hi <= prev.hi + 1e-9
            assert prev.lo - 1e-12 <= bp.value <= prev.hi + 1e-12
        prev = bp


def test_adelic_measure_guards():
    with pytest.raises(ValueError):
        adelic_measure(VLe(0), 100)  # infinite local measure
    with pytest.raises(ValueError):
        adelic_measure(zeta_factor_set(2), 10)  # too small for tail bound
    with pytest.raises(ValueError):
        # identically empty set: the local factor never approaches 1
        adelic_measure(CAnd(parse_constraint("v=0"),
                            parse_constraint("v=1")), 1000)


def test_adelic_measure_degenerate_products():
    br = adelic_measure(VGe(0), 1000)
    assert br.value == br.lo == br.hi == 1.0
    br2 = adelic_measure(parse_constraint("v=0 & !(ac=1)"), 1000)
    assert br2.value == 0.0
    assert "ZERO_FACTOR" in br2.flags


# --------------------------------------------------------------------------
# generic Euler truncation sequences


def test_euler_truncation_shifted_geometric():
    seq = euler_truncation("shifted_geometric", 2, 10 ** 4)
    assert [mark for mark, _ in seq] == [10, 100, 1000, 10 ** 4]
    vals = [v for _, v in seq]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 2.0
    seq_half = euler_truncation("shifted_geometric", F(1, 2), 10 ** 4)
    vals_half = [v for _, v in seq_half]
    assert all(b >= a for a, b in zip(vals_half, vals_half[1:]))
    assert vals_half[-1] > vals[-1]


def test_euler_truncation_other_factors():
    assert all(v == 1.0 for _, v in euler_truncation("one", 1, 100))
    zs = euler_truncation("zeta", 2, 10 ** 4)
    assert abs(zs[-1][1] - math.pi ** 2 / 6) < 1e-3


def test_euler_truncation_validation():
    for bad in (0, -1, F(-1, 2)):
        with pytest.raises(ValueError):
            euler_truncation("shifted_geometric", bad, 100)
    with pytest.raises(ValueError):
        euler_truncation("nope", 1, 100)
