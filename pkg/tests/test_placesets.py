import random

import pytest

from adelic.placesets import PlaceSet


def _samples():
    return [
        PlaceSet.empty(),
        PlaceSet.all_primes(),
        PlaceSet.finite([2, 3, 11]),
        PlaceSet.finite([]),
        PlaceSet.cofinite([5]),
        PlaceSet.cofinite([]),
        PlaceSet.congruence(4, [1]),
        PlaceSet.congruence(3, [2], include=[3], exclude=[5]),
        PlaceSet.congruence(8, [1, 7]),
        PlaceSet.congruence(12, [5]),
    ]


def test_factories_and_membership():
    s = PlaceSet.finite([3, 2, 3])
    assert s.member(2) and s.member(3) and not s.member(5)
    assert s.elements() == (2, 3)
    assert s.cardinality() == 2
    c = PlaceSet.cofinite([7])
    assert c.member(2) and not c.member(7)
    assert c.is_infinite() and not c.is_finite()
    g = PlaceSet.congruence(4, [1], include=[2], exclude=[13])
    assert g.member(2) and g.member(5) and g.member(17)
    assert not g.member(13) and not g.member(3)


def test_validation():
    with pytest.raises(ValueError):
        PlaceSet.finite([4])
    with pytest.raises(ValueError):
        PlaceSet.congruence(0, [1])
    with pytest.raises(ValueError):
        PlaceSet.congruence(4, [1, 2])
    # overlapping fixes resolve deterministically, invariant intact
    s = PlaceSet.congruence(4, [1], include=[3], exclude=[3])
    assert not (set(s.include) & set(s.exclude))
    assert not s.member(3)


def test_conductor_reduction():
    assert PlaceSet.congruence(16, [1, 7, 9, 15]) \
        == PlaceSet.congruence(8, [1, 7])
    assert PlaceSet.congruence(6, [1, 5]) == PlaceSet.cofinite([2, 3])


def test_congruence_with_all_residues_is_cofinite_like():
    # residues covering every unit class leave only the excluded primes out
    s = PlaceSet.congruence(3, [1, 2])
    assert s.is_infinite()
    assert all(s.member(p) for p in (2, 5, 7, 11, 13))


def test_split_infinite_gives_disjoint_infinite_halves():
    s = PlaceSet.congruence(4, [1], include=[2])
    a, b = s.split_infinite()
    assert a.is_infinite() and b.is_infinite()
    assert a.meet(b) == PlaceSet.empty()
    assert a.join(b) == s
    with pytest.raises(ValueError):
        PlaceSet.finite([2, 3]).split_infinite()


def test_algebra_laws_pointwise(seed):
    rng = random.Random(seed)
    pool = _samples()
    probe = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 101, 103)
    for _ in range(150):
        a, b = rng.choice(pool), rng.choice(pool)
        m, j, d = a.meet(b), a.join(b), a.difference(b)
        comp = a.complement()
        for p in probe:
            assert m.member(p) == (a.member(p) and b.member(p))
            assert j.member(p) == (a.member(p) or b.member(p))
            assert d.member(p) == (a.member(p) and not b.member(p))
            assert comp.member(p) == (not a.member(p))
        # De Morgan
        assert a.meet(b).complement() == a.complement().join(b.complement())
        assert a.join(b).complement() == a.complement().meet(b.complement())
        # lattice identities
        assert a.meet(a) == a and a.join(a) == a
        assert a.meet(b) == b.meet(a) and a.join(b) == b.join(a)
        assert a.complement().complement() == a


def test_crt_meets():
    assert PlaceSet.congruence(4, [1]).meet(PlaceSet.congruence(3, [2])) \
        == PlaceSet.congruence(12, [5])
    assert PlaceSet.congruence(4, [1]).meet(PlaceSet.congruence(4, [3])) \
        == PlaceSet.empty()


def test_iteration_and_first_n():
    c = PlaceSet.congruence(4, [1])
    first = c.first_n(5)
    assert list(first) == [5, 13, 17, 29, 37]
    it = c.iter_members()
    assert [next(it) for _ in range(3)] == [5, 13, 17]


def test_json_round_trip():
    for s in _samples():
        assert PlaceSet.from_json(s.to_json()) == s


def test_equality_is_extensional():
    # same set through different constructions
    assert PlaceSet.cofinite([]) == PlaceSet.all_primes()
    a = PlaceSet.congruence(4, [1, 3], include=[2])
    assert a == PlaceSet.all_primes()
    assert PlaceSet.finite([2, 3]).difference(PlaceSet.finite([3])) \
        == PlaceSet.finite([2])
