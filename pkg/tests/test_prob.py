from fractions import Fraction

import pytest

from infomarket.errors import EvidenceImpossible, InconsistentGoods
from infomarket.prob import (NULL, Evidence, InfoGood, RandomVariable, SampleSpace, condition, expectation, join,
                             probability)


@pytest.fixture
def die():
    return SampleSpace.uniform(range(1, 7))


def parity(space):
    return RandomVariable.from_function("parity", space, lambda o: o % 2)


def test_prior_must_sum_to_one():
    with pytest.raises(ValueError):
        SampleSpace(("a", "b"), (Fraction(1, 2), Fraction(15, 32)))


def test_negative_and_duplicate_rejected():
    with pytest.raises(ValueError):
        SampleSpace(("a", "b"), (Fraction(3, 2), Fraction(-1, 2)))
    with pytest.raises(ValueError):
        SampleSpace(("a", "a"), (Fraction(1, 2), Fraction(1, 2)))


def test_probability_is_exact(die):
    even = Evidence.of((parity(die), 0))
    assert probability(die, even) == Fraction(1, 2)
    assert probability(die) == 1
    assert probability(die, {1, 2}) == Fraction(1, 3)


def test_condition_renormalizes(die):
    post = condition(die, Evidence.of((parity(die), 1)))
    assert post.p(1) == Fraction(1, 3)
    assert post.p(2) == 0
    assert sum(post.prior) == 1


def test_condition_on_impossible_event(die):
    with pytest.raises(EvidenceImpossible):
        condition(die, set())


def test_expectation(die):
    assert expectation(die, float) == pytest.approx(3.5)


def test_constant_variable_is_null():
    assert NULL.is_null
    assert RandomVariable.constant()(42) is None


def test_coarsening(die):
    ident = RandomVariable.from_function("id", die, lambda o: o)
    assert parity(die).coarsens(ident, die)
    assert not ident.coarsens(parity(die), die)


def test_join_combines_partitions_and_prices(die):
    low = RandomVariable.from_function("low", die, lambda o: o <= 3)
    goods = [InfoGood(parity(die), 0, 0.25), InfoGood(low, True, 0.5)]
    j = join(goods, die)
    assert j.price == 0.75
    assert j.variable.event(j.value, die) == frozenset({2})


def test_join_is_idempotent_and_ignores_null(die):
    g = InfoGood(parity(die), 1, 0.1)
    assert join([g, g, NULL], die) == g
    assert join([NULL], die) is NULL


def test_join_inconsistent_goods(die):
    low = RandomVariable.from_function("low", die, lambda o: o <= 1)
    with pytest.raises(InconsistentGoods):
        join([InfoGood(parity(die), 0), InfoGood(low, True)], die)


def test_good_check(die):
    with pytest.raises(InconsistentGoods):
        InfoGood(parity(die), 7).check(die)
    with pytest.raises(ValueError):
        InfoGood(parity(die), 0, -1.0)
