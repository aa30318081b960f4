import math
from fractions import Fraction

import pytest

import oracles
from infomarket.decision import (DecisionProblem, argmax_first, best_action, gain_from_information,
                                 random_scenario, realized_voi, verify_gain_from_information, voi_ex_ante,
                                 voi_ex_post, voi_report)
from infomarket.errors import InconsistentGoods
from infomarket.prob import NULL, InfoGood, SampleSpace, join
from infomarket.decision import trial_rng


def test_argmax_prefers_lowest_index_within_tolerance():
    assert argmax_first([1.0, 1.0 + 1e-12, 0.5]) == 0
    assert argmax_first([0.0, 2.0, 2.0]) == 1


def test_log_score_prior_report(factcheck):
    action, value = best_action(factcheck.problem, factcheck.space)
    assert action == 0.1
    assert value == pytest.approx(0.1 * math.log(0.1) + 0.9 * math.log(0.9))


def test_log_score_rejects_degenerate_grid(factcheck):
    with pytest.raises(ValueError):
        DecisionProblem.log_score(factcheck.space, factcheck.variable("E"), [0.0, 0.5])


def test_realized_voi_fact_check(factcheck):
    sp, pr = factcheck.space, factcheck.problem
    g1 = InfoGood.resolve(factcheck.variable("I1"), "111")
    g12 = join([g1, InfoGood.resolve(factcheck.variable("I2"), "111")], sp)
    assert realized_voi(pr, sp, g1, "111") == pytest.approx(math.log(4), abs=1e-9)
    assert realized_voi(pr, sp, g12, "111") == pytest.approx(math.log(2), abs=1e-9)


def test_ex_post_voi_fact_check(factcheck):
    sp, pr = factcheck.space, factcheck.problem
    g1 = InfoGood.resolve(factcheck.variable("I1"), "111")
    g12 = join([g1, InfoGood.resolve(factcheck.variable("I2"), "111")], sp)
    assert voi_ex_post(pr, sp, g1) == pytest.approx(0.311239, abs=1e-6)
    assert voi_ex_post(pr, sp, g12) == pytest.approx(0.044403, abs=1e-6)
    assert voi_ex_post(pr, sp, g1) > voi_ex_post(pr, sp, g12)


def test_ex_ante_matches_oracle(factcheck):
    sp, pr = factcheck.space, factcheck.problem
    i1 = factcheck.variable("I1")
    assert voi_ex_ante(pr, sp, i1) == pytest.approx(0.021673, abs=1e-6)
    assert voi_ex_ante(pr, sp, i1) == pytest.approx(oracles.ex_ante_voi(sp, pr, i1), abs=1e-12)


def test_null_good_is_worthless(factcheck):
    assert voi_ex_post(factcheck.problem, factcheck.space, NULL) == 0.0
    assert realized_voi(factcheck.problem, factcheck.space, NULL, "000") == 0.0
    assert voi_ex_ante(factcheck.problem, factcheck.space, NULL.variable) == 0.0


def test_price_is_subtracted(factcheck):
    g = InfoGood.resolve(factcheck.variable("I1"), "111", price=0.35)
    assert voi_ex_post(factcheck.problem, factcheck.space, g) == pytest.approx(0.311239 - 0.35, abs=1e-6)


def test_realized_voi_rejects_false_good(factcheck):
    with pytest.raises(InconsistentGoods):
        realized_voi(factcheck.problem, factcheck.space, InfoGood(factcheck.variable("I1"), 0), "111")


def test_report_bundles_all_three(factcheck):
    g = InfoGood.resolve(factcheck.variable("I1"), "111")
    rep = voi_report(factcheck.problem, factcheck.space, g, "111")
    assert (rep.best_action_prior, rep.best_action_posterior) == (0.1, 0.4)
    assert rep.realized == pytest.approx(math.log(4))


def test_perfect_information_value():
    space = SampleSpace(("rain", "sun"), (Fraction(1, 3), Fraction(2, 3)))
    problem = DecisionProblem(("umbrella", "none"), {"rain": (0, -5), "sun": (-1, 0)})
    weather = __import__("infomarket").RandomVariable("w", {"rain": "rain", "sun": "sun"})
    # prior: umbrella gives -2/3, none gives -5/3; perfect info gives 0
    assert gain_from_information(problem, space, weather) == pytest.approx(2 / 3)
    assert voi_ex_ante(problem, space, weather) == pytest.approx(2 / 3)


@pytest.mark.parametrize("seed", range(20))
def test_ex_post_matches_oracle_on_random_scenarios(seed):
    space, problem, var = random_scenario(trial_rng(99, seed))
    for value in var.values(space):
        if space.mass(var.event(value, space)) == 0:
            continue
        ours = voi_ex_post(problem, space, InfoGood(var, value))
        assert ours == pytest.approx(oracles.ex_post_voi(space, problem, var, value), abs=1e-12)


def test_gain_equals_ex_ante():
    for t in range(50):
        space, problem, var = random_scenario(trial_rng(5, t))
        assert gain_from_information(problem, space, var) == pytest.approx(voi_ex_ante(problem, space, var), abs=1e-12)


def test_lemma1_suite_small():
    rep = verify_gain_from_information(seed=3, trials=200)
    assert rep.passed and rep.min_slack >= -1e-9
