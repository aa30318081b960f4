import random

import pytest

import oracles
from infomarket.decision import DecisionProblem, trial_rng
from infomarket.errors import BudgetExceeded, ViolationFound
from infomarket.inspection import (InspectionGame, Offer, OfferLadder, check_superiority, count_admissible,
                                   enumerate_admissible, gain_from_inspection, is_non_leaking, node_value,
                                   random_inspection_instance, recursive_protocol, solve_recursive,
                                   solve_successive, successive_level_utility, verify_exante_superiority,
                                   verify_gain_from_inspection)
from infomarket.prob import RandomVariable, SampleSpace


def _names(plan):
    return [sorted(level) for level in plan.names()]


def test_legume_plans(legume):
    sp, pr, ladder = legume.space, legume.problem, legume.ladder()
    succ = solve_successive(pr, sp, ladder, "11111", depth=2)
    rec = solve_recursive(pr, sp, ladder, "11111", depth=2)
    assert succ.action == "x1" and _names(succ) == [["I1_0"], ["I2_0"]]
    assert rec.action == "x2" and _names(rec) == [["I1_0", "I1_1"], ["I2_0"]]
    assert pr.u("11111", pr.index("x2")) - pr.u("11111", pr.index("x1")) == pytest.approx(1.9)


def test_legume_exante(legume):
    game = InspectionGame(legume.problem, legume.space, legume.ladder())
    assert game.recursive_exante() == pytest.approx(0.977425, abs=1e-6)
    assert game.successive_exante() == pytest.approx(0.977406, abs=1e-6)


def test_factcheck_successive_level_utility(factcheck):
    i1 = factcheck.ladder().levels[0][0]
    u = successive_level_utility(factcheck.problem, factcheck.space, factcheck.ladder(), 1, [i1], "111")
    assert u == pytest.approx(1.386294, abs=1e-6)
    assert successive_level_utility(factcheck.problem, factcheck.space, factcheck.ladder(), 1, [], "111") == 0.0


def test_node_value_base_is_utility_minus_prices(factcheck):
    ladder = factcheck.ladder()
    i1, i2 = ladder.levels[0][0], ladder.levels[1][0]
    v = node_value(factcheck.problem, factcheck.space, ladder, [0.4, [i1], [i2]], "111")
    assert v == pytest.approx(factcheck.problem.u("111", factcheck.problem.index(0.4)))


def test_depth_and_budget_truncate(factcheck):
    plan = solve_recursive(factcheck.problem, factcheck.space, factcheck.ladder(), "111", depth=1)
    assert plan.depth == 1 and plan.action == 0.4
    plan = solve_recursive(factcheck.problem, factcheck.space, factcheck.ladder(), "111", depth=0)
    assert plan.depth == 0 and plan.action == 0.1


def test_successive_rejects_generative():
    space = SampleSpace.uniform(["a", "b"])
    v = RandomVariable("v", {"a": 0, "b": 1})
    ladder = OfferLadder((), (("a", ((Offer(v),),)), ("b", ((),))))
    problem = DecisionProblem(("x", "y"), {"a": (1, 0), "b": (0, 1)})
    with pytest.raises(ValueError):
        solve_successive(problem, space, ladder, "a")
    assert solve_recursive(problem, space, ladder, "a").action == "x"


def test_ladder_limits():
    vs = [Offer(RandomVariable(f"v{i}", {"a": 0})) for i in range(7)]
    with pytest.raises(ValueError):
        OfferLadder((vs,))
    with pytest.raises(ValueError):
        OfferLadder((vs[:1],)).truncated(3)


@pytest.mark.parametrize("t", range(40))
def test_recursive_matches_oracle(t):
    space, problem, ladder = random_inspection_instance(trial_rng(17, t))
    for truth in space.outcomes:
        if space.p(truth) == 0:
            continue
        plan = solve_recursive(problem, space, ladder, truth)
        action, sets = oracles.recursive_plan(space, problem, ladder, truth)
        assert (plan.action, _names(plan)) == (action, sets)


@pytest.mark.parametrize("t", range(40))
def test_successive_matches_oracle(t):
    space, problem, ladder = random_inspection_instance(trial_rng(18, t))
    for truth in space.outcomes:
        if space.p(truth) == 0:
            continue
        plan = solve_successive(problem, space, ladder, truth)
        action, sets = oracles.successive_plan(space, problem, ladder, truth)
        assert (plan.action, _names(plan)) == (action, sets)


def test_single_level_protocols_coincide():
    for t in range(200):
        space, problem, ladder = random_inspection_instance(trial_rng(19, t), max_depth=1, max_offers=3)
        for truth in space.outcomes:
            a = solve_recursive(problem, space, ladder, truth)
            b = solve_successive(problem, space, ladder, truth)
            assert (a.action, a.names()) == (b.action, b.names())


def test_enumeration_count_small_example():
    # one level, one binary offer, two actions. The level-1 decision inspects the
    # offer, so its table has 2 keys x 2 options = 4 upper tables. Level-0 keys
    # per upper table: buy always 2, buy in one world only 2, never buy 1.
    # Total 4 + 4 + 4 + 2 = 14.
    space = SampleSpace.uniform(["a", "b"])
    v = RandomVariable("v", {"a": 0, "b": 1})
    problem = DecisionProblem(("x", "y"), {"a": (1, 0), "b": (0, 1)})
    game = InspectionGame(problem, space, OfferLadder(((Offer(v),),)))
    protocols = list(enumerate_admissible(game))
    assert len(protocols) == count_admissible(game) == 14
    best = max(p.exante(game) for p in protocols)
    assert game.recursive_exante() == pytest.approx(best)
    assert recursive_protocol(game).exante(game) == pytest.approx(best)


def test_enumeration_budget():
    space, problem, ladder = random_inspection_instance(random.Random(4), n_outcomes=(8, 8), max_depth=2, max_offers=2)
    game = InspectionGame(problem, space, ladder)
    with pytest.raises(BudgetExceeded):
        list(enumerate_admissible(game, budget=1))


def test_non_leaking_detection():
    # buying at level 2 only in world a reveals a to the level-1 decision
    space = SampleSpace.uniform(["a", "b"])
    v = RandomVariable("v", {"a": 0, "b": 0})
    ladder = OfferLadder(((), (Offer(v),)))
    problem = DecisionProblem(("x",), {"a": (0,), "b": (0,)})
    game = InspectionGame(problem, space, ladder)
    j = game.offers.index(ladder.levels[1][0])
    assert is_non_leaking(game, [((), (j,)), ((), (j,))])
    assert not is_non_leaking(game, [((), (j,)), ((), ())])


def test_superiority_on_legume(legume):
    res = check_superiority(InspectionGame(legume.problem, legume.space, legume.ladder()))
    assert res.slack >= -1e-9
    assert res.chain_monotone
    assert res.recursive >= res.successive - 1e-9


def test_recursive_beats_non_leaking_successive():
    for t in range(300):
        space, problem, ladder = random_inspection_instance(trial_rng(23, t))
        game = InspectionGame(problem, space, ladder)
        plays = [game.succ_play(w) for w in range(len(game.worlds))]
        if is_non_leaking(game, [s for _, s in plays]):
            assert game.recursive_exante() >= game.successive_exante() - 1e-9


def test_depth_monotone_exante():
    for t in range(100):
        space, problem, ladder = random_inspection_instance(trial_rng(29, t), max_depth=3)
        values = [InspectionGame(problem, space, ladder, depth=d).recursive_exante() for d in range(ladder.depth + 1)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_gain_from_inspection_nonnegative(legume):
    gains = gain_from_inspection(InspectionGame(legume.problem, legume.space, legume.ladder()))
    assert len(gains) == 2 and min(gains) >= -1e-9


def test_suites_small():
    assert verify_exante_superiority(seed=2, trials=20).passed
    assert verify_gain_from_inspection(seed=2, trials=100).passed


def test_suite_start_offset_is_consistent():
    whole = verify_gain_from_inspection(seed=4, trials=20)
    tail = verify_gain_from_inspection(seed=4, trials=10, start=10)
    assert whole.rows[10:] == tail.rows


def test_violation_carries_scenario():
    err = ViolationFound("x", "{}")
    assert err.scenario == "{}"
