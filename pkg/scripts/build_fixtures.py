"""Regenerate the shipped scenario fixtures and check them against the solvers."""

from __future__ import annotations

import random
import sys
from fractions import Fraction
from pathlib import Path

from infomarket.decision import DecisionProblem
from infomarket.inspection import (InspectionGame, nontheorem_gap,
                                   random_inspection_instance, solve_recursive, solve_successive)
from infomarket.decision import trial_rng
from infomarket.oversight import dump_oversight_scenario, random_oversight_instance, solve_spe
from infomarket.prob import RandomVariable, SampleSpace
from infomarket.scenario import build_doc, load_scenario, save_scenario

OUT = Path(__file__).resolve().parents[1] / "src" / "infomarket" / "scenarios"


def bit(name: str, outcomes, i: int) -> RandomVariable:
    return RandomVariable(name, tuple((o, int(o[i])) for o in outcomes))


def factcheck(price: float = 0.0, name: str = "factcheck") -> dict:
    # outcome label: I1 I2 E
    masses = {
        "000": Fraction(69, 160), "001": Fraction(3, 80),
        "010": Fraction(69, 160), "011": Fraction(3, 80),
        "100": Fraction(1, 48), "101": Fraction(1, 48),
        "110": Fraction(1, 60), "111": Fraction(1, 240),
    }
    space = SampleSpace.from_mapping(masses)
    outs = space.outcomes
    i1, i2, e = bit("I1", outs, 0), bit("I2", outs, 1), bit("E", outs, 2)
    doc = build_doc(
        space, {"log_score": {"event": "E", "occurs": 1, "grid": [0.08, 0.1, 0.2, 0.4, 0.5]}}, [i1, i2, e],
        name=name,
        description="Fact-checking: I1 raises the forecast of E, the correlated I2 pulls it back down.",
        true_outcome="111",
        ladder={"levels": [[{"variable": "I1", "price": price}], [{"variable": "I2", "price": 0.0}]]},
        sellers=[
            {"name": "claimant", "variables": ["I1"], "level": 0, "pricing": {"rule": "fixed", "price": price}},
            {"name": "checker", "variables": ["I2"], "level": 1, "pricing": {"rule": "fixed", "price": 0.0}},
        ],
        market={"depth": 2, "budget": None},
        params={"depth": 2, "mode": "recursive", "seed": 0},
        fixtures=[
            {"kind": "probability", "label": "P(E)", "event": {"E": 1}, "equals": "1/10"},
            {"kind": "probability", "label": "P(I1=1)", "event": {"I1": 1}, "equals": "1/16"},
            {"kind": "probability", "label": "P(E|I1=1)", "event": {"E": 1}, "given": {"I1": 1}, "equals": "2/5"},
            {"kind": "probability", "label": "P(E|I1=1,I2=1)", "event": {"E": 1}, "given": {"I1": 1, "I2": 1},
             "equals": "1/5"},
        ],
    )
    return doc


def legume() -> dict:
    # outcome label: toxic, boiling works, rice unhealthy, toxicity report, rice report
    counts = {"11111": 1, "10111": 120, "00111": 600, "10010": 2000, "00000": 100000, "01000": 50}
    total = sum(counts.values())
    space = SampleSpace(tuple(counts), tuple(Fraction(c, total) for c in counts.values()))
    outs = space.outcomes

    def util(o, a):
        toxic, boil, rice_bad = int(o[0]), int(o[1]), int(o[2])
        if a == "x0":
            return -10.0 if toxic else 1.0
        if a == "x1":
            return -1.0 if rice_bad else 0.5
        return (0.9 if boil else -10.0) if toxic else 0.9

    problem = DecisionProblem.from_function(space, ("x0", "x1", "x2"), util)
    variables = [bit("toxic", outs, 0), bit("rice_unhealthy", outs, 2),
                 bit("I1_0", outs, 3), bit("I1_1", outs, 4), bit("I2_0", outs, 1)]
    return build_doc(
        space, problem, variables,
        name="legume",
        description="x0 eat raw legume, x1 eat rice, x2 eat boiled legume. I1_0: legumes are toxic; "
                    "I1_1: rice is unhealthy; I2_0: boiling removes the toxins.",
        true_outcome="11111",
        ladder={"levels": [[{"variable": "I1_0", "price": 0.0}, {"variable": "I1_1", "price": 0.0}],
                           [{"variable": "I2_0", "price": 0.0}]]},
        sellers=[
            {"name": "toxicologist", "variables": ["I1_0"], "level": 0, "pricing": {"rule": "fixed", "price": 0.0}},
            {"name": "nutritionist", "variables": ["I1_1"], "level": 0, "pricing": {"rule": "fixed", "price": 0.0}},
            {"name": "cook", "variables": ["I2_0"], "level": 1, "pricing": {"rule": "fixed", "price": 0.0}},
        ],
        market={"depth": 2, "budget": None},
        params={"depth": 2, "mode": "recursive", "seed": 0},
        fixtures=[
            {"kind": "best_action", "label": "prior choice", "equals": "x0"},
            {"kind": "best_action", "label": "toxicity report alone", "given": {"I1_0": 1}, "equals": "x1"},
            {"kind": "best_action", "label": "both reports, boiling unknown", "given": {"I1_0": 1, "I1_1": 1},
             "equals": "x0"},
            {"kind": "best_action", "label": "all three reports", "given": {"I1_0": 1, "I1_1": 1, "I2_0": 1},
             "equals": "x2"},
        ],
    )


def oversight_s6() -> dict:
    masses = {"111": Fraction(1, 8), "110": Fraction(1, 8), "100": Fraction(1, 4), "000": Fraction(1, 2)}
    util = {"111": (0, 1), "110": (2, -1), "100": (-1, 2), "000": (2, -1)}
    space = SampleSpace.from_mapping(masses)
    outs = space.outcomes
    problem = DecisionProblem(("0", "1"), tuple((o, util[o]) for o in outs))
    k = RandomVariable("K", tuple((o, o) for o in outs))
    variables = [k, bit("I1", outs, 0), bit("I2", outs, 1), bit("I3", outs, 2)]

    def expect(action, given, value, label):
        return {"kind": "expectation", "label": label, "action": action, "given": given, "equals": value, "tol": 1e-9}

    return build_doc(
        space, problem, variables,
        name="oversight-s6",
        description="Cheap refutation: I1 favours 1, I2 refutes it, the expensive I3 would restore it.",
        true_outcome="111",
        oversight={"knowledge": "K", "moves": [{"variable": "I1", "price": 0.0}, {"variable": "I2", "price": 0.0},
                                                {"variable": "I3", "price": 100.0}], "depth_cap": 8},
        fixtures=[
            expect("0", {}, 1.0, "prior E[U(0)]"), expect("1", {}, 0.0, "prior E[U(1)]"),
            expect("0", {"I1": 1}, 0.0, "E[U(0)|I1]"), expect("1", {"I1": 1}, 1.0, "E[U(1)|I1]"),
            expect("0", {"I1": 1, "I2": 1}, 1.0, "E[U(0)|I1,I2]"), expect("1", {"I1": 1, "I2": 1}, 0.0, "E[U(1)|I1,I2]"),
            expect("0", {"I1": 1, "I2": 1, "I3": 1}, 0.0, "E[U(0)|I1,I2,I3]"),
            expect("1", {"I1": 1, "I2": 1, "I3": 1}, 1.0, "E[U(1)|I1,I2,I3]"),
            expect("0", {"K": "111"}, 0.0, "E[U(0)|K]"), expect("1", {"K": "111"}, 1.0, "E[U(1)|K]"),
        ],
    )


def nontheorem(seed: int = 11) -> dict:
    """First generated instance where the recursive plan acts differently from the all-offers benchmark."""
    rng = random.Random(seed)
    while True:
        space, problem, ladder = random_inspection_instance(rng, n_outcomes=(3, 5), max_depth=1, max_offers=1)
        if ladder.depth != 1 or not ladder.levels[0]:
            continue
        truth = rng.choice(space.outcomes)
        game = InspectionGame(problem, space, ladder)
        a, sets = game.rec_play(game.world(truth))
        if not any(sets) and nontheorem_gap(problem, space, ladder, truth) > 1e-6:
            offers = ladder.levels[0]
            return build_doc(space, problem, [o.variable for o in offers], name="nontheorem",
                             description="The recursive buyer declines a priced offer whose contents would change "
                                         "its action: buying everything is not always best.",
                             true_outcome=truth,
                             ladder={"levels": [[{"variable": o.name, "price": o.price} for o in offers]]},
                             params={"depth": 1, "mode": "recursive", "seed": seed})


def oversight_counterexample() -> dict:
    """Generated instance where the first provider profits from a move that the second one extends."""
    doc = dump_oversight_scenario(random_oversight_instance(trial_rng(7, 23)), name="oversight-counterexample")
    doc["description"] = ("Provider 1 reveals I2, provider 2 profitably adds I1, and provider 1 is still paid more "
                          "than any inextensible first move would earn.")
    return doc


def main() -> int:
    docs = {
        "factcheck": factcheck(),
        "factcheck-priced": factcheck(price=0.35, name="factcheck-priced"),
        "legume": legume(),
        "oversight-s6": oversight_s6(),
        "nontheorem": nontheorem(),
        "oversight-counterexample": oversight_counterexample(),
    }
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in docs.items():
        save_scenario(doc, OUT / f"{name}.scenario")
        load_scenario(OUT / f"{name}.scenario")

    leg = load_scenario(OUT / "legume.scenario")
    succ = solve_successive(leg.problem, leg.space, leg.ladder(), leg.true_outcome)
    rec = solve_recursive(leg.problem, leg.space, leg.ladder(), leg.true_outcome)
    assert succ.action == "x1" and succ.names() == [["I1_0"], ["I2_0"]], succ
    assert rec.action == "x2" and rec.names() == [["I1_0", "I1_1"], ["I2_0"]], rec

    s6 = load_scenario(OUT / "oversight-s6.scenario").oversight_instance()
    _, path, _ = solve_spe(s6)
    assert 0 not in path, path

    cx = load_scenario(OUT / "oversight-counterexample.scenario").oversight_instance()
    _, path, _ = solve_spe(cx)
    assert path[1] is not None, path
    print("wrote", ", ".join(sorted(docs)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
