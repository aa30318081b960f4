"""Simulated information market driven by an exact Bayesian buyer.

Sellers hold private variables and post priced offers at one level of the
recursive context tree. The buyer runs the recursive inspection protocol on
the ladder the sellers induce; a different buyer strategy can be plugged in.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .decision import DecisionProblem, random_prior, voi_ex_post
from .inspection import InspectionGame, Offer, OfferLadder, PurchasePlan
from .prob import Evidence, InfoGood, RandomVariable, SampleSpace, condition

DEFAULT_LAMBDA = 0.5

# (game, level, upstream purchases, world index) -> choice
BuyerStrategy = Callable[[InspectionGame, int, tuple, int], object]


def oracle_buyer(game: InspectionGame, n: int, upstream: tuple, w: int):
    return game.rec_choose(n, upstream, w)


@dataclass(frozen=True)
class Pricing:
    rule: str = "voi_fraction"  # or "fixed"
    price: float = 0.0
    fraction: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if self.rule not in ("fixed", "voi_fraction"):
            raise ValueError(f"unknown pricing rule {self.rule!r}")
        if self.rule == "fixed" and self.price < 0:
            raise ValueError("fixed price must be nonnegative")
        if self.rule == "voi_fraction" and not 0 < self.fraction <= 1:
            raise ValueError("voi fraction must lie in (0, 1]")

    def to_dict(self) -> dict:
        if self.rule == "fixed":
            return {"rule": "fixed", "price": self.price}
        return {"rule": "voi_fraction", "lambda": self.fraction}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Pricing":
        if d.get("rule", "voi_fraction") == "fixed":
            return cls("fixed", float(d.get("price", 0.0)))
        return cls("voi_fraction", fraction=float(d.get("lambda", DEFAULT_LAMBDA)))


@dataclass(frozen=True)
class SellerAgent:
    name: str
    variables: tuple
    level: int = 0
    pricing: Pricing = Pricing()

    @classmethod
    def from_dict(cls, d: Mapping, variables: Mapping[str, RandomVariable]) -> "SellerAgent":
        return cls(d["name"], tuple(variables[v] for v in d["variables"]), int(d.get("level", 0)),
                   Pricing.from_dict(d.get("pricing", {})))

    def to_dict(self) -> dict:
        return {"name": self.name, "variables": [v.name for v in self.variables], "level": self.level,
                "pricing": self.pricing.to_dict()}

    def price(self, variable: RandomVariable, outcome, problem: DecisionProblem, space: SampleSpace) -> float:
        if self.pricing.rule == "fixed":
            return self.pricing.price
        gain = voi_ex_post(problem, space, InfoGood(variable, variable(outcome), 0.0))
        return self.pricing.fraction * max(gain, 0.0)

    def offers(self, outcome, problem: DecisionProblem, space: SampleSpace) -> tuple:
        return tuple(Offer(v, self.price(v, outcome, problem, space)) for v in self.variables)


@dataclass(frozen=True)
class BuyerContext:
    problem: DecisionProblem
    space: SampleSpace
    true_outcome: object
    evidence: Evidence = Evidence()
    budget: float | None = None
    depth: int = 1

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be nonnegative")

    @property
    def posterior(self) -> SampleSpace:
        return condition(self.space, self.evidence) if len(self.evidence) else self.space

    def child(self) -> "BuyerContext":
        return BuyerContext(self.problem, self.space, self.true_outcome, self.evidence, self.budget, self.depth - 1)


@dataclass
class MarketRun:
    context: BuyerContext
    ladder: OfferLadder
    nodes: list            # one record per context, deepest first (decision order)
    plan: PurchasePlan
    payments: dict
    owners: dict = field(default_factory=dict)

    @property
    def final_action(self):
        return self.plan.action

    @property
    def total_paid(self) -> float:
        return math.fsum(self.payments.values())

    def trace(self) -> dict:
        return {
            "depth": self.context.depth,
            "nodes": self.nodes,
            "final_action": self.plan.action,
            "purchases": self.plan.names(),
            "payments": dict(sorted(self.payments.items())),
        }


def induced_ladder(context: BuyerContext, sellers: Sequence[SellerAgent]) -> tuple[OfferLadder, dict]:
    """The offer ladder the sellers post, plus a map from offer name to seller.

    Value-dependent prices make the ladder outcome-dependent (generative mode).
    """
    space = context.posterior
    owners = {}
    for s in sellers:
        for v in s.variables:
            if v.name in owners:
                raise ValueError(f"variable {v.name!r} offered by two sellers")
            owners[v.name] = s.name

    def levels_at(outcome) -> tuple:
        return tuple(
            tuple(o for s in sellers if s.level == k for o in s.offers(outcome, context.problem, space))
            for k in range(context.depth)
        )

    if all(s.pricing.rule == "fixed" for s in sellers):
        return OfferLadder(levels_at(context.true_outcome)), owners
    support = [o for o, p in space.items() if p > 0]
    return OfferLadder((), tuple((o, levels_at(o)) for o in support)), owners


def _restricted(space: SampleSpace) -> SampleSpace:
    kept = [(o, p) for o, p in space.items() if p > 0]
    return SampleSpace(tuple(o for o, _ in kept), tuple(p for _, p in kept))


def run_rip(context: BuyerContext, sellers: Sequence[SellerAgent], buyer: BuyerStrategy = oracle_buyer) -> MarketRun:
    """Recursive inspection: the deepest context decides first, every purchase flows down."""
    space = _restricted(context.posterior)
    problem = DecisionProblem(context.problem.actions, tuple((o, context.problem.row(o)) for o in space.outcomes))
    ladder, owners = induced_ladder(context, sellers)
    if ladder.mode == "generative":
        ladder = OfferLadder((), tuple((o, lv) for o, lv in ladder.generator if o in space.outcomes))
    game = InspectionGame(problem, space, ladder, budget=context.budget)
    w = game.world(context.true_outcome)
    nodes = []
    upstream: tuple = ()
    for n in range(game.N, 0, -1):
        choice = buyer(game, n, upstream, w)
        nodes.append({
            "depth": n,
            "offers": [{"good": game.offers[i].name, "seller": owners[game.offers[i].name],
                        "price": game.price[i], "value": game.val[i][w]} for i in game.level_ids[n - 1][w]],
            "purchased": [game.offers[i].name for i in choice],
        })
        upstream = (choice,) + upstream
    action = buyer(game, 0, upstream, w)
    nodes.append({"depth": 0, "offers": [], "purchased": [], "action": problem.actions[action]})
    plan = game.to_plan(action, upstream)
    payments = {s.name: 0.0 for s in sellers}
    for level in plan.purchases:
        for offer in level:
            payments[owners[offer.name]] += offer.price
    return MarketRun(context, ladder, nodes, plan, payments, owners)


def run_one_level(context: BuyerContext, sellers: Sequence[SellerAgent], buyer: BuyerStrategy = oracle_buyer) -> MarketRun:
    """Single round: level-0 sellers post offers, the buyer inspects and buys the best affordable bundle."""
    if context.depth < 1:
        raise ValueError("one-level inspection needs depth >= 1")
    ctx = BuyerContext(context.problem, context.space, context.true_outcome, context.evidence, context.budget, 1)
    return run_rip(ctx, [s for s in sellers if s.level == 0], buyer)


def greedy_buyer(game: InspectionGame, n: int, upstream: tuple, w: int):
    """Buys every offer at positive levels and then acts like the oracle."""
    if n == 0:
        return game.rec_choose(0, upstream, w)
    return game.options(n, w)[0]


# -- random markets -------------------------------------------------------------


def random_market(rng: random.Random, depth: int | None = None):
    """A random (context, sellers) pair with 1-2 sellers per level."""
    m = rng.randint(2, 6)
    outcomes = tuple(f"w{i}" for i in range(m))
    space = SampleSpace(outcomes, random_prior(rng, m))
    k = rng.randint(2, 3)
    problem = DecisionProblem(
        tuple(f"a{j}" for j in range(k)),
        tuple((o, tuple(round(rng.uniform(-1, 1), 3) for _ in range(k))) for o in outcomes),
    )
    depth = depth if depth is not None else rng.randint(1, 2)
    sellers = []
    for level in range(depth):
        for j in range(rng.randint(1, 2)):
            var = RandomVariable(f"L{level}S{j}", tuple((o, rng.randrange(rng.randint(2, 3))) for o in outcomes))
            if rng.random() < 0.5:
                pricing = Pricing("fixed", round(rng.choice([0.0, rng.uniform(0, 0.2)]), 3))
            else:
                pricing = Pricing("voi_fraction", fraction=rng.choice([0.25, 0.5, 1.0]))
            sellers.append(SellerAgent(f"seller-{level}-{j}", (var,), level, pricing))
    context = BuyerContext(problem, space, rng.choice(outcomes), depth=depth)
    return context, sellers


def rip_exante(context: BuyerContext, sellers: Sequence[SellerAgent]) -> float:
    """Buyer's ex-ante expected utility from running the recursive protocol at this depth."""
    space = _restricted(context.posterior)
    problem = DecisionProblem(context.problem.actions, tuple((o, context.problem.row(o)) for o in space.outcomes))
    ladder, _ = induced_ladder(context, sellers)
    if ladder.mode == "generative":
        ladder = OfferLadder((), tuple((o, lv) for o, lv in ladder.generator if o in space.outcomes))
    return InspectionGame(problem, space, ladder, budget=context.budget).recursive_exante()
