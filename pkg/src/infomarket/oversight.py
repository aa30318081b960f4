"""The marginal value oversight game.

Providers take turns revealing sub-variables of a shared knowledge variable K
at its true value. Provider n is paid the expected marginal improvement of the
interim decision caused by its move, minus the move's price, with the
expectation conditioned on everything revealed by the end of the game.

A history is a tuple of move indices. Every non-null move must strictly refine
the evidence gathered so far, so play always terminates; the null move ends
the game.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .decision import EPS, DecisionProblem, argmax_first, random_prior, trial_rng
from .errors import BudgetExceeded, ViolationFound
from .inspection import Offer
from .prob import InfoGood, RandomVariable, SampleSpace

NULL_MOVE = None
DEFAULT_STATE_BUDGET = 10**6


@dataclass(frozen=True)
class OversightInstance:
    space: SampleSpace
    problem: DecisionProblem
    knowledge: RandomVariable
    true_outcome: object
    moves: tuple  # of Offer
    depth_cap: int = 16

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(self.moves))
        if self.space.p(self.true_outcome) == 0:
            raise ValueError("the true outcome must have positive prior mass")
        for mv in self.moves:
            if not mv.variable.coarsens(self.knowledge, self.space):
                raise ValueError(f"move {mv.name!r} is not a coarsening of the knowledge variable")
            if mv.price < 0:
                raise ValueError(f"move {mv.name!r} has a negative price")
        support = [o for o, p in self.space.items() if p > 0]
        object.__setattr__(self, "_support", support)
        object.__setattr__(self, "_P", {o: float(self.space.p(o)) for o in support})
        object.__setattr__(self, "_move_events", tuple(
            frozenset(o for o in support if mv.variable(o) == mv.variable(self.true_outcome)) for mv in self.moves
        ))

    @classmethod
    def from_dict(cls, spec: Mapping, space: SampleSpace, variables: Mapping[str, RandomVariable],
                  problem: DecisionProblem, true_outcome) -> "OversightInstance":
        moves = tuple(Offer(variables[m["variable"]], float(m.get("price", 0.0))) for m in spec.get("moves", []))
        return cls(space, problem, variables[spec["knowledge"]], true_outcome, moves, int(spec.get("depth_cap", 16)))

    def to_dict(self) -> dict:
        return {
            "knowledge": self.knowledge.name,
            "moves": [{"variable": m.name, "price": m.price} for m in self.moves],
            "depth_cap": self.depth_cap,
        }

    # -- evidence -------------------------------------------------------------

    @property
    def root(self) -> frozenset:
        return frozenset(self._support)

    def event(self, history: Sequence[int | None]) -> frozenset:
        ev = self.root
        for m in history:
            if m is not None:
                ev = ev & self._move_events[m]
        return ev

    def good(self, m: int) -> InfoGood:
        mv = self.moves[m]
        return InfoGood(mv.variable, mv.variable(self.true_outcome), mv.price)

    def legal_moves(self, event: frozenset) -> list[int]:
        """Moves that strictly refine ``event``."""
        return [m for m, ev in enumerate(self._move_events) if len(event & ev) < len(event)]

    def expected(self, event: frozenset, action: int) -> float:
        total = math.fsum(self._P[o] for o in event)
        return math.fsum(self._P[o] * self.problem.u(o, action) for o in event) / total

    def best(self, event: frozenset) -> int:
        return argmax_first([self.expected(event, a) for a in range(len(self.problem.actions))])

    def gain(self, before: frozenset, after: frozenset, price: float, final: frozenset | None = None) -> float:
        """E[U(x0 after) - U(x0 before) | final] - price."""
        final = after if final is None else final
        return self.expected(final, self.best(after)) - self.expected(final, self.best(before)) - price


@dataclass(frozen=True)
class History:
    moves: tuple = ()

    def __len__(self):
        return len(self.moves)

    def goods(self, instance: OversightInstance) -> list[InfoGood]:
        return [instance.good(m) for m in self.moves if m is not None]

    def names(self, instance: OversightInstance) -> list[str]:
        return ["0" if m is None else instance.moves[m].name for m in self.moves]


def _moves(history) -> tuple:
    return tuple(history.moves) if isinstance(history, History) else tuple(history)


def interim_action(instance: OversightInstance, history, n: int | None = None):
    """x0_n: the best action given the first n revealed moves (all of them if n is None)."""
    moves = _moves(history)
    n = len(moves) if n is None else n
    return instance.problem.actions[instance.best(instance.event(moves[:n]))]


@dataclass
class RewardLedger:
    interim: list          # actions x0_0 .. x0_N
    marginal: list         # E[U^n(x^n) | full history]
    rewards: list          # R^n
    prices: list

    def telescopes(self, instance: OversightInstance, history, tol: float = EPS) -> bool:
        moves = _moves(history)
        final = instance.event(moves)
        a = instance.problem.index
        lhs = math.fsum(u + p for u, p in zip(self.marginal, self.prices))
        rhs = instance.expected(final, a(self.interim[-1])) - instance.expected(final, a(self.interim[0]))
        return abs(lhs - rhs) <= tol


def rewards(instance: OversightInstance, history) -> RewardLedger:
    moves = _moves(history)
    final = instance.event(moves)
    interim = [instance.best(instance.event(moves[:n])) for n in range(len(moves) + 1)]
    marginal, paid, prices = [], [], []
    for n, m in enumerate(moves, start=1):
        price = 0.0 if m is None else instance.moves[m].price
        u = (instance.expected(final, interim[n]) - instance.expected(final, interim[n - 1]) - price)
        prices.append(price)
        marginal.append(u)
        paid.append(0.0 if m is None else u)
    actions = [instance.problem.actions[i] for i in interim]
    return RewardLedger(actions, marginal, paid, prices)


def extends(instance: OversightInstance, candidate: int | None, history) -> bool:
    """Whether the move weakly profits given the history plus its own revealed value."""
    if candidate is None:
        return False
    before = instance.event(_moves(history))
    after = before & instance._move_events[candidate]
    if len(after) == len(before):
        return False
    return instance.gain(before, after, instance.moves[candidate].price) >= -EPS


class _Inextensibility:
    def __init__(self, instance: OversightInstance):
        self.inst = instance
        self.memo: dict = {}

    def extenders(self, event: frozenset) -> list[tuple[int, frozenset]]:
        out = []
        for m in self.inst.legal_moves(event):
            after = event & self.inst._move_events[m]
            if self.inst.gain(event, after, self.inst.moves[m].price) >= -EPS:
                out.append((m, after))
        return out

    def __call__(self, event: frozenset) -> bool:
        if event not in self.memo:
            # every extension y must admit a counter-extension z that is itself inextensible
            self.memo[event] = all(
                any(self(after_z) for _, after_z in self.extenders(after_y))
                for _, after_y in self.extenders(event)
            )
        return self.memo[event]


def inextensible(instance: OversightInstance, history) -> bool:
    return _Inextensibility(instance)(instance.event(_moves(history)))


@dataclass
class StrategyProfile:
    """Equilibrium moves keyed by (evidence event, stage); histories map onto these keys."""

    instance: OversightInstance
    table: dict = field(default_factory=dict)

    def move(self, history) -> int | None:
        moves = _moves(history)
        if len(moves) >= self.instance.depth_cap:
            return None
        return self.table[(self.instance.event(moves), len(moves))][0]

    def replay(self) -> tuple:
        path: list = []
        while True:
            m = self.move(path)
            path.append(m)
            if m is None:
                return tuple(path)


class _Solver:
    def __init__(self, instance: OversightInstance, budget: int):
        self.inst = instance
        self.budget = budget
        self.table: dict = {}

    def continuation(self, event: frozenset, depth: int) -> tuple[frozenset, tuple]:
        """Equilibrium play from a state: (final event, moves played, ending with the null move)."""
        if depth >= self.inst.depth_cap:
            return event, (None,)
        key = (event, depth)
        if key not in self.table:
            if len(self.table) >= self.budget:
                raise BudgetExceeded(len(self.table) + 1, self.budget, "game states")
            best_m, best_r, best_tail = None, 0.0, (event, ())
            for m in self.inst.legal_moves(event):
                after = event & self.inst._move_events[m]
                final, tail = self.continuation(after, depth + 1)
                r = self.inst.gain(event, after, self.inst.moves[m].price, final)
                if r > best_r + EPS:
                    best_m, best_r, best_tail = m, r, (final, tail)
            if best_m is None:
                self.table[key] = (None, 0.0, event, (None,))
            else:
                final, tail = best_tail
                self.table[key] = (best_m, best_r, final, (best_m,) + tail)
        _, _, final, path = self.table[key]
        return final, path


def solve_spe(instance: OversightInstance, budget: int = DEFAULT_STATE_BUDGET):
    """Backward induction. Returns (profile, equilibrium path, ledger of the path)."""
    solver = _Solver(instance, budget)
    _, path = solver.continuation(instance.root, 0)
    profile = StrategyProfile(instance, solver.table)
    return profile, path, rewards(instance, path)


def _ex_post(instance: OversightInstance, moves: Sequence[int]) -> float:
    """E[U(x0 after the moves) - U(x0 prior) | moves] - total price."""
    after = instance.event(moves)
    return instance.gain(instance.root, after, math.fsum(instance.moves[m].price for m in moves))


@dataclass
class CharacterizationResult:
    path: tuple
    first_inextensible: bool
    later_null: bool
    maximal: bool
    first_value: float
    best_other: float
    best_other_move: object = None

    @property
    def passed(self) -> bool:
        return self.first_inextensible and self.later_null and self.maximal

    def bullets(self) -> dict:
        return {"a": self.first_inextensible, "b": self.later_null, "c": self.maximal}


def verify_equilibrium_characterization(instance: OversightInstance, bundles: bool = False) -> CharacterizationResult:
    """Check the three equilibrium bullets on one instance.

    With ``bundles`` the maximality bullet ranges over every inextensible set
    of moves rather than single moves.
    """
    _, path, _ = solve_spe(instance)
    inext = _Inextensibility(instance)
    first = path[0]
    first_moves = () if first is None else (first,)
    a = inext(instance.event(first_moves))
    b = all(m is None for m in path[1:])
    value = 0.0 if first is None else _ex_post(instance, first_moves)
    candidates: list = [()]
    if bundles:
        import itertools

        for r in range(1, len(instance.moves) + 1):
            candidates.extend(itertools.combinations(range(len(instance.moves)), r))
    else:
        candidates.extend((m,) for m in range(len(instance.moves)))
    best_other, best_move = -math.inf, None
    for cand in candidates:
        if cand and len(instance.event(cand)) == len(instance.root):
            continue  # reveals nothing: not a legal move
        if not inext(instance.event(cand)):
            continue
        v = 0.0 if not cand else _ex_post(instance, cand)
        if v > best_other:
            best_other, best_move = v, cand
    c = value >= best_other - EPS
    return CharacterizationResult(tuple(path), a, b, c, value, best_other,
                                  [instance.moves[m].name for m in best_move] if best_move else [])


# -- random instances ---------------------------------------------------------


def random_oversight_instance(rng: random.Random, n_outcomes: tuple[int, int] = (3, 6),
                              n_moves: tuple[int, int] = (1, 4), n_actions: tuple[int, int] = (2, 3)) -> OversightInstance:
    """Small random game; K is the identity and prices are strictly positive."""
    m = rng.randint(*n_outcomes)
    outcomes = tuple(f"w{i}" for i in range(m))
    space = SampleSpace(outcomes, random_prior(rng, m))
    k = rng.randint(*n_actions)
    problem = DecisionProblem(
        tuple(f"a{j}" for j in range(k)),
        tuple((o, tuple(round(rng.uniform(-1, 1), 3) for _ in range(k))) for o in outcomes),
    )
    knowledge = RandomVariable("K", tuple((o, o) for o in outcomes))
    moves = []
    for j in range(rng.randint(*n_moves)):
        blocks = rng.randint(2, 3)
        moves.append(Offer(RandomVariable(f"I{j + 1}", tuple((o, rng.randrange(blocks)) for o in outcomes)),
                           round(rng.uniform(0.01, 0.2), 3)))
    return OversightInstance(space, problem, knowledge, rng.choice(outcomes), tuple(moves))


def dump_oversight_scenario(instance: OversightInstance, name: str = "oversight-instance") -> dict:
    from .scenario import build_doc

    variables = [instance.knowledge] + [m.variable for m in instance.moves]
    return build_doc(instance.space, instance.problem, variables, name=name,
                     true_outcome=instance.true_outcome, oversight=instance.to_dict())


@dataclass
class OversightReport:
    trials: int
    failures: dict
    rows: list
    counterexamples: list

    @property
    def passed(self) -> bool:
        return not any(self.failures.values())


def verify_characterization_suite(seed: int, trials: int = 100, bundles: bool = False,
                                  raise_on_violation: bool = False, start: int = 0) -> OversightReport:
    """Run the bullet checks on random instances; failing instances are kept as scenario documents."""
    failures = {"a": 0, "b": 0, "c": 0}
    rows, examples = [], []
    for t in range(start, start + trials):
        inst = random_oversight_instance(trial_rng(seed, t))
        res = verify_equilibrium_characterization(inst, bundles=bundles)
        for key, ok in res.bullets().items():
            failures[key] += not ok
        rows.append({"trial": t, "path": [inst.moves[m].name if m is not None else "0" for m in res.path],
                     **res.bullets(), "slack": res.first_value - res.best_other})
        if not res.passed:
            examples.append(dump_oversight_scenario(inst, name=f"oversight-counterexample-{seed}-{t}"))
            if raise_on_violation:
                raise ViolationFound(f"trial {t}: bullets {res.bullets()}", examples[-1])
    return OversightReport(trials, failures, rows, examples)
