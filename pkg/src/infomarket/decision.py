"""Decision problems and value-of-information quantities."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import EvidenceImpossible, InconsistentGoods, ViolationFound
from .prob import Evidence, InfoGood, RandomVariable, SampleSpace, _event

EPS = 1e-9

Action = Hashable


def argmax_first(values: Sequence[float], eps: float = EPS) -> int:
    """Index of the first entry within ``eps`` of the maximum."""
    top = max(values)
    for i, v in enumerate(values):
        if v >= top - eps:
            return i
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class DecisionProblem:
    """Finite actions with a utility table ``utility[outcome][action_index]``."""

    actions: tuple
    utility: tuple  # ((outcome, (u_0, ..., u_k)), ...)

    def __post_init__(self):
        actions = tuple(self.actions)
        if not actions:
            raise ValueError("a decision problem needs at least one action")
        utility = self.utility
        if isinstance(utility, Mapping):
            utility = tuple(utility.items())
        utility = tuple((o, tuple(float(u) for u in row)) for o, row in utility)
        for o, row in utility:
            if len(row) != len(actions):
                raise ValueError(f"utility row for {o!r} has {len(row)} entries, expected {len(actions)}")
            if not all(math.isfinite(u) for u in row):
                raise ValueError(f"non-finite utility for {o!r}")
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "utility", utility)
        object.__setattr__(self, "_rows", dict(utility))

    @classmethod
    def from_function(cls, space: SampleSpace, actions: Iterable[Action], fn) -> "DecisionProblem":
        actions = tuple(actions)
        return cls(actions, tuple((o, tuple(fn(o, a) for a in actions)) for o in space.outcomes))

    @classmethod
    def log_score(cls, space: SampleSpace, event: RandomVariable, grid: Iterable[float], occurs=1) -> "DecisionProblem":
        """Forecast of the event ``{event == occurs}`` on a finite report grid, scored by log score."""
        grid = tuple(float(g) for g in grid)
        if not all(0 < g < 1 for g in grid):
            raise ValueError("log-score grid points must lie strictly inside (0, 1)")
        return cls.from_function(
            space, grid, lambda o, x: math.log(x) if event(o) == occurs else math.log(1 - x)
        )

    def u(self, outcome, action_index: int) -> float:
        return self._rows[outcome][action_index]

    def row(self, outcome) -> tuple:
        return self._rows[outcome]

    def index(self, action: Action) -> int:
        return self.actions.index(action)

    def shifted(self, scale: float = 1.0, offset: float = 0.0) -> "DecisionProblem":
        return DecisionProblem(self.actions, tuple((o, tuple(scale * u + offset for u in row)) for o, row in self.utility))


def conditional_utilities(problem: DecisionProblem, space: SampleSpace, event) -> list[float]:
    """E[U(x) | event] for every action, in action order."""
    event = _event(space, event)
    total = space.mass(event)
    if total == 0:
        raise EvidenceImpossible("conditioning event has zero prior mass")
    weights = [(float(p / total), problem.row(o)) for o, p in space.items() if p and o in event]
    return [math.fsum(w * row[i] for w, row in weights) for i in range(len(problem.actions))]


def best_action_index(problem: DecisionProblem, space: SampleSpace, event=None) -> tuple[int, float]:
    vals = conditional_utilities(problem, space, event)
    i = argmax_first(vals)
    return i, vals[i]


def best_action(problem: DecisionProblem, space: SampleSpace, evidence: Evidence | None = None) -> tuple[Action, float]:
    """Action maximizing conditional expected utility; ties go to the lowest index."""
    i, v = best_action_index(problem, space, evidence)
    return problem.actions[i], v


def _good_event(space: SampleSpace, good: InfoGood) -> frozenset:
    if good.is_null:
        return frozenset(space.outcomes)
    return good.variable.event(good.value, space)


def realized_voi(problem: DecisionProblem, space: SampleSpace, good: InfoGood, true_outcome) -> float:
    """Utility at the true outcome of acting on the posterior rather than the prior, net of price."""
    if not good.is_null and good.variable(true_outcome) != good.value:
        raise InconsistentGoods(f"good {good.name}={good.value!r} disagrees with the true outcome")
    prior_i, _ = best_action_index(problem, space)
    post_i, _ = best_action_index(problem, space, _good_event(space, good))
    return problem.u(true_outcome, post_i) - problem.u(true_outcome, prior_i) - good.price


def voi_ex_post(problem: DecisionProblem, space: SampleSpace, good: InfoGood) -> float:
    """Expected gain after viewing the good, conditioned on its realized value, net of price."""
    prior_i, _ = best_action_index(problem, space)
    vals = conditional_utilities(problem, space, _good_event(space, good))
    return max(vals) - vals[prior_i] - good.price


def voi_ex_ante(problem: DecisionProblem, space: SampleSpace, variable: RandomVariable, price: float = 0.0) -> float:
    """Value of the experiment: ex-post value averaged over the variable's values."""
    if not variable.table:
        return -price
    terms = []
    for value in variable.values(space):
        event = variable.event(value, space)
        mass = space.mass(event)
        if mass == 0:
            continue
        terms.append(float(mass) * voi_ex_post(problem, space, InfoGood(variable, value, 0.0)))
    return math.fsum(terms) - price


@dataclass(frozen=True)
class VoiReport:
    good: InfoGood
    realized: float
    ex_post: float
    ex_ante: float
    best_action_prior: Action
    best_action_posterior: Action


def voi_report(problem: DecisionProblem, space: SampleSpace, good: InfoGood, true_outcome) -> VoiReport:
    return VoiReport(
        good=good,
        realized=realized_voi(problem, space, good, true_outcome),
        ex_post=voi_ex_post(problem, space, good),
        ex_ante=voi_ex_ante(problem, space, good.variable, good.price),
        best_action_prior=best_action(problem, space)[0],
        best_action_posterior=best_action(problem, space, Evidence.from_goods([good]))[0],
    )


def gain_from_information(problem: DecisionProblem, space: SampleSpace, variable: RandomVariable) -> float:
    """E_I[U(argmax E[U | I])] - max E[U]; nonnegative for a Bayesian agent."""
    _, prior_best = best_action_index(problem, space)
    terms = []
    for value in variable.values(space):
        event = variable.event(value, space)
        mass = space.mass(event)
        if mass:
            i, _ = best_action_index(problem, space, event)
            terms.append(math.fsum(float(space.p(o)) * problem.u(o, i) for o in event))
    return math.fsum(terms) - prior_best


# -- random scenarios --------------------------------------------------------


def trial_rng(seed: int, trial: int) -> random.Random:
    """Independent generator for one trial, so batches can be split across workers."""
    return random.Random(seed * 1_000_003 + trial)


def random_prior(rng: random.Random, n: int) -> tuple:
    weights = [rng.randint(1, 9) for _ in range(n)]
    total = sum(weights)
    return tuple(Fraction(w, total) for w in weights)


def random_partition(rng: random.Random, space: SampleSpace, name: str, max_blocks: int | None = None) -> RandomVariable:
    blocks = max_blocks or len(space)
    return RandomVariable(name, tuple((o, rng.randrange(blocks)) for o in space.outcomes))


def random_scenario(
    rng: random.Random,
    n_outcomes: tuple[int, int] = (2, 8),
    n_actions: tuple[int, int] = (2, 4),
) -> tuple[SampleSpace, DecisionProblem, RandomVariable]:
    """A random (space, problem, variable) triple with utilities uniform in [-1, 1]."""
    m = rng.randint(*n_outcomes)
    k = rng.randint(*n_actions)
    space = SampleSpace(tuple(f"w{i}" for i in range(m)), random_prior(rng, m))
    problem = DecisionProblem(
        tuple(f"a{j}" for j in range(k)),
        tuple((o, tuple(rng.uniform(-1, 1) for _ in range(k))) for o in space.outcomes),
    )
    return space, problem, random_partition(rng, space, "I")


@dataclass
class VerificationReport:
    name: str
    trials: int
    violations: int
    min_slack: float
    rows: list

    @property
    def passed(self) -> bool:
        return self.violations == 0


def verify_gain_from_information(seed: int, trials: int, tol: float = EPS, raise_on_violation: bool = True,
                                 start: int = 0) -> VerificationReport:
    """Check E_I[U(argmax E[U|I])] >= max E[U] on random scenarios."""
    rows = []
    violations = 0
    for t in range(start, start + trials):
        space, problem, variable = random_scenario(trial_rng(seed, t))
        slack = gain_from_information(problem, space, variable)
        rows.append({"trial": t, "slack": slack})
        if slack < -tol:
            violations += 1
            if raise_on_violation:
                from .scenario import dump_voi_scenario

                raise ViolationFound(f"trial {t}: slack {slack}", dump_voi_scenario(space, problem, variable))
    min_slack = min((r["slack"] for r in rows), default=0.0)
    return VerificationReport("lemma1", trials, violations, min_slack, rows)
