"""Finite probability spaces with exact rational priors.

Events are frozensets of outcome labels. A random variable is a total map from
outcomes to hashable value labels, i.e. a finite partition of the sample space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping

from .errors import EvidenceImpossible, InconsistentGoods

Outcome = Hashable
Value = Hashable


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats are accepted only when they are exact binary fractions the caller meant
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


@dataclass(frozen=True)
class SampleSpace:
    outcomes: tuple
    prior: tuple

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        prior = tuple(as_fraction(p) for p in self.prior)
        if len(outcomes) != len(prior):
            raise ValueError("outcomes and prior differ in length")
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("outcome labels must be unique")
        if any(p < 0 for p in prior):
            raise ValueError("probabilities must be nonnegative")
        if sum(prior) != 1:
            raise ValueError(f"probabilities sum to {sum(prior)}, not 1")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "_index", {o: i for i, o in enumerate(outcomes)})

    @classmethod
    def from_mapping(cls, masses: Mapping[Outcome, object]) -> "SampleSpace":
        return cls(tuple(masses), tuple(masses.values()))

    @classmethod
    def uniform(cls, outcomes: Iterable[Outcome]) -> "SampleSpace":
        outcomes = tuple(outcomes)
        return cls(outcomes, (Fraction(1, len(outcomes)),) * len(outcomes))

    def __len__(self):
        return len(self.outcomes)

    def __iter__(self):
        return iter(self.outcomes)

    def p(self, outcome: Outcome) -> Fraction:
        return self.prior[self._index[outcome]]

    def index(self, outcome: Outcome) -> int:
        return self._index[outcome]

    @property
    def support(self) -> frozenset:
        return frozenset(o for o, p in zip(self.outcomes, self.prior) if p > 0)

    def mass(self, event: Iterable[Outcome]) -> Fraction:
        return sum((self.p(o) for o in set(event)), Fraction(0))

    def items(self):
        return zip(self.outcomes, self.prior)


@dataclass(frozen=True)
class RandomVariable:
    """A named partition of the outcomes.

    ``table`` pairs each outcome with its value. An empty table denotes a
    constant variable whose value is ``None`` everywhere.
    """

    name: str
    table: tuple = ()

    def __post_init__(self):
        table = self.table
        if isinstance(table, Mapping):
            table = tuple(table.items())
        table = tuple(table)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "_map", dict(table))

    @classmethod
    def constant(cls, name: str = "0") -> "RandomVariable":
        return cls(name, ())

    @classmethod
    def from_function(cls, name: str, space: SampleSpace, fn: Callable[[Outcome], Value]) -> "RandomVariable":
        return cls(name, tuple((o, fn(o)) for o in space.outcomes))

    @property
    def is_constant(self) -> bool:
        return not self.table or len(set(self._map.values())) <= 1

    def __call__(self, outcome: Outcome) -> Value:
        if not self.table:
            return None
        return self._map[outcome]

    def values(self, space: SampleSpace | None = None) -> list:
        """Distinct values in first-appearance order (restricted to the space's outcomes if given)."""
        if not self.table:
            return [None]
        outs = space.outcomes if space is not None else [o for o, _ in self.table]
        seen: dict = {}
        for o in outs:
            seen.setdefault(self._map[o], None)
        return list(seen)

    def event(self, value: Value, space: SampleSpace) -> frozenset:
        return frozenset(o for o in space.outcomes if self(o) == value)

    def check_total(self, space: SampleSpace) -> None:
        if self.table and not all(o in self._map for o in space.outcomes):
            missing = [o for o in space.outcomes if o not in self._map]
            raise ValueError(f"variable {self.name!r} undefined on {missing}")

    def coarsens(self, other: "RandomVariable", space: SampleSpace) -> bool:
        """True when this partition is a coarsening of ``other``'s on the space's support."""
        seen: dict = {}
        for o in space.support:
            key = other(o)
            if key in seen and seen[key] != self(o):
                return False
            seen[key] = self(o)
        return True

    def __repr__(self):
        return f"RandomVariable({self.name!r})"


@dataclass(frozen=True)
class Evidence:
    """A conjunction of (variable, value) assignments."""

    assignments: frozenset = frozenset()

    def __post_init__(self):
        assignments = frozenset(self.assignments)
        names: dict = {}
        for var, val in assignments:
            if var.name in names and names[var.name] != val:
                raise ValueError(f"two values for variable {var.name!r}")
            names[var.name] = val
        object.__setattr__(self, "assignments", assignments)

    @classmethod
    def of(cls, *pairs) -> "Evidence":
        return cls(frozenset(pairs))

    @classmethod
    def from_goods(cls, goods: Iterable["InfoGood"]) -> "Evidence":
        return cls(frozenset((g.variable, g.value) for g in goods if not g.is_null))

    def __and__(self, other: "Evidence") -> "Evidence":
        return Evidence(self.assignments | other.assignments)

    def __len__(self):
        return len(self.assignments)

    def holds(self, outcome: Outcome) -> bool:
        return all(var(outcome) == val for var, val in self.assignments)

    def event(self, space: SampleSpace) -> frozenset:
        return frozenset(o for o in space.outcomes if self.holds(o))


@dataclass(frozen=True)
class InfoGood:
    """The tuple (variable, realized value, price)."""

    variable: RandomVariable
    value: Value
    price: float = 0.0

    def __post_init__(self):
        if self.price < 0:
            raise ValueError("price must be nonnegative")

    @property
    def is_null(self) -> bool:
        return not self.variable.table

    @property
    def name(self) -> str:
        return self.variable.name

    @classmethod
    def resolve(cls, variable: RandomVariable, true_outcome: Outcome, price: float = 0.0) -> "InfoGood":
        return cls(variable, variable(true_outcome), price)

    def check(self, space: SampleSpace) -> None:
        if self.is_null:
            return
        if self.value not in self.variable.values(space):
            raise InconsistentGoods(f"value {self.value!r} not in range of {self.variable.name!r}")
        if space.mass(self.variable.event(self.value, space)) <= 0:
            raise InconsistentGoods(f"event {{{self.variable.name}={self.value!r}}} has zero mass")


NULL = InfoGood(RandomVariable.constant("0"), None, 0.0)


def _event(space: SampleSpace, evidence) -> frozenset:
    if evidence is None:
        return frozenset(space.outcomes)
    if isinstance(evidence, Evidence):
        return evidence.event(space)
    return frozenset(evidence)


def probability(space: SampleSpace, evidence: Evidence | None = None) -> Fraction:
    """Exact prior mass of the event described by ``evidence`` (an Evidence or an outcome set)."""
    return space.mass(_event(space, evidence))


def condition(space: SampleSpace, evidence: Evidence | None = None) -> SampleSpace:
    event = _event(space, evidence)
    total = space.mass(event)
    if total == 0:
        raise EvidenceImpossible("conditioning event has zero prior mass")
    return SampleSpace(space.outcomes, tuple(p / total if o in event else Fraction(0) for o, p in space.items()))


def expectation(space: SampleSpace, f: Callable[[Outcome], float]) -> float:
    return math.fsum(float(p) * f(o) for o, p in space.items() if p)


def join(goods: Iterable[InfoGood], space: SampleSpace | None = None) -> InfoGood:
    """Combine goods into one: partition join of the variables, tuple of values, summed price.

    Identical goods are counted once. Null goods contribute nothing.
    """
    members = sorted({g for g in goods if not g.is_null}, key=lambda g: (g.name, repr(g.value), g.price))
    if not members:
        return NULL
    if len(members) == 1:
        return members[0]
    outcomes = space.outcomes if space is not None else [o for o, _ in members[0].variable.table]
    table = tuple((o, tuple(g.variable(o) for g in members)) for o in outcomes)
    variable = RandomVariable("(" + ",".join(g.name for g in members) + ")", table)
    value = tuple(g.value for g in members)
    witnesses = [o for o in outcomes if variable(o) == value]
    if space is not None:
        ok = space.mass(witnesses) > 0
    else:
        ok = bool(witnesses)
    if not ok:
        raise InconsistentGoods("joint event of the goods has zero mass")
    return InfoGood(variable, value, math.fsum(g.price for g in members))
