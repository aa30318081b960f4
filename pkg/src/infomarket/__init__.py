"""Exact Bayesian engine for information markets.

Value of information for single goods, successive and recursive inspection of
offer ladders, the marginal value oversight game, and a simulated market that
runs the recursive protocol with an exact buyer.
"""

__version__ = "0.1.0"

from .decision import (
    DecisionProblem,
    best_action,
    realized_voi,
    voi_ex_ante,
    voi_ex_post,
)
from .errors import (
    BudgetExceeded,
    EvidenceImpossible,
    FixtureViolation,
    InconsistentGoods,
    InfoMarketError,
    ParseError,
    ViolationFound,
)
from .inspection import (
    InspectionGame,
    Offer,
    OfferLadder,
    PurchasePlan,
    enumerate_admissible,
    node_value,
    solve_recursive,
    solve_successive,
    successive_level_utility,
)
from .prob import NULL, Evidence, InfoGood, RandomVariable, SampleSpace, condition, join, probability
from .scenario import ScenarioDoc, emit_report, load_scenario

__all__ = [
    "NULL", "BudgetExceeded", "DecisionProblem", "Evidence", "EvidenceImpossible", "FixtureViolation",
    "InconsistentGoods", "InfoGood", "InfoMarketError", "InspectionGame", "Offer", "OfferLadder", "ParseError",
    "PurchasePlan", "RandomVariable", "SampleSpace", "ScenarioDoc", "ViolationFound", "best_action", "condition",
    "emit_report", "enumerate_admissible", "join", "load_scenario", "node_value", "probability", "realized_voi",
    "solve_recursive", "solve_successive", "successive_level_utility", "voi_ex_ante", "voi_ex_post",
]
