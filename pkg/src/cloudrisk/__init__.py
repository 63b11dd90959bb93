"""Budget-constrained security, insurance and repair planning against cyberattacks."""

from .errors import (
    CloudRiskError,
    EnumerationTooLargeError,
    InvalidInstanceError,
    MalformedDecisionError,
    SweepConfigError,
    UnsupportedSweepError,
)
from .experiments import SweepSpec, expected_loss_components, run_sweep
from .model import (
    Attack,
    Decision,
    DirectLossOutcome,
    IndirectLossOutcome,
    InsurancePackage,
    RepairPackage,
    RiskInstance,
    SecurityPackage,
    decision_is_well_formed,
    validate_instance,
)
from .objective import (
    CostBreakdown,
    expand_scenarios,
    is_feasible,
    per_attack_cost,
    spend,
    total_cost,
    total_cost_by_expansion,
)
from .serialization import load_instance, parse_instance
from .simulator import sample_run, simulate
from .solver import BaselineMode, SolveResult, solve_baselines, solve_bnb, solve_bruteforce

__version__ = "0.1.0"
