"""Exact minimisation of expected total cost under the budget.

The objective is a sum of per-attack terms and the budget is the only
constraint linking attacks, so the problem is a multiple-choice knapsack:
pick one *bundle* (security, insurance, repair-per-direct-loss) for each
attack. Two exact solvers are provided:

``solve_bruteforce``
    Scores every bundle combination with numpy broadcasting. Reference oracle.
``solve_bnb``
    Depth-first branch-and-bound over attacks in index order.

Both break ties towards the lexicographically smallest bundle-index vector,
where bundle lists are ordered none-first.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EnumerationTooLargeError
from .model import Decision, RiskInstance, repair_choices, require_valid
from .objective import BUDGET_TOL, CostBreakdown, attack_cost, spend, total_cost

DEFAULT_ENUMERATION_CAP = 10**7
ENUMERATION_CAP_ENV = "CLOUDRISK_ENUMERATION_CAP"
TIE_TOL = 1e-12


def enumeration_cap() -> int:
    return int(os.environ.get(ENUMERATION_CAP_ENV, DEFAULT_ENUMERATION_CAP))


class BaselineMode(enum.Enum):
    FULL = "full"
    NO_INSURANCE = "no-insurance"
    NO_SECURITY = "no-security"
    NO_SECURITY_NO_INSURANCE = "none"

    @property
    def allows_security(self) -> bool:
        return self in (BaselineMode.FULL, BaselineMode.NO_INSURANCE)

    @property
    def allows_insurance(self) -> bool:
        return self in (BaselineMode.FULL, BaselineMode.NO_SECURITY)


@dataclass(frozen=True)
class Bundle:
    attack: int
    security: Optional[int]
    insurance: Optional[int]
    repairs: tuple[Optional[int], ...]
    spend: float
    cost: float


@dataclass(frozen=True)
class SolveResult:
    decision: Decision
    objective: float
    breakdown: CostBreakdown
    spend: float
    nodes_explored: int
    solver_name: str
    mode: BaselineMode = BaselineMode.FULL


def enumerate_bundles(
    instance: RiskInstance,
    k: int,
    mode: BaselineMode = BaselineMode.FULL,
    allow_repairs: bool = True,
) -> list[Bundle]:
    """All attack-local choices for attack ``k`` permitted by ``mode``, none-first."""
    attack = instance.attacks[k]
    sec = [None] + (list(range(len(attack.security_options))) if mode.allows_security else [])
    ins = [None] + (list(range(len(attack.insurance_options))) if mode.allows_insurance else [])
    rep_axes = []
    for g in range(attack.n_direct):
        n_rep = len(repair_choices(attack, g)) if allow_repairs else 0
        rep_axes.append([None] + list(range(n_rep)))

    bundles = []
    for s, m, *reps in itertools.product(sec, ins, *rep_axes):
        outlay = 0.0
        if s is not None:
            outlay += attack.security_options[s].fee
        if m is not None:
            outlay += attack.insurance_options[m].premium
        for g, u in enumerate(reps):
            if u is not None:
                outlay += repair_choices(attack, g)[u].fee
        reps = tuple(reps)
        bundles.append(Bundle(k, s, m, reps, outlay, attack_cost(attack, s, m, reps)))
    return bundles


def _decision_from(bundles: list[Bundle]) -> Decision:
    return Decision.from_parts((b.security, b.insurance, b.repairs) for b in bundles)


def _result(instance, chosen, nodes, name, mode) -> SolveResult:
    decision = _decision_from(chosen)
    breakdown = total_cost(instance, decision)
    return SolveResult(
        decision=decision,
        objective=breakdown.total,
        breakdown=breakdown,
        spend=spend(instance, decision),
        nodes_explored=nodes,
        solver_name=name,
        mode=mode,
    )


def decision_count(instance: RiskInstance, mode: BaselineMode = BaselineMode.FULL,
                   allow_repairs: bool = True) -> int:
    return math.prod(
        len(enumerate_bundles(instance, k, mode, allow_repairs)) for k in range(instance.n_attacks)
    )


def solve_bruteforce(
    instance: RiskInstance,
    mode: BaselineMode = BaselineMode.FULL,
    cap: Optional[int] = None,
    allow_repairs: bool = True,
) -> SolveResult:
    """Score every combination of bundles and keep the cheapest feasible one."""
    require_valid(instance)
    cap = enumeration_cap() if cap is None else cap
    per_attack = [
        enumerate_bundles(instance, k, mode, allow_repairs) for k in range(instance.n_attacks)
    ]
    count = math.prod(len(b) for b in per_attack)
    if count > cap:
        raise EnumerationTooLargeError(count, cap, "decision")
    if not per_attack:
        return _result(instance, [], 1, "bruteforce", mode)

    costs = [np.array([b.cost for b in bl]) for bl in per_attack]
    spends = [np.array([b.spend for b in bl]) for bl in per_attack]
    limit = instance.budget + BUDGET_TOL

    # Chunk over the first attack's bundles to bound memory; chunks arrive in
    # lexicographic order so the first near-minimum seen wins ties.
    rest_shape = tuple(len(c) for c in costs[1:])
    best_val = math.inf
    best_idx = None
    for i0 in range(len(costs[0])):
        total = np.asarray(costs[0][i0])
        outlay = np.asarray(spends[0][i0])
        for c, s in zip(costs[1:], spends[1:]):
            total = np.add.outer(total, c)
            outlay = np.add.outer(outlay, s)
        total = np.where(outlay <= limit, total, np.inf).ravel()
        cmin = total.min()
        if cmin < best_val - TIE_TOL:
            flat = int(np.flatnonzero(total <= cmin + TIE_TOL)[0])
            best_val = float(total[flat])
            best_idx = (i0,) + (np.unravel_index(flat, rest_shape) if rest_shape else ())

    chosen = [per_attack[k][int(i)] for k, i in enumerate(best_idx)]
    return _result(instance, chosen, count, "bruteforce", mode)


def _drop_dominated(bundles: list[Bundle]) -> list[Bundle]:
    """Remove bundles beaten by another on cost while costing no more to buy.

    Order is preserved so tie-breaking among survivors is unchanged.
    """
    by_spend = sorted(bundles, key=lambda b: b.spend)
    keep = []
    for b in bundles:
        dominated = False
        for other in by_spend:
            if other.spend > b.spend:
                break
            if other.cost < b.cost - TIE_TOL:
                dominated = True
                break
        if not dominated:
            keep.append(b)
    return keep


def solve_bnb(
    instance: RiskInstance,
    mode: BaselineMode = BaselineMode.FULL,
    allow_repairs: bool = True,
) -> SolveResult:
    """Depth-first branch-and-bound choosing one bundle per attack.

    Bound at a partial assignment: accumulated cost plus the unconstrained
    minimum bundle cost of every unassigned attack.
    """
    require_valid(instance)
    per_attack = [
        _drop_dominated(enumerate_bundles(instance, k, mode, allow_repairs))
        for k in range(instance.n_attacks)
    ]
    n = len(per_attack)
    if n == 0:
        return _result(instance, [], 0, "bnb", mode)

    min_cost = [min(b.cost for b in bl) for bl in per_attack]
    min_spend = [min(b.spend for b in bl) for bl in per_attack]
    rest_cost = [0.0] * (n + 1)
    rest_spend = [0.0] * (n + 1)
    for k in range(n - 1, -1, -1):
        rest_cost[k] = rest_cost[k + 1] + min_cost[k]
        rest_spend[k] = rest_spend[k + 1] + min_spend[k]
    limit = instance.budget + BUDGET_TOL

    best_val = math.inf
    best: list[Bundle] = []
    path: list[Bundle] = []
    nodes = 0

    def dfs(k, acc_cost, acc_spend):
        nonlocal best_val, best, nodes
        for b in per_attack[k]:
            c = acc_cost + b.cost
            s = acc_spend + b.spend
            if s + rest_spend[k + 1] > limit:
                continue
            if c + rest_cost[k + 1] >= best_val - TIE_TOL:
                continue
            nodes += 1
            path.append(b)
            if k + 1 == n:
                best_val = c
                best = list(path)
            else:
                dfs(k + 1, c, s)
            path.pop()

    dfs(0, 0.0, 0.0)
    return _result(instance, best, nodes, "bnb", mode)


SOLVERS = {"bnb": solve_bnb, "bruteforce": solve_bruteforce}


def solve(instance: RiskInstance, mode: BaselineMode = BaselineMode.FULL,
          solver: str = "bnb", allow_repairs: bool = True) -> SolveResult:
    return SOLVERS[solver](instance, mode, allow_repairs=allow_repairs)


def solve_baselines(
    instance: RiskInstance, solver: str = "bnb", baseline_repairs: bool = True
) -> dict[BaselineMode, SolveResult]:
    """Optimal result for the full problem and each restricted baseline.

    With ``baseline_repairs=False`` the restricted modes may not buy repairs;
    the full problem always may.
    """
    return {
        mode: solve(instance, mode, solver, baseline_repairs or mode is BaselineMode.FULL)
        for mode in BaselineMode
    }
