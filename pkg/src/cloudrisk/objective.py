"""Feasibility and expected-cost evaluation.

Two independent routes compute the expected total cost of a decision:

* :func:`total_cost` -- the closed-form deterministic equivalent, summed
  stage by stage;
* :func:`total_cost_by_expansion` -- enumerate every joint scenario, price it,
  and take the probability-weighted sum.

They must agree to 1e-9. Keep them free of shared helpers beyond option
lookup so one can serve as the oracle for the other.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterator, Optional

from .errors import EnumerationTooLargeError, MalformedDecisionError
from .model import Decision, RiskInstance, decision_is_well_formed, repair_choices

BUDGET_TOL = 1e-9
DEFAULT_SCENARIO_CAP = 10**6
SCENARIO_CAP_ENV = "CLOUDRISK_SCENARIO_CAP"


def scenario_cap() -> int:
    return int(os.environ.get(SCENARIO_CAP_ENV, DEFAULT_SCENARIO_CAP))


@dataclass(frozen=True)
class CostBreakdown:
    stage1: float
    stage2: float
    stage3: float

    @property
    def total(self) -> float:
        return self.stage1 + self.stage2 + self.stage3


def _check(instance: RiskInstance, decision: Decision) -> None:
    if not decision_is_well_formed(instance, decision):
        raise MalformedDecisionError("decision does not match the instance shape or catalogs")


def spend(instance: RiskInstance, decision: Decision) -> float:
    """Nominal outlay: every chosen fee, premium and repair fee counted once."""
    _check(instance, decision)
    total = 0.0
    for k, attack in enumerate(instance.attacks):
        s, m, reps = decision.attack_part(k)
        if s is not None:
            total += attack.security_options[s].fee
        if m is not None:
            total += attack.insurance_options[m].premium
        for g, u in enumerate(reps):
            if u is not None:
                total += repair_choices(attack, g)[u].fee
    return total


def is_feasible(instance: RiskInstance, decision: Decision) -> bool:
    return spend(instance, decision) <= instance.budget + BUDGET_TOL


def _unprevented(attack, s) -> float:
    prevention = attack.security_options[s].prevention_probability if s is not None else 0.0
    return attack.occurrence_probability * (1.0 - prevention)


def cost_stage1(instance: RiskInstance, decision: Decision) -> float:
    _check(instance, decision)
    total = 0.0
    for k, attack in enumerate(instance.attacks):
        s, m, _ = decision.attack_part(k)
        if s is not None:
            total += attack.security_options[s].fee
        if m is not None:
            total += attack.insurance_options[m].premium
    return total


def cost_stage2(instance: RiskInstance, decision: Decision) -> float:
    """Expected direct loss plus expectation-weighted repair fees."""
    _check(instance, decision)
    total = 0.0
    for k, attack in enumerate(instance.attacks):
        s, _, reps = decision.attack_part(k)
        factor = _unprevented(attack, s)
        direct = sum(d.probability * d.amount for d in attack.direct_outcomes)
        fees = 0.0
        for g, d in enumerate(attack.direct_outcomes):
            if reps[g] is not None:
                fees += d.probability * repair_choices(attack, g)[reps[g]].fee
        total += factor * direct + factor * fees
    return total


def cost_stage3(instance: RiskInstance, decision: Decision) -> float:
    """Expected residual indirect loss minus expected insurance claims (may be negative)."""
    _check(instance, decision)
    indirect = 0.0
    claims = 0.0
    for k, attack in enumerate(instance.attacks):
        s, m, reps = decision.attack_part(k)
        factor = _unprevented(attack, s)
        residual = 0.0
        for g, d in enumerate(attack.direct_outcomes):
            reduction = 0.0
            if reps[g] is not None:
                reduction = repair_choices(attack, g)[reps[g]].reduction_fraction
            expected_i = sum(o.probability * o.amount for o in d.indirect_outcomes)
            residual += d.probability * (1.0 - reduction) * expected_i
        indirect += factor * residual
        if m is not None:
            q = attack.insurance_options[m].coverage_fraction
            direct = sum(d.probability * d.amount for d in attack.direct_outcomes)
            claims += factor * direct * q
    return indirect - claims


def total_cost(instance: RiskInstance, decision: Decision) -> CostBreakdown:
    return CostBreakdown(
        cost_stage1(instance, decision),
        cost_stage2(instance, decision),
        cost_stage3(instance, decision),
    )


def per_attack_cost(instance: RiskInstance, decision: Decision, k: int) -> float:
    """Attack ``k``'s share of the expected total cost."""
    _check(instance, decision)
    if not 0 <= k < instance.n_attacks:
        raise IndexError(f"attack index {k} out of range for {instance.n_attacks} attacks")
    attack = instance.attacks[k]
    return attack_cost(attack, *decision.attack_part(k))


def attack_cost(attack, security: Optional[int], insurance: Optional[int], repairs) -> float:
    """Expected cost attributable to one attack under an attack-local choice."""
    upfront = 0.0
    q = 0.0
    if security is not None:
        upfront += attack.security_options[security].fee
    if insurance is not None:
        upfront += attack.insurance_options[insurance].premium
        q = attack.insurance_options[insurance].coverage_fraction
    factor = _unprevented(attack, security)
    bracket = 0.0
    for g, d in enumerate(attack.direct_outcomes):
        fee = 0.0
        reduction = 0.0
        if repairs[g] is not None:
            rp = repair_choices(attack, g)[repairs[g]]
            fee, reduction = rp.fee, rp.reduction_fraction
        bracket += d.probability * (
            d.amount + fee + (1.0 - reduction) * d.expected_indirect - q * d.amount
        )
    return upfront + factor * bracket


# -- scenario expansion --------------------------------------------------------

NOT_OCCURRED = "not-occurred"
PREVENTED = "prevented"
SUCCEEDED = "succeeded"


@dataclass(frozen=True)
class AttackOutcome:
    tag: str
    direct: Optional[int] = None
    indirect: Optional[int] = None


@dataclass(frozen=True)
class Scenario:
    outcomes: tuple[AttackOutcome, ...]
    probability: float


def _attack_branches(attack, security):
    """Per-attack (outcome, probability) branches, independent of other attacks."""
    p = attack.occurrence_probability
    prevention = attack.security_options[security].prevention_probability if security is not None else None
    branches = [(AttackOutcome(NOT_OCCURRED), 1.0 - p)]
    if prevention is not None:
        branches.append((AttackOutcome(PREVENTED), p * prevention))
        hit = p * (1.0 - prevention)
    else:
        hit = p
    for g, d in enumerate(attack.direct_outcomes):
        for e, o in enumerate(d.indirect_outcomes):
            branches.append((AttackOutcome(SUCCEEDED, g, e), hit * d.probability * o.probability))
    return branches


def count_scenarios(instance: RiskInstance, decision: Decision) -> int:
    n = 1
    for k, attack in enumerate(instance.attacks):
        width = 1 + (1 if decision.security[k] is not None else 0)
        width += sum(len(d.indirect_outcomes) for d in attack.direct_outcomes)
        n *= width
    return n


def realized_cost(instance: RiskInstance, decision: Decision, outcomes) -> tuple[float, float, float]:
    """Stage costs actually paid when ``outcomes`` happens (one per attack)."""
    stage1 = 0.0
    stage2 = 0.0
    stage3 = 0.0
    for k, (attack, outcome) in enumerate(zip(instance.attacks, outcomes)):
        s, m, reps = decision.attack_part(k)
        if s is not None:
            stage1 += attack.security_options[s].fee
        if m is not None:
            stage1 += attack.insurance_options[m].premium
        if outcome.tag != SUCCEEDED:
            continue
        direct = attack.direct_outcomes[outcome.direct]
        indirect = direct.indirect_outcomes[outcome.indirect].amount
        stage2 += direct.amount
        remaining = 1.0
        u = reps[outcome.direct]
        if u is not None:
            rp = repair_choices(attack, outcome.direct)[u]
            stage2 += rp.fee
            remaining = 1.0 - rp.reduction_fraction
        stage3 += remaining * indirect
        if m is not None:
            stage3 -= attack.insurance_options[m].coverage_fraction * direct.amount
    return stage1, stage2, stage3


def iter_scenarios(
    instance: RiskInstance, decision: Decision, cap: Optional[int] = None
) -> Iterator[tuple[Scenario, float]]:
    """Like :func:`expand_scenarios` but lazy; the cap is checked up front."""
    _check(instance, decision)
    cap = scenario_cap() if cap is None else cap
    count = count_scenarios(instance, decision)
    if count > cap:
        raise EnumerationTooLargeError(count, cap, "scenario")
    return _generate(instance, decision)


def _generate(instance, decision):
    per_attack = [
        _attack_branches(attack, decision.security[k]) for k, attack in enumerate(instance.attacks)
    ]
    for combo in itertools.product(*per_attack):
        outcomes = tuple(o for o, _ in combo)
        prob = math.prod(p for _, p in combo)
        yield Scenario(outcomes, prob), sum(realized_cost(instance, decision, outcomes))


def expand_scenarios(
    instance: RiskInstance, decision: Decision, cap: Optional[int] = None
) -> list[tuple[Scenario, float]]:
    """Every joint scenario with its realized total cost.

    Attacks are treated as independent. The prevented branch is kept as its
    own scenario whenever a security package is bought.
    """
    return list(iter_scenarios(instance, decision, cap))


def total_cost_by_expansion(
    instance: RiskInstance, decision: Decision, cap: Optional[int] = None
) -> float:
    return math.fsum(s.probability * c for s, c in iter_scenarios(instance, decision, cap))
