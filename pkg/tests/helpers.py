"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from cloudrisk.model import (
    Attack,
    Decision,
    DirectLossOutcome,
    IndirectLossOutcome,
    InsurancePackage,
    RepairPackage,
    RiskInstance,
    SecurityPackage,
)
from cloudrisk.objective import is_feasible, total_cost
from cloudrisk.serialization import decision_from_labels, paper_tables_text, parse_instance


def reference_instance(p_a1=None, p_d1_a2=None, budget=None) -> RiskInstance:
    inst = parse_instance(paper_tables_text())
    attacks = list(inst.attacks)
    if p_a1 is not None:
        attacks[0] = dataclasses.replace(attacks[0], occurrence_probability=p_a1)
    if p_d1_a2 is not None:
        d1, d2 = attacks[1].direct_outcomes
        attacks[1] = dataclasses.replace(attacks[1], direct_outcomes=(
            dataclasses.replace(d1, probability=p_d1_a2),
            dataclasses.replace(d2, probability=1.0 - p_d1_a2),
        ))
    return RiskInstance(tuple(attacks), inst.budget if budget is None else budget)


def single_attack_a1() -> RiskInstance:
    inst = reference_instance()
    return RiskInstance((inst.attacks[0],), inst.budget)


# Published optimal policies for the two reference sweeps, keyed by the swept value.
# Each entry: (a1 policy, [a1 repairs d1, d2]), (a2 policy, [a2 repairs d1, d2]).
A1_SWEEP_POLICIES = {
    0.1: (("0", ["0", "Rep1"]), ("IP1", ["Rep2", "Rep1"])),
    0.2: (("IP1", ["0", "Rep1"]), ("IP2", ["Rep1", "Rep1"])),
    0.3: (("IP2", ["Rep1", "Rep1"]), ("SP2", ["0", "0"])),
    0.4: (("IP2", ["Rep1", "Rep1"]), ("SP2", ["0", "0"])),
    0.5: (("IP2", ["Rep1", "Rep1"]), ("SP2", ["0", "0"])),
    0.6: (("SP2", ["0", "Rep1"]), ("SP2", ["0", "0"])),
    0.7: (("SP2", ["0", "0"]), ("IP1", ["Rep1", "Rep1"])),
    0.8: (("SP2", ["0", "0"]), ("IP1", ["Rep1", "Rep1"])),
    0.9: (("SP2+IP1", ["0", "0"]), ("SP2", ["0", "0"])),
}

D1_SWEEP_POLICIES = {
    0.1: (("IP2", ["Rep1", "Rep1"]), ("IP1", ["0", "Rep1"])),
    0.2: (("IP2", ["Rep1", "Rep1"]), ("SP2", ["0", "0"])),
    0.3: (("IP2", ["Rep1", "Rep1"]), ("SP2", ["0", "0"])),
    0.4: (("IP2", ["Rep1", "Rep1"]), ("SP2", ["0", "0"])),
    0.5: (("IP2", ["0", "Rep1"]), ("IP1", ["Rep2", "0"])),
    0.6: (("IP2", ["0", "Rep1"]), ("IP1", ["Rep2", "0"])),
    0.7: (("IP2", ["Rep1", "Rep1"]), ("0", ["Rep2", "0"])),
    0.8: (("IP2", ["Rep1", "Rep1"]), ("0", ["Rep2", "0"])),
    0.9: (("IP2", ["Rep1", "Rep1"]), ("0", ["Rep2", "0"])),
}

GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


def printed_decision(rows) -> Decision:
    return decision_from_labels(rows)


# -- random instances -------------------------------------------------------------

def _simplex(rng, n, degenerate=False):
    if degenerate:
        out = np.zeros(n)
        out[rng.integers(n)] = 1.0
        return out.tolist()
    w = rng.random(n) + 1e-3
    return (w / w.sum()).tolist()


def random_instance(rng, K=None, N=None, M=None, U=None, G=None, E=None,
                    max_k=3, max_opts=3, max_outcomes=3, degenerate=False,
                    budget=None) -> RiskInstance:
    """Random valid instance; unspecified sizes are drawn uniformly."""
    K = int(rng.integers(0, max_k + 1)) if K is None else K
    attacks = []
    for k in range(K):
        n = int(rng.integers(0, max_opts + 1)) if N is None else N
        m = int(rng.integers(0, max_opts + 1)) if M is None else M
        u = int(rng.integers(0, max_opts + 1)) if U is None else U
        g = int(rng.integers(1, max_outcomes + 1)) if G is None else G
        e = int(rng.integers(1, max_outcomes + 1)) if E is None else E
        pd = _simplex(rng, g, degenerate)
        directs = []
        for gi in range(g):
            pi = _simplex(rng, e, degenerate)
            directs.append(DirectLossOutcome(
                pd[gi], float(rng.uniform(0, 10)),
                tuple(IndirectLossOutcome(pi[j], float(rng.uniform(0, 10))) for j in range(e)),
            ))

        def frac():
            return float(rng.integers(0, 2)) if degenerate else float(rng.random())

        attacks.append(Attack(
            name=f"a{k + 1}",
            occurrence_probability=frac(),
            direct_outcomes=tuple(directs),
            security_options=tuple(SecurityPackage(float(rng.uniform(0, 3)), frac()) for _ in range(n)),
            insurance_options=tuple(InsurancePackage(float(rng.uniform(0, 3)), frac()) for _ in range(m)),
            repair_options=tuple(
                tuple(RepairPackage(float(rng.uniform(0, 3)), frac()) for _ in range(u))
                for _ in range(g)
            ),
        ))
    if budget is None:
        budget = float(rng.uniform(0, 8))
    return RiskInstance(tuple(attacks), budget)


def random_decision(rng, instance: RiskInstance) -> Decision:
    def pick(n):
        if n == 0 or rng.random() < 0.3:
            return None
        return int(rng.integers(n))

    parts = []
    for a in instance.attacks:
        parts.append((
            pick(len(a.security_options)),
            pick(len(a.insurance_options)),
            tuple(pick(len(a.repair_options[g]) if a.repair_options else 0) for g in range(a.n_direct)),
        ))
    return Decision.from_parts(parts)


# -- independent solver oracles -----------------------------------------------------

def all_decisions(instance: RiskInstance):
    """Every well-formed decision, built straight from option counts."""
    axes = []
    for a in instance.attacks:
        axes.append([None] + list(range(len(a.security_options))))
        axes.append([None] + list(range(len(a.insurance_options))))
        for g in range(a.n_direct):
            n = len(a.repair_options[g]) if a.repair_options else 0
            axes.append([None] + list(range(n)))
    for flat in itertools.product(*axes):
        parts, i = [], 0
        for a in instance.attacks:
            s, m = flat[i], flat[i + 1]
            reps = tuple(flat[i + 2:i + 2 + a.n_direct])
            i += 2 + a.n_direct
            parts.append((s, m, reps))
        yield Decision.from_parts(parts)


def exhaustive_optimum(instance: RiskInstance) -> float:
    """Minimum of ``total_cost`` over all feasible decisions (tiny instances only)."""
    return min(total_cost(instance, d).total for d in all_decisions(instance) if is_feasible(instance, d))


def pareto_optimum(instance: RiskInstance, bundle_lists) -> float:
    """Exact optimum by merging per-attack (spend, cost) Pareto frontiers."""
    limit = instance.budget + 1e-9
    frontier = [(0.0, 0.0)]
    for bundles in bundle_lists:
        merged = sorted(
            (s + b.spend, c + b.cost)
            for s, c in frontier for b in bundles if s + b.spend <= limit
        )
        frontier = []
        best = math.inf
        for s, c in merged:
            if c < best:
                frontier.append((s, c))
                best = c
    return min(c for _, c in frontier)
