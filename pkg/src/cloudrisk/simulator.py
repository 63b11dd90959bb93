"""Monte Carlo simulation of one business period under a fixed decision.

Randomness comes from numpy's PCG64 bit generator. ``simulate`` splits the
master seed into one child stream per fixed-size batch (``SeedSequence.spawn``),
so results do not depend on how batches are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import Decision, RiskInstance, repair_choices
from .objective import _check

GENERATOR = "PCG64"
BATCH_SIZE = 1 << 17


@dataclass(frozen=True)
class SimulationSummary:
    runs: int
    mean_cost: float
    std_error: float
    stage_means: tuple[float, float, float]
    seed: int
    generator: str = GENERATOR
    degenerate: bool = False

    def ci(self, z: float = 3.0) -> tuple[float, float]:
        return self.mean_cost - z * self.std_error, self.mean_cost + z * self.std_error


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_run(instance: RiskInstance, decision: Decision, rng: np.random.Generator,
               stages: bool = False):
    """Play one period: buy, let attacks happen, repair, then settle claims.

    Returns the realized total cost, or the three stage costs if ``stages``.
    """
    _check(instance, decision)
    stage1 = stage2 = stage3 = 0.0
    for k, attack in enumerate(instance.attacks):
        s, m, reps = decision.attack_part(k)
        if s is not None:
            stage1 += attack.security_options[s].fee
        if m is not None:
            stage1 += attack.insurance_options[m].premium

    for k, attack in enumerate(instance.attacks):
        s, m, reps = decision.attack_part(k)
        if not rng.random() < attack.occurrence_probability:
            continue
        if s is not None and rng.random() < attack.security_options[s].prevention_probability:
            continue
        g = _pick(rng, [d.probability for d in attack.direct_outcomes])
        direct = attack.direct_outcomes[g]
        stage2 += direct.amount
        remaining = 1.0
        if reps[g] is not None:
            rp = repair_choices(attack, g)[reps[g]]
            stage2 += rp.fee
            remaining = 1.0 - rp.reduction_fraction
        e = _pick(rng, [o.probability for o in direct.indirect_outcomes])
        stage3 += remaining * direct.indirect_outcomes[e].amount
        if m is not None:
            stage3 -= attack.insurance_options[m].coverage_fraction * direct.amount

    if stages:
        return stage1, stage2, stage3
    return stage1 + stage2 + stage3


def _pick(rng, probs) -> int:
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    # u landed in the rounding gap above the final cumulative sum
    return max(i for i, p in enumerate(probs) if p > 0)


class _AttackTables:
    """Outcome law and per-outcome stage costs for one attack under the decision.

    Outcome 0 is "no loss" (did not occur, or prevented); outcome ``1 + j``
    is the j-th (direct g, indirect e) pair in row-major order. Drawing one
    outcome by inversion has the same law as drawing occurrence, prevention,
    direct loss and indirect loss in turn.
    """

    def __init__(self, attack, s, m, reps):
        prevention = attack.security_options[s].prevention_probability if s is not None else 0.0
        q = attack.insurance_options[m].coverage_fraction if m is not None else 0.0
        hit = attack.occurrence_probability * (1.0 - prevention)
        probs = [1.0 - hit]
        stage2 = [0.0]
        stage3 = [0.0]
        for g, d in enumerate(attack.direct_outcomes):
            fee, remaining = 0.0, 1.0
            if reps[g] is not None:
                rp = repair_choices(attack, g)[reps[g]]
                fee, remaining = rp.fee, 1.0 - rp.reduction_fraction
            for o in d.indirect_outcomes:
                probs.append(hit * d.probability * o.probability)
                stage2.append(d.amount + fee)
                stage3.append(remaining * o.amount - q * d.amount)
        probs = np.asarray(probs)
        cdf = np.cumsum(probs)
        # u in [0, 1) must never fall past the last live outcome
        cdf[int(np.flatnonzero(probs > 0)[-1]):] = np.inf
        self.cdf = cdf
        self.stage2 = np.asarray(stage2)
        self.stage3 = np.asarray(stage3)


def _batch(tables, upfront, n, seed_seq):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    stage2 = np.zeros(n)
    stage3 = np.zeros(n)
    u = np.empty(n)
    for t in tables:
        rng.random(out=u)
        idx = np.searchsorted(t.cdf, u, side="right")
        stage2 += t.stage2[idx]
        stage3 += t.stage3[idx]
    total = upfront + stage2 + stage3
    mean = total.mean()
    m2 = float(((total - mean) ** 2).sum())
    return n, float(mean), m2, float(stage2.mean()), float(stage3.mean())


def simulate(instance: RiskInstance, decision: Decision, runs: int, seed: int,
             workers: int = 1, batch_size: int = BATCH_SIZE) -> SimulationSummary:
    """Sample mean and standard error of the realized cost over ``runs`` periods."""
    _check(instance, decision)
    if runs < 1:
        raise ValueError("runs must be >= 1")
    upfront = 0.0
    tables = []
    for k, attack in enumerate(instance.attacks):
        s, m, reps = decision.attack_part(k)
        if s is not None:
            upfront += attack.security_options[s].fee
        if m is not None:
            upfront += attack.insurance_options[m].premium
        tables.append(_AttackTables(attack, s, m, reps))

    sizes = [batch_size] * (runs // batch_size)
    if runs % batch_size:
        sizes.append(runs % batch_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, children))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _batch(tables, upfront, *j), jobs))
    else:
        parts = [_batch(tables, upfront, *j) for j in jobs]

    # Chan et al. pairwise combination, in batch order for determinism
    count, mean, m2 = 0, 0.0, 0.0
    s2_sum = s3_sum = 0.0
    for n, bmean, bm2, s2, s3 in parts:
        delta = bmean - mean
        total = count + n
        mean += delta * n / total
        m2 += bm2 + delta * delta * count * n / total
        count = total
        s2_sum += s2 * n
        s3_sum += s3 * n

    if runs == 1:
        std_error = 0.0
    else:
        std_error = math.sqrt(m2 / (runs - 1) / runs)
    return SimulationSummary(
        runs=runs,
        mean_cost=mean,
        std_error=std_error,
        stage_means=(upfront, s2_sum / runs, s3_sum / runs),
        seed=seed,
        degenerate=runs == 1,
    )
