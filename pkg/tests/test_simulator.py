import dataclasses
import math

import numpy as np
import pytest

from cloudrisk.errors import MalformedDecisionError
from cloudrisk.model import Decision, RiskInstance
from cloudrisk.objective import total_cost
from cloudrisk.simulator import make_rng, sample_run, simulate
from cloudrisk.solver import solve_bnb

from helpers import random_decision, random_instance


def test_degenerate_instances_are_exact():
    rng = np.random.default_rng(11)
    for _ in range(25):
        inst = random_instance(rng, degenerate=True)
        dec = random_decision(rng, inst)
        expected = total_cost(inst, dec)
        res = simulate(inst, dec, runs=500, seed=int(rng.integers(1 << 31)))
        assert res.mean_cost == pytest.approx(expected.total, abs=1e-9)
        assert res.std_error == pytest.approx(0.0, abs=1e-9)
        assert res.stage_means == pytest.approx(
            (expected.stage1, expected.stage2, expected.stage3), abs=1e-9)


def test_zero_attacks():
    res = simulate(RiskInstance((), 3.0), Decision((), (), ()), runs=1000, seed=0)
    assert res.mean_cost == 0.0
    assert res.std_error == 0.0


def test_single_run_is_flagged():
    inst = RiskInstance((), 0.0)
    res = simulate(inst, Decision((), (), ()), runs=1, seed=3)
    assert res.degenerate
    assert res.std_error == 0.0
    assert not simulate(inst, Decision((), (), ()), runs=2, seed=3).degenerate


def test_rejects_bad_input(ref):
    with pytest.raises(ValueError):
        simulate(ref, Decision.empty(ref), runs=0, seed=1)
    with pytest.raises(MalformedDecisionError):
        simulate(ref, Decision((5, None), (None, None), ((None, None), (None, None))), 10, 1)


def test_seed_reproducible_and_worker_independent(ref):
    dec = solve_bnb(ref).decision
    a = simulate(ref, dec, runs=300_000, seed=42)
    b = simulate(ref, dec, runs=300_000, seed=42)
    c = simulate(ref, dec, runs=300_000, seed=42, workers=3)
    d = simulate(ref, dec, runs=300_000, seed=43)
    assert a == b == c
    assert a.mean_cost != d.mean_cost
    assert a.generator == "PCG64"


def test_realized_costs_within_bounds(ref):
    # stage 2 plus stage 3 per attack is d(1 - q) + repair fee + remaining indirect >= 0
    dec = solve_bnb(ref).decision
    rng = make_rng(7)
    upfront = total_cost(ref, dec).stage1
    max_fee = max(r.fee for a in ref.attacks for opts in a.repair_options for r in opts)
    worst = upfront + sum(
        max(d.amount + max_fee + max(o.amount for o in d.indirect_outcomes) for d in a.direct_outcomes)
        for a in ref.attacks
    )
    for _ in range(2000):
        s1, s2, s3 = sample_run(ref, dec, rng, stages=True)
        assert s1 == upfront
        assert s2 + s3 >= -1e-12
        assert s1 + s2 + s3 <= worst


def test_sequential_sampler_matches_closed_form(ref):
    dec = solve_bnb(ref).decision
    rng = make_rng(2024)
    xs = np.array([sample_run(ref, dec, rng) for _ in range(40_000)])
    se = xs.std(ddof=1) / math.sqrt(len(xs))
    assert abs(xs.mean() - total_cost(ref, dec).total) <= 4 * se


def test_sequential_stage_split(ref):
    rng = make_rng(5)
    dec = Decision.from_parts([(None, 0, (0, 1)), (1, None, (None, 0))])
    exp = total_cost(ref, dec)
    runs = np.array([sample_run(ref, dec, rng, stages=True) for _ in range(40_000)])
    assert np.all(runs[:, 0] == exp.stage1)
    for j, target in ((1, exp.stage2), (2, exp.stage3)):
        se = runs[:, j].std(ddof=1) / math.sqrt(len(runs))
        assert abs(runs[:, j].mean() - target) <= 4 * se


@pytest.mark.parametrize("seed", range(6))
def test_random_instances_mean_within_interval(seed):
    rng = np.random.default_rng(300 + seed)
    inst = random_instance(rng, K=3)
    dec = random_decision(rng, inst)
    res = simulate(inst, dec, runs=400_000, seed=seed)
    lo, hi = res.ci(4.0)
    assert lo <= total_cost(inst, dec).total <= hi


def test_many_seeds_consistency(ref):
    dec = Decision.empty(ref)
    target = total_cost(ref, dec).total
    inside = 0
    for s in range(100):
        res = simulate(ref, dec, runs=100_000, seed=s)
        inside += abs(res.mean_cost - target) <= 3 * res.std_error
    assert inside >= 97


def test_zero_probability_outcome_never_drawn(ref):
    a2 = ref.attacks[1]
    d1, d2 = a2.direct_outcomes
    inst = RiskInstance((dataclasses.replace(
        a2, occurrence_probability=1.0,
        direct_outcomes=(dataclasses.replace(d1, probability=1.0), dataclasses.replace(d2, probability=0.0)),
    ),), 5)
    dec = Decision.empty(inst)
    res = simulate(inst, dec, runs=200_000, seed=9)
    assert res.stage_means[1] == pytest.approx(d1.amount, abs=1e-12)
