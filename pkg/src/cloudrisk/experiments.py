"""Parameter sweeps with baseline comparison, and expected-loss breakdowns."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import SolverMismatchError, SweepConfigError, UnsupportedSweepError
from .model import Decision, RiskInstance, repair_choices, require_valid
from .objective import _check, _unprevented
from .serialization import attack_policy_label, repair_label
from .solver import (
    BaselineMode,
    SolveResult,
    decision_count,
    enumeration_cap,
    solve_bnb,
    solve_bruteforce,
)

OBJECTIVE_TOL = 1e-9


@dataclass(frozen=True)
class ParamPath:
    """Either an attack's occurrence probability or one of its direct-loss probabilities."""

    kind: str  # "attack-prob" | "direct-loss-prob"
    attack: str
    outcome: Optional[int] = None

    @classmethod
    def parse(cls, text: str) -> "ParamPath":
        """Accepts ``attack-prob:a1`` or ``direct-loss-prob:a2/d1`` (outcome 1-based)."""
        kind, sep, target = text.partition(":")
        if not sep or not target:
            raise SweepConfigError(f"bad parameter path {text!r}")
        if kind == "attack-prob":
            return cls(kind, target)
        if kind == "direct-loss-prob":
            attack, sep, outcome = target.rpartition("/")
            if not sep:
                raise SweepConfigError(f"direct-loss path needs <attack>/<outcome>: {text!r}")
            digits = outcome[1:] if outcome[:1] in ("d", "D") else outcome
            if not digits.isdigit() or int(digits) < 1:
                raise SweepConfigError(f"bad direct-loss outcome {outcome!r}")
            return cls(kind, attack, int(digits) - 1)
        raise SweepConfigError(f"unknown parameter kind {kind!r}")

    def __str__(self):
        if self.kind == "attack-prob":
            return f"attack-prob:{self.attack}"
        return f"direct-loss-prob:{self.attack}/d{self.outcome + 1}"


def set_parameter(instance: RiskInstance, path: ParamPath, value: float) -> RiskInstance:
    """Copy of ``instance`` with the parameter at ``path`` replaced."""
    if not 0.0 <= value <= 1.0:
        raise SweepConfigError(f"grid value {value} outside [0, 1]")
    try:
        k = instance.attack_index(path.attack)
    except KeyError:
        raise SweepConfigError(f"no attack named {path.attack!r}") from None
    attack = instance.attacks[k]
    if path.kind == "attack-prob":
        attack = dataclasses.replace(attack, occurrence_probability=value)
    else:
        if not 0 <= path.outcome < attack.n_direct:
            raise SweepConfigError(f"attack {path.attack!r} has no direct loss d{path.outcome + 1}")
        if attack.n_direct != 2:
            raise UnsupportedSweepError(
                f"direct-loss sweep needs exactly 2 outcomes, attack {path.attack!r} has {attack.n_direct}")
        other = 1 - path.outcome
        directs = list(attack.direct_outcomes)
        directs[path.outcome] = dataclasses.replace(directs[path.outcome], probability=value)
        directs[other] = dataclasses.replace(directs[other], probability=1.0 - value)
        attack = dataclasses.replace(attack, direct_outcomes=tuple(directs))
    attacks = list(instance.attacks)
    attacks[k] = attack
    return dataclasses.replace(instance, attacks=tuple(attacks))


@dataclass(frozen=True)
class SweepSpec:
    base: RiskInstance
    parameter: ParamPath
    grid: tuple[float, ...]
    modes: tuple[BaselineMode, ...] = tuple(BaselineMode)
    fixed: tuple[tuple[ParamPath, float], ...] = ()
    baseline_repairs: bool = True

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "fixed", tuple(self.fixed))


@dataclass(frozen=True)
class LossComponents:
    """Expected cost pieces of one attack; ``total`` is their signed sum."""

    direct: float
    indirect: float
    claims: float
    fees: float

    @property
    def total(self) -> float:
        return self.fees + self.direct + self.indirect - self.claims


@dataclass(frozen=True)
class SweepRow:
    value: float
    objectives: dict
    results: dict
    policy: tuple[tuple[str, tuple[str, ...]], ...]
    components: tuple[LossComponents, ...]
    crosschecked: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def full(self) -> SolveResult:
        return self.results[BaselineMode.FULL]


def expected_loss_components(instance: RiskInstance, decision: Decision) -> list[LossComponents]:
    """Per attack: expected direct loss, residual indirect loss, claims, and fees.

    ``fees`` holds the upfront security/insurance outlay plus expected repair fees.
    """
    _check(instance, decision)
    out = []
    for k, attack in enumerate(instance.attacks):
        s, m, reps = decision.attack_part(k)
        factor = _unprevented(attack, s)
        upfront = 0.0
        q = 0.0
        if s is not None:
            upfront += attack.security_options[s].fee
        if m is not None:
            upfront += attack.insurance_options[m].premium
            q = attack.insurance_options[m].coverage_fraction
        direct = indirect = repair = 0.0
        for g, d in enumerate(attack.direct_outcomes):
            remaining = 1.0
            if reps[g] is not None:
                rp = repair_choices(attack, g)[reps[g]]
                repair += d.probability * rp.fee
                remaining = 1.0 - rp.reduction_fraction
            direct += d.probability * d.amount
            indirect += d.probability * remaining * d.expected_indirect
        out.append(LossComponents(
            direct=factor * direct,
            indirect=factor * indirect,
            claims=factor * direct * q,
            fees=upfront + factor * repair,
        ))
    return out


def policy_description(decision: Decision) -> tuple[tuple[str, tuple[str, ...]], ...]:
    return tuple(
        (attack_policy_label(decision.security[k], decision.insurance[k]),
         tuple(repair_label(u) for u in decision.repairs[k]))
        for k in range(len(decision.security))
    )


def solve_point(instance: RiskInstance, modes: Sequence[BaselineMode],
                baseline_repairs: bool = True, crosscheck: bool = True):
    """Solve every mode at one grid point; cross-check against brute force when small enough.

    ``baseline_repairs=False`` forbids repairs in the restricted modes only.
    """
    results = {}
    checked = True
    notes = []
    for mode in modes:
        allow_repairs = baseline_repairs or mode is BaselineMode.FULL
        res = solve_bnb(instance, mode, allow_repairs=allow_repairs)
        if crosscheck and decision_count(instance, mode, allow_repairs) <= enumeration_cap():
            ref = solve_bruteforce(instance, mode, allow_repairs=allow_repairs)
            if abs(ref.objective - res.objective) > OBJECTIVE_TOL:
                raise SolverMismatchError(
                    f"{mode.value}: bnb objective {res.objective!r} != bruteforce {ref.objective!r}")
        else:
            checked = False
            notes.append(f"{mode.value}: no brute-force cross-check")
        results[mode] = res
    return results, checked, tuple(notes)


def run_sweep(spec: SweepSpec, crosscheck: bool = True) -> list[SweepRow]:
    base = spec.base
    for path, value in spec.fixed:
        base = set_parameter(base, path, value)
    require_valid(base)
    rows = []
    for value in spec.grid:
        instance = set_parameter(base, spec.parameter, value)
        results, checked, notes = solve_point(instance, spec.modes, spec.baseline_repairs, crosscheck)
        full = results.get(BaselineMode.FULL) or next(iter(results.values()))
        rows.append(SweepRow(
            value=value,
            objectives={mode: r.objective for mode, r in results.items()},
            results=results,
            policy=policy_description(full.decision),
            components=tuple(expected_loss_components(instance, full.decision)),
            crosschecked=checked,
            notes=notes,
        ))
    return rows


def parse_grid(text: str) -> tuple[float, ...]:
    """``"0.1:0.9:0.1"`` -> (0.1, 0.2, ..., 0.9); a bare number gives a single point."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise SweepConfigError(f"bad grid {text!r}") from None
    if len(nums) == 1:
        return (nums[0],)
    if len(nums) != 3 or nums[2] <= 0 or nums[1] < nums[0]:
        raise SweepConfigError(f"grid must be start:stop:step with step > 0, got {text!r}")
    start, stop, step = nums
    n = int(round((stop - start) / step))
    if start + n * step > stop + 1e-9:
        n -= 1
    return tuple(round(start + i * step, 12) for i in range(n + 1))
