"""Risk-instance data model and invariant checks.

Everything here is an immutable value object. Option choices are stored as
optional indices (``None`` means "buy nothing"), so the at-most-one-package
rules for security, insurance and repair hold by construction.

Repair packages carry ``reduction_fraction`` = the share of indirect loss
removed when the package is applied; the remaining share is ``1 - reduction``.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InvalidInstanceError

TOL = 1e-9


@dataclass(frozen=True)
class IndirectLossOutcome:
    probability: float
    amount: float


@dataclass(frozen=True)
class DirectLossOutcome:
    probability: float
    amount: float
    indirect_outcomes: tuple[IndirectLossOutcome, ...]

    def __post_init__(self):
        object.__setattr__(self, "indirect_outcomes", tuple(self.indirect_outcomes))

    @property
    def expected_indirect(self) -> float:
        return sum(o.probability * o.amount for o in self.indirect_outcomes)


@dataclass(frozen=True)
class SecurityPackage:
    fee: float
    prevention_probability: float


@dataclass(frozen=True)
class InsurancePackage:
    premium: float
    coverage_fraction: float


@dataclass(frozen=True)
class RepairPackage:
    fee: float
    reduction_fraction: float


@dataclass(frozen=True)
class Attack:
    """One attack type with its loss tree and purchasable countermeasures.

    ``repair_options[g]`` lists the repair packages available after direct
    loss outcome ``g`` of this attack.
    """

    name: str
    occurrence_probability: float
    direct_outcomes: tuple[DirectLossOutcome, ...]
    security_options: tuple[SecurityPackage, ...] = ()
    insurance_options: tuple[InsurancePackage, ...] = ()
    repair_options: tuple[tuple[RepairPackage, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "direct_outcomes", tuple(self.direct_outcomes))
        object.__setattr__(self, "security_options", tuple(self.security_options))
        object.__setattr__(self, "insurance_options", tuple(self.insurance_options))
        object.__setattr__(
            self, "repair_options", tuple(tuple(opts) for opts in self.repair_options)
        )

    @property
    def n_direct(self) -> int:
        return len(self.direct_outcomes)


@dataclass(frozen=True)
class RiskInstance:
    attacks: tuple[Attack, ...]
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "attacks", tuple(self.attacks))

    @property
    def n_attacks(self) -> int:
        return len(self.attacks)

    def attack_index(self, name: str) -> int:
        for k, attack in enumerate(self.attacks):
            if attack.name == name:
                return k
        raise KeyError(name)


@dataclass(frozen=True)
class Decision:
    """A purchase plan.

    ``security[k]`` / ``insurance[k]`` index into attack ``k``'s catalogs and
    ``repairs[k][g]`` into the repair options for direct outcome ``g``.
    """

    security: tuple[Optional[int], ...]
    insurance: tuple[Optional[int], ...]
    repairs: tuple[tuple[Optional[int], ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "security", tuple(self.security))
        object.__setattr__(self, "insurance", tuple(self.insurance))
        object.__setattr__(self, "repairs", tuple(tuple(r) for r in self.repairs))

    @classmethod
    def empty(cls, instance: RiskInstance) -> "Decision":
        """The buy-nothing decision shaped for ``instance``."""
        k = instance.n_attacks
        return cls(
            security=(None,) * k,
            insurance=(None,) * k,
            repairs=tuple((None,) * a.n_direct for a in instance.attacks),
        )

    @classmethod
    def from_parts(cls, parts: Sequence[tuple]) -> "Decision":
        """Build from per-attack ``(security, insurance, repairs)`` triples."""
        parts = list(parts)
        return cls(
            security=tuple(p[0] for p in parts),
            insurance=tuple(p[1] for p in parts),
            repairs=tuple(tuple(p[2]) for p in parts),
        )

    def attack_part(self, k: int) -> tuple:
        return self.security[k], self.insurance[k], self.repairs[k]


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    detail: str

    def __str__(self):
        return f"{self.path}: {self.rule} ({self.detail})"


def _bad_fraction(x) -> bool:
    return not (isinstance(x, (int, float)) and 0.0 <= x <= 1.0)


def _bad_amount(x) -> bool:
    return not (isinstance(x, (int, float)) and x >= 0.0 and math.isfinite(x))


def validate_instance(instance: RiskInstance) -> list[Violation]:
    """Return every broken invariant of ``instance``; empty when valid."""
    out: list[Violation] = []

    def add(path, rule, detail):
        out.append(Violation(path, rule, detail))

    if _bad_amount(instance.budget):
        add("budget", "nonnegative-amount", f"budget={instance.budget!r}")

    for k, attack in enumerate(instance.attacks):
        base = f"attacks[{k}]({attack.name})"
        if _bad_fraction(attack.occurrence_probability):
            add(f"{base}.probability", "probability-range",
                f"value={attack.occurrence_probability!r}")

        total = 0.0
        indirect_lengths = set()
        for g, direct in enumerate(attack.direct_outcomes):
            dpath = f"{base}.direct_losses[{g}]"
            if _bad_fraction(direct.probability):
                add(f"{dpath}.probability", "probability-range", f"value={direct.probability!r}")
            if _bad_amount(direct.amount):
                add(f"{dpath}.amount", "nonnegative-amount", f"value={direct.amount!r}")
            total += direct.probability
            indirect_lengths.add(len(direct.indirect_outcomes))
            itotal = 0.0
            for e, ind in enumerate(direct.indirect_outcomes):
                ipath = f"{dpath}.indirect_losses[{e}]"
                if _bad_fraction(ind.probability):
                    add(f"{ipath}.probability", "probability-range", f"value={ind.probability!r}")
                if _bad_amount(ind.amount):
                    add(f"{ipath}.amount", "nonnegative-amount", f"value={ind.amount!r}")
                itotal += ind.probability
            if not abs(itotal - 1.0) <= TOL:
                add(f"{dpath}.indirect_losses", "indirect-distribution-sum",
                    f"probabilities sum to {itotal!r}, expected 1")
        if not abs(total - 1.0) <= TOL:
            add(f"{base}.direct_losses", "direct-distribution-sum",
                f"probabilities sum to {total!r}, expected 1")
        if len(indirect_lengths) > 1:
            add(f"{base}.direct_losses", "indirect-length-mismatch",
                f"lengths {sorted(indirect_lengths)}")

        for n, sp in enumerate(attack.security_options):
            spath = f"{base}.security[{n}]"
            if _bad_amount(sp.fee):
                add(f"{spath}.fee", "nonnegative-amount", f"value={sp.fee!r}")
            if _bad_fraction(sp.prevention_probability):
                add(f"{spath}.prevention", "probability-range",
                    f"value={sp.prevention_probability!r}")
        for m, ip in enumerate(attack.insurance_options):
            mpath = f"{base}.insurance[{m}]"
            if _bad_amount(ip.premium):
                add(f"{mpath}.premium", "nonnegative-amount", f"value={ip.premium!r}")
            if _bad_fraction(ip.coverage_fraction):
                add(f"{mpath}.coverage", "fraction-range", f"value={ip.coverage_fraction!r}")

        if attack.repair_options and len(attack.repair_options) != attack.n_direct:
            add(f"{base}.repair_options", "repair-shape",
                f"{len(attack.repair_options)} lists for {attack.n_direct} direct losses")
        if len({len(opts) for opts in attack.repair_options}) > 1:
            add(f"{base}.repair_options", "repair-length-mismatch",
                f"lengths {[len(o) for o in attack.repair_options]}")
        for g, opts in enumerate(attack.repair_options):
            for u, rp in enumerate(opts):
                rpath = f"{base}.direct_losses[{g}].repair[{u}]"
                if _bad_amount(rp.fee):
                    add(f"{rpath}.fee", "nonnegative-amount", f"value={rp.fee!r}")
                if _bad_fraction(rp.reduction_fraction):
                    add(f"{rpath}.reduction", "fraction-range",
                        f"value={rp.reduction_fraction!r}")
    return out


def require_valid(instance: RiskInstance) -> None:
    violations = validate_instance(instance)
    if violations:
        raise InvalidInstanceError(violations)


def repair_choices(attack: Attack, g: int) -> tuple[RepairPackage, ...]:
    if not attack.repair_options:
        return ()
    return attack.repair_options[g]


def decision_is_well_formed(instance: RiskInstance, decision: Decision) -> bool:
    """True iff the decision has the instance's (K, G) shape and every index is in range."""
    k_count = instance.n_attacks
    if not (len(decision.security) == len(decision.insurance) == len(decision.repairs) == k_count):
        return False

    def ok(choice, n):
        if choice is None:
            return True
        return (
            isinstance(choice, numbers.Integral)
            and not isinstance(choice, bool)
            and 0 <= choice < n
        )

    for k, attack in enumerate(instance.attacks):
        if not ok(decision.security[k], len(attack.security_options)):
            return False
        if not ok(decision.insurance[k], len(attack.insurance_options)):
            return False
        if len(decision.repairs[k]) != attack.n_direct:
            return False
        for g, choice in enumerate(decision.repairs[k]):
            if not ok(choice, len(repair_choices(attack, g))):
                return False
    return True
