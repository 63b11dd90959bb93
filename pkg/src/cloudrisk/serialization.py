"""JSON documents for instances and decisions, plus short policy labels ("SP2+IP1", "Rep1", "0").

Instance documents may give repair catalogs at three levels; the most
specific one wins for each (attack, direct loss) pair:

1. ``attacks[k].direct_losses[g].repair_options``
2. ``attacks[k].repair_options``
3. top-level ``shared_repair_options``

Error messages carry the line of the innermost JSON container that holds
the offending value.
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
import os
import tempfile
from importlib import resources
from typing import Any, Optional

import jsonschema

from .errors import CloudRiskError, MalformedDecisionError
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


class InstanceParseError(CloudRiskError, ValueError):
    """Document could not be turned into a valid instance."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("\n".join(problems))


# -- position-tracking JSON load ----------------------------------------------

class _Obj(dict):
    pos = 0


class _Arr(list):
    pos = 0


class _TrackingDecoder(json.JSONDecoder):
    def __init__(self):
        super().__init__()

        def parse_object(s_and_end, *args):
            value, end = json.decoder.JSONObject(s_and_end, *args)
            out = _Obj(value)
            out.pos = s_and_end[1] - 1
            return out, end

        def parse_array(s_and_end, scan_once):
            value, end = json.decoder.JSONArray(s_and_end, scan_once)
            out = _Arr(value)
            out.pos = s_and_end[1] - 1
            return out, end

        self.parse_object = parse_object
        self.parse_array = parse_array
        self.scan_once = json.scanner.py_make_scanner(self)


def _line_of(text: str, root, path) -> int:
    node, pos = root, getattr(root, "pos", 0)
    for key in path:
        try:
            node = node[key]
        except (KeyError, IndexError, TypeError):
            break
        pos = getattr(node, "pos", pos)
    return text.count("\n", 0, pos) + 1


def _fmt_path(path) -> str:
    out = ""
    for key in path:
        out += f"[{key}]" if isinstance(key, int) else (f".{key}" if out else key)
    return out or "<root>"


def load_schema() -> dict:
    return json.loads(resources.files("cloudrisk.data").joinpath("instance.schema.json").read_text())


def paper_tables_text() -> str:
    return resources.files("cloudrisk.data").joinpath("paper_tables.json").read_text()


# -- instances -----------------------------------------------------------------

def _repairs(raw) -> tuple[RepairPackage, ...]:
    return tuple(RepairPackage(float(r["fee"]), float(r["reduction"])) for r in raw)


def instance_from_dict(doc: dict) -> RiskInstance:
    shared = doc.get("shared_repair_options")
    attacks = []
    for a in doc["attacks"]:
        directs = []
        repair_lists = []
        for d in a["direct_losses"]:
            directs.append(DirectLossOutcome(
                float(d["probability"]),
                float(d["amount"]),
                tuple(IndirectLossOutcome(float(i["probability"]), float(i["amount"]))
                      for i in d["indirect_losses"]),
            ))
            raw = d.get("repair_options", a.get("repair_options", shared))
            repair_lists.append(_repairs(raw or ()))
        attacks.append(Attack(
            name=a["name"],
            occurrence_probability=float(a["probability"]),
            direct_outcomes=tuple(directs),
            security_options=tuple(SecurityPackage(float(s["fee"]), float(s["prevention"]))
                                   for s in a.get("security", ())),
            insurance_options=tuple(InsurancePackage(float(i["premium"]), float(i["coverage"]))
                                    for i in a.get("insurance", ())),
            repair_options=tuple(repair_lists),
        ))
    return RiskInstance(tuple(attacks), float(doc["budget"]))


def parse_instance(text: str) -> RiskInstance:
    """Parse and fully validate an instance document.

    Raises :class:`InstanceParseError` listing every schema and invariant
    problem found.
    """
    try:
        doc = _TrackingDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None

    problems = []
    validator = jsonschema.Draft202012Validator(load_schema())
    for err in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path))):
        path = list(err.absolute_path)
        problems.append(f"line {_line_of(text, doc, path)}: {_fmt_path(path)}: {err.message}")
    if problems:
        raise InstanceParseError(problems)

    instance = instance_from_dict(doc)
    for v in validate_instance(instance):
        path = _violation_path(instance, v.path)
        problems.append(f"line {_line_of(text, doc, path)}: {v}")
    if problems:
        raise InstanceParseError(problems)
    return instance


def _violation_path(instance, vpath: str) -> list:
    """Turn a violation path like ``attacks[0](a1).direct_losses[1]`` into JSON keys."""
    out: list[Any] = []
    for part in vpath.split("."):
        name, _, rest = part.partition("[")
        out.append(name)
        if rest:
            out.append(int(rest.split("]")[0]))
    return out


def load_instance(path) -> RiskInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def instance_to_dict(instance: RiskInstance) -> dict:
    """Explicit form: repair options are written per direct loss, no shorthand."""
    return {
        "budget": instance.budget,
        "attacks": [
            {
                "name": a.name,
                "probability": a.occurrence_probability,
                "security": [{"fee": s.fee, "prevention": s.prevention_probability}
                             for s in a.security_options],
                "insurance": [{"premium": i.premium, "coverage": i.coverage_fraction}
                              for i in a.insurance_options],
                "direct_losses": [
                    {
                        "probability": d.probability,
                        "amount": d.amount,
                        "indirect_losses": [{"probability": o.probability, "amount": o.amount}
                                            for o in d.indirect_outcomes],
                        "repair_options": [
                            {"fee": r.fee, "reduction": r.reduction_fraction}
                            for r in (a.repair_options[g] if a.repair_options else ())
                        ],
                    }
                    for g, d in enumerate(a.direct_outcomes)
                ],
            }
            for a in instance.attacks
        ],
    }


def dump_instance(instance: RiskInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


# -- policy labels ---------------------------------------------------------------

def attack_policy_label(security: Optional[int], insurance: Optional[int]) -> str:
    parts = []
    if security is not None:
        parts.append(f"SP{security + 1}")
    if insurance is not None:
        parts.append(f"IP{insurance + 1}")
    return "+".join(parts) or "0"


def repair_label(choice: Optional[int]) -> str:
    return "0" if choice is None else f"Rep{choice + 1}"


def _parse_label(value, prefix: str) -> Optional[int]:
    if value is None or value == "0" or value == 0:
        return None
    if isinstance(value, str) and value.startswith(prefix) and value[len(prefix):].isdigit():
        n = int(value[len(prefix):])
        if n >= 1:
            return n - 1
    raise MalformedDecisionError(f"bad {prefix} label {value!r}")


def parse_attack_policy(label: str) -> tuple[Optional[int], Optional[int]]:
    """``"SP2+IP1"`` -> ``(1, 0)``; ``"0"`` -> ``(None, None)``."""
    security = insurance = None
    if label.strip() == "0":
        return None, None
    for part in label.split("+"):
        part = part.strip()
        if part.startswith("SP"):
            security = _parse_label(part, "SP")
        elif part.startswith("IP"):
            insurance = _parse_label(part, "IP")
        else:
            raise MalformedDecisionError(f"bad policy label {label!r}")
    return security, insurance


def decision_from_labels(rows) -> Decision:
    """Build a decision from per-attack ``(policy, [repair labels])`` pairs."""
    parts = []
    for policy, repairs in rows:
        s, m = parse_attack_policy(policy)
        parts.append((s, m, tuple(_parse_label(r, "Rep") for r in repairs)))
    return Decision.from_parts(parts)


# -- decisions -----------------------------------------------------------------

def decision_to_dict(instance: RiskInstance, decision: Decision) -> dict:
    return {
        "attacks": [
            {
                "name": a.name,
                "security": None if decision.security[k] is None else f"SP{decision.security[k] + 1}",
                "insurance": None if decision.insurance[k] is None else f"IP{decision.insurance[k] + 1}",
                "repairs": [None if u is None else f"Rep{u + 1}" for u in decision.repairs[k]],
            }
            for k, a in enumerate(instance.attacks)
        ]
    }


def parse_decision(text: str, instance: RiskInstance) -> Decision:
    """Parse a decision document and check it fits ``instance``.

    Attack entries are matched by ``name`` when present, else by position.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDecisionError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("attacks"), list):
        raise MalformedDecisionError("decision document needs an 'attacks' list")
    entries = doc["attacks"]
    if len(entries) != instance.n_attacks:
        raise MalformedDecisionError(
            f"decision lists {len(entries)} attacks, instance has {instance.n_attacks}")
    by_name = {e.get("name"): e for e in entries if isinstance(e, dict) and "name" in e}
    parts = []
    for k, attack in enumerate(instance.attacks):
        e = by_name.get(attack.name, entries[k]) if by_name else entries[k]
        repairs = e.get("repairs") or [None] * attack.n_direct
        parts.append((
            _parse_label(e.get("security"), "SP"),
            _parse_label(e.get("insurance"), "IP"),
            tuple(_parse_label(r, "Rep") for r in repairs),
        ))
    decision = Decision.from_parts(parts)
    if not decision_is_well_formed(instance, decision):
        raise MalformedDecisionError("decision indices or shape do not fit the instance")
    return decision


def dump_decision(instance: RiskInstance, decision: Decision) -> str:
    return json.dumps(decision_to_dict(instance, decision), indent=2) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
