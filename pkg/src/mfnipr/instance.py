"""Instance bundle and its JSON file format.

Reals are written as decimal strings with at most six fraction digits, so a
file parses back to exactly the doubles the generator produced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .network import LayeredNetwork, NodeRecord, ValidationError
from .restructure import Leadership, RestructureRules

__all__ = ["Instance", "decimal", "parse_decimal", "to_json", "from_json", "load", "save"]

SCHEMA_VERSION = 1


def decimal(x: float, digits: int = 6) -> str:
    """Shortest decimal string of ``x`` rounded to ``digits`` fraction digits."""
    s = f"{float(x):.{digits}f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def parse_decimal(value: Any, where: str) -> float:
    if not isinstance(value, str):
        raise ValidationError(f"{where}: expected a decimal string, got {type(value).__name__}")
    try:
        x = float(value)
    except ValueError:
        raise ValidationError(f"{where}: {value!r} is not a decimal number") from None
    frac = value.split(".")[1] if "." in value else ""
    if len(frac) > 6 or "e" in value.lower():
        raise ValidationError(f"{where}: {value!r} uses more than six fraction digits")
    return x


@dataclass(frozen=True)
class Instance:
    network: LayeredNetwork
    rules: RestructureRules
    leadership: Leadership = Leadership()
    meta: dict = field(default_factory=dict)

    def with_network(self, net: LayeredNetwork, **meta) -> "Instance":
        """Same instance on a new network, with rules rebuilt from the node records."""
        rules = RestructureRules.from_network(net, self.rules.budget)
        return replace(self, network=net, rules=rules, meta={**self.meta, **meta})


_NODE_REALS = ("capacity", "cost", "supply", "demand")
_NODE_INTS = ("layer", "tau", "k", "l", "s")
_NODE_FLAGS = ("recruitable", "promotable", "cross_org_recruitable")


def to_json(inst: Instance) -> dict:
    net = inst.network
    nodes = []
    for v in net.nodes:
        rec: dict[str, Any] = {"id": v.id}
        for name in _NODE_INTS:
            rec[name] = getattr(v, name)
        for name in _NODE_REALS:
            rec[name] = decimal(getattr(v, name))
        rec["organization"] = v.organization
        for name in _NODE_FLAGS:
            rec[name] = getattr(v, name)
        nodes.append(rec)
    return {
        "schema": SCHEMA_VERSION,
        "num_layers": net.num_layers,
        "nodes": nodes,
        "arcs": [[i, j] for i, j in net.arcs],
        "restructurable_arcs": [[i, j, decimal(a)] for i, j, a in net.restructurable_arcs],
        "rules": {"budget": decimal(inst.rules.budget)},
        "leadership": {"nodes": sorted(inst.leadership.nodes), "minimum": inst.leadership.minimum},
        "meta": dict(inst.meta),
    }


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where}: expected an integer")
    return value


def from_json(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise ValidationError("instance: expected a JSON object")
    for key in ("nodes", "arcs", "restructurable_arcs", "rules", "leadership", "meta"):
        if key not in data:
            raise ValidationError(f"instance: missing field {key!r}")
    nodes = []
    for pos, rec in enumerate(data["nodes"]):
        where = f"nodes[{pos}]"
        if not isinstance(rec, dict):
            raise ValidationError(f"{where}: expected an object")
        try:
            kw: dict[str, Any] = {"id": _int(rec["id"], f"{where}.id")}
            for name in _NODE_INTS:
                kw[name] = _int(rec[name], f"{where}.{name}")
            for name in _NODE_REALS:
                kw[name] = parse_decimal(rec[name], f"{where}.{name}")
            org = rec.get("organization")
            kw["organization"] = None if org is None else _int(org, f"{where}.organization")
            for name in _NODE_FLAGS:
                kw[name] = bool(rec.get(name, False))
        except KeyError as exc:
            raise ValidationError(f"{where}: missing field {exc.args[0]!r}") from None
        nodes.append(NodeRecord(**kw))
    arcs = []
    for pos, a in enumerate(data["arcs"]):
        if not (isinstance(a, list) and len(a) == 2):
            raise ValidationError(f"arcs[{pos}]: expected [tail, head]")
        arcs.append((_int(a[0], f"arcs[{pos}][0]"), _int(a[1], f"arcs[{pos}][1]")))
    rarcs = []
    for pos, a in enumerate(data["restructurable_arcs"]):
        where = f"restructurable_arcs[{pos}]"
        if not (isinstance(a, list) and len(a) == 3):
            raise ValidationError(f"{where}: expected [tail, head, cost]")
        rarcs.append((_int(a[0], f"{where}[0]"), _int(a[1], f"{where}[1]"),
                      parse_decimal(a[2], f"{where}[2]")))
    num_layers = _int(data.get("num_layers", max((v.layer for v in nodes), default=1)),
                      "num_layers")
    net = LayeredNetwork(tuple(nodes), tuple(arcs), tuple(rarcs), num_layers)
    net.validate()
    rules_rec = data["rules"]
    if not isinstance(rules_rec, dict) or "budget" not in rules_rec:
        raise ValidationError("rules: missing field 'budget'")
    rules = RestructureRules.from_network(net, parse_decimal(rules_rec["budget"], "rules.budget"))
    lead = data["leadership"]
    if not isinstance(lead, dict):
        raise ValidationError("leadership: expected an object")
    members = [_int(i, "leadership.nodes") for i in lead.get("nodes", [])]
    if any(not 0 <= i < net.n for i in members):
        raise ValidationError("leadership.nodes: unknown node id")
    leadership = Leadership(frozenset(members), _int(lead.get("minimum", 1), "leadership.minimum"))
    meta = data["meta"]
    if not isinstance(meta, dict):
        raise ValidationError("meta: expected an object")
    return Instance(net, rules, leadership, dict(meta))


def save(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json(inst), indent=1) + "\n")


def load(path: str | Path) -> Instance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return from_json(data)
