"""Attacker and defender decision sets: ``Y`` and ``Z(y)``.

Restructurable arcs are addressed by their index in
``LayeredNetwork.restructurable_arcs``.  A restructuring is initiated either
by the head node (``z_in``, replacing a lost parent) or by the tail node
(``z_out``, replacing a lost child).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .network import LayeredNetwork, ValidationError

__all__ = [
    "EnumerationLimitError",
    "InterdictionPlan",
    "RestructurePlan",
    "PermissionIndicators",
    "RestructureRules",
    "Leadership",
    "FeasibilityReport",
    "interdiction_feasible",
    "interdiction_floor",
    "permissions",
    "feasible",
    "project",
    "enumerate_Z",
    "enumerate_Y",
    "CONSTRAINT_FAMILIES",
]


class EnumerationLimitError(RuntimeError):
    """Brute-force enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class InterdictionPlan:
    nodes: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(int(i) for i in self.nodes))

    def __contains__(self, i: int) -> bool:
        return i in self.nodes

    def as_vector(self, n: int) -> list[int]:
        return [1 if i in self.nodes else 0 for i in range(n)]

    @classmethod
    def from_vector(cls, y: Iterable[float], tol: float = 0.5) -> "InterdictionPlan":
        return cls(frozenset(i for i, v in enumerate(y) if v > tol))


@dataclass(frozen=True)
class RestructurePlan:
    z_in: frozenset[int] = frozenset()
    z_out: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "z_in", frozenset(int(e) for e in self.z_in))
        object.__setattr__(self, "z_out", frozenset(int(e) for e in self.z_out))

    def active(self) -> frozenset[int]:
        return self.z_in | self.z_out

    def is_null(self) -> bool:
        return not self.z_in and not self.z_out

    def triples(self, net: LayeredNetwork) -> list[tuple[int, int, str]]:
        """Sorted ``(tail, head, side)`` triples, the serialized form."""
        out = []
        for side, idx in (("in", self.z_in), ("out", self.z_out)):
            for e in idx:
                i, j, _ = net.restructurable_arcs[e]
                out.append((i, j, side))
        return sorted(out)

    @classmethod
    def from_triples(cls, net: LayeredNetwork, triples) -> "RestructurePlan":
        index = {(i, j): e for e, (i, j, _) in enumerate(net.restructurable_arcs)}
        z_in, z_out = set(), set()
        for i, j, side in triples:
            key = (int(i), int(j))
            if key not in index:
                raise ValidationError(f"({i}, {j}) is not a restructurable arc")
            if side == "in":
                z_in.add(index[key])
            elif side == "out":
                z_out.add(index[key])
            else:
                raise ValidationError(f"side must be 'in' or 'out', got {side!r}")
        return cls(frozenset(z_in), frozenset(z_out))


NULL_PLAN = RestructurePlan()


@dataclass(frozen=True)
class PermissionIndicators:
    w_in: tuple[int, ...]
    w_out: tuple[int, ...]

    def permitted(self) -> list[int]:
        return [e for e, (a, b) in enumerate(zip(self.w_in, self.w_out)) if a or b]


@dataclass(frozen=True)
class Leadership:
    """Require at least ``minimum`` interdictions among ``nodes``."""

    nodes: frozenset[int] = frozenset()
    minimum: int = 1


@dataclass(frozen=True)
class RestructureRules:
    """Defender rule parameters.  Per-node ``k``, ``l``, ``s`` live on the nodes."""

    budget: float = 6.0
    k: tuple[int, ...] = ()
    l: tuple[int, ...] = ()
    s: tuple[int, ...] = ()
    arc_cost: tuple[float, ...] = ()
    in_only: frozenset[int] = field(default_factory=frozenset)  # arcs into P or C

    @classmethod
    def from_network(cls, net: LayeredNetwork, budget: float = 6.0) -> "RestructureRules":
        restricted = {
            v.id for v in net.nodes if v.promotable or v.cross_org_recruitable
        }
        in_only = frozenset(
            e for e, (_, j, _) in enumerate(net.restructurable_arcs) if j in restricted
        )
        return cls(
            budget=float(budget),
            k=tuple(v.k for v in net.nodes),
            l=tuple(v.l for v in net.nodes),
            s=tuple(v.s for v in net.nodes),
            arc_cost=tuple(a for _, _, a in net.restructurable_arcs),
            in_only=in_only,
        )

    def projection_exact(self) -> bool:
        """True when every sub-plan of a feasible plan stays feasible after projection.

        The binary permission indicator only records whether *some* neighbor
        is interdicted.  Projecting a plan through it is exact when a single
        interdicted neighbor already allows the per-node caps, i.e. ``l <= k``
        and ``s <= k`` everywhere.
        """
        return all(l <= k for l, k in zip(self.l, self.k)) and all(
            s <= k for s, k in zip(self.s, self.k)
        )


def interdiction_feasible(net: LayeredNetwork, y: InterdictionPlan, budget: float,
                          leadership: Leadership | None = None) -> bool:
    """Budget, climbing-the-ladder and (optional) leadership rows of ``Y``."""
    if sum(net.nodes[i].cost for i in y.nodes) > budget + 1e-9:
        return False
    for i in y.nodes:
        if net.nodes[i].tau > sum(1 for h in net.children(i) if h in y.nodes):
            return False
    if leadership is not None and len(leadership.nodes & y.nodes) < leadership.minimum:
        return False
    return True


def interdiction_floor(net: LayeredNetwork) -> list[float]:
    """Lower bound on the spend of any plan in ``Y`` that interdicts each node.

    Interdicting ``v`` needs ``tau_v`` distinct children, and at least one of
    them brings its own prerequisites from strictly lower layers, so both the
    ``tau`` cheapest child costs and the cheapest child floor are valid
    additions to ``c_v``.  ``inf`` marks a node that can never be interdicted.
    """
    floor: list[float] = [0.0] * net.n
    for v in sorted(net.nodes, key=lambda r: r.layer):
        kids = net.children(v.id)
        if v.tau == 0:
            floor[v.id] = v.cost
        elif v.tau > len(kids):
            floor[v.id] = math.inf
        else:
            cheapest = sum(sorted(net.nodes[h].cost for h in kids)[: v.tau])
            floor[v.id] = v.cost + max(cheapest, min(floor[h] for h in kids))
    return floor


def permissions(net: LayeredNetwork, y: InterdictionPlan) -> PermissionIndicators:
    """``w_in`` = some parent of the head is interdicted; ``w_out`` = some child of the tail is."""
    w_in, w_out = [], []
    for i, j, _ in net.restructurable_arcs:
        w_in.append(int(any(p in y.nodes for p in net.parents(j))))
        w_out.append(int(any(h in y.nodes for h in net.children(i))))
    return PermissionIndicators(tuple(w_in), tuple(w_out))


CONSTRAINT_FAMILIES = (
    "out_cap",      # sum z_out leaving i <= l_i
    "in_cap",       # sum z_in entering j <= s_j
    "out_local",    # sum z_out leaving i <= k_i * interdicted children
    "in_local",     # sum z_in entering j <= k_j * interdicted parents
    "no_double",    # z_in + z_out <= 1
    "budget",       # sum a * z <= r
    "in_only",      # z_out = 0 into promotable / cross-org nodes
)


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def feasible(net: LayeredNetwork, rules: RestructureRules, y: InterdictionPlan,
             plan: RestructurePlan) -> FeasibilityReport:
    """Check ``plan`` against every family of ``Z(y)``; violations listed in fixed order."""
    m = len(net.restructurable_arcs)
    if any(not 0 <= e < m for e in plan.active()):
        raise ValidationError("plan references an unknown restructurable arc")
    out_count = [0] * net.n
    in_count = [0] * net.n
    for e in plan.z_out:
        out_count[net.restructurable_arcs[e][0]] += 1
    for e in plan.z_in:
        in_count[net.restructurable_arcs[e][1]] += 1

    bad: dict[str, list[str]] = {name: [] for name in CONSTRAINT_FAMILIES}
    for v in range(net.n):
        if out_count[v] > rules.l[v]:
            bad["out_cap"].append(f"node {v}")
        if in_count[v] > rules.s[v]:
            bad["in_cap"].append(f"node {v}")
        if out_count[v]:
            kids = sum(1 for h in net.children(v) if h in y.nodes)
            if out_count[v] > rules.k[v] * kids:
                bad["out_local"].append(f"node {v}")
        if in_count[v]:
            pars = sum(1 for h in net.parents(v) if h in y.nodes)
            if in_count[v] > rules.k[v] * pars:
                bad["in_local"].append(f"node {v}")
    for e in sorted(plan.z_in & plan.z_out):
        bad["no_double"].append(f"arc {e}")
    spent = sum(rules.arc_cost[e] for e in plan.active())
    if spent > rules.budget + 1e-9:
        bad["budget"].append(f"{spent:g} > {rules.budget:g}")
    for e in sorted(plan.z_out & rules.in_only):
        bad["in_only"].append(f"arc {e}")

    violations = tuple(
        f"{name}: {', '.join(items)}" for name, items in bad.items() if items
    )
    return FeasibilityReport(not violations, violations)


def project(plan_bar: RestructurePlan, w: PermissionIndicators) -> RestructurePlan:
    """Keep the coordinates of ``plan_bar`` still permitted by ``w`` (per side)."""
    # z_hat = max(0, z_bar + w - 1) is 1 exactly when z_bar = 1 and w = 1
    return RestructurePlan(
        frozenset(e for e in plan_bar.z_in if w.w_in[e]),
        frozenset(e for e in plan_bar.z_out if w.w_out[e]),
    )


def _options(rules: RestructureRules, w: PermissionIndicators, e: int) -> list[str]:
    opts = []
    if w.w_in[e]:
        opts.append("in")
    if w.w_out[e] and e not in rules.in_only:
        opts.append("out")
    return opts


def enumerate_Z(net: LayeredNetwork, rules: RestructureRules, y: InterdictionPlan,
                cap: int = 100_000, max_permitted: int = 16,
                restrict: Iterable[int] | None = None) -> list[RestructurePlan]:
    """All plans in ``Z(y)`` by depth-first search with knapsack pruning.

    Only permitted arcs can be active (the local-reaction rows force the rest
    to zero).  ``restrict`` limits the search to plans over the given arc
    indices.  Plans come out in a deterministic order starting with the
    null plan.
    """
    w = permissions(net, y)
    arcs = [e for e in w.permitted() if _options(rules, w, e)]
    if restrict is not None:
        keep = set(restrict)
        arcs = [e for e in arcs if e in keep]
    if len(arcs) > max_permitted:
        raise EnumerationLimitError(f"{len(arcs)} permitted arcs exceed {max_permitted}")
    plans: list[RestructurePlan] = []

    def extend(pos: int, z_in: frozenset[int], z_out: frozenset[int]) -> None:
        if pos == len(arcs):
            plans.append(RestructurePlan(z_in, z_out))
            if len(plans) > cap:
                raise EnumerationLimitError(f"more than {cap} restructuring plans")
            return
        extend(pos + 1, z_in, z_out)
        e = arcs[pos]
        for side in _options(rules, w, e):
            cand = (RestructurePlan(z_in | {e}, z_out) if side == "in"
                    else RestructurePlan(z_in, z_out | {e}))
            # every family is a knapsack row, so an infeasible prefix stays infeasible
            if feasible(net, rules, y, cand):
                extend(pos + 1, cand.z_in, cand.z_out)

    extend(0, frozenset(), frozenset())
    return plans


def enumerate_Y(net: LayeredNetwork, budget: float, leadership: Leadership | None = None,
                cap: int = 1_000_000) -> Iterator[InterdictionPlan]:
    """Every interdiction plan in ``Y`` (budget pruned), smallest node ids first."""
    order = sorted(range(net.n), key=lambda i: net.nodes[i].cost)
    count = 0

    def walk(pos: int, chosen: frozenset[int], spent: float):
        nonlocal count
        if pos == len(order):
            y = InterdictionPlan(chosen)
            if interdiction_feasible(net, y, budget, leadership):
                count += 1
                if count > cap:
                    raise EnumerationLimitError(f"more than {cap} interdiction plans")
                yield y
            return
        yield from walk(pos + 1, chosen, spent)
        i = order[pos]
        c = net.nodes[i].cost
        if spent + c <= budget + 1e-9:
            yield from walk(pos + 1, chosen | {i}, spent + c)

    yield from walk(0, frozenset(), 0.0)

