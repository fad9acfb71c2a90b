"""Seeded six-layer trafficking-style instances and their variants.

Layer 6 holds suppliers, layer 1 users; layers 3 to 6 belong to
organizations.  Base arcs only join consecutive layers and never cross
organizations above the safe-house layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import Instance
from .network import LayeredNetwork, NodeRecord, ValidationError
from .restructure import Leadership, RestructureRules

__all__ = [
    "VARIANTS",
    "GenParams",
    "generate",
    "add_recruitment",
    "add_org_restructuring",
    "layer_sizes",
    "climb_cost",
]

VARIANTS = ("base", "recruitment", "organizational")
NUM_LAYERS = 6
ORG_LAYERS = (3, 4, 5, 6)


def _two(x: float) -> float:
    """Round to two decimals through the decimal string, as the file format would."""
    return float(f"{x:.2f}")


@dataclass(frozen=True)
class GenParams:
    seed: int = 0
    num_users: int = 200
    # nodes per layer as a fraction of the user count (layers 2..6)
    layer_ratios: tuple[float, ...] = (0.2, 0.06, 0.03, 0.02, 0.01)
    num_organizations: int = 2
    demand_range: tuple[float, float] = (0.30, 0.90)
    capacity_factor: float = 1.2
    cost: dict[int, float] = field(
        default_factory=lambda: {1: 1.0, 2: 3.0, 3: 8.0, 4: 16.0, 5: 28.0, 6: 45.0})
    tau: dict[int, int] = field(default_factory=lambda: {1: 0, 2: 2, 3: 2, 4: 2, 5: 2, 6: 2})
    max_parents: int = 2
    rarcs_per_node: int = 3
    variant: str = "base"
    recruit_fraction: float = 0.2
    k: int = 1
    l: int = 1
    s: int = 1
    arc_cost: float = 1.0
    leadership_min: int = 1
    restructure_budget: float = 6.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.num_users < 1:
            raise ValueError("num_users must be positive")
        if self.num_organizations < 1:
            raise ValueError("num_organizations must be positive")
        if len(self.layer_ratios) != NUM_LAYERS - 1:
            raise ValueError("layer_ratios needs one entry per layer 2..6")


def layer_sizes(params: GenParams) -> dict[int, int]:
    sizes = {1: params.num_users}
    for layer, ratio in zip(range(2, NUM_LAYERS + 1), params.layer_ratios):
        floor = params.num_organizations if layer in ORG_LAYERS else 2
        sizes[layer] = max(floor, round(ratio * params.num_users))
    return sizes


class _Builder:
    """Mutable scratch space; frozen into a LayeredNetwork at the end."""

    def __init__(self, net: LayeredNetwork | None = None):
        self.nodes: list[dict] = []
        self.arcs: list[tuple[int, int]] = []
        self.rarcs: list[tuple[int, int, float]] = []
        if net is not None:
            self.nodes = [dict(v.__dict__) for v in net.nodes]
            self.arcs = list(net.arcs)
            self.rarcs = list(net.restructurable_arcs)

    def add_node(self, **kw) -> int:
        kw["id"] = len(self.nodes)
        self.nodes.append(kw)
        return kw["id"]

    def of_layer(self, layer: int, include_recruitable: bool = False) -> list[int]:
        return [v["id"] for v in self.nodes
                if v["layer"] == layer and (include_recruitable or not v.get("recruitable"))]

    def children(self, i: int) -> list[int]:
        return [j for t, j in self.arcs if t == i]

    def parents(self, j: int) -> list[int]:
        return [t for t, h in self.arcs if h == j]

    def freeze(self) -> LayeredNetwork:
        net = LayeredNetwork(
            tuple(NodeRecord(**v) for v in self.nodes), tuple(self.arcs), tuple(self.rarcs),
            NUM_LAYERS,
        )
        net.validate()
        return net


def _same_org(b: _Builder, i: int, j: int) -> bool:
    return b.nodes[i]["organization"] == b.nodes[j]["organization"]


def _eligible_parents(b: _Builder, j: int, layer_above: list[int]) -> list[int]:
    if b.nodes[j]["layer"] + 1 in ORG_LAYERS and b.nodes[j]["layer"] in ORG_LAYERS:
        return [i for i in layer_above if _same_org(b, i, j)]
    return list(layer_above)


def _set_capacities(b: _Builder, params: GenParams, nodes: list[int]) -> None:
    """Capacity = factor * sum of children's capacities, bottom-up."""
    for i in sorted(nodes, key=lambda v: b.nodes[v]["layer"]):
        kids = b.children(i)
        total = sum(b.nodes[h]["capacity"] for h in kids)
        b.nodes[i]["capacity"] = _two(params.capacity_factor * total)
        if b.nodes[i]["layer"] == NUM_LAYERS:
            b.nodes[i]["supply"] = b.nodes[i]["capacity"]


def _set_tau(b: _Builder, params: GenParams, nodes: list[int]) -> None:
    for i in nodes:
        b.nodes[i]["tau"] = min(params.tau[b.nodes[i]["layer"]], len(b.children(i)))


def generate(params: GenParams = GenParams()) -> Instance:
    """Base instance, then the variant's additions.  Deterministic in ``params.seed``."""
    rng = np.random.default_rng([params.seed, 0])
    sizes = layer_sizes(params)
    b = _Builder()
    node_defaults = dict(k=params.k, l=params.l, s=params.s)
    for layer in range(NUM_LAYERS, 0, -1):
        for pos in range(sizes[layer]):
            org = pos % params.num_organizations if layer in ORG_LAYERS else None
            b.add_node(layer=layer, capacity=0.0, cost=float(params.cost[layer]), tau=0,
                       organization=org, **node_defaults)

    for layer in range(NUM_LAYERS - 1, 0, -1):
        above = b.of_layer(layer + 1)
        for j in b.of_layer(layer):
            pool = _eligible_parents(b, j, above)
            count = min(len(pool), int(rng.integers(1, params.max_parents + 1)))
            for i in sorted(rng.choice(pool, size=count, replace=False).tolist()):
                b.arcs.append((i, j))
        for i in above:
            if not b.children(i):
                pool = [j for j in b.of_layer(layer) if i in _eligible_parents(b, j, [i])]
                b.arcs.append((i, int(rng.choice(pool))))

    lo, hi = params.demand_range
    for j in b.of_layer(1):
        demand = _two(rng.uniform(lo, hi))
        b.nodes[j]["demand"] = demand
        b.nodes[j]["capacity"] = demand
    _set_capacities(b, params, [v["id"] for v in b.nodes if v["layer"] > 1])
    _set_tau(b, params, [v["id"] for v in b.nodes])

    existing = set(b.arcs)
    for layer in range(1, NUM_LAYERS):
        above = b.of_layer(layer + 1)
        for j in b.of_layer(layer):
            pool = [i for i in above if (i, j) not in existing]
            count = min(len(pool), params.rarcs_per_node)
            for i in sorted(rng.choice(pool, size=count, replace=False).tolist()) if count else []:
                b.rarcs.append((i, j, params.arc_cost))

    net = b.freeze()
    inst = Instance(
        net,
        RestructureRules.from_network(net, params.restructure_budget),
        _leadership(net, params),
        {"seed": params.seed, "variant": "base", "users": params.num_users},
    )
    if params.variant == "recruitment":
        inst = add_recruitment(inst, params.recruit_fraction, params)
    elif params.variant == "organizational":
        inst = add_org_restructuring(inst, params)
    return inst


def _leadership(net: LayeredNetwork, params: GenParams) -> Leadership:
    """Top two layers of the two largest organizations (ties to the lower id)."""
    sizes: dict[int, int] = {}
    for v in net.nodes:
        if v.organization is not None:
            sizes[v.organization] = sizes.get(v.organization, 0) + 1
    largest = sorted(sizes, key=lambda o: (-sizes[o], o))[:2]
    members = frozenset(
        v.id for v in net.nodes
        if v.organization in largest and v.layer >= NUM_LAYERS - 1 and not v.recruitable
    )
    return Leadership(members, params.leadership_min)


def add_recruitment(inst: Instance, fraction: float = 0.2,
                    params: GenParams | None = None) -> Instance:
    """Add recruitable users, dealers and safe houses reachable only by restructuring.

    Recruitable users and dealers get candidate incoming arcs from up to
    ``rarcs_per_node`` random nodes of the layer above.  A recruitable safe
    house copies an existing safe house (organization, children, capacity)
    and can be attached to that safe house's parents, acting as its backup.
    """
    if fraction < 0:
        raise ValueError("fraction must be nonnegative")
    if fraction == 0:
        return inst
    params = params or GenParams(seed=int(inst.meta.get("seed", 0)))
    rng = np.random.default_rng([params.seed, 1])
    b = _Builder(inst.network)
    defaults = dict(k=params.k, l=params.l, s=params.s, recruitable=True)
    counts = {layer: math.ceil(fraction * len(b.of_layer(layer))) for layer in (1, 2, 3)}
    new_nodes: list[int] = []

    for _ in range(counts[3]):
        mirror = int(rng.choice(b.of_layer(3)))
        m = b.nodes[mirror]
        j = b.add_node(layer=3, capacity=m["capacity"], cost=float(params.cost[3]), tau=0,
                       organization=m["organization"], **defaults)
        for h in b.children(mirror):
            b.arcs.append((j, h))
        for i in b.parents(mirror):
            b.rarcs.append((i, j, params.arc_cost))
        new_nodes.append(j)

    users = b.of_layer(1)
    for _ in range(counts[2]):
        j = b.add_node(layer=2, capacity=0.0, cost=float(params.cost[2]), tau=0, **defaults)
        count = min(len(users), int(rng.integers(1, 4)))
        for h in sorted(rng.choice(users, size=count, replace=False).tolist()):
            b.arcs.append((j, h))
        _set_capacities(b, params, [j])
        _attach(b, rng, j, b.of_layer(3), params)
        new_nodes.append(j)

    lo, hi = params.demand_range
    for _ in range(counts[1]):
        demand = _two(rng.uniform(lo, hi))
        j = b.add_node(layer=1, capacity=demand, demand=demand, cost=float(params.cost[1]),
                       tau=0, **defaults)
        _attach(b, rng, j, b.of_layer(2), params)
        new_nodes.append(j)

    _set_tau(b, params, new_nodes)
    net = b.freeze()
    return inst.with_network(net, variant="recruitment")


def _attach(b: _Builder, rng: np.random.Generator, j: int, tails: list[int],
            params: GenParams) -> None:
    count = min(len(tails), max(1, params.rarcs_per_node))
    for i in sorted(rng.choice(tails, size=count, replace=False).tolist()):
        b.rarcs.append((i, j, params.arc_cost))


def add_org_restructuring(inst: Instance, params: GenParams | None = None) -> Instance:
    """Add promotion arcs (skip one layer) and cross-organization arcs.

    Heads of the new arcs join the promotable set ``P`` or the cross-org set
    ``C``; every restructurable arc into ``P`` or ``C`` may only be
    initiated by its head (``z_out = 0``).
    """
    net = inst.network
    orgs = {v.organization for v in net.nodes if v.organization is not None}
    if len(orgs) < 2:
        raise ValidationError("organizational restructuring needs at least two organizations")
    params = params or GenParams(seed=int(inst.meta.get("seed", 0)))
    rng = np.random.default_rng([params.seed, 2])
    b = _Builder(net)
    taken = set(b.arcs) | {(i, j) for i, j, _ in b.rarcs}

    def pick_heads(layer: int) -> list[int]:
        heads = b.of_layer(layer)
        chosen = [j for j in heads if rng.random() < 0.5]
        return chosen or [int(rng.choice(heads))]

    for layer in (3, 4):
        tails_layer = b.of_layer(layer + 2)
        for j in pick_heads(layer):
            pool = [i for i in tails_layer if _same_org(b, i, j) and (i, j) not in taken]
            if not pool:
                continue
            i = int(rng.choice(pool))
            b.rarcs.append((i, j, params.arc_cost))
            taken.add((i, j))
            b.nodes[j]["promotable"] = True

    base_arcs = set(b.arcs)
    for layer in (3, 4, 5):
        tails_layer = b.of_layer(layer + 1)
        for j in pick_heads(layer):
            # an existing candidate arc across organizations is adopted as is
            pool = [i for i in tails_layer if not _same_org(b, i, j) and (i, j) not in base_arcs]
            if not pool:
                continue
            i = int(rng.choice(pool))
            if (i, j) not in taken:
                b.rarcs.append((i, j, params.arc_cost))
                taken.add((i, j))
            b.nodes[j]["cross_org_recruitable"] = True

    return inst.with_network(b.freeze(), variant="organizational")


def climb_cost(net: LayeredNetwork, i: int) -> float:
    """Cost of interdicting ``i`` together with a cheapest climbing-the-ladder chain.

    Each node pays for its ``tau`` cheapest children recursively; shared
    descendants are counted once per use, so this is an upper bound on the
    true minimum.
    """
    memo: dict[int, float] = {}

    def cost(v: int) -> float:
        if v not in memo:
            node = net.nodes[v]
            kids = sorted(cost(h) for h in net.children(v))
            memo[v] = node.cost + sum(kids[: node.tau]) if node.tau <= len(kids) else math.inf
        return memo[v]

    return cost(i)
