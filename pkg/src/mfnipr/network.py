"""Layered network model, node splitting and combinatorial max-flow/min-cut.

Original nodes are interdicted through their split arc ``(i', i'')``.  After
splitting, node ``i`` owns the split-level vertices ``2*i`` (in-node) and
``2*i + 1`` (out-node); the super source and super sink come last.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "ValidationError",
    "NodeRecord",
    "LayeredNetwork",
    "SplitArc",
    "SplitNetwork",
    "FlowAssignment",
    "CutSolution",
    "AuxiliaryNetwork",
    "split_nodes",
    "effective_capacities",
    "max_flow",
    "min_cut",
    "auxiliary",
    "in_node",
    "out_node",
]

FLOW_TOL = 1e-9


class ValidationError(ValueError):
    """An instance or plan violates a structural invariant."""


@dataclass(frozen=True)
class NodeRecord:
    id: int
    layer: int
    capacity: float
    cost: float = 1.0
    tau: int = 0
    k: int = 1
    l: int = 1
    s: int = 1
    organization: int | None = None
    recruitable: bool = False
    promotable: bool = False
    cross_org_recruitable: bool = False
    supply: float = 0.0
    demand: float = 0.0


@dataclass(frozen=True)
class LayeredNetwork:
    """Nodes by layer (layer 1 = users), base arcs ``A`` and restructurable arcs ``A^R``.

    ``restructurable_arcs`` holds ``(tail, head, cost)`` triples.  Arcs point
    from layer ``L`` down to layer ``L - 1``; restructurable arcs may skip
    one extra layer (promotion).
    """

    nodes: tuple[NodeRecord, ...]
    arcs: tuple[tuple[int, int], ...]
    restructurable_arcs: tuple[tuple[int, int, float], ...] = ()
    num_layers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "arcs", tuple((int(i), int(j)) for i, j in self.arcs))
        object.__setattr__(
            self,
            "restructurable_arcs",
            tuple((int(i), int(j), float(a)) for i, j, a in self.restructurable_arcs),
        )

    @property
    def n(self) -> int:
        return len(self.nodes)

    def children(self, i: int) -> list[int]:
        return self._adjacency()[0][i]

    def parents(self, j: int) -> list[int]:
        return self._adjacency()[1][j]

    def _adjacency(self):
        cached = self.__dict__.get("_adj")
        if cached is None:
            kids: list[list[int]] = [[] for _ in self.nodes]
            pars: list[list[int]] = [[] for _ in self.nodes]
            for i, j in self.arcs:
                kids[i].append(j)
                pars[j].append(i)
            cached = (kids, pars)
            object.__setattr__(self, "_adj", cached)
        return cached

    def suppliers(self) -> list[int]:
        return [v.id for v in self.nodes if v.layer == self.num_layers]

    def users(self) -> list[int]:
        return [v.id for v in self.nodes if v.layer == 1]

    def validate(self) -> list[str]:
        """Raise :class:`ValidationError` on broken invariants; return soft warnings."""
        n = self.n
        if self.num_layers < 1:
            raise ValidationError("num_layers must be positive")
        for idx, v in enumerate(self.nodes):
            if v.id != idx:
                raise ValidationError(f"node ids must be dense 0..n-1; got {v.id} at position {idx}")
            if not 1 <= v.layer <= self.num_layers:
                raise ValidationError(f"node {v.id}: layer {v.layer} outside 1..{self.num_layers}")
            for name in ("capacity", "cost", "supply", "demand"):
                if getattr(v, name) < 0:
                    raise ValidationError(f"node {v.id}: negative {name}")
            for name in ("tau", "k", "l", "s"):
                if getattr(v, name) < 0:
                    raise ValidationError(f"node {v.id}: negative {name}")
            if v.supply > 0 and v.layer != self.num_layers:
                raise ValidationError(f"node {v.id}: supply allowed on the top layer only")
            if v.demand > 0 and v.layer != 1:
                raise ValidationError(f"node {v.id}: demand allowed on layer 1 only")

        seen: set[tuple[int, int]] = set()
        for i, j in self.arcs:
            self._check_endpoints(i, j, n, "arc")
            if (i, j) in seen:
                raise ValidationError(f"duplicate arc ({i}, {j})")
            seen.add((i, j))
            if self.nodes[i].layer != self.nodes[j].layer + 1:
                raise ValidationError(f"arc ({i}, {j}) must go from layer L to layer L-1")
            if self.nodes[j].recruitable:
                raise ValidationError(f"recruitable node {j} has an incoming base arc ({i}, {j})")

        rseen: set[tuple[int, int]] = set()
        for i, j, a in self.restructurable_arcs:
            self._check_endpoints(i, j, n, "restructurable arc")
            if (i, j) in rseen:
                raise ValidationError(f"duplicate restructurable arc ({i}, {j})")
            if (i, j) in seen:
                raise ValidationError(f"arc ({i}, {j}) is both a base and a restructurable arc")
            rseen.add((i, j))
            if a < 0:
                raise ValidationError(f"restructurable arc ({i}, {j}): negative cost")
            drop = self.nodes[i].layer - self.nodes[j].layer
            if drop not in (1, 2):
                raise ValidationError(
                    f"restructurable arc ({i}, {j}) must descend one layer (or two for promotion)"
                )

        warns = []
        for v in self.nodes:
            if v.tau > len(self.children(v.id)):
                warns.append(f"node {v.id}: tau={v.tau} exceeds out-degree; never interdictable")
        return warns

    @staticmethod
    def _check_endpoints(i: int, j: int, n: int, what: str) -> None:
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"{what} ({i}, {j}) references an unknown node")
        if i == j:
            raise ValidationError(f"{what} ({i}, {j}) is a self-loop")


def in_node(i: int) -> int:
    return 2 * i


def out_node(i: int) -> int:
    return 2 * i + 1


@dataclass(frozen=True)
class SplitArc:
    tail: int
    head: int
    capacity: float
    kind: str  # "node" | "arc" | "source" | "sink" | "restructurable"
    origin: int | tuple[int, int]  # original node id, or original (tail, head)


@dataclass(frozen=True)
class SplitNetwork:
    """Single-source single-sink digraph after node splitting.

    ``arcs`` holds the existing arcs (split arcs, original arcs, terminal
    arcs); ``restructurable`` holds the candidate arcs whose capacity is
    zero unless a restructuring plan activates them.  ``node_arc`` maps an
    original node id to the index of its split arc in ``arcs``.
    """

    num_nodes: int
    source: int
    sink: int
    arcs: tuple[SplitArc, ...]
    restructurable: tuple[SplitArc, ...] = ()
    node_arc: dict[int, int] = field(default_factory=dict)

    @property
    def all_arcs(self) -> tuple[SplitArc, ...]:
        return self.arcs + self.restructurable


def split_nodes(net: LayeredNetwork, arc_capacity: float | None = None) -> SplitNetwork:
    """Replace every node ``j`` with the arc ``(j', j'')`` and add super terminals.

    Original arcs are uncapacitated; they receive the finite sentinel
    ``1 + sum of node capacities`` unless ``arc_capacity`` is given.
    """
    for msg in net.validate():
        warnings.warn(msg, stacklevel=2)
    n = net.n
    source, sink = 2 * n, 2 * n + 1
    big = arc_capacity if arc_capacity is not None else 1.0 + sum(v.capacity for v in net.nodes)

    arcs: list[SplitArc] = []
    node_arc = {}
    for v in net.nodes:
        node_arc[v.id] = len(arcs)
        arcs.append(SplitArc(in_node(v.id), out_node(v.id), v.capacity, "node", v.id))
    for i, j in net.arcs:
        arcs.append(SplitArc(out_node(i), in_node(j), big, "arc", (i, j)))
    for v in net.nodes:
        if v.layer == net.num_layers:
            arcs.append(SplitArc(source, in_node(v.id), v.supply, "source", v.id))
    for v in net.nodes:
        if v.layer == 1:
            arcs.append(SplitArc(out_node(v.id), sink, v.demand, "sink", v.id))
    rarcs = tuple(
        SplitArc(out_node(i), in_node(j), big, "restructurable", (i, j))
        for i, j, _ in net.restructurable_arcs
    )
    return SplitNetwork(2 * n + 2, source, sink, tuple(arcs), rarcs, node_arc)


def _interdicted(y) -> frozenset[int]:
    if y is None:
        return frozenset()
    nodes = getattr(y, "nodes", y)
    return frozenset(nodes)


def _activated(z) -> frozenset[int]:
    if z is None:
        return frozenset()
    active = getattr(z, "active", None)
    if active is not None:
        return frozenset(active())
    return frozenset(z)


def effective_capacities(snet: SplitNetwork, y=None, z=None) -> list[float]:
    """Capacities of ``snet.all_arcs`` under interdiction ``y`` and restructuring ``z``.

    ``y`` is an InterdictionPlan or an iterable of original node ids; ``z`` is
    a RestructurePlan or an iterable of restructurable-arc indices.
    """
    cut = _interdicted(y)
    on = _activated(z)
    caps = [a.capacity for a in snet.arcs]
    for node in cut:
        caps[snet.node_arc[node]] = 0.0
    caps.extend(a.capacity if k in on else 0.0 for k, a in enumerate(snet.restructurable))
    return caps


@dataclass(frozen=True)
class FlowAssignment:
    flows: tuple[float, ...]  # aligned with snet.all_arcs
    value: float


@dataclass(frozen=True)
class CutSolution:
    source_side: frozenset[int]
    sink_side: frozenset[int]
    cut_arcs: tuple[int, ...]
    value: float


@dataclass(frozen=True)
class AuxiliaryNetwork:
    num_nodes: int
    arcs: frozenset[tuple[int, int]]

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in sorted(self.arcs):
            out[u].append(v)
        return out

    def reachable_from(self, start: int) -> set[int]:
        succ = self.successors()
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in succ[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    def has_path(self, u: int, v: int) -> bool:
        return v in self.reachable_from(u)


class _Dinic:
    """Blocking-flow max flow over a residual graph stored in flat lists."""

    def __init__(self, num_nodes: int):
        self.n = num_nodes
        self.head: list[int] = []
        self.cap: list[float] = []
        self.adj: list[list[int]] = [[] for _ in range(num_nodes)]

    def add_edge(self, u: int, v: int, c: float) -> int:
        e = len(self.head)
        self.head += [v, u]
        self.cap += [c, 0.0]
        self.adj[u].append(e)
        self.adj[v].append(e + 1)
        return e

    def _levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                v = self.head[e]
                if level[v] < 0 and self.cap[e] > FLOW_TOL:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def run(self, s: int, t: int) -> float:
        total = 0.0
        while (level := self._levels(s, t)) is not None:
            it = [0] * self.n
            while True:
                pushed = self._augment(s, t, level, it)
                if pushed <= FLOW_TOL:
                    break
                total += pushed
        return total

    def _augment(self, s: int, t: int, level: list[int], it: list[int]) -> float:
        # iterative DFS along the level graph; returns the bottleneck pushed
        path: list[int] = []
        u = s
        while True:
            if u == t:
                push = min(self.cap[e] for e in path)
                for e in path:
                    self.cap[e] -= push
                    self.cap[e ^ 1] += push
                return push
            advanced = False
            while it[u] < len(self.adj[u]):
                e = self.adj[u][it[u]]
                v = self.head[e]
                if self.cap[e] > FLOW_TOL and level[v] == level[u] + 1:
                    path.append(e)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if not path:
                    return 0.0
                level[u] = -1  # dead end
                e = path.pop()
                u = self.head[e ^ 1]
                it[u] += 1


def max_flow(snet: SplitNetwork, y=None, z=None) -> FlowAssignment:
    """Maximum s-t flow with interdicted split arcs zeroed and only activated candidates open."""
    caps = effective_capacities(snet, y, z)
    solver = _Dinic(snet.num_nodes)
    handles = [solver.add_edge(a.tail, a.head, c) for a, c in zip(snet.all_arcs, caps)]
    value = solver.run(snet.source, snet.sink)
    flows = tuple(max(0.0, c - solver.cap[h]) for c, h in zip(caps, handles))
    out_of_source = sum(f for a, f in zip(snet.all_arcs, flows) if a.tail == snet.source)
    into_source = sum(f for a, f in zip(snet.all_arcs, flows) if a.head == snet.source)
    net_value = out_of_source - into_source
    assert abs(net_value - value) <= 1e-7 * max(1.0, abs(value)), (net_value, value)
    return FlowAssignment(flows, net_value)


def auxiliary(snet: SplitNetwork, y, z, flow: FlowAssignment) -> AuxiliaryNetwork:
    """Residual digraph ``D_f``: forward where ``x < u``, backward where ``x > 0``."""
    caps = effective_capacities(snet, y, z)
    arcs = set()
    for a, c, x in zip(snet.all_arcs, caps, flow.flows):
        if x < c - FLOW_TOL:
            arcs.add((a.tail, a.head))
        if x > FLOW_TOL:
            arcs.add((a.head, a.tail))
    return AuxiliaryNetwork(snet.num_nodes, frozenset(arcs))


def min_cut(snet: SplitNetwork, y, z, flow: FlowAssignment) -> CutSolution:
    """Cut ``[U, U-bar]`` with ``U`` the nodes reachable from ``s`` in ``D_f``."""
    aux = auxiliary(snet, y, z, flow)
    U = frozenset(aux.reachable_from(snet.source))
    if snet.sink in U:
        raise AssertionError("flow is not maximum: sink reachable in the auxiliary network")
    caps = effective_capacities(snet, y, z)
    cut_arcs = tuple(
        k for k, (a, c) in enumerate(zip(snet.all_arcs, caps))
        if a.tail in U and a.head not in U and c > 0
    )
    value = sum(caps[k] for k in cut_arcs)
    if abs(value - flow.value) > 1e-7 * max(1.0, abs(value)):
        raise AssertionError(f"cut value {value} differs from flow value {flow.value}")
    sink_side = frozenset(range(snet.num_nodes)) - U
    return CutSolution(U, sink_side, cut_arcs, value)


def flow_value(snet: SplitNetwork, y=None, z=None) -> float:
    return max_flow(snet, y, z).value


def build_split_network(num_nodes: int, source: int, sink: int,
                        arcs: Iterable[tuple[int, int, float]],
                        restructurable: Iterable[tuple[int, int, float]] = (),
                        node_arcs: dict[int, int] | None = None) -> SplitNetwork:
    """Assemble a SplitNetwork directly from arc triples (for hand-made instances)."""
    base = tuple(SplitArc(u, v, float(c), "arc", (u, v)) for u, v, c in arcs)
    if node_arcs:
        base = tuple(
            SplitArc(a.tail, a.head, a.capacity, "node", nid)
            if (nid := _reverse(node_arcs).get(k)) is not None else a
            for k, a in enumerate(base)
        )
    rarcs = tuple(SplitArc(u, v, float(c), "restructurable", (u, v)) for u, v, c in restructurable)
    return SplitNetwork(num_nodes, source, sink, base, rarcs, dict(node_arcs or {}))


def _reverse(mapping: dict[int, int]) -> dict[int, int]:
    return {v: k for k, v in mapping.items()}
