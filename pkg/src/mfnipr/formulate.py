"""MILP models for interdiction, the C&CG masters and the recourse subproblem.

All cut-side models use the shifted min-cut dual: for every arc ``(u, v)``
of the split network, ``pi_v - pi_u + theta_uv >= -y_uv`` with ``pi_s = 1``
and ``pi_t = 0`` substituted as constants.  Interdiction enters through the
right-hand side, so no bilinear term (and no McCormick envelope) ever
appears.

For fixed binaries each dual block has an optimal solution with ``pi`` and
``theta`` in ``{0, 1}``, so the production models bound both to ``[0, 1]``.
Under those bounds a row whose constant right-hand side is ``-1`` or lower
can never bind and is left out; in particular a pool plan only contributes
rows for the arcs it activates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .milp import INF, LinearProgram, MixedIntegerProgram, solve_lp
from .network import LayeredNetwork, SplitNetwork, max_flow, split_nodes
from .restructure import (
    InterdictionPlan,
    Leadership,
    RestructurePlan,
    RestructureRules,
    interdiction_floor,
)

__all__ = [
    "PlanPool",
    "PoolEntry",
    "CutModel",
    "SubproblemModel",
    "DualEquivalenceReport",
    "build_mfnip",
    "build_master",
    "build_baseline_master",
    "build_subproblem",
    "check_dual_equivalence",
]


@dataclass(frozen=True)
class PoolEntry:
    plan: RestructurePlan
    iteration: int
    y: frozenset[int]  # interdiction whose subproblem produced the plan


@dataclass
class PlanPool:
    """Restructuring plans ``z^1..z^n`` gathered so far; ``z^1`` is the null plan."""

    entries: list[PoolEntry] = field(default_factory=list)

    @classmethod
    def seeded(cls) -> "PlanPool":
        return cls([PoolEntry(RestructurePlan(), 0, frozenset())])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return (e.plan for e in self.entries)

    def index(self, plan: RestructurePlan) -> int | None:
        for k, e in enumerate(self.entries):
            if e.plan == plan:
                return k
        return None

    def add(self, plan: RestructurePlan, iteration: int, y: InterdictionPlan) -> tuple[int, bool]:
        """Append ``plan`` unless present; returns ``(index, added)``."""
        k = self.index(plan)
        if k is not None:
            return k, False
        self.entries.append(PoolEntry(plan, iteration, y.nodes))
        return len(self.entries) - 1, True


@dataclass
class CutModel:
    """An emitted interdiction-side model and the columns needed to decode it."""

    mip: MixedIntegerProgram
    y: list[int]
    eta: int | None = None
    w_in: dict[int, int] = field(default_factory=dict)
    w_out: dict[int, int] = field(default_factory=dict)
    f: list[int] = field(default_factory=list)

    def interdiction(self, x) -> InterdictionPlan:
        return InterdictionPlan.from_vector([x[j] for j in self.y])


@dataclass
class SubproblemModel:
    mip: MixedIntegerProgram
    x: list[int]  # flow column per arc of snet.all_arcs
    z_in: list[int]
    z_out: list[int]

    def plan(self, x) -> RestructurePlan:
        return RestructurePlan(
            frozenset(e for e, j in enumerate(self.z_in) if x[j] > 0.5),
            frozenset(e for e, j in enumerate(self.z_out) if x[j] > 0.5),
        )


def _add_interdiction(mip: MixedIntegerProgram, net: LayeredNetwork, budget: float,
                      leadership: Leadership | None) -> list[int]:
    y = [mip.add_binary(f"y[{v.id}]") for v in net.nodes]
    for v, floor in zip(net.nodes, interdiction_floor(net)):
        if floor > budget + 1e-9:
            mip.ub[y[v.id]] = 0.0  # no plan in Y can afford this node
    mip.add_row({y[v.id]: v.cost for v in net.nodes}, "<=", budget, "budget")
    for v in net.nodes:
        if v.tau > 0:
            row = {y[v.id]: float(v.tau)}
            for h in net.children(v.id):
                row[y[h]] = row.get(y[h], 0.0) - 1.0
            mip.add_row(row, "<=", 0.0, f"climb[{v.id}]")
    if leadership is not None and leadership.minimum > 0:
        mip.add_row({y[i]: 1.0 for i in sorted(leadership.nodes)}, ">=",
                    float(leadership.minimum), "lead")
    return y


def _pi(mip: LinearProgram, pi: dict[int, int], snet: SplitNetwork, v: int):
    """Column of pi_v, or the constant it is fixed to at a terminal."""
    if v == snet.source:
        return None, 1.0
    if v == snet.sink:
        return None, 0.0
    return pi[v], 0.0


def _cut_row(mip: LinearProgram, pi: dict[int, int], snet: SplitNetwork, tail: int, head: int,
             theta: int, extra: dict[int, float], rhs: float, name: str) -> None:
    """``pi_head - pi_tail + theta + sum(extra) >= rhs`` with terminal constants moved right."""
    row = dict(extra)
    row[theta] = row.get(theta, 0.0) + 1.0
    col, const = _pi(mip, pi, snet, head)
    if col is not None:
        row[col] = row.get(col, 0.0) + 1.0
    rhs -= const
    col, const = _pi(mip, pi, snet, tail)
    if col is not None:
        row[col] = row.get(col, 0.0) - 1.0
    rhs += const
    mip.add_row(row, ">=", rhs, name)


def _base_block(mip: MixedIntegerProgram, snet: SplitNetwork, y: list[int], tag: str,
                pi_bounds=(0.0, 1.0), theta_ub: float = 1.0):
    """Potentials and base-arc rows of one dual block; returns ``(pi, cost_terms)``."""
    pi = {
        v: mip.add_var(f"pi{tag}[{v}]", *pi_bounds)
        for v in range(snet.num_nodes) if v not in (snet.source, snet.sink)
    }
    cost: dict[int, float] = {}
    node_of = {k: nid for nid, k in snet.node_arc.items()}
    for a_idx, a in enumerate(snet.arcs):
        if a.capacity <= 0:
            continue  # theta would be free, the row never binds
        theta = mip.add_var(f"theta{tag}[{a_idx}]", 0.0, theta_ub)
        cost[theta] = a.capacity
        extra = {y[node_of[a_idx]]: 1.0} if a_idx in node_of else {}
        _cut_row(mip, pi, snet, a.tail, a.head, theta, extra, 0.0, f"cut{tag}[{a_idx}]")
    return pi, cost


def build_mfnip(net: LayeredNetwork, budget: float, leadership: Leadership | None = None,
                snet: SplitNetwork | None = None) -> CutModel:
    """Interdiction without restructuring: ``min sum u*theta`` over ``y`` in ``Y``."""
    snet = snet or split_nodes(net)
    mip = MixedIntegerProgram("min", "mfnip")
    y = _add_interdiction(mip, net, budget, leadership)
    _, cost = _base_block(mip, snet, y, "")
    for j, u in cost.items():
        mip.obj[j] = u
    return CutModel(mip, y)


def _w_column(mip: MixedIntegerProgram, net: LayeredNetwork, y: list[int], cols: dict[int, int],
              e: int, side: str) -> int:
    """Binary permission indicator with its exact-degree Big-M row, created on first use."""
    if e in cols:
        return cols[e]
    i, j, _ = net.restructurable_arcs[e]
    w = mip.add_binary(f"w_{side}[{e}]")
    neighbors = net.parents(j) if side == "in" else net.children(i)
    # |neighbors| * w >= sum of y over the neighbors
    row = {w: float(len(neighbors))}
    for h in neighbors:
        row[y[h]] = row.get(y[h], 0.0) - 1.0
    mip.add_row(row, ">=", 0.0, f"bigm_{side}[{e}]")
    cols[e] = w
    return w


def _restructure_rows(mip: MixedIntegerProgram, snet: SplitNetwork, pi: dict[int, int],
                      cost: dict[int, float], plan: RestructurePlan, tag: str,
                      switch) -> None:
    """Rows ``pi_j - pi_i + theta >= s - 1`` for each activated (arc, side) of ``plan``.

    ``switch(e, side)`` returns the binary column ``s`` that turns the arc on.
    """
    for side, arcs in (("in", plan.z_in), ("out", plan.z_out)):
        for e in sorted(arcs):
            a = snet.restructurable[e]
            theta = mip.add_var(f"theta{tag}[r{e}{side}]", 0.0, 1.0)
            cost[theta] = a.capacity
            s = switch(e, side)
            _cut_row(mip, pi, snet, a.tail, a.head, theta, {s: -1.0}, -1.0,
                     f"rcut{tag}[{e},{side}]")


def _master(net: LayeredNetwork, rules: RestructureRules, pool: PlanPool, budget: float,
            leadership: Leadership | None, snet: SplitNetwork | None, baseline: bool) -> CutModel:
    if len(pool) == 0:
        raise ValueError("plan pool must contain at least the null plan")
    snet = snet or split_nodes(net)
    mip = MixedIntegerProgram("min", "baseline" if baseline else "master")
    eta = mip.add_var("eta", 0.0, INF, 1.0)
    y = _add_interdiction(mip, net, budget, leadership)
    model = CutModel(mip, y, eta)

    def w_col(e: int, side: str) -> int:
        cols = model.w_in if side == "in" else model.w_out
        return _w_column(mip, net, y, cols, e, side)

    for k, plan in enumerate(pool):
        tag = f"[{k}]"
        pi, cost = _base_block(mip, snet, y, tag)
        if baseline:
            f = mip.add_binary(f"f[{k}]")
            model.f.append(f)
            # f >= sum of the plan's permissions - |plan| + 1
            row = {f: 1.0}
            size = 0
            for side, arcs in (("in", plan.z_in), ("out", plan.z_out)):
                for e in sorted(arcs):
                    w = w_col(e, side)
                    row[w] = row.get(w, 0.0) - 1.0
                    size += 1
            mip.add_row(row, ">=", 1.0 - size, f"count[{k}]")
            _restructure_rows(mip, snet, pi, cost, plan, tag, lambda e, side, f=f: f)
        else:
            _restructure_rows(mip, snet, pi, cost, plan, tag, w_col)
        row = {eta: 1.0}
        for j, u in cost.items():
            row[j] = -u
        mip.add_row(row, ">=", 0.0, f"eta[{k}]")
    return model


def build_master(net: LayeredNetwork, rules: RestructureRules, pool: PlanPool, budget: float,
                 leadership: Leadership | None = None,
                 snet: SplitNetwork | None = None) -> CutModel:
    """Partial-information master: each pool plan enters through its projection.

    A plan's activated arc is open in block ``k`` exactly when the matching
    permission ``w_in`` / ``w_out`` is 1, i.e. ``z_hat = max(0, z + w - 1)``
    on each side.
    """
    return _master(net, rules, pool, budget, leadership, snet, baseline=False)


def build_baseline_master(net: LayeredNetwork, rules: RestructureRules, pool: PlanPool,
                          budget: float, leadership: Leadership | None = None,
                          snet: SplitNetwork | None = None) -> CutModel:
    """Comparison master: plan ``k`` counts only when every one of its arcs is permitted (``f^k``)."""
    return _master(net, rules, pool, budget, leadership, snet, baseline=True)


def build_subproblem(net: LayeredNetwork, rules: RestructureRules, y_hat: InterdictionPlan,
                     snet: SplitNetwork | None = None) -> SubproblemModel:
    """Defender's best response: ``max`` flow over ``z`` in ``Z(y_hat)``."""
    snet = snet or split_nodes(net)
    mip = MixedIntegerProgram("max", "subproblem")
    cut = y_hat.nodes
    node_of = {k: nid for nid, k in snet.node_arc.items()}
    x = []
    for a_idx, a in enumerate(snet.arcs):
        ub = 0.0 if node_of.get(a_idx) in cut else a.capacity
        x.append(mip.add_var(f"x[{a_idx}]", 0.0, ub, 1.0 if a.tail == snet.source else 0.0))
    m = len(snet.arcs)
    for e, a in enumerate(snet.restructurable):
        x.append(mip.add_var(f"x[r{e}]", 0.0, a.capacity, 1.0 if a.tail == snet.source else 0.0))
    z_in = [mip.add_binary(f"z_in[{e}]") for e in range(len(snet.restructurable))]
    z_out = [mip.add_binary(f"z_out[{e}]") for e in range(len(snet.restructurable))]

    balance: dict[int, dict[int, float]] = {
        v: {} for v in range(snet.num_nodes) if v not in (snet.source, snet.sink)
    }
    for col, a in zip(x, snet.all_arcs):
        if a.head in balance:
            balance[a.head][col] = balance[a.head].get(col, 0.0) + 1.0
        if a.tail in balance:
            balance[a.tail][col] = balance[a.tail].get(col, 0.0) - 1.0
    for v, row in balance.items():
        mip.add_row(row, "=", 0.0, f"balance[{v}]")
    for e, a in enumerate(snet.restructurable):
        mip.add_row({x[m + e]: 1.0, z_in[e]: -a.capacity, z_out[e]: -a.capacity}, "<=", 0.0,
                    f"open[{e}]")

    out_arcs: dict[int, list[int]] = {}
    in_arcs: dict[int, list[int]] = {}
    for e, (i, j, _) in enumerate(net.restructurable_arcs):
        out_arcs.setdefault(i, []).append(e)
        in_arcs.setdefault(j, []).append(e)
    for i, arcs in sorted(out_arcs.items()):
        row = {z_out[e]: 1.0 for e in arcs}
        kids = sum(1 for h in net.children(i) if h in cut)
        mip.add_row(row, "<=", float(rules.l[i]), f"out_cap[{i}]")
        mip.add_row(row, "<=", float(rules.k[i] * kids), f"out_local[{i}]")
    for j, arcs in sorted(in_arcs.items()):
        row = {z_in[e]: 1.0 for e in arcs}
        pars = sum(1 for h in net.parents(j) if h in cut)
        mip.add_row(row, "<=", float(rules.s[j]), f"in_cap[{j}]")
        mip.add_row(row, "<=", float(rules.k[j] * pars), f"in_local[{j}]")
    for e in range(len(snet.restructurable)):
        mip.add_row({z_in[e]: 1.0, z_out[e]: 1.0}, "<=", 1.0, f"no_double[{e}]")
        if e in rules.in_only:
            mip.ub[z_out[e]] = 0.0
    budget_row: dict[int, float] = {}
    for e, a in enumerate(rules.arc_cost):
        budget_row[z_in[e]] = a
        budget_row[z_out[e]] = a
    if budget_row:
        mip.add_row(budget_row, "<=", rules.budget, "budget")
    return SubproblemModel(mip, x, z_in, z_out)


@dataclass(frozen=True)
class DualEquivalenceReport:
    capacity_weighted: float  # unshifted rows, interdiction in the objective weights
    shifted: float            # shifted rows, interdiction on the right-hand side
    max_flow: float


def check_dual_equivalence(net: LayeredNetwork, y: InterdictionPlan, z: RestructurePlan,
                           snet: SplitNetwork | None = None, tol: float = 1e-6,
                           ) -> DualEquivalenceReport:
    """Solve both dual LPs for fixed ``(y, z)`` and compare them with the max flow.

    Both LPs keep every row and use wide potentials ``pi`` in ``[-n, n]`` so
    the comparison does not lean on the ``{0, 1}`` shape argument.
    """
    snet = snet or split_nodes(net)
    n = snet.num_nodes
    active = z.active()
    node_of = {k: nid for nid, k in snet.node_arc.items()}
    values = []
    for shifted in (False, True):
        lp = LinearProgram("min", "shifted" if shifted else "weighted")
        pi = {v: lp.add_var(f"pi[{v}]", -n, n) for v in range(n) if v not in (snet.source, snet.sink)}
        for a_idx, a in enumerate(snet.all_arcs):
            is_r = a_idx >= len(snet.arcs)
            e = a_idx - len(snet.arcs)
            off = node_of.get(a_idx) in y.nodes if not is_r else e not in active
            if shifted:
                weight, rhs = a.capacity, -1.0 if off else 0.0
            else:
                weight, rhs = (0.0 if off else a.capacity), 0.0
            theta = lp.add_var(f"theta[{a_idx}]", 0.0, INF, weight)
            _cut_row(lp, pi, snet, a.tail, a.head, theta, {}, rhs, f"cut[{a_idx}]")
        sol = solve_lp(lp)
        if not sol.ok:
            raise AssertionError(f"{lp.name} dual LP ended with status {sol.status.value}")
        values.append(sol.objective)
    flow = max_flow(snet, y, z).value
    report = DualEquivalenceReport(values[0], values[1], flow)
    scale = max(1.0, abs(flow))
    if abs(values[0] - values[1]) > tol * scale or abs(values[1] - flow) > tol * scale:
        raise AssertionError(f"dual formulations disagree: {report}")
    return report
