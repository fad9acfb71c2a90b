"""Column-and-constraint generation for interdiction with restructuring.

Each iteration solves a master over the current plan pool (lower bound
``L``), then the defender's best response to the master's interdiction
(upper bound ``U`` when it improves), and adds that response to the pool.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .formulate import (
    PlanPool,
    build_baseline_master,
    build_master,
    build_mfnip,
    build_subproblem,
)
from .milp import Limits, Status, solve_mip
from .network import LayeredNetwork, SplitNetwork, ValidationError, max_flow, split_nodes
from .restructure import (
    InterdictionPlan,
    Leadership,
    RestructurePlan,
    RestructureRules,
    enumerate_Y,
    enumerate_Z,
    feasible,
)

__all__ = [
    "MODES",
    "CcgConfig",
    "IterationRecord",
    "CcgResult",
    "solve",
    "solve_enumerate",
    "solve_mfnip",
    "best_response",
    "evaluate_after_plan",
]

MODES = ("partial", "baseline", "enumerate")
BOUND_TOL = 1e-7      # numerical slack on U - L <= epsilon
IMPROVE_TOL = 1e-9    # strict-improvement test for the incumbent


@dataclass(frozen=True)
class CcgConfig:
    mode: str = "partial"
    epsilon: float = 1e-4
    time_limit: float = 600.0
    max_iterations: int = 10_000
    node_limit: int = 10**9
    leadership: bool = False
    backend: str = "highs"
    enumeration_cap: int = 1_000_000
    maximal_response: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    master_objective: float     # eta^n
    response_objective: float   # eta-hat^n (nan if the loop stopped first)
    lower: float
    upper: float
    master_seconds: float
    subproblem_seconds: float
    pool_size: int
    y: tuple[int, ...]


@dataclass
class CcgResult:
    lower: float
    upper: float
    y: InterdictionPlan | None
    z: RestructurePlan | None
    status: str  # "Optimal" | "TimeLimit" | "Infeasible"
    mode: str = "partial"
    iterations: list[IterationRecord] = field(default_factory=list)
    plans_visited: int = 0
    seconds: float = 0.0

    @property
    def gap(self) -> float:
        """``(U - L) / U``, zero when both bounds vanish."""
        if not math.isfinite(self.upper) or not math.isfinite(self.lower):
            return math.inf
        if self.upper == 0:
            return 0.0 if self.lower >= -BOUND_TOL else math.inf
        return (self.upper - self.lower) / abs(self.upper)


def _leadership(config: CcgConfig, leadership: Leadership | None) -> Leadership | None:
    return leadership if config.leadership else None


def best_response(net: LayeredNetwork, rules: RestructureRules, y: InterdictionPlan,
                  snet: SplitNetwork | None = None, backend: str = "highs",
                  time_limit: float = math.inf,
                  maximal: bool = False) -> tuple[float, RestructurePlan, bool]:
    """Optimal restructuring against ``y``: ``(flow, plan, proven_optimal)``.

    The flow is recomputed combinatorially for the returned plan, so it is
    exact even when the MILP reports a slightly different objective.  With
    ``maximal`` a second solve keeps the optimal flow and activates as many
    arcs as the rules allow; flow is monotone in the plan, so the larger
    plan makes a master cut that is at least as strong.
    """
    snet = snet or split_nodes(net)
    start = time.perf_counter()
    model = build_subproblem(net, rules, y, snet)
    sol = solve_mip(model.mip, Limits(time=time_limit), backend)
    if sol.x is None:
        return max_flow(snet, y).value, RestructurePlan(), False
    plan = model.plan(sol.x)
    value = max_flow(snet, y, plan).value
    if not (maximal and sol.ok):
        return value, plan, sol.ok
    mip = model.mip
    flow_cols = {j: a for j, a in enumerate(mip.obj) if a}
    mip.add_row(flow_cols, ">=", value - 1e-7, "keep_flow")
    mip.obj = [0.0] * mip.num_vars
    for j in model.z_in + model.z_out:
        mip.obj[j] = 1.0
    remaining = time_limit - (time.perf_counter() - start)
    wide = solve_mip(mip, Limits(time=remaining), backend)
    if wide.x is not None:
        bigger = model.plan(wide.x)
        if feasible(net, rules, y, bigger) and max_flow(snet, y, bigger).value >= value - 1e-9:
            return max_flow(snet, y, bigger).value, bigger, True
    return value, plan, True


def evaluate_after_plan(net: LayeredNetwork, rules: RestructureRules, y: InterdictionPlan,
                        snet: SplitNetwork | None = None, backend: str = "highs") -> float:
    """Flow after the defender restructures optimally against a fixed ``y``."""
    return best_response(net, rules, y, snet, backend)[0]


def solve_mfnip(net: LayeredNetwork, budget: float, leadership: Leadership | None = None,
                snet: SplitNetwork | None = None, backend: str = "highs",
                time_limit: float = math.inf) -> tuple[float, InterdictionPlan, bool]:
    """Interdiction that ignores restructuring: ``(flow, y, proven_optimal)``."""
    snet = snet or split_nodes(net)
    model = build_mfnip(net, budget, leadership, snet)
    sol = solve_mip(model.mip, Limits(time=time_limit), backend)
    if sol.x is None:
        raise ValidationError("no interdiction plan satisfies the budget and leadership rows")
    y = model.interdiction(sol.x)
    return max_flow(snet, y).value, y, sol.ok


def solve(net: LayeredNetwork, rules: RestructureRules, budget: float,
          config: CcgConfig = CcgConfig(), leadership: Leadership | None = None,
          snet: SplitNetwork | None = None) -> CcgResult:
    """Bilevel optimum ``min_y max_{z in Z(y)} maxflow(y, z)`` within ``config.epsilon``."""
    if budget < 0:
        raise ValueError("attacker budget must be nonnegative")
    if config.mode == "enumerate":
        return solve_enumerate(net, rules, budget, leadership if config.leadership else None,
                               cap=config.enumeration_cap, snet=snet)
    if not rules.projection_exact():
        raise ValidationError(
            "restructuring rules need l <= k and s <= k at every node for the "
            "permission-based masters to give valid lower bounds"
        )
    snet = snet or split_nodes(net)
    lead = _leadership(config, leadership)
    start = time.perf_counter()
    build = build_master if config.mode == "partial" else build_baseline_master

    pool = PlanPool.seeded()
    lower, upper = -math.inf, math.inf
    best_y: InterdictionPlan | None = None
    best_z: RestructurePlan | None = None
    visited: set[frozenset[int]] = set()
    records: list[IterationRecord] = []
    status = "TimeLimit"

    for it in range(1, config.max_iterations + 1):
        t_iter = time.perf_counter()
        remaining = config.time_limit - (t_iter - start)
        model = build(net, rules, pool, budget, lead, snet)
        sol = solve_mip(model.mip, Limits(time=remaining, nodes=config.node_limit, abs_gap=1e-7),
                        config.backend)
        master_seconds = time.perf_counter() - t_iter
        if sol.status == Status.INFEASIBLE:
            status = "Infeasible"
            break
        if not sol.ok:
            if math.isfinite(sol.bound):
                lower = max(lower, sol.bound)
            break
        y = model.interdiction(sol.x)
        eta = sol.objective
        lower = max(lower, eta)
        if y.nodes in visited and upper - lower > config.epsilon + BOUND_TOL:
            # a revisited y already has its best response in the pool, so L >= U
            # holds exactly; anything beyond float noise means a broken master
            if upper - lower > 1e-6 * max(1.0, abs(upper)):
                raise AssertionError(f"revisited interdiction with L={lower} < U={upper}")
            lower = upper
        if upper - lower <= config.epsilon + BOUND_TOL:
            records.append(IterationRecord(it, eta, math.nan, lower, upper, master_seconds, 0.0,
                                           len(pool), tuple(sorted(y.nodes))))
            status = "Optimal"
            break
        visited.add(y.nodes)

        t_sub = time.perf_counter()
        remaining = config.time_limit - (t_sub - start)
        value, plan, proven = best_response(net, rules, y, snet, config.backend, remaining,
                                            config.maximal_response)
        sub_seconds = time.perf_counter() - t_sub
        if proven and value < upper - IMPROVE_TOL:
            upper, best_y, best_z = value, y, plan
        if proven:
            pool.add(plan, it, y)
        records.append(IterationRecord(it, eta, value, lower, upper, master_seconds, sub_seconds,
                                       len(pool), tuple(sorted(y.nodes))))
        if not proven:
            break
        if upper - lower <= config.epsilon + BOUND_TOL:
            status = "Optimal"
            break
        elapsed = time.perf_counter() - start
        if elapsed + (time.perf_counter() - t_iter) >= config.time_limit:
            break

    if status == "Optimal":
        lower = min(lower, upper)
    return CcgResult(lower, upper, best_y, best_z, status, config.mode, records,
                     plans_visited=len(pool), seconds=time.perf_counter() - start)


def solve_enumerate(net: LayeredNetwork, rules: RestructureRules, budget: float,
                    leadership: Leadership | None = None, cap: int = 1_000_000,
                    snet: SplitNetwork | None = None) -> CcgResult:
    """Exact bilevel optimum by enumerating ``Y`` and every ``Z(y)``.

    An interdiction whose unrestructured flow already reaches the incumbent
    is skipped, since restructuring can only add flow.
    """
    snet = snet or split_nodes(net)
    start = time.perf_counter()
    best = math.inf
    best_y: InterdictionPlan | None = None
    best_z: RestructurePlan | None = None
    visited = 0
    for y in enumerate_Y(net, budget, leadership, cap):
        visited += 1
        if max_flow(snet, y).value >= best - IMPROVE_TOL:
            continue
        value, plan = -math.inf, None
        for z in enumerate_Z(net, rules, y, cap=cap):
            v = max_flow(snet, y, z).value
            if v > value + IMPROVE_TOL:
                value, plan = v, z
            if value >= best - IMPROVE_TOL:
                break
        if value < best - IMPROVE_TOL:
            best, best_y, best_z = value, y, plan
    if best_y is None:
        return CcgResult(math.inf, math.inf, None, None, "Infeasible", "enumerate",
                         seconds=time.perf_counter() - start)
    return CcgResult(best, best, best_y, best_z, "Optimal", "enumerate",
                     plans_visited=visited, seconds=time.perf_counter() - start)
