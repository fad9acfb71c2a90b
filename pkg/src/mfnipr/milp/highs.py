"""Optional backend handing a MixedIntegerProgram to the HiGHS solver."""

from __future__ import annotations

import math
import time

import highspy
import numpy as np

from .model import LinearProgram, Limits, MipSolution, MixedIntegerProgram, Status

_INF = highspy.kHighsInf


def _to_highs(lp: LinearProgram, integer: bool) -> highspy.HighsLp:
    model = highspy.HighsLp()
    n = lp.num_vars
    model.num_col_ = n
    model.num_row_ = lp.num_rows
    sign = -1.0 if lp.sense == "max" else 1.0
    model.col_cost_ = sign * np.asarray(lp.obj, dtype=float)
    model.col_lower_ = np.where(np.isinf(lp.lb), -_INF, lp.lb)
    model.col_upper_ = np.where(np.isinf(lp.ub), _INF, lp.ub)
    model.row_lower_ = np.array([r.rhs if r.rel in (">=", "=") else -_INF for r in lp.rows])
    model.row_upper_ = np.array([r.rhs if r.rel in ("<=", "=") else _INF for r in lp.rows])
    cols: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i, r in enumerate(lp.rows):
        for j, a in r.coeffs.items():
            cols[j].append((i, a))
    start, index, value = [0], [], []
    for col in cols:
        for i, a in col:
            index.append(i)
            value.append(a)
        start.append(len(index))
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = np.array(start, dtype=np.int32)
    model.a_matrix_.index_ = np.array(index, dtype=np.int32)
    model.a_matrix_.value_ = np.array(value, dtype=float)
    if integer:
        kinds = (highspy.HighsVarType.kInteger, highspy.HighsVarType.kContinuous)
        model.integrality_ = [kinds[0] if f else kinds[1] for f in lp.integer]
    return model


def solve_mip_highs(mip: MixedIntegerProgram, limits: Limits = Limits(),
                    start: np.ndarray | None = None) -> MipSolution:
    """Solve with HiGHS; ``start`` is an optional feasible point used as the first incumbent."""
    t0 = time.perf_counter()
    mip.validate()
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", max(limits.abs_gap, 0.0))
    if math.isfinite(limits.time):
        h.setOptionValue("time_limit", max(limits.time, 1e-3))
    if limits.nodes < 10**9:
        h.setOptionValue("mip_max_nodes", int(limits.nodes))
    h.passModel(_to_highs(mip, integer=True))
    if start is not None:
        sol = highspy.HighsSolution()
        sol.col_value = list(map(float, start))
        sol.value_valid = True
        h.setSolution(sol)
    h.run()
    elapsed = time.perf_counter() - t0
    status = h.getModelStatus()
    info = h.getInfo()
    sign = -1.0 if mip.sense == "max" else 1.0
    ms = highspy.HighsModelStatus
    if status == ms.kInfeasible:
        return MipSolution(Status.INFEASIBLE, seconds=elapsed)
    if status in (ms.kUnbounded, ms.kUnboundedOrInfeasible):
        return MipSolution(Status.UNBOUNDED, seconds=elapsed)
    bound = sign * info.mip_dual_bound + mip.obj_constant
    nodes = int(info.mip_node_count)
    if info.primal_solution_status != 2:  # no feasible point found
        return MipSolution(Status.LIMIT, bound=bound, nodes=nodes, seconds=elapsed)
    x = np.asarray(h.getSolution().col_value, dtype=float)
    ints = mip.binaries()
    x[ints] = np.round(x[ints])
    obj = mip.objective_value(x)
    if not math.isfinite(bound):
        bound = obj
    gap = abs(obj - bound)
    optimal = status == ms.kOptimal or gap <= limits.abs_gap
    return MipSolution(Status.OPTIMAL if optimal else Status.LIMIT, objective=obj, x=x,
                       bound=bound, gap=gap, nodes=nodes, seconds=elapsed)


def solve_lp_highs(lp: LinearProgram) -> MipSolution:
    """Continuous relaxation through HiGHS (used to cross-check the built-in simplex)."""
    t0 = time.perf_counter()
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.passModel(_to_highs(lp, integer=False))
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    elapsed = time.perf_counter() - t0
    if status == ms.kInfeasible:
        return MipSolution(Status.INFEASIBLE, seconds=elapsed)
    if status in (ms.kUnbounded, ms.kUnboundedOrInfeasible):
        return MipSolution(Status.UNBOUNDED, seconds=elapsed)
    x = np.asarray(h.getSolution().col_value, dtype=float)
    obj = lp.objective_value(x)
    return MipSolution(Status.OPTIMAL, objective=obj, x=x, bound=obj, gap=0.0, seconds=elapsed)
