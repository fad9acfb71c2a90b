"""Best-bound branch and bound over binary columns, with depth-first dives."""

from __future__ import annotations

import heapq
import itertools
import math
import time

import numpy as np

from .model import INF, Limits, MipSolution, MixedIntegerProgram, NumericalError, Status
from .simplex import solve_lp

INT_TOL = 1e-6


def _most_fractional(x: np.ndarray, binaries: list[int]) -> int | None:
    best, best_dist = None, INT_TOL
    for j in binaries:
        frac = x[j] - math.floor(x[j])
        dist = min(frac, 1.0 - frac)
        if dist > best_dist + 1e-12:
            best, best_dist = j, dist
    return best


def solve_mip(mip: MixedIntegerProgram, limits: Limits = Limits()) -> MipSolution:
    """Branch and bound with the built-in simplex at every node.

    Nodes are selected best-bound first; after each branching the child on
    the rounding side of the fractional value is explored immediately (a
    dive) and its sibling is queued.  Deterministic for identical input.
    """
    start = time.perf_counter()
    mip.validate()
    flip = -1.0 if mip.sense == "max" else 1.0  # internal objective is minimized
    binaries = mip.binaries()
    root_lb, root_ub = list(mip.lb), list(mip.ub)

    incumbent_x: np.ndarray | None = None
    incumbent = INF
    nodes = 0
    lp_iters = 0
    log: list[str] = []
    counter = itertools.count()
    heap: list[tuple[float, int, int, dict[int, float]]] = []
    pending: tuple[float, int, dict[int, float]] | None = (-INF, 0, {})
    status = Status.OPTIMAL

    def bounds_for(fixed: dict[int, float]):
        lo, hi = root_lb[:], root_ub[:]
        for j, v in fixed.items():
            lo[j] = hi[j] = v
        return lo, hi

    while pending is not None or heap:
        if pending is None:
            parent_bound, _, depth, fixed = heapq.heappop(heap)
            if parent_bound >= incumbent - limits.abs_gap:
                continue
        else:
            parent_bound, depth, fixed = pending
            pending = None
            if parent_bound >= incumbent - limits.abs_gap:
                continue
        if nodes >= limits.nodes or time.perf_counter() - start > limits.time:
            heapq.heappush(heap, (parent_bound, next(counter), depth, fixed))
            status = Status.LIMIT
            break
        nodes += 1
        lo, hi = bounds_for(fixed)
        try:
            rel = solve_lp(mip, lo, hi)
        except NumericalError as exc:
            raise NumericalError(f"node {nodes} (depth {depth}): {exc}") from exc
        lp_iters += rel.iterations
        if rel.status == Status.INFEASIBLE:
            continue
        if rel.status == Status.UNBOUNDED:
            # binaries are bounded, so an unbounded relaxation means an unbounded MIP
            return MipSolution(Status.UNBOUNDED, nodes=nodes, seconds=time.perf_counter() - start)
        value = flip * rel.objective
        if value >= incumbent - limits.abs_gap:
            continue
        j = _most_fractional(rel.x, binaries)
        if j is None:
            x = rel.x.copy()
            x[binaries] = np.round(x[binaries])
            incumbent, incumbent_x = value, x
            log.append(f"node {nodes}: incumbent {flip * value:.9g}")
            continue
        up_first = rel.x[j] >= 0.5
        near, far = (1.0, 0.0) if up_first else (0.0, 1.0)
        heapq.heappush(heap, (value, next(counter), depth + 1, {**fixed, j: far}))
        pending = (value, depth + 1, {**fixed, j: near})

    open_bounds = [b for b, *_ in heap]
    if status == Status.OPTIMAL or not open_bounds:
        bound = incumbent
        status = Status.OPTIMAL if incumbent_x is not None else Status.INFEASIBLE
    else:
        bound = min(min(open_bounds), incumbent)
    elapsed = time.perf_counter() - start
    if incumbent_x is None:
        return MipSolution(status, bound=flip * bound if math.isfinite(bound) else math.nan,
                           nodes=nodes, seconds=elapsed, iterations=lp_iters, log=log)
    gap = incumbent - bound
    if status == Status.LIMIT and gap <= limits.abs_gap:
        status = Status.OPTIMAL
    return MipSolution(status, objective=flip * incumbent, x=incumbent_x, bound=flip * bound,
                       gap=gap, nodes=nodes, seconds=elapsed, iterations=lp_iters, log=log)
