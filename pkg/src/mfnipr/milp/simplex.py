"""Dense-tableau primal simplex with bounded variables (two phases).

Every column is shifted so it lives in ``[0, u]``; nonbasic columns sit at
either bound.  Dantzig pricing is used until a run of degenerate pivots,
then Bland's rule takes over until the objective moves again.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .model import INF, LinearProgram, MipSolution, NumericalError, Status

PIVOT_TOL = 1e-9
TINY_PIVOT = 1e-10
COST_TOL = 1e-9
FEAS_TOL = 1e-7
DEGENERATE_STREAK = 30


class _Tableau:
    def __init__(self, T, xB, basis, upper, at_upper, cost, blocked):
        self.T = T              # B^-1 A, shape (m, N)
        self.xB = xB            # values of basic columns
        self.basis = basis      # column index basic in each row
        self.upper = upper      # column upper bounds (lower bounds are 0)
        self.at_upper = at_upper
        self.cost = cost
        self.blocked = blocked  # columns never allowed to enter
        self.iterations = 0

    def reduced_costs(self) -> np.ndarray:
        return self.cost - self.cost[self.basis] @ self.T

    def run(self, max_iter: int) -> str:
        """Optimize ``cost`` from the current basis; returns 'optimal' or 'unbounded'."""
        T, up = self.T, self.upper
        m, N = T.shape
        d = self.reduced_costs()
        is_basic = np.zeros(N, dtype=bool)
        is_basic[self.basis] = True
        streak = 0
        bland = False
        while True:
            if self.iterations >= max_iter:
                raise NumericalError(f"simplex did not converge in {max_iter} pivots")
            eligible = ~is_basic & ~self.blocked & (
                (~self.at_upper & (d < -COST_TOL)) | (self.at_upper & (d > COST_TOL))
            )
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return "optimal"
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(np.abs(d[candidates]))])
            direction = -1.0 if self.at_upper[j] else 1.0
            col = T[:, j]
            # basic values move by -direction * t * col
            move = -direction * col
            step = up[j]
            row = -1
            leave_to_upper = False
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = move < -PIVOT_TOL
                if dec.any():
                    ratios = np.where(dec, self.xB / -move, INF)
                    r = int(np.argmin(ratios))
                    if ratios[r] < step:
                        step, row, leave_to_upper = ratios[r], r, False
                inc = (move > PIVOT_TOL) & np.isfinite(up[self.basis])
                if inc.any():
                    ratios = np.where(inc, (up[self.basis] - self.xB) / move, INF)
                    r = int(np.argmin(ratios))
                    if ratios[r] < step:
                        step, row, leave_to_upper = ratios[r], r, True
            if step == INF:
                return "unbounded"
            step = max(step, 0.0)
            self.iterations += 1
            if step <= 1e-12:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    bland = True
            else:
                streak = 0
                bland = False
            self.xB = self.xB + move * step
            if row < 0:
                # bound flip of the entering column
                self.at_upper[j] = not self.at_upper[j]
                continue
            piv = T[row, j]
            if abs(piv) < TINY_PIVOT:
                raise NumericalError(f"pivot magnitude {abs(piv):.3e} below tolerance")
            leaving = self.basis[row]
            entering_value = (up[j] if self.at_upper[j] else 0.0) + direction * step
            T[row] /= piv
            factors = T[:, j].copy()
            factors[row] = 0.0
            T -= np.outer(factors, T[row])
            d = d - d[j] * T[row]
            self.basis[row] = j
            self.xB[row] = entering_value
            is_basic[leaving] = False
            is_basic[j] = True
            self.at_upper[leaving] = leave_to_upper
            self.at_upper[j] = False

    def pivot(self, row: int, j: int) -> None:
        T = self.T
        piv = T[row, j]
        leaving = self.basis[row]
        T[row] /= piv
        factors = T[:, j].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.basis[row] = j
        self.at_upper[leaving] = False
        self.at_upper[j] = False


def _standardize(lp: LinearProgram, lb, ub):
    """Rewrite as ``min c'x'`` s.t. ``A'x' = b'``, ``0 <= x' <= u'`` (slacks included)."""
    A, rels, b = lp.dense()
    m, n = A.shape
    sign = -1.0 if lp.sense == "max" else 1.0
    c = sign * np.asarray(lp.obj, dtype=float)
    cols, costs, uppers, recover = [], [], [], []
    shift = np.zeros(n)
    const = 0.0
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if lo > -INF:
            shift[j] = lo
            cols.append(A[:, j]); costs.append(c[j]); uppers.append(hi - lo)
            recover.append((j, 1.0, len(cols) - 1))
            const += c[j] * lo
        elif hi < INF:
            shift[j] = hi
            cols.append(-A[:, j]); costs.append(-c[j]); uppers.append(INF)
            recover.append((j, -1.0, len(cols) - 1))
            const += c[j] * hi
        else:
            cols.append(A[:, j]); costs.append(c[j]); uppers.append(INF)
            recover.append((j, 1.0, len(cols) - 1))
            cols.append(-A[:, j]); costs.append(-c[j]); uppers.append(INF)
            recover.append((j, -1.0, len(cols) - 1))
    rhs = b - A @ shift if n else b.copy()
    n_struct = len(cols)
    slack_of_row = [-1] * m
    for i, rel in enumerate(rels):
        if rel == "=":
            continue
        e = np.zeros(m)
        e[i] = 1.0 if rel == "<=" else -1.0
        cols.append(e); costs.append(0.0); uppers.append(INF)
        slack_of_row[i] = len(cols) - 1
    Astd = np.column_stack(cols) if cols else np.zeros((m, 0))
    flip = rhs < 0
    Astd[flip] *= -1.0
    rhs = np.where(flip, -rhs, rhs)
    return Astd, rhs, np.array(costs), np.array(uppers), n_struct, slack_of_row, recover, const, sign


def solve_lp(lp: LinearProgram, lb=None, ub=None, max_iter: int | None = None) -> MipSolution:
    """Solve the continuous relaxation of ``lp`` (integrality flags ignored).

    ``lb`` / ``ub`` override the model's variable bounds, which is how the
    branch-and-bound search tightens binaries without copying the model.
    The returned ``bound`` is a Lagrangian dual bound recomputed from the
    final basis; it matches ``objective`` at optimality.
    """
    start = time.perf_counter()
    lb = list(lp.lb) if lb is None else list(lb)
    ub = list(lp.ub) if ub is None else list(ub)
    if any(lo > hi + 1e-12 for lo, hi in zip(lb, ub)):
        return MipSolution(Status.INFEASIBLE, seconds=time.perf_counter() - start)

    A, b, c, u, n_struct, slack_of_row, recover, const, sign = _standardize(lp, lb, ub)
    m, N0 = A.shape

    # initial basis: a +1 slack where available, an artificial otherwise
    basis = []
    art_cols = []
    for i in range(m):
        s = slack_of_row[i]
        if s >= 0 and A[i, s] > 0:
            basis.append(s)
        else:
            basis.append(N0 + len(art_cols))
            art_cols.append(i)
    n_art = len(art_cols)
    if n_art:
        art = np.zeros((m, n_art))
        art[art_cols, np.arange(n_art)] = 1.0
        A_full = np.hstack([A, art])
    else:
        A_full = A
    N = N0 + n_art
    upper = np.concatenate([u, np.full(n_art, INF)])
    basis_arr = np.array(basis, dtype=int)
    tab = _Tableau(
        T=A_full.copy(), xB=b.copy(), basis=basis_arr, upper=upper,
        at_upper=np.zeros(N, dtype=bool), cost=np.zeros(N), blocked=upper <= 0.0,
    )
    limit = max_iter or 50 * (m + N) + 1000

    if n_art:
        tab.cost = np.concatenate([np.zeros(N0), np.ones(n_art)])
        tab.run(limit)
        infeas = float(np.sum(tab.xB[tab.basis >= N0]))
        scale = max(1.0, float(np.max(np.abs(b))) if m else 1.0)
        if infeas > FEAS_TOL * scale:
            return MipSolution(Status.INFEASIBLE, iterations=tab.iterations,
                               seconds=time.perf_counter() - start)
        # push zero-valued artificials out of the basis where possible
        for r in range(m):
            if tab.basis[r] >= N0:
                row = tab.T[r, :N0]
                ok = np.flatnonzero((np.abs(row) > 1e-7) & (tab.upper[:N0] > 0))
                if ok.size:
                    tab.pivot(r, int(ok[0]))
        tab.blocked = tab.blocked.copy()
        tab.blocked[N0:] = True
        tab.upper = tab.upper.copy()
        tab.upper[N0:] = 0.0
        tab.xB = _basic_values(A_full, b, tab)

    tab.cost = np.concatenate([c, np.zeros(n_art)])
    status = tab.run(limit)
    if status == "unbounded":
        return MipSolution(Status.UNBOUNDED, iterations=tab.iterations,
                           seconds=time.perf_counter() - start)
    tab.xB = _basic_values(A_full, b, tab)

    xs = np.where(tab.at_upper, tab.upper, 0.0)
    xs[tab.basis] = tab.xB
    xs[~np.isfinite(xs)] = 0.0
    x = np.zeros(lp.num_vars)
    for j, direction, k in recover:
        x[j] += direction * xs[k]
    for j in range(lp.num_vars):
        if lb[j] > -INF:
            x[j] += lb[j]
        elif ub[j] < INF:
            x[j] = ub[j] + x[j]
    obj = lp.objective_value(x)

    # Lagrangian bound from the basis multipliers, evaluated on the original columns
    y = tab.cost[tab.basis] @ _basis_inverse(A_full, tab.basis)
    red = c - A.T @ y
    bound_std = float(b @ y) + sum(
        min(0.0, rc * ub_) if math.isfinite(ub_) else (0.0 if rc >= -1e-9 else -INF)
        for rc, ub_ in zip(red, u)
    )
    bound = sign * (bound_std + const) + lp.obj_constant
    return MipSolution(Status.OPTIMAL, objective=obj, x=x, bound=bound, gap=abs(obj - bound),
                       iterations=tab.iterations, seconds=time.perf_counter() - start)


def _basis_inverse(A_full: np.ndarray, basis: np.ndarray) -> np.ndarray:
    B = A_full[:, basis]
    return np.linalg.inv(B) if B.size else B


def _basic_values(A_full: np.ndarray, b: np.ndarray, tab: _Tableau) -> np.ndarray:
    """Recompute basic values from scratch to shed accumulated pivot error."""
    m = A_full.shape[0]
    if m == 0:
        return tab.xB
    nonbasic_at_upper = tab.at_upper.copy()
    nonbasic_at_upper[tab.basis] = False
    xN = np.where(nonbasic_at_upper, tab.upper, 0.0)
    xN[~np.isfinite(xN)] = 0.0
    resid = b - A_full @ xN
    try:
        xB = np.linalg.solve(A_full[:, tab.basis], resid)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular basis") from exc
    return xB
