"""Linear and mixed-binary programming: a built-in simplex / branch-and-bound
engine, plus an optional HiGHS backend for the larger experiment sweeps."""

from __future__ import annotations

from .bnb import solve_mip as _solve_builtin
from .model import (
    INF,
    Limits,
    LinearProgram,
    MipSolution,
    MixedIntegerProgram,
    NumericalError,
    Row,
    Status,
)
from .simplex import solve_lp

BACKENDS = ("builtin", "highs")

__all__ = [
    "BACKENDS",
    "INF",
    "Limits",
    "LinearProgram",
    "MipSolution",
    "MixedIntegerProgram",
    "NumericalError",
    "Row",
    "Status",
    "solve_lp",
    "solve_mip",
]


def solve_mip(mip: MixedIntegerProgram, limits: Limits = Limits(),
              backend: str = "builtin", start=None) -> MipSolution:
    """Solve ``mip`` with the chosen backend (``"builtin"`` or ``"highs"``).

    ``start`` is an optional feasible point; only the HiGHS backend uses it.
    """
    if backend == "builtin":
        return _solve_builtin(mip, limits)
    if backend == "highs":
        from .highs import solve_mip_highs

        return solve_mip_highs(mip, limits, start)
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
