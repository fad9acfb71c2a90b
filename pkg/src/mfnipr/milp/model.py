"""Containers for linear and mixed-binary programs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Mapping

import numpy as np

INF = math.inf


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    LIMIT = "LimitReached"


class NumericalError(ArithmeticError):
    pass


@dataclass
class Row:
    coeffs: dict[int, float]
    rel: str  # "<=", ">=", "="
    rhs: float
    name: str = ""


class LinearProgram:
    """Variables with bounds, sparse rows and a linear objective.

    Built incrementally through :meth:`add_var` and :meth:`add_row`; solvers
    read it through :meth:`dense`.
    """

    def __init__(self, sense: str = "min", name: str = ""):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.sense = sense
        self.name = name
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.obj: list[float] = []
        self.integer: list[bool] = []
        self.rows: list[Row] = []
        self.obj_constant = 0.0
        self._index: dict[str, int] = {}

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_var(self, name: str = "", lb: float = 0.0, ub: float = INF, obj: float = 0.0) -> int:
        j = len(self.names)
        name = name or f"x{j}"
        if name in self._index:
            raise ValueError(f"duplicate variable name {name!r}")
        self._index[name] = j
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.integer.append(False)
        return j

    def var(self, name: str) -> int:
        return self._index[name]

    def add_row(self, coeffs: Mapping[int, float] | Iterable[tuple[int, float]], rel: str,
                rhs: float, name: str = "") -> int:
        if rel not in ("<=", ">=", "="):
            raise ValueError(f"bad relation {rel!r}")
        merged: dict[int, float] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for j, a in items:
            merged[j] = merged.get(j, 0.0) + float(a)
        self.rows.append(Row({j: a for j, a in merged.items() if a != 0.0}, rel, float(rhs), name))
        return len(self.rows) - 1

    def validate(self) -> None:
        n = self.num_vars
        for j in range(n):
            if math.isnan(self.lb[j]) or math.isnan(self.ub[j]) or math.isnan(self.obj[j]):
                raise ValueError(f"NaN in variable {self.names[j]}")
            if self.lb[j] > self.ub[j]:
                raise ValueError(f"empty bounds on {self.names[j]}")
        for r in self.rows:
            if math.isnan(r.rhs) or any(math.isnan(a) for a in r.coeffs.values()):
                raise ValueError(f"NaN in row {r.name}")
            if any(not 0 <= j < n for j in r.coeffs):
                raise ValueError(f"row {r.name} references an unknown column")

    def dense(self):
        """``(A, rel, b)`` with ``A`` a dense float array."""
        A = np.zeros((self.num_rows, self.num_vars))
        for i, r in enumerate(self.rows):
            for j, a in r.coeffs.items():
                A[i, j] = a
        return A, [r.rel for r in self.rows], np.array([r.rhs for r in self.rows], dtype=float)

    def objective_value(self, x) -> float:
        return float(np.dot(self.obj, x)) + self.obj_constant

    def max_violation(self, x) -> float:
        """Largest bound or row violation of ``x``."""
        worst = 0.0
        for j, v in enumerate(x):
            worst = max(worst, self.lb[j] - v, v - self.ub[j])
        for r in self.rows:
            lhs = sum(a * x[j] for j, a in r.coeffs.items())
            if r.rel == "<=":
                worst = max(worst, lhs - r.rhs)
            elif r.rel == ">=":
                worst = max(worst, r.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - r.rhs))
        return worst

    def write_mps(self, stream: IO[str]) -> None:
        """Free-format MPS dump for cross-checking with external tools."""
        sense_rel = {"<=": "L", ">=": "G", "=": "E"}
        stream.write(f"NAME {self.name or 'model'}\n")
        if self.sense == "max":
            stream.write("OBJSENSE\n    MAX\n")
        stream.write("ROWS\n N obj\n")
        row_names = [r.name or f"r{i}" for i, r in enumerate(self.rows)]
        for name, r in zip(row_names, self.rows):
            stream.write(f" {sense_rel[r.rel]} {name}\n")
        cols: list[list[tuple[str, float]]] = [[] for _ in range(self.num_vars)]
        for name, r in zip(row_names, self.rows):
            for j, a in r.coeffs.items():
                cols[j].append((name, a))
        stream.write("COLUMNS\n")
        in_int = False
        for j, name in enumerate(self.names):
            if self.integer[j] != in_int:
                marker = "INTORG" if self.integer[j] else "INTEND"
                stream.write(f" MARKER 'MARKER' '{marker}'\n")
                in_int = self.integer[j]
            if self.obj[j]:
                stream.write(f" {name} obj {self.obj[j]!r}\n")
            for row, a in cols[j]:
                stream.write(f" {name} {row} {a!r}\n")
        if in_int:
            stream.write(" MARKER 'MARKER' 'INTEND'\n")
        stream.write("RHS\n")
        for name, r in zip(row_names, self.rows):
            if r.rhs:
                stream.write(f" rhs {name} {r.rhs!r}\n")
        stream.write("BOUNDS\n")
        for j, name in enumerate(self.names):
            lo, hi = self.lb[j], self.ub[j]
            if lo == hi:
                stream.write(f" FX bnd {name} {lo!r}\n")
                continue
            if lo == -INF:
                stream.write(f" MI bnd {name}\n")
            elif lo != 0.0:
                stream.write(f" LO bnd {name} {lo!r}\n")
            if hi != INF:
                stream.write(f" UP bnd {name} {hi!r}\n")
        stream.write("ENDATA\n")


class MixedIntegerProgram(LinearProgram):
    """A LinearProgram whose flagged columns must take 0/1 values."""

    def add_binary(self, name: str = "", obj: float = 0.0) -> int:
        j = self.add_var(name, 0.0, 1.0, obj)
        self.integer[j] = True
        return j

    def validate(self) -> None:
        super().validate()
        for j, is_int in enumerate(self.integer):
            if is_int and (self.lb[j] < 0 or self.ub[j] > 1):
                raise ValueError(f"integer variable {self.names[j]} must be binary")

    def binaries(self) -> list[int]:
        return [j for j, f in enumerate(self.integer) if f]


@dataclass
class MipSolution:
    status: Status
    objective: float = math.nan
    x: np.ndarray | None = None
    bound: float = math.nan
    gap: float = math.nan
    nodes: int = 0
    seconds: float = 0.0
    iterations: int = 0
    log: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == Status.OPTIMAL

    def value(self, j: int) -> float:
        assert self.x is not None
        return float(self.x[j])


@dataclass(frozen=True)
class Limits:
    time: float = INF
    nodes: int = 10**9
    abs_gap: float = 1e-6
