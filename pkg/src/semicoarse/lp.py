"""Dense two-phase primal simplex for small and medium linear programs.

Problems are stated as ``maximize c^T x`` subject to rows ``a_r x <= b_r`` or
``a_r x = b_r`` with each variable either nonnegative or free. The solver
works on a dense tableau, equilibrates rows by their largest coefficient,
and recovers one dual multiplier per original row. An exact mode pivots on
:class:`fractions.Fraction` entries for small instances.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import logging
import math
from typing import Any

import numpy as np
from numpy.typing import NDArray

from semicoarse.errors import InfeasibleError, PreconditionError, ShapeError, SolverStallError, UnboundedError
from semicoarse.game import FloatArray


logger = logging.getLogger(__name__)

EXACT_VARIABLE_LIMIT = 500


class Relation(str, Enum):
    LE = "<="
    EQ = "="


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """A maximization problem with ``<=`` and ``=`` rows.

    Attributes:
        objective: Coefficients c of the maximized objective
        matrix: Row coefficients, shape (rows, variables)
        relations: Relation of each row
        rhs: Right-hand sides
        lower: Per-variable lower bound, 0 or -inf
        variable_names: Stable variable names
        row_names: Stable row names
        name: Problem name used by the text export
    """

    objective: FloatArray
    matrix: FloatArray
    relations: tuple[Relation, ...]
    rhs: FloatArray
    lower: FloatArray
    variable_names: tuple[str, ...]
    row_names: tuple[str, ...]
    name: str = "lp"

    def __post_init__(self) -> None:
        objective = np.array(self.objective, dtype=np.float64)
        matrix = np.array(self.matrix, dtype=np.float64).reshape(len(self.relations), objective.shape[0])
        rhs = np.array(self.rhs, dtype=np.float64)
        lower = np.array(self.lower, dtype=np.float64)
        n, m = objective.shape[0], len(self.relations)
        if rhs.shape != (m,) or lower.shape != (n,):
            raise ShapeError("rhs and bounds must match the number of rows and variables")
        if len(self.variable_names) != n or len(self.row_names) != m:
            raise ShapeError("every variable and row needs a name")
        if not (np.all(np.isfinite(objective)) and np.all(np.isfinite(matrix)) and np.all(np.isfinite(rhs))):
            raise ShapeError("linear program coefficients must be finite")
        if np.any((lower != 0) & (lower != -np.inf)):
            raise ShapeError("variable lower bounds must be 0 or -inf")
        for attr, value in (("objective", objective), ("matrix", matrix), ("rhs", rhs), ("lower", lower)):
            value.setflags(write=False)
            object.__setattr__(self, attr, value)

    @property
    def num_variables(self) -> int:
        return int(self.objective.shape[0])

    @property
    def num_rows(self) -> int:
        return len(self.relations)


class LpBuilder:
    """Incremental construction of a :class:`LinearProgram`."""

    def __init__(self, name: str = "lp") -> None:
        self.name = name
        self._names: list[str] = []
        self._lower: list[float] = []
        self._objective: dict[int, float] = {}
        self._rows: list[tuple[NDArray[np.int64], FloatArray]] = []
        self._relations: list[Relation] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []

    @property
    def num_variables(self) -> int:
        return len(self._names)

    @property
    def num_rows(self) -> int:
        return len(self._rows)

    def add_variable(self, name: str, free: bool = False, objective: float = 0.0) -> int:
        self._names.append(name)
        self._lower.append(-math.inf if free else 0.0)
        if objective:
            self._objective[len(self._names) - 1] = objective
        return len(self._names) - 1

    def add_row(
        self,
        columns: Sequence[int] | NDArray[np.int64],
        values: Sequence[float] | FloatArray,
        relation: Relation,
        rhs: float,
        name: str,
    ) -> int:
        """Append a row ``sum values[k] x[columns[k]] (relation) rhs``; repeated columns accumulate."""
        cols = np.asarray(columns, dtype=np.int64)
        vals = np.asarray(values, dtype=np.float64)
        if cols.shape != vals.shape:
            raise ShapeError(f"row {name}: {cols.shape[0]} columns but {vals.shape[0]} values")
        self._rows.append((cols, vals))
        self._relations.append(relation)
        self._rhs.append(float(rhs))
        self._row_names.append(name)
        return len(self._rows) - 1

    def build(self) -> LinearProgram:
        n = len(self._names)
        objective = np.zeros(n)
        for column, coefficient in self._objective.items():
            objective[column] = coefficient
        matrix = np.zeros((len(self._rows), n))
        for r, (cols, vals) in enumerate(self._rows):
            np.add.at(matrix[r], cols, vals)
        return LinearProgram(
            objective,
            matrix,
            tuple(self._relations),
            np.array(self._rhs),
            np.array(self._lower),
            tuple(self._names),
            tuple(self._row_names),
            self.name,
        )


@dataclass(frozen=True)
class SolverOptions:
    """Simplex tolerances and pivoting behaviour.

    ``pivot_rule`` is ``"bland"`` (smallest-index entering and leaving variables
    throughout) or ``"dantzig"`` (most negative reduced cost, switching to Bland's
    rule after ``degenerate_streak`` consecutive degenerate pivots).
    """

    feasibility_tol: float = 1e-9
    optimality_tol: float = 1e-9
    pivot_tol: float = 1e-9
    report_tol: float = 1e-7
    max_pivots: int = 100_000
    pivot_rule: str = "dantzig"
    degenerate_streak: int = 50
    exact: bool = False
    equilibrate: bool = True


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Result of :func:`solve`; primal and dual are NaN-free only when optimal."""

    status: LpStatus
    value: float
    primal: FloatArray
    dual: FloatArray
    pivots: int = 0
    exact_value: Fraction | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def require_optimal(self) -> LpSolution:
        """Return self when optimal, raise the matching error otherwise."""
        if self.status is LpStatus.INFEASIBLE:
            raise InfeasibleError("linear program is infeasible")
        if self.status is LpStatus.UNBOUNDED:
            raise UnboundedError("linear program is unbounded")
        return self

    def residuals(self, lp: LinearProgram) -> dict[str, float]:
        """Primal feasibility, dual feasibility and duality gap of an optimal solution."""
        activity = lp.matrix @ self.primal - lp.rhs
        is_eq = np.array([rel is Relation.EQ for rel in lp.relations], dtype=bool)
        free = np.isinf(lp.lower)
        primal = max(
            float(np.max(np.abs(activity[is_eq]), initial=0.0)),
            float(np.max(activity[~is_eq], initial=0.0)),
            float(np.max(-self.primal[~free], initial=0.0)),
        )
        reduced = lp.matrix.T @ self.dual - lp.objective
        dual = max(
            float(np.max(-self.dual[~is_eq], initial=0.0)),
            float(np.max(-reduced[~free], initial=0.0)),
            float(np.max(np.abs(reduced[free]), initial=0.0)),
        )
        gap = abs(float(lp.objective @ self.primal) - float(lp.rhs @ self.dual))
        return {"primal": primal, "dual": dual, "gap": gap}

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "value": self.value if self.optimal else None,
            "primal": self.primal.tolist() if self.optimal else None,
            "dual": self.dual.tolist() if self.optimal else None,
            "pivots": self.pivots,
        }


@dataclass
class _StandardForm:
    """Equality-form data ``A x = b, x >= 0, b >= 0`` derived from a LinearProgram."""

    matrix: Any
    rhs: Any
    cost: Any
    positive: NDArray[np.int64]
    negative: NDArray[np.int64]
    identity: NDArray[np.int64]
    artificial: NDArray[np.bool_]
    sign: FloatArray
    scale: FloatArray


def _standard_form(lp: LinearProgram, options: SolverOptions) -> _StandardForm:
    m, n = lp.num_rows, lp.num_variables
    free = np.isinf(lp.lower)
    num_split = n + int(free.sum())
    positive = np.arange(n)
    negative = np.full(n, -1)
    negative[free] = n + np.arange(int(free.sum()))

    sign = np.where(lp.rhs < 0, -1.0, 1.0)
    rows = lp.matrix * sign[:, None]
    rhs = lp.rhs * sign
    scale = np.ones(m)
    if options.equilibrate and not options.exact and m:
        scale = np.max(np.abs(rows), axis=1, initial=0.0)
        scale[scale == 0] = 1.0
        rows = rows / scale[:, None]
        rhs = rhs / scale

    is_eq = np.array([rel is Relation.EQ for rel in lp.relations], dtype=bool)
    is_ge = (~is_eq) & (sign < 0)
    num_surplus = int(is_ge.sum())
    total = num_split + m + num_surplus
    matrix = np.zeros((m, total))
    matrix[:, :n] = rows
    matrix[:, n:num_split] = -rows[:, free]
    identity = num_split + np.arange(m)
    matrix[np.arange(m), identity] = 1.0
    surplus_rows = np.flatnonzero(is_ge)
    matrix[surplus_rows, num_split + m + np.arange(num_surplus)] = -1.0
    artificial = np.zeros(total, dtype=bool)
    artificial[identity[is_eq | is_ge]] = True

    cost = np.zeros(total)
    cost[:n] = lp.objective
    cost[n:num_split] = -lp.objective[free]
    if options.exact:
        to_fraction = np.vectorize(Fraction, otypes=[object])
        return _StandardForm(
            to_fraction(matrix), to_fraction(rhs), to_fraction(cost),
            positive, negative, identity, artificial, sign, scale,
        )
    return _StandardForm(matrix, rhs, cost, positive, negative, identity, artificial, sign, scale)


class _Tableau:
    """Simplex tableau with the reduced-cost row stored last."""

    def __init__(self, form: _StandardForm, options: SolverOptions) -> None:
        self.form = form
        self.options = options
        m, total = form.matrix.shape
        dtype = object if options.exact else np.float64
        self.table = np.zeros((m + 1, total + 1), dtype=dtype)
        if options.exact:
            self.table[...] = Fraction(0)
        self.table[:m, :total] = form.matrix
        self.table[:m, total] = form.rhs
        self.basis = form.identity.copy()
        self.zero: Any = Fraction(0) if options.exact else 0.0
        self.opt_tol: Any = Fraction(0) if options.exact else options.optimality_tol
        self.piv_tol: Any = Fraction(0) if options.exact else options.pivot_tol
        self.feas_tol: Any = Fraction(0) if options.exact else options.feasibility_tol
        self.pivots = 0
        self._streak = 0

    @property
    def num_rows(self) -> int:
        return int(self.table.shape[0] - 1)

    def set_costs(self, cost: Any) -> None:
        """Load ``-c`` into the reduced-cost row and price out the basic columns."""
        basic_cost = cost[self.basis]
        self.table[-1, :-1] = -cost + basic_cost @ self.table[:-1, :-1]
        self.table[-1, -1] = basic_cost @ self.table[:-1, -1] if self.num_rows else self.zero

    def pivot(self, row: int, column: int) -> None:
        table = self.table
        pivot_row = table[row] / table[row, column]
        factors = table[:, column].copy()
        factors[row] = self.zero
        touched = np.flatnonzero(factors != 0)
        if touched.size:
            table[touched] -= np.multiply.outer(factors[touched], pivot_row)
        table[row] = pivot_row
        table[row, column] = 1 if self.options.exact else 1.0
        self.basis[row] = column
        self.pivots += 1
        if self.pivots > self.options.max_pivots:
            raise SolverStallError(f"simplex exceeded {self.options.max_pivots} pivots")

    def _use_bland(self) -> bool:
        return self.options.pivot_rule == "bland" or self._streak >= self.options.degenerate_streak

    def entering(self, allowed: NDArray[np.bool_]) -> int | None:
        reduced = self.table[-1, :-1]
        candidates = np.flatnonzero(allowed & (reduced < -self.opt_tol))
        if candidates.size == 0:
            return None
        if self._use_bland():
            return int(candidates[0])
        values = reduced[candidates]
        return int(candidates[int(np.argmin(values.astype(np.float64)))])

    def leaving(self, column: int) -> int | None:
        entries = self.table[:-1, column]
        rows = np.flatnonzero(entries > self.piv_tol)
        if rows.size == 0:
            return None
        rhs = self.table[rows, -1]
        rhs = np.where(rhs > self.zero, rhs, self.zero)
        ratios = rhs / entries[rows]
        best = ratios.min()
        tied = rows[ratios <= best + self.feas_tol]
        if self._use_bland() or tied.size == 1:
            return int(tied[np.argmin(self.basis[tied])])
        return int(tied[np.argmax(np.abs(entries[tied].astype(np.float64)))])

    def run(self, allowed: NDArray[np.bool_]) -> LpStatus:
        while True:
            column = self.entering(allowed)
            if column is None:
                return LpStatus.OPTIMAL
            row = self.leaving(column)
            if row is None:
                return LpStatus.UNBOUNDED
            degenerate = self.table[row, -1] <= self.feas_tol
            self._streak = self._streak + 1 if degenerate else 0
            self.pivot(row, column)
            if not self.options.exact and not np.isfinite(self.table[-1, -1]):
                raise SolverStallError("simplex lost numerical stability")

    def drive_out_artificials(self) -> None:
        """Pivot basic artificials (at level zero) onto structural columns where possible."""
        structural = ~self.form.artificial
        for row in range(self.num_rows):
            if not self.form.artificial[self.basis[row]]:
                continue
            entries = self.table[row, :-1]
            candidates = np.flatnonzero(structural & (np.abs(entries.astype(np.float64)) > self.options.pivot_tol))
            if candidates.size:
                self.pivot(row, int(candidates[0]))


def _refine(form: _StandardForm, basis: NDArray[np.int64]) -> tuple[FloatArray, FloatArray] | None:
    """Recompute basic values and row duals from the original data."""
    B = form.matrix[:, basis]
    try:
        x_basic = np.linalg.solve(B, form.rhs)
        duals = np.linalg.solve(B.T, form.cost[basis])
    except np.linalg.LinAlgError:
        return None
    return x_basic, duals


def solve(lp: LinearProgram, options: SolverOptions | None = None) -> LpSolution:
    """Solve a linear program with the two-phase primal simplex method.

    Args:
        lp: Problem to solve
        options: Tolerances, pivot rule and exact mode

    Returns:
        Solution with status, value, primal point and one dual multiplier per row

    Raises:
        SolverStallError: Pivot limit reached or numerical breakdown
        PreconditionError: Exact mode requested for too many variables
    """
    options = options or SolverOptions()
    if options.exact and lp.num_variables > EXACT_VARIABLE_LIMIT:
        raise PreconditionError(f"exact mode supports at most {EXACT_VARIABLE_LIMIT} variables")
    form = _standard_form(lp, options)
    tableau = _Tableau(form, options)
    total = form.matrix.shape[1]
    nan_primal, nan_dual = np.full(lp.num_variables, np.nan), np.full(lp.num_rows, np.nan)

    if form.artificial.any():
        phase_one = np.zeros(total, dtype=object if options.exact else np.float64)
        phase_one[form.artificial] = -1
        tableau.set_costs(phase_one)
        tableau.run(np.ones(total, dtype=bool))
        shortfall = -tableau.table[-1, -1]
        magnitude = 1.0 + float(np.max(np.abs(form.rhs), initial=0))
        limit = 0 if options.exact else options.feasibility_tol * 10 * magnitude
        logger.debug("phase 1 finished after %d pivots, artificial sum %s", tableau.pivots, shortfall)
        if shortfall > limit:
            return LpSolution(LpStatus.INFEASIBLE, math.nan, nan_primal, nan_dual, tableau.pivots)
        tableau.drive_out_artificials()

    tableau.set_costs(form.cost)
    status = tableau.run(~form.artificial)
    logger.debug("phase 2 finished with status %s after %d pivots", status.value, tableau.pivots)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, math.nan, nan_primal, nan_dual, tableau.pivots)
    return _extract(lp, form, tableau)


def _extract(lp: LinearProgram, form: _StandardForm, tableau: _Tableau) -> LpSolution:
    m, total = form.matrix.shape
    refined = None if tableau.options.exact else _refine(form, tableau.basis)
    if refined is not None:
        x_basic, row_duals = refined
    else:
        x_basic = tableau.table[:m, -1]
        row_duals = tableau.table[-1, form.identity]
    x = np.zeros(total, dtype=object if refined is None and tableau.options.exact else np.float64)
    if tableau.options.exact:
        x[...] = Fraction(0)
    x[tableau.basis] = x_basic
    n = lp.num_variables
    split = x[form.positive].copy()
    has_negative = form.negative >= 0
    split[has_negative] = split[has_negative] - x[form.negative[has_negative]]
    exact_value = None
    if tableau.options.exact:
        exact_value = sum((Fraction(c) * v for c, v in zip(lp.objective.tolist(), split, strict=True)), Fraction(0))
    primal = np.array([float(v) for v in split]) if n else np.zeros(0)
    primal[(primal < 0) & (primal > -tableau.options.feasibility_tol) & ~np.isinf(lp.lower)] = 0.0
    dual = np.array([float(v) for v in row_duals]) * form.sign / form.scale if m else np.zeros(0)
    value = float(exact_value) if exact_value is not None else float(lp.objective @ primal)
    return LpSolution(LpStatus.OPTIMAL, value, primal, dual, tableau.pivots, exact_value)
