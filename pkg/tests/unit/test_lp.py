"""Unit tests for the simplex solver."""

from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from semicoarse.errors import InfeasibleError, PreconditionError, ShapeError, SolverStallError, UnboundedError
from semicoarse.lp import LinearProgram, LpBuilder, LpStatus, Relation, SolverOptions, solve


def _wyndor() -> LinearProgram:
    """max 3x + 5y with x <= 4, 2y <= 12, 3x + 2y <= 18; optimum 36 at (2, 6)."""
    builder = LpBuilder("wyndor")
    x = builder.add_variable("x", objective=3.0)
    y = builder.add_variable("y", objective=5.0)
    builder.add_row([x], [1.0], Relation.LE, 4.0, "plant1")
    builder.add_row([y], [2.0], Relation.LE, 12.0, "plant2")
    builder.add_row([x, y], [3.0, 2.0], Relation.LE, 18.0, "plant3")
    return builder.build()


def _dense(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> LinearProgram:
    rows, cols = A.shape
    return LinearProgram(
        c,
        A,
        (Relation.LE,) * rows,
        b,
        np.zeros(cols),
        tuple(f"x{j}" for j in range(cols)),
        tuple(f"r{i}" for i in range(rows)),
    )


def _capped_origin_rows() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two rows through the origin and a cap on one variable; optimum 5/4."""
    A = np.array([[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]])
    return np.array([0.75, -20.0, 0.5, -6.0]), A, np.array([0.0, 0.0, 1.0])


def _mixed_origin_rows() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = np.array([[-2.0, -9.0, 1.0, 9.0], [1 / 3, 1.0, -1 / 3, -2.0], [2.0, 3.0, -1.0, -12.0]])
    return np.array([2.0, 3.0, -1.0, -12.0]), A, np.array([0.0, 0.0, 2.0])


def _stacked_vertex() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [2.0, 1.0], [1.0, 2.0]])
    return np.array([1.0, 1.0]), A, np.array([2.0, 1.0, 1.0, 3.0, 3.0])


def _degenerate_cone(seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Five rows through the origin, some repeated, capped by ``sum x <= 1``."""
    rng = np.random.default_rng(seed)
    cone = rng.normal(size=(5, 4))
    if seed % 2 == 0:
        cone[1] = cone[0]
    A = np.vstack([cone, np.ones((1, 4))])
    b = np.zeros(6)
    b[-1] = 1.0
    return rng.normal(size=4), A, b


DEGENERATE_LIBRARY = [
    _capped_origin_rows(),
    _mixed_origin_rows(),
    _stacked_vertex(),
    *(_degenerate_cone(seed) for seed in range(17)),
]
SCIPY_STATUS = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}


class TestLpBuilder:
    """Tests for incremental construction."""

    def test_build(self) -> None:
        lp = _wyndor()

        assert lp.num_variables == 2
        assert lp.num_rows == 3
        assert lp.objective.tolist() == [3.0, 5.0]
        assert lp.matrix[2].tolist() == [3.0, 2.0]
        assert lp.row_names == ("plant1", "plant2", "plant3")

    def test_repeated_columns_accumulate(self) -> None:
        builder = LpBuilder()
        x = builder.add_variable("x")
        builder.add_row([x, x], [1.0, 2.0], Relation.EQ, 3.0, "r")

        assert builder.build().matrix[0, 0] == 3.0

    def test_free_variable_bound(self) -> None:
        builder = LpBuilder()
        builder.add_variable("x")
        builder.add_variable("z", free=True)

        assert builder.build().lower.tolist() == [0.0, -np.inf]

    def test_row_length_mismatch(self) -> None:
        builder = LpBuilder()
        x = builder.add_variable("x")

        with pytest.raises(ShapeError):
            builder.add_row([x], [1.0, 2.0], Relation.LE, 1.0, "r")

    def test_rejects_general_bounds(self) -> None:
        with pytest.raises(ShapeError, match="0 or -inf"):
            LinearProgram([1.0], [[1.0]], (Relation.LE,), [1.0], [1.0], ("x",), ("r",))

    def test_rejects_non_finite(self) -> None:
        with pytest.raises(ShapeError, match="finite"):
            LinearProgram([np.nan], [[1.0]], (Relation.LE,), [1.0], [0.0], ("x",), ("r",))


class TestSolve:
    """Tests for the two-phase simplex."""

    def test_known_optimum(self) -> None:
        lp = _wyndor()

        solution = solve(lp)

        assert solution.status is LpStatus.OPTIMAL
        assert solution.value == pytest.approx(36.0)
        assert solution.primal == pytest.approx([2.0, 6.0])

    def test_duals(self) -> None:
        """One multiplier per row, matching the shadow prices."""
        lp = _wyndor()

        solution = solve(lp)

        assert solution.dual == pytest.approx([0.0, 1.5, 1.0], abs=1e-9)
        residuals = solution.residuals(lp)
        assert residuals["primal"] < 1e-9
        assert residuals["dual"] < 1e-9
        assert residuals["gap"] < 1e-9

    def test_equality_and_free_variable(self) -> None:
        """max x with x + y = 1, y >= -2 and y free."""
        builder = LpBuilder()
        x = builder.add_variable("x", objective=1.0)
        y = builder.add_variable("y", free=True)
        builder.add_row([x, y], [1.0, 1.0], Relation.EQ, 1.0, "balance")
        builder.add_row([y], [-1.0], Relation.LE, 2.0, "floor")
        lp = builder.build()

        solution = solve(lp)

        assert solution.value == pytest.approx(3.0)
        assert solution.primal == pytest.approx([3.0, -2.0])
        assert solution.dual == pytest.approx([1.0, 1.0])
        assert solution.residuals(lp)["gap"] < 1e-9

    def test_negative_rhs(self) -> None:
        """min x + y with x + y >= 2, written as -x - y <= -2."""
        builder = LpBuilder()
        x = builder.add_variable("x", objective=-1.0)
        y = builder.add_variable("y", objective=-2.0)
        builder.add_row([x, y], [-1.0, -1.0], Relation.LE, -2.0, "cover")

        solution = solve(builder.build())

        assert solution.value == pytest.approx(-2.0)
        assert solution.primal == pytest.approx([2.0, 0.0])

    def test_infeasible(self) -> None:
        builder = LpBuilder()
        x = builder.add_variable("x", objective=1.0)
        builder.add_row([x], [1.0], Relation.LE, -1.0, "impossible")

        solution = solve(builder.build())

        assert solution.status is LpStatus.INFEASIBLE
        assert np.isnan(solution.value)
        assert solution.to_dict()["value"] is None
        with pytest.raises(InfeasibleError):
            solution.require_optimal()

    def test_unbounded(self) -> None:
        builder = LpBuilder()
        x = builder.add_variable("x", objective=1.0)
        y = builder.add_variable("y")
        builder.add_row([x, y], [1.0, -1.0], Relation.LE, 1.0, "spread")

        solution = solve(builder.build())

        assert solution.status is LpStatus.UNBOUNDED
        with pytest.raises(UnboundedError):
            solution.require_optimal()

    def test_require_optimal_returns_self(self) -> None:
        solution = solve(_wyndor())

        assert solution.require_optimal() is solution

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_scipy(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        A = rng.uniform(0.1, 1.0, size=(6, 5))
        b = rng.uniform(1.0, 2.0, size=6)
        c = rng.uniform(-1.0, 1.0, size=5)

        solution = solve(_dense(c, A, b))
        reference = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * 5, method="highs")

        assert solution.value == pytest.approx(-reference.fun, abs=1e-7)

    def test_pivot_rules_agree_on_degenerate_problem(self) -> None:
        """Many rows pass through the optimum."""
        A = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [2.0, 1.0], [1.0, 2.0]])
        b = np.array([2.0, 1.0, 1.0, 3.0, 3.0])
        lp = _dense(np.array([1.0, 1.0]), A, b)

        dantzig = solve(lp, SolverOptions(pivot_rule="dantzig"))
        bland = solve(lp, SolverOptions(pivot_rule="bland"))

        assert dantzig.value == pytest.approx(2.0)
        assert bland.value == pytest.approx(2.0)

    @pytest.mark.parametrize("instance", range(len(DEGENERATE_LIBRARY)))
    def test_bland_terminates_on_degenerate_library(self, instance: int) -> None:
        c, A, b = DEGENERATE_LIBRARY[instance]
        reference = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * len(c), method="highs")

        solution = solve(_dense(c, A, b), SolverOptions(pivot_rule="bland"))

        assert solution.status is SCIPY_STATUS[reference.status]
        if solution.optimal:
            assert solution.value == pytest.approx(-reference.fun, abs=1e-7)

    def test_capped_origin_rows_optimum(self) -> None:
        solution = solve(_dense(*_capped_origin_rows()), SolverOptions(pivot_rule="bland"))

        assert solution.value == pytest.approx(1.25)

    @pytest.mark.parametrize("seed", range(5))
    def test_objective_scaling_keeps_status_and_support(self, seed: int) -> None:
        """Multiplying the objective by 1e3 changes neither status nor the optimal support."""
        rng = np.random.default_rng(seed)
        A = rng.uniform(0.1, 1.0, size=(6, 5))
        b = rng.uniform(1.0, 2.0, size=6)
        c = rng.uniform(-1.0, 1.0, size=5)

        plain = solve(_dense(c, A, b))
        scaled = solve(_dense(1e3 * c, A, b))

        assert scaled.status is plain.status
        assert scaled.value == pytest.approx(1e3 * plain.value, rel=1e-9)
        assert np.flatnonzero(scaled.primal > 1e-9).tolist() == np.flatnonzero(plain.primal > 1e-9).tolist()

    def test_objective_scaling_keeps_unbounded_status(self) -> None:
        A = np.array([[1.0, -1.0]])

        assert solve(_dense(np.array([1.0, 0.0]), A, np.ones(1))).status is LpStatus.UNBOUNDED
        assert solve(_dense(np.array([1e3, 0.0]), A, np.ones(1))).status is LpStatus.UNBOUNDED

    def test_exact_mode(self) -> None:
        lp = _dense(np.array([1.0, 1.0]), np.array([[3.0, 1.0], [1.0, 3.0]]), np.array([1.0, 1.0]))

        solution = solve(lp, SolverOptions(exact=True))

        assert solution.exact_value == Fraction(1, 2)
        assert solution.value == 0.5
        assert solution.primal.tolist() == [0.25, 0.25]
        assert solution.dual.tolist() == [0.25, 0.25]

    def test_exact_mode_size_limit(self) -> None:
        lp = _dense(np.ones(501), np.ones((1, 501)), np.ones(1))

        with pytest.raises(PreconditionError, match="at most 500"):
            solve(lp, SolverOptions(exact=True))

    def test_pivot_limit(self) -> None:
        with pytest.raises(SolverStallError, match="pivots"):
            solve(_wyndor(), SolverOptions(max_pivots=0))

    def test_to_dict(self) -> None:
        data = solve(_wyndor()).to_dict()

        assert data["status"] == "optimal"
        assert data["value"] == pytest.approx(36.0)
        assert len(data["dual"]) == 3
