"""Equilibrium linear programs over outcome distributions.

Every builder returns an :class:`EquilibriumLpBundle` holding the linear
program together with index maps from outcomes and generator entries to LP
columns and rows. Primal bundles maximize ``sum_a sigma(a) d(a)`` over
coarse correlated, correlated or semicoarse distributions; the Lyapunov
bundle is the dual program over generator pairs and yields a certificate.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
import logging
from typing import Any

import numpy as np
from numpy.typing import NDArray

from semicoarse.errors import EnumerationBudgetError, NotSemicoarseError, PreconditionError, ShapeError, ValidationError
from semicoarse.game import (
    FloatArray,
    NormalFormGame,
    check_distribution,
    front_view,
    nash_mask,
    transform_gain_table,
)
from semicoarse.generators import contract_distribution, expand_weighted_game, lift_objective
from semicoarse.lp import LinearProgram, LpBuilder, LpSolution, Relation, SolverOptions, solve
from semicoarse.reports import ConstraintCheck, VerificationReport
from semicoarse.transforms import (
    GeneratorPair,
    TransformMatrix,
    constant_transform,
    cycle_count,
    enumerate_canonical,
    enumerate_weighted_canonical,
    is_semicoarse_transform,
    validate_generator,
)


logger = logging.getLogger(__name__)

IntArray = NDArray[np.int64]

ROW_BUDGET = 10**5
CERTIFICATE_TOLERANCE = 1e-7


class LpKind(str, Enum):
    CCE = "cce"
    CE = "ce"
    ENUMERATED = "semicoarse-enumerated"
    EXTENSION = "semicoarse-extension"
    LYAPUNOV = "lyapunov"
    WEIGHTED = "weighted-semicoarse"


@dataclass(frozen=True, eq=False)
class EquilibriumLpBundle:
    """A built equilibrium LP and its index maps.

    Attributes:
        kind: Which program this is
        lp: The linear program
        game: Game the program was built for
        objective: Outcome table d the program optimizes
        sigma_index: Per outcome, the LP column of sigma(a) (the LP row for the Lyapunov kind)
        probability_row: Row of the probability constraint, -1 when absent
        player_columns: Per player, named index arrays into the columns (-1 where unused)
        player_rows: Per player, named index arrays into the rows (-1 where unused)
    """

    kind: LpKind
    lp: LinearProgram
    game: NormalFormGame
    objective: FloatArray
    sigma_index: IntArray
    probability_row: int = -1
    player_columns: tuple[dict[str, IntArray], ...] = ()
    player_rows: tuple[dict[str, IntArray], ...] = ()

    def column(self, name: str) -> int:
        return self.lp.variable_names.index(name)

    def row(self, name: str) -> int:
        return self.lp.row_names.index(name)


@dataclass(frozen=True, eq=False)
class LyapunovCertificate:
    """Value gamma and one generator pair per player from the dual Lyapunov program."""

    gamma: float
    pairs: tuple[GeneratorPair, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"gamma": self.gamma, "pairs": [pair.to_dict() for pair in self.pairs]}


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Solved bundle: optimal value, the maximizing distribution and, for the dual kind, the certificate."""

    kind: LpKind
    value: float
    sigma: FloatArray
    solution: LpSolution
    certificate: LyapunovCertificate | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def support(self, game: NormalFormGame, threshold: float = 1e-9) -> list[tuple[str, float]]:
        """Outcomes carrying probability above ``threshold``, largest first."""
        flat = [
            (tuple(int(a) for a in idx), float(self.sigma[tuple(idx)])) for idx in np.argwhere(self.sigma > threshold)
        ]
        flat.sort(key=lambda item: (-item[1], item[0]))
        return [(game.outcome_label(outcome), p) for outcome, p in flat]

    def to_dict(self, game: NormalFormGame | None = None) -> dict[str, Any]:
        data: dict[str, Any] = {
            "kind": self.kind.value,
            "value": self.value,
            "status": self.solution.status.value,
            "pivots": self.solution.pivots,
            "sigma": self.sigma.tolist(),
        }
        if game is not None:
            data["support"] = [{"outcome": label, "probability": p} for label, p in self.support(game)]
        if self.certificate is not None:
            data["certificate"] = self.certificate.to_dict()
        data.update(self.meta)
        return data


# objectives


def _values(game: NormalFormGame, player: int) -> FloatArray:
    values = [action.value for action in game.actions[player]]
    if any(v is None for v in values):
        raise ValidationError(f"actions of player {player + 1} carry no numeric values")
    return np.array([float(v) for v in values if v is not None])


def _broadcast(game: NormalFormGame, player: int, vector: FloatArray) -> FloatArray:
    shape = [1] * game.num_players
    shape[player] = game.shape[player]
    return np.asarray(np.broadcast_to(vector.reshape(shape), game.shape), dtype=np.float64)


def constant_objective(game: NormalFormGame, value: float = 1.0) -> FloatArray:
    return np.full(game.shape, float(value))


def indicator_objective(game: NormalFormGame, player: int, action: int | str) -> FloatArray:
    """``d(a) = 1[a_player = action]``."""
    index = game.action_index(player, action) if isinstance(action, str) else action
    return _broadcast(game, player, np.eye(game.shape[player])[index])


def not_nash_objective(game: NormalFormGame) -> FloatArray:
    """``d(a) = 1`` on outcomes that are not pure Nash equilibria."""
    return (~nash_mask(game)).astype(np.float64)


def squared_value_objective(game: NormalFormGame) -> FloatArray:
    """``d(a) = sum_i value(a_i)^2`` for games whose actions carry prices or bids."""
    return np.asarray(sum(_broadcast(game, i, _values(game, i) ** 2) for i in range(game.num_players)))


def squared_distance_objective(game: NormalFormGame, target: Sequence[float]) -> FloatArray:
    """``d(a) = sum_i (value(a_i) - target_i)^2``."""
    if len(target) != game.num_players:
        raise ShapeError(f"target needs {game.num_players} entries, got {len(target)}")
    return np.asarray(
        sum(_broadcast(game, i, (_values(game, i) - float(t)) ** 2) for i, t in enumerate(target))
    )


def _check_objective(game: NormalFormGame, d: Any) -> FloatArray:
    table = np.array(d, dtype=np.float64)
    if table.shape != game.shape:
        raise ShapeError(f"objective has shape {table.shape}, expected {game.shape}")
    if not np.all(np.isfinite(table)):
        raise ValidationError("objective must be finite")
    return table


# primal programs


def _sigma_builder(game: NormalFormGame, d: FloatArray, name: str) -> tuple[LpBuilder, IntArray, int]:
    builder = LpBuilder(name)
    columns = np.empty(game.shape, dtype=np.int64)
    for outcome in np.ndindex(*game.shape):
        label = "_".join(str(a) for a in outcome)
        columns[outcome] = builder.add_variable(f"sigma_{label}", objective=float(d[outcome]))
    flat = columns.ravel()
    probability = builder.add_row(flat, np.ones(flat.size), Relation.EQ, 1.0, "probability")
    return builder, columns, probability


def _gain_rows(
    builder: LpBuilder,
    game: NormalFormGame,
    columns: IntArray,
    player: int,
    transforms: Sequence[TransformMatrix],
    prefix: str,
) -> None:
    flat = columns.ravel()
    for k, transform in enumerate(transforms):
        gains = transform_gain_table(game, player, transform.matrix)
        builder.add_row(flat, gains.ravel(), Relation.LE, 0.0, f"{prefix}_p{player + 1}_{k}")


def build_cce_lp(game: NormalFormGame, d: Any) -> EquilibriumLpBundle:
    """Maximize ``E_sigma[d]`` over coarse correlated equilibria."""
    table = _check_objective(game, d)
    builder, columns, probability = _sigma_builder(game, table, "cce")
    for player, size in enumerate(game.shape):
        if size > 1:
            _gain_rows(builder, game, columns, player, [constant_transform(size, t) for t in range(size)], "cce")
    return EquilibriumLpBundle(LpKind.CCE, builder.build(), game, table, columns, probability)


def build_ce_lp(game: NormalFormGame, d: Any) -> EquilibriumLpBundle:
    """Maximize ``E_sigma[d]`` over correlated equilibria (one row per recommendation and deviation)."""
    table = _check_objective(game, d)
    builder, columns, probability = _sigma_builder(game, table, "ce")
    for player, size in enumerate(game.shape):
        utility = front_view(game.utilities[player], player)
        front_columns = front_view(columns, player)
        for a in range(size):
            for b in range(size):
                if a != b:
                    builder.add_row(
                        front_columns[a], utility[b] - utility[a], Relation.LE, 0.0, f"ce_p{player + 1}_{a}_{b}"
                    )
    return EquilibriumLpBundle(LpKind.CE, builder.build(), game, table, columns, probability)


def canonical_family(game: NormalFormGame, max_cycle_len: int | None = None) -> list[list[TransformMatrix]]:
    """Per-player canonical subset and cycle transforms, refusing families beyond the row budget.

    Raises:
        EnumerationBudgetError: Some player's cycle family exceeds the row budget
    """
    families = []
    for player, size in enumerate(game.shape):
        if size < 2:
            families.append([])
            continue
        length = size if max_cycle_len is None else min(max_cycle_len, size)
        rows = cycle_count(size, length) + 2**size - 2
        if rows > ROW_BUDGET:
            raise EnumerationBudgetError(
                f"player {player + 1}: {rows} enumerated rows exceed {ROW_BUDGET}; use the extension LP"
            )
        families.append(enumerate_canonical(size, length))
    return families


def build_semicoarse_enumerated_lp(
    game: NormalFormGame,
    d: Any,
    transforms: Sequence[Sequence[TransformMatrix]] | None = None,
    max_cycle_len: int | None = None,
) -> EquilibriumLpBundle:
    """One row per (player, transform) for an explicit semicoarse family.

    Without ``transforms`` the full canonical family is used.

    Raises:
        NotSemicoarseError: A supplied transform fails the triplet condition
        EnumerationBudgetError: The canonical family is too large
    """
    table = _check_objective(game, d)
    family = canonical_family(game, max_cycle_len) if transforms is None else [list(t) for t in transforms]
    if len(family) != game.num_players:
        raise ShapeError(f"need one transform list per player, got {len(family)}")
    for player, player_transforms in enumerate(family):
        for transform in player_transforms:
            if transform.size != game.shape[player]:
                raise ShapeError(f"transform {transform.label} has size {transform.size} for player {player + 1}")
            check = is_semicoarse_transform(transform)
            if not check.holds:
                raise NotSemicoarseError(f"transform {transform.label or '<unnamed>'} fails at {check.witness}")
    builder, columns, probability = _sigma_builder(game, table, "semicoarse")
    for player, player_transforms in enumerate(family):
        _gain_rows(builder, game, columns, player, player_transforms, "transform")
    logger.debug("enumerated LP with %d rows", builder.num_rows)
    return EquilibriumLpBundle(LpKind.ENUMERATED, builder.build(), game, table, columns, probability)


def build_semicoarse_extension_lp(game: NormalFormGame, d: Any) -> EquilibriumLpBundle:
    """Polynomial-size lifted program for the semicoarse polytope.

    Per player i with m actions: variables gamma_i(a', a) >= 0 for a' != a and
    one free rho_i per unordered pair (rho_i(a', a) = -rho_i(a, a')); rows

    * ``Q_i(a', a)``, a' != a:
      ``sum_{a_-i} sigma(a, a_-i)(u_i(a', a_-i) - u_i(a, a_-i)) - rho_i(a', a) + gamma_i(a', a) = 0``
    * ``q_i(a')``: ``sum_{a != a'} gamma_i(a', a) + sum_a sigma(a)(u_i(a', a_-i) - u_i(a)) = 0``
    """
    table = _check_objective(game, d)
    builder, columns, probability = _sigma_builder(game, table, "extension")
    player_columns, player_rows = [], []
    for player, m in enumerate(game.shape):
        p = player + 1
        gamma = np.full((m, m), -1, dtype=np.int64)
        rho = np.full((m, m), -1, dtype=np.int64)
        for target in range(m):
            for a in range(m):
                if target != a:
                    gamma[target, a] = builder.add_variable(f"gamma_p{p}_{target}_{a}")
        for a in range(m):
            for b in range(a + 1, m):
                rho[a, b] = rho[b, a] = builder.add_variable(f"rho_p{p}_{a}_{b}", free=True)

        utility = front_view(game.utilities[player], player)
        front_columns = front_view(columns, player)
        q_rows = np.full((m, m), -1, dtype=np.int64)
        for target in range(m):
            for a in range(m):
                if target == a:
                    continue
                rho_sign = -1.0 if target < a else 1.0
                cols = np.concatenate([front_columns[a], [gamma[target, a], rho[target, a]]])
                vals = np.concatenate([utility[target] - utility[a], [1.0, rho_sign]])
                q_rows[target, a] = builder.add_row(cols, vals, Relation.EQ, 0.0, f"Q_p{p}_{target}_{a}")
        linear_rows = np.empty(m, dtype=np.int64)
        for target in range(m):
            others = [gamma[target, a] for a in range(m) if a != target]
            cols = np.concatenate([front_columns.ravel(), others]).astype(np.int64)
            vals = np.concatenate([(utility[target][None, :] - utility).ravel(), np.ones(len(others))])
            linear_rows[target] = builder.add_row(cols, vals, Relation.EQ, 0.0, f"q_p{p}_{target}")
        player_columns.append({"gamma": gamma, "rho": rho})
        player_rows.append({"Q": q_rows, "q": linear_rows})
    lp = builder.build()
    logger.debug("extension LP: %d variables, %d rows", lp.num_variables, lp.num_rows)
    return EquilibriumLpBundle(
        LpKind.EXTENSION, lp, game, table, columns, probability, tuple(player_columns), tuple(player_rows)
    )


def build_weighted_semicoarse_lp(
    game: NormalFormGame,
    weights: Sequence[Any],
    d: Any,
    max_cycle_len: int | None = None,
) -> EquilibriumLpBundle:
    """Enumerated program over the weighted subset and weighted cycle families."""
    table = _check_objective(game, d)
    if len(weights) != game.num_players:
        raise ShapeError(f"need {game.num_players} weight vectors, got {len(weights)}")
    builder, columns, probability = _sigma_builder(game, table, "weighted")
    for player, (size, w) in enumerate(zip(game.shape, weights, strict=True)):
        if size < 2:
            continue
        length = size if max_cycle_len is None else min(max_cycle_len, size)
        if cycle_count(size, length) + 2**size - 2 > ROW_BUDGET:
            raise EnumerationBudgetError(f"player {player + 1}: weighted family exceeds {ROW_BUDGET} rows")
        _gain_rows(builder, game, columns, player, enumerate_weighted_canonical(size, w, length), "wtransform")
    return EquilibriumLpBundle(LpKind.WEIGHTED, builder.build(), game, table, columns, probability)


# dual program


def build_dual_lyapunov_lp(game: NormalFormGame, d: Any) -> EquilibriumLpBundle:
    """Minimize gamma over generator pairs with ``gamma + sum_i field gain_i(a) >= d(a)``.

    Stated as ``max -gamma``; the optimal value is ``-gamma*``. The dual
    multipliers of the per-outcome rows form a maximizing distribution of the
    extension program.
    """
    table = _check_objective(game, d)
    builder = LpBuilder("lyapunov")
    gamma = builder.add_variable("gamma", free=True, objective=-1.0)
    player_columns, player_rows = [], []
    for player, m in enumerate(game.shape):
        p = player + 1
        Q = np.empty((m, m), dtype=np.int64)
        for a in range(m):
            for b in range(a, m):
                Q[a, b] = Q[b, a] = builder.add_variable(f"Q_p{p}_{a}_{b}", free=True)
        q = np.array([builder.add_variable(f"q_p{p}_{a}", free=True) for a in range(m)], dtype=np.int64)
        conservation = np.array(
            [
                builder.add_row(
                    np.concatenate([Q[:, a], q]), np.ones(2 * m), Relation.EQ, 0.0, f"conservation_p{p}_{a}"
                )
                for a in range(m)
            ],
            dtype=np.int64,
        )
        tangency = np.full((m, m), -1, dtype=np.int64)
        for target in range(m):
            for a in range(m):
                if target != a:
                    tangency[target, a] = builder.add_row(
                        [Q[target, a], q[target]], [-1.0, -1.0], Relation.LE, 0.0, f"tangency_p{p}_{target}_{a}"
                    )
        player_columns.append({"Q": Q, "q": q})
        player_rows.append({"conservation": conservation, "tangency": tangency})

    rows = np.empty(game.shape, dtype=np.int64)
    for outcome in np.ndindex(*game.shape):
        cols: list[IntArray] = [np.array([gamma])]
        vals: list[FloatArray] = [np.array([-1.0])]
        for player in range(game.num_players):
            index = list(outcome)
            index[player] = slice(None)
            u = game.utilities[player][tuple(index)]
            cols += [player_columns[player]["Q"][:, outcome[player]], player_columns[player]["q"]]
            vals += [-u, -u]
        label = "_".join(str(a) for a in outcome)
        rows[outcome] = builder.add_row(
            np.concatenate(cols), np.concatenate(vals), Relation.LE, -float(table[outcome]), f"sigma_{label}"
        )
    lp = builder.build()
    logger.debug("dual Lyapunov LP: %d variables, %d rows", lp.num_variables, lp.num_rows)
    return EquilibriumLpBundle(
        LpKind.LYAPUNOV, lp, game, table, rows, -1, tuple(player_columns), tuple(player_rows)
    )


def extract_certificate(bundle: EquilibriumLpBundle, solution: LpSolution) -> LyapunovCertificate:
    """Read gamma and the generator pairs from an optimal Lyapunov solution."""
    if bundle.kind is not LpKind.LYAPUNOV:
        raise PreconditionError(f"certificates come from the Lyapunov program, not {bundle.kind.value}")
    solution.require_optimal()
    pairs = tuple(
        GeneratorPair(solution.primal[columns["Q"]], solution.primal[columns["q"]])
        for columns in bundle.player_columns
    )
    return LyapunovCertificate(float(solution.primal[bundle.column("gamma")]), pairs)


def field_gain_table(game: NormalFormGame, player: int, field_matrix: FloatArray) -> FloatArray:
    """Pointwise ``sum_{a'} M(a', a_i) u_i(a', a_-i)`` for a field matrix M."""
    M = np.asarray(field_matrix, dtype=np.float64)
    return transform_gain_table(game, player, np.eye(M.shape[0]) + M)


def check_lyapunov_certificate(
    game: NormalFormGame,
    certificate: LyapunovCertificate,
    d: Any,
    tolerance: float = CERTIFICATE_TOLERANCE,
) -> VerificationReport:
    """Validate each generator pair and the pointwise domination ``gamma + gain(a) >= d(a)``."""
    table = _check_objective(game, d)
    if len(certificate.pairs) != game.num_players:
        raise ShapeError(f"certificate has {len(certificate.pairs)} pairs for {game.num_players} players")
    checks: list[ConstraintCheck] = []
    total = np.full(game.shape, certificate.gamma)
    for player, pair in enumerate(certificate.pairs):
        if pair.size != game.shape[player]:
            raise ShapeError(f"pair of player {player + 1} has size {pair.size}")
        report = validate_generator(pair, tolerance, tolerance, tolerance)
        checks += [
            ConstraintCheck(f"player {player + 1} / {check.name}", check.slack + tolerance) for check in report.checks
        ]
        total = total + field_gain_table(game, player, pair.field_matrix())
    for outcome in np.ndindex(*game.shape):
        slack = float(table[outcome] - total[outcome])
        checks.append(ConstraintCheck(f"domination {game.outcome_label(outcome)}", slack))
    return VerificationReport.from_checks("lyapunov", tolerance, checks)


# solving


def solve_bundle(bundle: EquilibriumLpBundle, options: SolverOptions | None = None) -> EquilibriumResult:
    """Solve a bundle and read off the value, the distribution and any certificate.

    Raises:
        InfeasibleError: The program has no feasible point
        UnboundedError: The program is unbounded
    """
    solution = solve(bundle.lp, options).require_optimal()
    if bundle.kind is LpKind.LYAPUNOV:
        sigma = np.clip(solution.dual[bundle.sigma_index], 0.0, None)
        certificate = extract_certificate(bundle, solution)
        value = -solution.value
    else:
        sigma = np.clip(solution.primal[bundle.sigma_index], 0.0, None)
        certificate = None
        value = solution.value
    mass = float(sigma.sum())
    if mass > 0:
        sigma = sigma / mass
    logger.debug("%s value %.12g after %d pivots", bundle.kind.value, value, solution.pivots)
    meta = {"residuals": solution.residuals(bundle.lp)}
    return EquilibriumResult(bundle.kind, value, sigma, solution, certificate, meta)


def solve_weighted_by_expansion(
    game: NormalFormGame,
    weights: Sequence[Any],
    d: Any,
    options: SolverOptions | None = None,
) -> tuple[float, FloatArray]:
    """Weighted semicoarse value through the duplicated-action game.

    Each action is copied ``w_i(a)`` times, the extension program is solved on
    the expanded game with the lifted objective, and the optimum is summed back
    over the copies.
    """
    table = _check_objective(game, d)
    expanded, owners = expand_weighted_game(game, weights)
    result = solve_bundle(build_semicoarse_extension_lp(expanded, lift_objective(table, owners)), options)
    return result.value, contract_distribution(result.sigma, owners)


# verification


def verify_distribution(
    game: NormalFormGame,
    sigma: Any,
    transforms: Sequence[Sequence[TransformMatrix]] | None = None,
    tolerance: float = CERTIFICATE_TOLERANCE,
    max_cycle_len: int | None = None,
) -> VerificationReport:
    """Slack ``sum_a sigma(a) [sum_{a'} P(a', a_i) u_i(a', a_-i) - u_i(a)]`` of every transform.

    Without ``transforms`` the canonical family of each player is checked.
    """
    tensor = check_distribution(game, sigma)
    family = canonical_family(game, max_cycle_len) if transforms is None else transforms
    if len(family) != game.num_players:
        raise ShapeError(f"need one transform list per player, got {len(family)}")
    checks = []
    for player, player_transforms in enumerate(family):
        for transform in player_transforms:
            slack = float((tensor * transform_gain_table(game, player, transform.matrix)).sum())
            checks.append(ConstraintCheck(f"player {player + 1} / {transform.label or 'transform'}", slack))
    return VerificationReport.from_checks("semicoarse", tolerance, checks)


def verify_scaled_constraint(
    game: NormalFormGame,
    sigma: Any,
    player: int,
    Z: Any,
    pair: GeneratorPair,
    tolerance: float = 1e-10,
) -> float:
    """Constraint value ``sum_a sigma(a) sum_{a', a''} Z(a', a'') (Q(a'', a_i) + q(a'')) u_i(a', a_-i)``.

    Raises:
        PreconditionError: Q is not symmetric or the scaled field ``Z (Q + q 1^T)``
            fails conservation or off-diagonal tangency
    """
    tensor = check_distribution(game, sigma)
    scale = np.asarray(Z, dtype=np.float64)
    m = game.shape[player]
    if scale.shape != (m, m) or pair.size != m:
        raise ShapeError(f"scaling and pair must be {m} x {m}")
    if np.max(np.abs(pair.Q - pair.Q.T), initial=0.0) > tolerance:
        raise PreconditionError("Q must be symmetric")
    scaled = scale @ pair.field_matrix()
    if np.max(np.abs(scaled.sum(axis=0)), initial=0.0) > tolerance:
        raise PreconditionError("scaled field violates column conservation")
    off_diagonal = scaled[~np.eye(m, dtype=bool)]
    if np.any(off_diagonal < -tolerance):
        raise PreconditionError("scaled field violates off-diagonal tangency")
    return float((tensor * field_gain_table(game, player, scaled)).sum())


def constant_deviation_pair(Z: Any, target: int | Sequence[float]) -> GeneratorPair:
    """Pair ``(-Z^-1, Z^-1 x*)`` whose scaled field is the deviation to ``x*``."""
    scale = np.asarray(Z, dtype=np.float64)
    m = scale.shape[0]
    x = np.eye(m)[target] if isinstance(target, int) else np.asarray(target, dtype=np.float64)
    if x.shape != (m,):
        raise ShapeError(f"target needs {m} entries")
    inverse = np.linalg.inv(scale)
    return GeneratorPair(-(inverse + inverse.T) / 2, inverse @ x)
