"""Projected gradient ascent and regret measurement.

All players update simultaneously from the same profile ``x^t``:
``x_i^{t+1} = proj(x_i^t + eta_t grad_i u_i(x^t))``. A trajectory records the
T profiles played, ``x^1`` through ``x^T``.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
import logging
import math
import string
from typing import Any

import numpy as np
from scipy.integrate import simpson

from semicoarse.errors import DomainError, PreconditionError, ShapeError, UnsupportedScalingError, UsageError
from semicoarse.game import FloatArray, NormalFormGame, Profile, check_profile, uniform_profile
from semicoarse.generators import rps_basis
from semicoarse.transforms import TransformMatrix, enumerate_canonical


logger = logging.getLogger(__name__)

KKT_TOLERANCE = 1e-10
MIN_QUADRATURE_POINTS = 2**8 + 1
EXACT_SUM_ROUNDS = 10**6


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    INVERSE_SQRT = "inverse-sqrt"
    POWER = "power"
    HORIZON = "horizon"


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``eta_t = C t^-alpha``; the horizon kind is the constant ``C / sqrt(T)``."""

    kind: ScheduleKind
    C: float
    alpha: float = 0.0
    horizon: int | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.C) and self.C > 0):
            raise DomainError(f"step scale C must be positive, got {self.C}")
        if not 0 <= self.alpha < 1:
            raise DomainError(f"step exponent must lie in [0, 1), got {self.alpha}")
        if self.kind is ScheduleKind.HORIZON and (self.horizon is None or self.horizon < 1):
            raise DomainError("horizon schedule needs a horizon T >= 1")

    @classmethod
    def constant(cls, C: float) -> StepSchedule:
        return cls(ScheduleKind.CONSTANT, C)

    @classmethod
    def inverse_sqrt(cls, C: float) -> StepSchedule:
        return cls(ScheduleKind.INVERSE_SQRT, C, 0.5)

    @classmethod
    def power(cls, C: float, alpha: float) -> StepSchedule:
        return cls(ScheduleKind.POWER, C, alpha)

    @classmethod
    def for_horizon(cls, C: float, horizon: int) -> StepSchedule:
        return cls(ScheduleKind.HORIZON, C, 0.0, horizon)

    @classmethod
    def parse(cls, text: str) -> StepSchedule:
        """Parse ``constant:C``, ``inverse-sqrt:C``, ``power:C:alpha`` or ``horizon:C:T``."""
        kind, *args = text.split(":")
        try:
            values = [float(arg) for arg in args]
            if kind == "constant" and len(values) == 1:
                return cls.constant(values[0])
            if kind == "inverse-sqrt" and len(values) == 1:
                return cls.inverse_sqrt(values[0])
            if kind == "power" and len(values) == 2:
                return cls.power(values[0], values[1])
            if kind == "horizon" and len(values) == 2:
                return cls.for_horizon(values[0], int(values[1]))
        except ValueError as e:
            raise UsageError(f"bad step schedule {text!r}: {e}") from e
        raise UsageError(f"bad step schedule {text!r} (constant:C, inverse-sqrt:C, power:C:alpha, horizon:C:T)")

    def eta(self, t: int) -> float:
        """Step size of round t (1-based)."""
        if t < 1:
            raise DomainError("rounds are numbered from 1")
        if self.kind is ScheduleKind.HORIZON:
            return self.C / math.sqrt(float(self.horizon or 1))
        return self.C * float(t) ** -self.alpha

    def etas(self, rounds: int, start: int = 1) -> FloatArray:
        """Step sizes of rounds ``start .. start + rounds - 1``."""
        t = np.arange(start, start + rounds, dtype=np.float64)
        if self.kind is ScheduleKind.HORIZON:
            return np.full(rounds, self.C / math.sqrt(float(self.horizon or 1)))
        return np.asarray(self.C * t**-self.alpha, dtype=np.float64)

    def total(self, rounds: int, start: int = 1) -> float:
        """``sum_{t=start}^{start+rounds-1} eta_t``; long tails use the Euler-Maclaurin expansion."""
        if rounds <= 0:
            return 0.0
        if self.kind is ScheduleKind.HORIZON or self.alpha == 0:
            return rounds * self.eta(start)
        if rounds <= EXACT_SUM_ROUNDS:
            return math.fsum(self.etas(rounds, start).tolist())
        head = math.fsum(self.etas(EXACT_SUM_ROUNDS, start).tolist())
        a, b = float(start + EXACT_SUM_ROUNDS - 1), float(start + rounds - 1)
        beta = 1 - self.alpha
        integral = self.C * (b**beta - a**beta) / beta
        ends = (self.eta(int(b)) - self.eta(int(a))) / 2
        slopes = -self.alpha * self.C * (b ** (-self.alpha - 1) - a ** (-self.alpha - 1)) / 12
        return head + integral + ends + slopes

    def describe(self) -> str:
        if self.kind is ScheduleKind.HORIZON:
            return f"horizon:{self.C:g}:{self.horizon}"
        if self.kind is ScheduleKind.POWER:
            return f"power:{self.C:g}:{self.alpha:g}"
        return f"{self.kind.value}:{self.C:g}"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Strategy histories, one ``(T, |A_i|)`` array per player."""

    game: NormalFormGame
    strategies: tuple[FloatArray, ...]
    schedules: tuple[StepSchedule, ...]
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return int(self.strategies[0].shape[0])

    def profile(self, t: int) -> Profile:
        """Profile of round t (1-based)."""
        return tuple(history[t - 1] for history in self.strategies)

    def profiles(self) -> Iterator[Profile]:
        for t in range(1, self.rounds + 1):
            yield self.profile(t)


# projections


def project_weighted_simplex(v: Any, s: Any | None = None) -> FloatArray:
    """Euclidean projection onto ``{y >= 0 : s . y = 1}`` for positive weights s.

    The solution is ``max(v - tau s, 0)``; the threshold is found by sorting the
    ratios ``v / s`` and scanning prefix sums.
    """
    vector = np.asarray(v, dtype=np.float64)
    if vector.ndim != 1 or vector.size == 0 or not np.all(np.isfinite(vector)):
        raise ShapeError("projection needs a finite nonempty vector")
    weights = np.ones_like(vector) if s is None else np.asarray(s, dtype=np.float64)
    if weights.shape != vector.shape or np.any(weights <= 0):
        raise ShapeError("projection weights must be positive and match the vector")
    order = np.argsort(-(vector / weights), kind="stable")
    sv = np.cumsum(weights[order] * vector[order])
    ss = np.cumsum(weights[order] ** 2)
    thresholds = (sv - 1.0) / ss
    active = np.flatnonzero(vector[order] / weights[order] > thresholds)
    tau = thresholds[active[-1]]
    return np.asarray(np.maximum(vector - tau * weights, 0.0), dtype=np.float64)


def project_simplex(v: Any) -> FloatArray:
    """Euclidean projection onto the probability simplex."""
    return project_weighted_simplex(v)


def simplex_kkt_residual(y: Any, v: Any, s: Any | None = None) -> float:
    """Largest KKT violation of ``y`` as the projection of ``v`` onto ``{y >= 0 : s . y = 1}``."""
    point = np.asarray(y, dtype=np.float64)
    target = np.asarray(v, dtype=np.float64)
    weights = np.ones_like(point) if s is None else np.asarray(s, dtype=np.float64)
    support = point > 0
    if not support.any():
        return math.inf
    tau = float(np.mean((target[support] - point[support]) / weights[support]))
    stationarity = np.abs(target[support] - point[support] - tau * weights[support])
    multipliers = np.maximum(target[~support] - tau * weights[~support], 0.0)
    return max(
        abs(float(weights @ point) - 1.0),
        float(np.max(-point, initial=0.0)),
        float(np.max(stationarity, initial=0.0)),
        float(np.max(multipliers, initial=0.0)),
    )


# gradients along a trajectory


def _axes(game: NormalFormGame) -> str:
    return string.ascii_lowercase[1 : game.num_players + 1]


def gradient_history(game: NormalFormGame, strategies: Sequence[FloatArray], player: int) -> FloatArray:
    """Per round, the utility gradient of ``player``: shape ``(T, |A_player|)``."""
    axes = _axes(game)
    others = [j for j in range(game.num_players) if j != player]
    if not others:
        return np.asarray(np.broadcast_to(game.utilities[player], strategies[player].shape), dtype=np.float64)
    spec = axes + "," + ",".join("t" + axes[j] for j in others) + "->t" + axes[player]
    operands = [game.utilities[player], *(strategies[j] for j in others)]
    return np.asarray(np.einsum(spec, *operands, optimize=True), dtype=np.float64)


def utility_history(game: NormalFormGame, strategies: Sequence[FloatArray], player: int) -> FloatArray:
    """Per round, the expected utility of ``player`` under the recorded profile."""
    axes = _axes(game)
    spec = axes + "," + ",".join("t" + axis for axis in axes) + "->t"
    return np.asarray(np.einsum(spec, game.utilities[player], *strategies, optimize=True), dtype=np.float64)


# dynamics


def _schedules(game: NormalFormGame, schedules: StepSchedule | Sequence[StepSchedule]) -> tuple[StepSchedule, ...]:
    if isinstance(schedules, StepSchedule):
        return (schedules,) * game.num_players
    if len(schedules) != game.num_players:
        raise ShapeError(f"need {game.num_players} step schedules, got {len(schedules)}")
    return tuple(schedules)


def random_interior_profile(game: NormalFormGame, seed: int) -> Profile:
    """Seeded Dirichlet(1) starting profile."""
    rng = np.random.default_rng(seed)
    return tuple(rng.dirichlet(np.ones(size)) for size in game.shape)


def _gradients(game: NormalFormGame, profile: Sequence[FloatArray]) -> list[FloatArray]:
    rows = [x[None, :] for x in profile]
    return [gradient_history(game, rows, player)[0] for player in range(game.num_players)]


def pga_run(
    game: NormalFormGame,
    init: Sequence[Any] | None,
    schedules: StepSchedule | Sequence[StepSchedule],
    rounds: int,
) -> Trajectory:
    """Run simultaneous projected gradient ascent for ``rounds`` rounds (default start: uniform)."""
    return _run(game, init, _schedules(game, schedules), rounds, None)


def scaled_pga_run(
    game: NormalFormGame,
    scalings: Sequence[Any],
    schedules: StepSchedule | Sequence[StepSchedule],
    rounds: int,
    init: Sequence[Any] | None = None,
) -> Trajectory:
    """Gradient ascent over the scaled sets ``P_i^-1 Delta(A_i)`` with ``P_i = diag(sqrt(w_i))``.

    Each entry of ``scalings`` is a weight vector w_i or a diagonal matrix P_i.
    Players keep ``y_i`` in ``{y >= 0 : sqrt(w_i) . y = 1}``; the trajectory
    records ``x_i = P_i y_i``.

    Raises:
        UnsupportedScalingError: A scaling matrix is not diagonal
    """
    if len(scalings) != game.num_players:
        raise ShapeError(f"need {game.num_players} scalings, got {len(scalings)}")
    roots = []
    for player, scaling in enumerate(scalings):
        array = np.asarray(scaling, dtype=np.float64)
        if array.ndim == 2:
            if np.any(array != np.diag(np.diag(array))):
                raise UnsupportedScalingError(f"scaling of player {player + 1} is not diagonal")
            root = np.diag(array).copy()
        else:
            root = np.sqrt(array)
        if root.shape != (game.shape[player],) or np.any(root <= 0):
            raise ShapeError(f"scaling of player {player + 1} must be positive with {game.shape[player]} entries")
        roots.append(root)
    return _run(game, init, _schedules(game, schedules), rounds, tuple(roots))


def _run(
    game: NormalFormGame,
    init: Sequence[Any] | None,
    schedules: tuple[StepSchedule, ...],
    rounds: int,
    roots: tuple[FloatArray, ...] | None,
) -> Trajectory:
    if rounds < 1:
        raise DomainError("need at least one round")
    profile = list(check_profile(game, init) if init is not None else uniform_profile(game))
    histories = [np.empty((rounds, size)) for size in game.shape]
    steps = [schedule.etas(rounds) for schedule in schedules]
    worst_kkt = 0.0
    for t in range(rounds):
        for player, x in enumerate(profile):
            histories[player][t] = x
        if t == rounds - 1:
            break
        gradients = _gradients(game, profile)
        for player, (x, gradient) in enumerate(zip(profile, gradients, strict=True)):
            eta = steps[player][t]
            if roots is None:
                profile[player] = project_simplex(x + eta * gradient)
                continue
            root = roots[player]
            target = x / root + eta * root * gradient
            y = project_weighted_simplex(target, root)
            worst_kkt = max(worst_kkt, simplex_kkt_residual(y, target, root))
            profile[player] = root * y
    meta: dict[str, Any] = {"schedules": [s.describe() for s in schedules]}
    if roots is not None:
        meta["max_kkt_residual"] = worst_kkt
        if worst_kkt > KKT_TOLERANCE:
            logger.warning("weighted projection KKT residual reached %.3g", worst_kkt)
        meta["scalings"] = [(root**2).tolist() for root in roots]
    logger.debug("ran %d rounds of %s gradient ascent", rounds, "scaled" if roots is not None else "projected")
    return Trajectory(game, tuple(histories), schedules, meta)


# regret


def _check_transform(game: NormalFormGame, player: int, matrix: Any) -> FloatArray:
    P = matrix.matrix if isinstance(matrix, TransformMatrix) else np.asarray(matrix, dtype=np.float64)
    size = game.shape[player]
    if P.shape != (size, size):
        raise ShapeError(f"transform has shape {P.shape}, expected ({size}, {size})")
    return P


def regret_vs_transform(trajectory: Trajectory, player: int, transform: Any) -> float:
    """Average utility gain ``(1/T) sum_t [u_i(P x_i^t, x_-i^t) - u_i(x^t)]``."""
    game = trajectory.game
    P = _check_transform(game, player, transform)
    modified = list(trajectory.strategies)
    modified[player] = trajectory.strategies[player] @ P.T
    gain = utility_history(game, modified, player) - utility_history(game, trajectory.strategies, player)
    return float(gain.mean())


def regret_vs_transform_field(trajectory: Trajectory, player: int, field_matrix: Any) -> float:
    """Average ``(1/T) sum_t <M x_i^t, grad_i u_i(x^t)>`` for a field matrix M (``P - I`` for a transform)."""
    game = trajectory.game
    M = _check_transform(game, player, field_matrix)
    gradients = gradient_history(game, trajectory.strategies, player)
    moved = trajectory.strategies[player] @ M.T
    return float(np.einsum("ta,ta->t", moved, gradients).mean())


def external_regret(trajectory: Trajectory, player: int) -> float:
    """Best fixed-action regret of ``player`` along the trajectory."""
    gradients = gradient_history(trajectory.game, trajectory.strategies, player)
    realized = np.einsum("ta,ta->t", trajectory.strategies[player], gradients).mean()
    return float(gradients.mean(axis=0).max() - realized)


@dataclass(frozen=True)
class PlayerRegret:
    """Largest canonical-transform regret of one player, plus external regret."""

    player: int
    worst_label: str
    worst_regret: float
    external: float
    by_transform: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "player": self.player + 1,
            "worst_transform": self.worst_label,
            "worst_regret": self.worst_regret,
            "external_regret": self.external,
        }


def canonical_regret_report(trajectory: Trajectory, max_cycle_len: int | None = None) -> list[PlayerRegret]:
    """Regret of every player against each canonical transform of their action set."""
    report = []
    for player, size in enumerate(trajectory.game.shape):
        family = enumerate_canonical(size, max_cycle_len and min(max_cycle_len, size)) if size > 1 else []
        values = {t.label: regret_vs_transform(trajectory, player, t) for t in family}
        worst = max(values, key=lambda label: values[label], default="")
        report.append(PlayerRegret(player, worst, values.get(worst, 0.0), external_regret(trajectory, player), values))
    return report


@dataclass(frozen=True)
class RegretBoundParams:
    """Constants of the regret bound: |h| <= M, gradient bound G_h, Lipschitz modulus L_h, per-player G_i, L_i."""

    M: float
    G_h: float
    L_h: float
    G: tuple[float, ...]
    L: tuple[float, ...]

    def __post_init__(self) -> None:
        values = (self.M, self.G_h, self.L_h, *self.G, *self.L)
        if not self.G or len(self.G) != len(self.L) or any(not v > 0 for v in values):
            raise DomainError("regret bound constants must be positive with one G_i and L_i per player")


def regret_bound(params: RegretBoundParams, schedule: StepSchedule, rounds: int, delta: float | None = None) -> float:
    """Evaluate the projected-gradient regret bound against a tangential function.

    With ``delta`` omitted the coefficient of delta as delta -> 0 is returned:
    ``(2M/T)(1/eta_T + 1/eta_1) + (sum_t eta_t / T) sum_i (G_i^2 L_h / 2 + G_i L_h sum_j G_j)``.
    With ``delta`` the full bound adds ``delta^2 G_h^2 sum_i L_i / (2T)``.
    """
    if rounds < 1:
        raise DomainError("need at least one round")
    T = float(rounds)
    total_g = sum(params.G)
    drift = sum(g * g * params.L_h / 2 + g * params.L_h * total_g for g in params.G)
    linear = 2 * params.M / T * (1 / schedule.eta(rounds) + 1 / schedule.eta(1)) + schedule.total(rounds) / T * drift
    if delta is None:
        return float(linear)
    return float(delta * linear + delta**2 * params.G_h**2 * sum(params.L) / (2 * T))


def regret_epsilon(M: float, C: float, rounds: int) -> float:
    """``(4M/C + 2 max(1, C)) / sqrt(T)`` for step sizes ``C / sqrt(t)``."""
    return (4 * M / C + 2 * max(1.0, C)) / math.sqrt(rounds)


def estimate_regret_params(
    game: NormalFormGame, M: float = 1.0, G_h: float = 1.0, L_h: float = 1.0
) -> RegretBoundParams:
    """Bound G_i by ``sqrt(|A_i|) max|u_i|`` and L_i by ``sqrt(max(1, N-1))`` times the Frobenius norm of u_i."""
    spread = math.sqrt(max(1, game.num_players - 1))
    G = tuple(
        math.sqrt(size) * float(np.abs(u).max()) or 1e-12 for size, u in zip(game.shape, game.utilities, strict=True)
    )
    L = tuple(spread * float(np.linalg.norm(u)) or 1e-12 for u in game.utilities)
    return RegretBoundParams(M, G_h, L_h, G, L)


# counterexamples


@dataclass(frozen=True)
class MeanBasedReport:
    """Outcome of the two-phase reward sequence against the experts-setting update."""

    rounds: int
    extra_rounds: int
    final_mass: float
    mean_gap: float
    min_growth_ratio: float
    violated: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "T": self.rounds,
            "K": self.extra_rounds,
            "final_mass": self.final_mass,
            "mean_gap": self.mean_gap,
            "min_growth_ratio": self.min_growth_ratio,
            "violated": self.violated,
        }


def saturation_rounds(C: float, alpha: float, rounds: int) -> int:
    """Smallest K with ``sum_{t=T+1}^{T+K} C t^-alpha / 2 >= 1``."""
    total, k = 0.0, 0
    while total < 1.0:
        k += 1
        total += C * float(rounds + k) ** -alpha / 2
    return k


def mean_based_counterexample(
    num_actions: int,
    C: float,
    alpha: float,
    rounds: int,
    favored: int = 0,
) -> MeanBasedReport:
    """Reward every action but ``favored`` for T rounds, then only ``favored`` for K rounds.

    A mean-based learner with threshold below 1/2 keeps at most 1/2 on the
    favored action while its running mean trails; ``mean_gap`` is the smallest
    lead of another action's running mean over the whole sequence, which ends at
    ``(T-K)/(T+K)``. Projected gradient ascent ends with all its mass there.

    Raises:
        PreconditionError: T too small for K <= T/4
    """
    if num_actions < 2 or not 0 <= favored < num_actions:
        raise DomainError("need at least two actions and a valid favored action")
    schedule = StepSchedule.power(C, alpha)
    K = saturation_rounds(C, alpha, rounds)
    if 4 * K > rounds:
        raise PreconditionError(f"T = {rounds} too small: saturation needs K = {K} > T/4 rounds")
    x = np.full(num_actions, 1.0 / num_actions)
    penalized = np.ones(num_actions)
    penalized[favored] = 0.0
    rewarded = np.eye(num_actions)[favored]
    totals = np.zeros(num_actions)
    others = np.arange(num_actions) != favored
    mean_gap = math.inf
    for t in range(1, rounds + 1):
        x = project_simplex(x + schedule.eta(t) * penalized)
        totals += penalized
        mean_gap = min(mean_gap, float(totals[others].max() - totals[favored]) / t)
    min_ratio = math.inf
    for t in range(rounds + 1, rounds + K + 1):
        eta = schedule.eta(t)
        totals += rewarded
        mean_gap = min(mean_gap, float(totals[others].max() - totals[favored]) / t)
        before = x[favored]
        x = project_simplex(x + eta * rewarded)
        if x[favored] < 1.0:
            min_ratio = min(min_ratio, (x[favored] - before) / eta)
    final = float(x[favored])
    logger.debug("mean-based counterexample: T=%d K=%d final mass %.17g", rounds, K, final)
    return MeanBasedReport(rounds, K, final, mean_gap, min_ratio, mean_gap > 0.5 and final > 0.5)


def _cyclic_point(epsilon: float, t: FloatArray) -> FloatArray:
    v1, v2, v3 = rps_basis()
    phase = t * math.sqrt(3.0)
    return np.asarray(
        v3[None, :] / math.sqrt(3.0) + epsilon * (np.cos(phase)[:, None] * v1 + np.sin(phase)[:, None] * v2),
        dtype=np.float64,
    )


def rps_cycle_regret(
    epsilon: float,
    transform: TransformMatrix | FloatArray,
    points: int = MIN_QUADRATURE_POINTS,
    triplet: Sequence[int] = (0, 1, 2),
) -> tuple[float, float]:
    """Regret against ``transform`` along the periodic rock-paper-scissors orbit.

    The orbit lives on ``triplet``; every other action earns 0 against it, so only
    the triplet block of P enters and mass sent outside the triplet counts as
    moving to a zero-payoff action.

    Returns:
        The Simpson quadrature of ``<(P - I) x_i(t), grad_i u_i(x(t))>`` averaged over
        one period, and the closed form ``(eps^2 sqrt(3) / 2) tr[(v1 v2^T - v2 v1^T)(P - I)]``

    Raises:
        DomainError: Radius outside (0, 0.2], too few points or a bad triplet
        ShapeError: Fewer than three actions
        ValidationError: P is not left-stochastic
    """
    if not 0 < epsilon <= 0.2:
        raise DomainError("orbit radius must lie in (0, 0.2]")
    if not isinstance(transform, TransformMatrix):
        transform = TransformMatrix(np.asarray(transform, dtype=np.float64))
    if transform.size < 3:
        raise ShapeError(f"the orbit needs at least three actions, got {transform.size}")
    members = [int(a) for a in triplet]
    if len(members) != 3 or len(set(members)) != 3 or not all(0 <= a < transform.size for a in members):
        raise DomainError(f"triplet must be three distinct actions in 0..{transform.size - 1}, got {members}")
    if points < MIN_QUADRATURE_POINTS:
        raise DomainError(f"need at least {MIN_QUADRATURE_POINTS} quadrature points")
    points += 1 - points % 2
    shift = transform.matrix[np.ix_(members, members)] - np.eye(3)
    v1, v2, _ = rps_basis()
    rotation = np.outer(v1, v2) - np.outer(v2, v1)
    period = 2 * math.pi / math.sqrt(3.0)
    t = np.linspace(0.0, period, points)
    x = _cyclic_point(epsilon, t)
    gradients = -math.sqrt(3.0) * x @ rotation.T
    integrand = np.einsum("ta,ta->t", x @ shift.T, gradients)
    numeric = float(simpson(integrand, x=t)) / period
    closed = epsilon**2 * math.sqrt(3.0) / 2 * float(np.trace(rotation @ shift))
    return numeric, closed


def cyclic_permutation(m: int, cycle: Sequence[int]) -> TransformMatrix:
    """Permutation sending each cycle member to its successor."""
    matrix = np.eye(m)
    members = list(cycle)
    for position, a in enumerate(members):
        matrix[:, a] = 0.0
        matrix[members[(position + 1) % len(members)], a] = 1.0
    return TransformMatrix(matrix, "perm(" + ",".join(str(a) for a in members) + ")")


def rps_regret_table(epsilon: float, points: int = MIN_QUADRATURE_POINTS) -> list[dict[str, Any]]:
    """Orbit regret of every canonical three-action transform and both cyclic permutations."""
    family = [*enumerate_canonical(3), cyclic_permutation(3, (0, 1, 2)), cyclic_permutation(3, (0, 2, 1))]
    rows = []
    for transform in family:
        numeric, closed = rps_cycle_regret(epsilon, transform, points)
        rows.append({"transform": transform.label, "numeric": numeric, "closed_form": closed})
    return rows


def trajectory_rows(trajectory: Trajectory, every: int = 1) -> list[tuple[int, int, str, float]]:
    """CSV rows ``(t, player, action, probability)`` for every ``every``-th round."""
    if every < 1:
        raise DomainError("sampling stride must be positive")
    rows = []
    for t in range(0, trajectory.rounds, every):
        for player, history in enumerate(trajectory.strategies):
            for label, p in zip(trajectory.game.labels(player), history[t], strict=True):
                rows.append((t + 1, player + 1, label, float(p)))
    return rows

