"""Bertrand competition and first-price auction analyses.

Firms with the minimum cost index ``c`` are the low-cost firms. The dual
certificate combines, for each of them, the subset modifications onto
``B^k = {c+1, ..., c+k}`` with multipliers ``epsilon_k``, and for every other
firm the modification lifting below-cost prices to at-or-above-cost prices
with multiplier ``delta_i``. Its pointwise gain dominates the indicator of
non-Nash outcomes, which bounds the time-average mass gradient ascent puts
on non-equilibrium play.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
import logging
import math
from typing import Any

import numpy as np

from semicoarse.dynamics import ScheduleKind, StepSchedule
from semicoarse.equilibria import (
    LyapunovCertificate,
    build_cce_lp,
    build_dual_lyapunov_lp,
    build_semicoarse_extension_lp,
    field_gain_table,
    not_nash_objective,
    solve_bundle,
    squared_distance_objective,
    squared_value_objective,
)
from semicoarse.errors import CertificateUnavailableError, DomainError, PreconditionError, ShapeError, ValidationError
from semicoarse.game import FloatArray, NormalFormGame, PriceGrid, enumerate_pure_nash, nash_mask
from semicoarse.generators import demand_samples, make_bertrand, make_first_price
from semicoarse.lp import SolverOptions
from semicoarse.reports import ConstraintCheck, VerificationReport
from semicoarse.transforms import GeneratorPair, generator_from_field, subset_transform


logger = logging.getLogger(__name__)

CONCAVITY_TOLERANCE = 1e-12
POINTWISE_TOLERANCE = 1e-9
DEFAULT_MAX_GRID = 15


def _profits(demand: FloatArray, c: int, n: int) -> FloatArray:
    return np.array([float(Fraction(k - c, n)) * demand[k] for k in range(n + 1)])


def _check_grid_demand(demand: Any, n: int) -> FloatArray:
    samples = np.asarray(demand, dtype=np.float64)
    if samples.shape != (n + 1,):
        raise ShapeError(f"demand needs {n + 1} grid samples, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)) or np.any(samples < 0) or np.any(samples[:-1] <= 0):
        raise DomainError("demand must be finite, nonnegative, and positive below price 1")
    return samples


def monopoly_index(demand: Any, c: int, n: int) -> int:
    """Smallest grid index maximizing ``(k - c)/n D(k/n)``."""
    samples = _check_grid_demand(demand, n)
    profits = _profits(samples, c, n)
    best = profits.max()
    return int(np.flatnonzero(profits >= best - CONCAVITY_TOLERANCE * max(1.0, abs(best)))[0])


def profit_concavity(demand: Any, c: int, n: int) -> str:
    """Classify ``(p - c/n) D(p)`` on ``{c/n, ..., 1}`` by second differences: strict, weak or none."""
    samples = _check_grid_demand(demand, n)
    profits = _profits(samples, c, n)[c:]
    if profits.size < 3:
        return "strict"
    second = profits[2:] - 2 * profits[1:-1] + profits[:-2]
    if np.all(second < -CONCAVITY_TOLERANCE):
        return "strict"
    if np.all(second <= CONCAVITY_TOLERANCE):
        return "weak"
    return "none"


@dataclass(frozen=True)
class DualCertificate:
    """Multipliers proving that semicoarse equilibria of a Bertrand game sit on Nash outcomes.

    Attributes:
        epsilon: ``epsilon_k`` for k = 1..n-c (zero once c + k reaches the monopoly index)
        delta: Per firm, ``delta_i`` (zero for low-cost firms)
        n: Grid resolution
        costs: Cost index per firm
        m: Number of low-cost firms
        ell_star: Monopoly index
        demand: Demand samples
        scale: Common factor applied to every multiplier
    """

    epsilon: tuple[float, ...]
    delta: tuple[float, ...]
    n: int
    costs: tuple[int, ...]
    m: int
    ell_star: int
    demand: tuple[float, ...]
    scale: float = 1.0

    @property
    def min_cost(self) -> int:
        return min(self.costs)

    @property
    def low_cost_firms(self) -> list[int]:
        return [i for i, c in enumerate(self.costs) if c == self.min_cost]

    @property
    def epsilon_total(self) -> float:
        return self.scale * math.fsum(self.epsilon)

    def multiplier(self, firm: int) -> float:
        """Effective multiplier carried by a firm's part of the certificate."""
        if self.costs[firm] == self.min_cost:
            return self.epsilon_total
        return self.scale * self.delta[firm]


def build_dual_certificate(n: int, costs: Sequence[int], demand: Any, normalize: bool = True) -> DualCertificate:
    """Construct the explicit multipliers for a Bertrand game.

    ``epsilon_1 = max(1 / (m D((c+1)/n)/n - 2 D((c+2)/n)/n), nN / D((c+1)/n))``,
    ``delta_i = nN / D((c_i - 1)/n)``, and for ``2 <= l`` with ``c + l`` below the
    monopoly index, ``epsilon_l`` follows the recursion that keeps the tie case
    nonnegative. With ``normalize`` every multiplier is scaled so that the
    smallest positive gain over non-Nash outcomes is at least 1.

    Raises:
        CertificateUnavailableError: Fewer than two low-cost firms, no room on the grid,
            a nonpositive denominator, or profits not concave enough
    """
    samples = _check_grid_demand(demand, n)
    firm_costs = tuple(int(c) for c in costs)
    if any(not 0 <= c <= n for c in firm_costs):
        raise ValidationError(f"cost indices must lie in 0..{n}")
    c = min(firm_costs)
    m = sum(1 for cost in firm_costs if cost == c)
    N = len(firm_costs)
    if m < 2:
        raise CertificateUnavailableError("need at least two firms with the minimum cost")
    if c + 2 > n:
        raise CertificateUnavailableError("minimum cost leaves fewer than two prices above it")
    concavity = profit_concavity(samples, c, n)
    if concavity == "none" or (m == 2 and concavity != "strict"):
        raise CertificateUnavailableError(f"profit is {concavity}ly concave; need strict (m = 2) or weak (m >= 3)")

    def revenue(k: int) -> float:
        return float(Fraction(k, n)) * samples[c + k]

    base = m * revenue(1) - revenue(2)
    if base <= 0:
        raise CertificateUnavailableError("base-case denominator is not positive")
    ell_star = monopoly_index(samples, c, n)
    epsilon = [max(1.0 / base, n * N / samples[c + 1])]
    for ell in range(2, n - c + 1):
        if c + ell >= ell_star or c + ell + 1 > n:
            epsilon.append(0.0)
            continue
        denominator = m / ell * math.fsum(revenue(k) for k in range(1, ell + 1)) - revenue(ell + 1)
        if denominator <= 0:
            raise CertificateUnavailableError(f"recursion denominator at l = {ell} is not positive")
        epsilon.append(math.fsum(epsilon) * (revenue(ell + 1) - revenue(ell)) / denominator)
    delta = tuple(0.0 if cost == c else n * N / samples[cost - 1] for cost in firm_costs)
    certificate = DualCertificate(tuple(epsilon), delta, n, firm_costs, m, ell_star, tuple(samples.tolist()))
    if normalize:
        certificate = normalize_certificate(certificate)
    return certificate


def normalize_certificate(certificate: DualCertificate) -> DualCertificate:
    """Scale the multipliers so the smallest positive non-Nash gain reaches 1."""
    game = certificate_game(certificate)
    lhs = certificate_lhs(game, certificate)
    positive = lhs[~nash_mask(game) & (lhs > POINTWISE_TOLERANCE)]
    if positive.size == 0 or positive.min() >= 1.0:
        return certificate
    factor = 1.0 / float(positive.min())
    logger.debug("scaling certificate by %.6g", factor)
    return DualCertificate(
        certificate.epsilon,
        certificate.delta,
        certificate.n,
        certificate.costs,
        certificate.m,
        certificate.ell_star,
        certificate.demand,
        certificate.scale * factor,
    )


def certificate_game(certificate: DualCertificate) -> NormalFormGame:
    return make_bertrand(certificate.n, certificate.costs, np.array(certificate.demand))


def certificate_fields(certificate: DualCertificate) -> tuple[FloatArray, ...]:
    """Per firm, the field matrix ``sum_k eps_k (P_k - I)`` or ``delta_i (R_i - I)``, scale included."""
    size = certificate.n + 1
    c = certificate.min_cost
    identity = np.eye(size)
    low = np.zeros((size, size))
    for k, eps in enumerate(certificate.epsilon, start=1):
        if eps:
            outside = [a for a in range(size) if not c + 1 <= a <= c + k]
            low += eps * (subset_transform(size, outside).matrix - identity)
    fields = []
    for firm, cost in enumerate(certificate.costs):
        if cost == c:
            fields.append(certificate.scale * low)
        else:
            lift = subset_transform(size, range(cost)).matrix - identity
            fields.append(certificate.scale * certificate.delta[firm] * lift)
    return tuple(fields)


def certificate_generators(certificate: DualCertificate) -> tuple[GeneratorPair, ...]:
    return tuple(generator_from_field(M) for M in certificate_fields(certificate))


def certificate_to_lyapunov(certificate: DualCertificate, game: NormalFormGame | None = None) -> LyapunovCertificate:
    """The certificate as a dual Lyapunov point with gamma = 0."""
    if game is not None:
        _check_matches(game, certificate)
    return LyapunovCertificate(0.0, certificate_generators(certificate))


def certificate_to_dict(certificate: DualCertificate) -> dict[str, Any]:
    return {
        "epsilon": list(certificate.epsilon),
        "delta": list(certificate.delta),
        "ell_star": certificate.ell_star,
        "m": certificate.m,
        "n": certificate.n,
        "costs": list(certificate.costs),
        "scale": certificate.scale,
        "epsilon_total": certificate.epsilon_total,
    }


def _bertrand_params(game: NormalFormGame) -> tuple[int, tuple[int, ...], FloatArray]:
    if game.metadata.get("kind") != "bertrand":
        raise ValidationError("game carries no Bertrand metadata")
    return int(game.metadata["n"]), tuple(int(c) for c in game.metadata["costs"]), np.array(game.metadata["demand"])


def _check_matches(game: NormalFormGame, certificate: DualCertificate) -> None:
    n, costs, demand = _bertrand_params(game)
    if n != certificate.n or costs != certificate.costs or not np.array_equal(demand, np.array(certificate.demand)):
        raise ShapeError("certificate was built for a different Bertrand game")


def certificate_lhs(game: NormalFormGame, certificate: DualCertificate) -> FloatArray:
    """Combined deviation gain of the certificate at every price vector."""
    _check_matches(game, certificate)
    fields = certificate_fields(certificate)
    return np.asarray(sum(field_gain_table(game, i, M) for i, M in enumerate(fields)), dtype=np.float64)


def verify_pointwise(
    game: NormalFormGame,
    certificate: DualCertificate,
    d: Any | None = None,
    tolerance: float = POINTWISE_TOLERANCE,
) -> VerificationReport:
    """Check ``LHS(p) >= d(p)`` at every price vector; d defaults to ``1[p is not Nash]``."""
    lhs = certificate_lhs(game, certificate)
    target = not_nash_objective(game) if d is None else np.asarray(d, dtype=np.float64)
    if target.shape != game.shape:
        raise ShapeError(f"objective has shape {target.shape}, expected {game.shape}")
    checks = [
        ConstraintCheck(game.outcome_label(outcome), float(target[outcome] - lhs[outcome]), outcome)
        for outcome in (tuple(int(a) for a in idx) for idx in np.ndindex(*game.shape))
    ]
    return VerificationReport.from_checks("pointwise", tolerance, checks)


# Nash structure


@dataclass(frozen=True)
class NashClassification:
    """Pure Nash outcomes with their structural type, and the outcomes the price structure predicts."""

    labels: dict[tuple[int, ...], str]
    predicted_outcomes: frozenset[tuple[int, ...]]

    @property
    def matches(self) -> bool:
        return frozenset(self.labels) == self.predicted_outcomes

    def counts(self) -> dict[str, int]:
        result: dict[str, int] = {}
        for label in self.labels.values():
            result[label] = result.get(label, 0) + 1
        return result


def _structural_type(outcome: tuple[int, ...], costs: tuple[int, ...], demand: FloatArray) -> str | None:
    c = min(costs)
    low = [p for p, cost in zip(outcome, costs, strict=True) if cost == c]
    high = [(p, cost) for p, cost in zip(outcome, costs, strict=True) if cost != c]
    m = len(low)
    if sum(1 for p in low if p == c) >= 2 and all(p >= c for p in low) and all(p > c for p, _ in high):
        return "type-1"
    if all(p == c + 1 for p in low) and all(p >= c + 1 and (p > c + 1 or cost == c + 1) for p, cost in high):
        return "type-2"
    flat = c + 2 < len(demand) and demand[c + 1] == demand[c + 2]
    exception = m == 2 and flat and all(cost != c + 1 for cost in costs)
    if exception and all(p == c + 2 for p in low) and all(p > c + 2 for p, _ in high):
        return "exception"
    return None


def classify_bertrand_pure_nash(game: NormalFormGame) -> NashClassification:
    """Label each pure Nash outcome by type: two firms at cost, all at cost + 1, or the tie exception.

    Raises:
        ValidationError: The game is not a Bertrand game
    """
    _, costs, demand = _bertrand_params(game)
    labels = {
        outcome: _structural_type(outcome, costs, demand) or "unclassified" for outcome in enumerate_pure_nash(game)
    }
    predicted = frozenset(
        tuple(int(a) for a in outcome)
        for outcome in np.ndindex(*game.shape)
        if _structural_type(tuple(int(a) for a in outcome), costs, demand) is not None
    )
    return NashClassification(labels, predicted)


# convergence bounds


@dataclass(frozen=True)
class ConvergenceBound:
    """A time-average or finite-iterate convergence guarantee."""

    T: int
    schedule: str
    n: int
    N: int
    m: int
    U: float
    bound: float
    K: int | None = None
    epsilon: float | None = None
    illustrative_k: int | None = None
    method: str = "time-average"
    raw_bound: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {key: value for key, value in self.__dict__.items() if value is not None}


def _at_horizon(schedule: StepSchedule, rounds: int) -> StepSchedule:
    if schedule.kind is ScheduleKind.HORIZON:
        return StepSchedule.for_horizon(schedule.C, rounds)
    return schedule


def _step_term(schedule: StepSchedule, rounds: int) -> float:
    return 1 / schedule.eta(rounds) + 1 / schedule.eta(1) + schedule.total(rounds)


def time_avg_bound(
    certificate: DualCertificate,
    schedules: StepSchedule | Sequence[StepSchedule],
    rounds: int,
    U: float,
) -> ConvergenceBound:
    """Bound on the time-average probability of non-Nash play after T rounds.

    ``(1/T) sum_i (1/eta_iT + 1/eta_i1 + sum_t eta_it) w_i (4 + 3 (n+1)^2 U^2 / 2)`` with
    ``w_i = sum_k eps_k`` for low-cost firms and ``delta_i`` otherwise. Horizon
    schedules are re-targeted to T.

    ``bound`` uses the multipliers with the normalization scale applied;
    ``raw_bound`` uses the unscaled ones, ``eps_1 = nN`` under inelastic demand.
    """
    N = len(certificate.costs)
    per_firm = (schedules,) * N if isinstance(schedules, StepSchedule) else tuple(schedules)
    if len(per_firm) != N:
        raise ShapeError(f"need {N} schedules, got {len(per_firm)}")
    if rounds < 1 or U <= 0:
        raise DomainError("need T >= 1 and a positive utility bound")
    factor = 4 + 3 * (certificate.n + 1) ** 2 * U**2 / 2
    total = math.fsum(
        _step_term(_at_horizon(schedule, rounds), rounds) * certificate.multiplier(firm) * factor
        for firm, schedule in enumerate(per_firm)
    )
    describe = per_firm[0].describe() if len(set(per_firm)) == 1 else "per-firm"
    return ConvergenceBound(
        rounds, describe, certificate.n, N, certificate.m, U, total / rounds,
        raw_bound=total / (rounds * certificate.scale),
    )


def finite_iterate_bound(
    n: int,
    N: int,
    m: int,
    demand: Any,
    epsilon: float,
    schedule: StepSchedule,
    certificate: DualCertificate | None = None,
    U: float = 2.0,
) -> ConvergenceBound:
    """Rounds T + K after which gradient ascent sits on a Nash equilibrium.

    Without a certificate T is the closed form ``ceil(9 m^2 N^2 n^10 / eps^2)``;
    with one, T is the smallest horizon where :func:`time_avg_bound` drops to eps.
    K is the smallest count with ``sum_{t=T+1}^{T+K} eta_t >= 4 N eps / D(1/n)``.

    Raises:
        PreconditionError: eps is not below ``D(1/n) / (2 (N + D(1/n)))``
    """
    samples = _check_grid_demand(demand, n)
    low_demand = float(samples[1])
    if not 0 < epsilon < low_demand / (2 * (N + low_demand)):
        limit = low_demand / (2 * (N + low_demand))
        raise PreconditionError(f"epsilon must lie below D(1/n) / (2(N + D(1/n))) = {limit:.6g}")
    if certificate is None:
        rounds = math.ceil(Fraction(9 * m * m * N * N * n**10) / Fraction(epsilon) ** 2)
        method = "closed-form"
    else:
        rounds = _invert_time_avg(certificate, schedule, U, epsilon)
        method = "inverted"
    target = 4 * N * epsilon / low_demand
    K = _rounds_to_accumulate(_at_horizon(schedule, rounds), rounds, target)
    illustrative = math.ceil((4 * N * epsilon) ** 2)
    return ConvergenceBound(
        rounds, schedule.describe(), n, N, m, U, epsilon, K, epsilon, illustrative, method
    )


def _invert_time_avg(certificate: DualCertificate, schedule: StepSchedule, U: float, epsilon: float) -> int:
    def bound(rounds: int) -> float:
        return time_avg_bound(certificate, schedule, rounds, U).bound

    high = 1
    while bound(high) > epsilon:
        high *= 2
        if high > 2**200:
            raise PreconditionError("time-average bound does not reach epsilon")
    low = high // 2
    while high - low > 1:
        middle = (low + high) // 2
        if bound(middle) > epsilon:
            low = middle
        else:
            high = middle
    return high


def _rounds_to_accumulate(schedule: StepSchedule, start: int, target: float) -> int:
    if schedule.total(1, start + 1) >= target:
        return 1
    high = 2
    while schedule.total(high, start + 1) < target:
        high *= 2
    low = high // 2
    while high - low > 1:
        middle = (low + high) // 2
        if schedule.total(middle, start + 1) < target:
            low = middle
        else:
            high = middle
    return high


# experiments


@dataclass(frozen=True, eq=False)
class FigureResult:
    """Paired optimal values and distributions of one figure instance."""

    name: str
    n: int
    left_label: str
    left_value: float
    left_sigma: FloatArray
    right_label: str
    right_value: float
    right_sigma: FloatArray
    left_game: NormalFormGame
    right_game: NormalFormGame
    meta: dict[str, Any] = field(default_factory=dict)

    def _side(self, side: str) -> tuple[NormalFormGame, FloatArray]:
        if side == "left":
            return self.left_game, self.left_sigma
        if side == "right":
            return self.right_game, self.right_sigma
        raise DomainError(f"unknown side {side!r}")

    def heatmap_rows(self, side: str) -> list[tuple[str, str, float]]:
        """Rows ``(p1, p2, sigma)`` of the left or right distribution."""
        game, sigma = self._side(side)
        first, second = game.labels(0), game.labels(1)
        return [(first[a], second[b], float(sigma[a, b])) for a, b in np.ndindex(*sigma.shape)]

    def support(self, side: str, threshold: float = 1e-9) -> list[dict[str, Any]]:
        game, sigma = self._side(side)
        entries = [
            {"outcome": game.outcome_label(tuple(int(a) for a in idx)), "probability": float(sigma[tuple(idx)])}
            for idx in np.argwhere(sigma > threshold)
        ]
        return sorted(entries, key=lambda entry: -entry["probability"])

    def to_dict(self) -> dict[str, Any]:
        return {
            "figure": self.name,
            "n": self.n,
            self.left_label: {"objective_value": self.left_value, "support": self.support("left")},
            self.right_label: {"objective_value": self.right_value, "support": self.support("right")},
            **self.meta,
        }


def _check_size(n: int, max_n: int) -> None:
    if not 1 <= n <= max_n:
        raise PreconditionError(f"grid resolution {n} outside 1..{max_n}")


def _semicoarse(
    game: NormalFormGame, d: FloatArray, route: str, options: SolverOptions | None
) -> tuple[float, FloatArray]:
    if route == "lyapunov":
        result = solve_bundle(build_dual_lyapunov_lp(game, d), options)
    elif route == "extension":
        result = solve_bundle(build_semicoarse_extension_lp(game, d), options)
    else:
        raise DomainError(f"unknown semicoarse route {route!r}")
    return result.value, result.sigma


def fig1_experiment(
    n: int,
    options: SolverOptions | None = None,
    route: str = "extension",
    max_n: int = DEFAULT_MAX_GRID,
) -> FigureResult:
    """Maximize ``p_1^2 + p_2^2`` over CCE and over semicoarse equilibria of a linear-demand duopoly."""
    _check_size(n, max_n)
    game = make_bertrand(n, [0, 0], demand_samples("linear", n))
    d = squared_value_objective(game)
    cce = solve_bundle(build_cce_lp(game, d), options)
    value, sigma = _semicoarse(game, d, route, options)
    logger.debug("fig1 n=%d: cce %.9g semicoarse %.9g", n, cce.value, value)
    return FigureResult(
        "fig1", n, "cce", cce.value, cce.sigma, "semicoarse", value, sigma, game, game, {"route": route}
    )


def fig2_experiment(
    n: int,
    options: SolverOptions | None = None,
    route: str = "extension",
    max_n: int = DEFAULT_MAX_GRID,
) -> FigureResult:
    """Maximize squared distance from the bids (1, 1) over semicoarse equilibria on the uniform and square grids."""
    _check_size(n, max_n)
    values = []
    games = []
    for gauge in ("uniform", "square"):
        grid = PriceGrid.uniform(n) if gauge == "uniform" else PriceGrid.square(n)
        game = make_first_price(n, [n, n], grid)
        value, sigma = _semicoarse(game, squared_distance_objective(game, [1.0, 1.0]), route, options)
        values.append((value, sigma))
        games.append(game)
    (left_value, left_sigma), (right_value, right_sigma) = values
    return FigureResult(
        "fig2", n, "uniform", left_value, left_sigma, "square", right_value, right_sigma, games[0], games[1],
        {"route": route, "square_bound": 2 * (1 - (1 - 1 / n) ** 2) ** 2},
    )
