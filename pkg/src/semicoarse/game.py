"""Finite normal-form games and their mixed extension.

A game stores one dense utility tensor per player, indexed by the full
outcome in row-major order. Mixed profiles are tuples of probability
vectors, one per player; outcome distributions are tensors shaped like
the utility tensors.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
import json
import logging
from pathlib import Path
import string
from typing import Any, Protocol

import numpy as np
from numpy.typing import NDArray

from semicoarse.errors import EmptyInputError, ShapeError, ValidationError
from semicoarse.reports import ConstraintCheck, VerificationReport


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Profile = tuple[FloatArray, ...]

GAME_FORMAT = "semicoarse-game/1"
NASH_TOLERANCE = 1e-12
PROBABILITY_FLOOR = -1e-12
PROBABILITY_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Action:
    """Action label, optionally carrying an exact numeric value (price or bid)."""

    label: str
    value: Fraction | None = None


@dataclass(frozen=True)
class PriceGrid:
    """Sorted grid of exact action values in [0, 1]."""

    n: int
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if self.n < 1 or len(self.values) < 2:
            raise ValidationError("price grid needs n >= 1 and at least two values")
        if self.values[0] != 0 or self.values[-1] != 1:
            raise ValidationError("price grid must start at 0 and end at 1")
        if any(b <= a for a, b in zip(self.values, self.values[1:], strict=False)):
            raise ValidationError("price grid values must be strictly increasing")

    @classmethod
    def uniform(cls, n: int) -> PriceGrid:
        """Grid {0, 1/n, ..., 1}."""
        return cls(n, tuple(Fraction(k, n) for k in range(n + 1)))

    @classmethod
    def square(cls, n: int) -> PriceGrid:
        """Gauge grid {0, (1/n)^2, (2/n)^2, ..., 1}."""
        return cls(n, tuple(Fraction(k, n) ** 2 for k in range(n + 1)))

    @property
    def gauge(self) -> str:
        if self == PriceGrid.uniform(self.n):
            return "uniform"
        return "square" if self == PriceGrid.square(self.n) else "custom"

    def actions(self) -> tuple[Action, ...]:
        return tuple(Action(str(value), value) for value in self.values)


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    """A finite game in normal form.

    Attributes:
        actions: Per-player tuple of actions
        utilities: Per-player utility tensor with shape ``(|A_1|, ..., |A_N|)``
        metadata: Generator parameters (JSON-compatible), e.g. Bertrand costs and demand
    """

    actions: tuple[tuple[Action, ...], ...]
    utilities: tuple[FloatArray, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.actions:
            raise EmptyInputError("a game needs at least one player")
        if len(self.utilities) != len(self.actions):
            raise ShapeError(f"expected {len(self.actions)} utility tensors, got {len(self.utilities)}")
        shape = tuple(len(acts) for acts in self.actions)
        if any(size == 0 for size in shape):
            raise EmptyInputError("every player needs at least one action")
        frozen = []
        for player, tensor in enumerate(self.utilities):
            array = np.array(tensor, dtype=np.float64)
            if array.shape != shape:
                raise ShapeError(f"utility tensor of player {player + 1} has shape {array.shape}, expected {shape}")
            if not np.all(np.isfinite(array)):
                raise ValidationError(f"utility tensor of player {player + 1} has non-finite payoffs")
            array.setflags(write=False)
            frozen.append(array)
        object.__setattr__(self, "utilities", tuple(frozen))

    @classmethod
    def from_tables(
        cls,
        labels: Sequence[Sequence[str]],
        utilities: Sequence[Any],
        metadata: Mapping[str, Any] | None = None,
    ) -> NormalFormGame:
        """Build a game from plain labels and nested payoff lists."""
        actions = tuple(tuple(Action(label) for label in player_labels) for player_labels in labels)
        tensors = tuple(np.asarray(u, dtype=np.float64) for u in utilities)
        return cls(actions, tensors, dict(metadata or {}))

    @property
    def num_players(self) -> int:
        return len(self.actions)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(acts) for acts in self.actions)

    @property
    def num_outcomes(self) -> int:
        return int(np.prod(self.shape))

    def labels(self, player: int) -> list[str]:
        return [action.label for action in self.actions[player]]

    def action_index(self, player: int, label: str) -> int:
        """Index of the action with the given label for ``player``."""
        for index, action in enumerate(self.actions[player]):
            if action.label == label:
                return index
        raise ValidationError(f"player {player + 1} has no action {label!r}")

    def outcome_label(self, outcome: Sequence[int]) -> str:
        return "(" + ", ".join(self.actions[i][a].label for i, a in enumerate(outcome)) + ")"


class TrajectoryLike(Protocol):
    """Anything exposing per-player strategy histories of shape (T, |A_i|)."""

    @property
    def strategies(self) -> tuple[FloatArray, ...]: ...


def _check_player(game: NormalFormGame, player: int) -> None:
    if not 0 <= player < game.num_players:
        raise ShapeError(f"player index {player} out of range for a {game.num_players}-player game")


def check_profile(game: NormalFormGame, profile: Sequence[Any]) -> Profile:
    """Validate a mixed profile against the game and return it as float arrays.

    Raises:
        ShapeError: Wrong number of players or wrong vector lengths
        ValidationError: A vector is not a probability distribution
    """
    if len(profile) != game.num_players:
        raise ShapeError(f"profile has {len(profile)} strategies for {game.num_players} players")
    checked = []
    for player, (x, size) in enumerate(zip(profile, game.shape, strict=True)):
        vector = np.asarray(x, dtype=np.float64)
        if vector.shape != (size,):
            raise ShapeError(f"strategy of player {player + 1} has shape {vector.shape}, expected ({size},)")
        if np.any(vector < PROBABILITY_FLOOR) or abs(vector.sum() - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise ValidationError(f"strategy of player {player + 1} is not a probability vector")
        checked.append(vector)
    return tuple(checked)


def check_distribution(game: NormalFormGame, sigma: Any) -> FloatArray:
    """Validate an outcome distribution and return it as a float tensor."""
    tensor = np.asarray(sigma, dtype=np.float64)
    if tensor.shape != game.shape:
        raise ShapeError(f"distribution has shape {tensor.shape}, expected {game.shape}")
    if np.any(tensor < PROBABILITY_FLOOR) or abs(tensor.sum() - 1.0) > PROBABILITY_SUM_TOLERANCE:
        raise ValidationError("outcome distribution must be nonnegative and sum to 1")
    return tensor


def uniform_profile(game: NormalFormGame) -> Profile:
    return tuple(np.full(size, 1.0 / size) for size in game.shape)


def pure_profile(game: NormalFormGame, outcome: Sequence[int]) -> Profile:
    return tuple(np.eye(size)[a] for size, a in zip(game.shape, outcome, strict=True))


def point_mass(game: NormalFormGame, outcome: Sequence[int]) -> FloatArray:
    sigma = np.zeros(game.shape)
    sigma[tuple(outcome)] = 1.0
    return sigma


def _contract(tensor: FloatArray, profile: Profile, skip: int | None) -> FloatArray:
    """Contract every axis except ``skip`` against the profile."""
    moved = np.moveaxis(tensor, skip, -1) if skip is not None else tensor
    for player, x in enumerate(profile):
        if player != skip:
            moved = np.tensordot(x, moved, axes=(0, 0))
    return np.asarray(moved, dtype=np.float64)


def expected_utility(game: NormalFormGame, profile: Sequence[Any], player: int) -> float:
    """Expected utility of ``player`` under independent mixing."""
    _check_player(game, player)
    checked = check_profile(game, profile)
    return float(_contract(game.utilities[player], checked, None))


def utility_gradient(game: NormalFormGame, profile: Sequence[Any], player: int) -> FloatArray:
    """Partial derivatives of the expected utility in the player's own strategy.

    Component ``a`` is the expected utility of the pure action ``a`` against the
    other players' mixed strategies.
    """
    _check_player(game, player)
    checked = check_profile(game, profile)
    return _contract(game.utilities[player], checked, player)


def _einsum_spec(num_players: int) -> str:
    axes = string.ascii_lowercase[1 : num_players + 1]
    inputs = ",".join(f"t{axis}" for axis in axes)
    return f"{inputs}->{axes}"


def outcome_distribution_of(strategies: Sequence[FloatArray]) -> FloatArray:
    """Average of the product distributions over the rows of the strategy histories."""
    if not strategies or len(strategies[0]) == 0:
        raise EmptyInputError("cannot average an empty trajectory")
    rounds = len(strategies[0])
    if any(len(history) != rounds for history in strategies):
        raise ShapeError("strategy histories have different lengths")
    total = np.einsum(_einsum_spec(len(strategies)), *strategies, optimize=True)
    return np.asarray(total / rounds, dtype=np.float64)


def time_avg_outcome_distribution(trajectory: TrajectoryLike) -> FloatArray:
    """Time-averaged distribution of play ``sigma(a) = (1/T) sum_t prod_j x_j^t(a_j)``."""
    return outcome_distribution_of(trajectory.strategies)


def nash_mask(game: NormalFormGame, tolerance: float = NASH_TOLERANCE) -> NDArray[np.bool_]:
    """Boolean tensor marking the pure Nash outcomes."""
    mask = np.ones(game.shape, dtype=bool)
    for player, tensor in enumerate(game.utilities):
        best = tensor.max(axis=player, keepdims=True)
        mask &= tensor >= best - tolerance
    return mask


def enumerate_pure_nash(game: NormalFormGame, tolerance: float = NASH_TOLERANCE) -> list[tuple[int, ...]]:
    """All outcomes where no player has a strictly improving unilateral deviation."""
    return [tuple(int(a) for a in outcome) for outcome in np.argwhere(nash_mask(game, tolerance))]


def front_view(tensor: FloatArray, player: int) -> FloatArray:
    """View a tensor as ``(|A_player|, rest)`` with the player's axis first."""
    moved = np.moveaxis(tensor, player, 0)
    return moved.reshape(moved.shape[0], -1)


def transform_gain_table(game: NormalFormGame, player: int, matrix: FloatArray) -> FloatArray:
    """Pointwise deviation gain of a linear strategy modification.

    Entry ``a`` equals ``sum_{a'} P(a', a_i) u_i(a', a_-i) - u_i(a)`` for the
    left-stochastic (or any square) matrix ``P`` over the player's actions.
    """
    _check_player(game, player)
    size = game.shape[player]
    if matrix.shape != (size, size):
        raise ShapeError(f"transform has shape {matrix.shape}, expected ({size}, {size})")
    moved = np.moveaxis(game.utilities[player], player, 0)
    deviated = np.tensordot(matrix.T, moved, axes=(1, 0))
    return np.asarray(np.moveaxis(deviated - moved, 0, player), dtype=np.float64)


def cce_gains(game: NormalFormGame, sigma: FloatArray, player: int) -> FloatArray:
    """Expected gain of switching to each fixed action, ex ante."""
    utility = front_view(game.utilities[player], player)
    weights = front_view(sigma, player)
    marginal_rest = weights.sum(axis=0)
    return np.asarray(utility @ marginal_rest - float((weights * utility).sum()), dtype=np.float64)


def ce_gains(game: NormalFormGame, sigma: FloatArray, player: int) -> FloatArray:
    """Matrix of conditional gains: entry ``[a, a']`` for recommendation ``a`` replaced by ``a'``."""
    utility = front_view(game.utilities[player], player)
    weights = front_view(sigma, player)
    cross = weights @ utility.T
    return np.asarray(cross - np.diag(cross)[:, None], dtype=np.float64)


def check_epsilon_cce(sigma: Any, game: NormalFormGame, epsilon: float) -> VerificationReport:
    """Check the coarse correlated equilibrium constraints with slack ``epsilon``."""
    tensor = check_distribution(game, sigma)
    checks = []
    for player in range(game.num_players):
        for target, gain in enumerate(cce_gains(game, tensor, player)):
            label = game.actions[player][target].label
            checks.append(ConstraintCheck(f"player {player + 1} / to {label}", float(gain)))
    return VerificationReport.from_checks("cce", epsilon, checks)


def check_epsilon_ce(sigma: Any, game: NormalFormGame, epsilon: float) -> VerificationReport:
    """Check the correlated equilibrium constraints with slack ``epsilon``."""
    tensor = check_distribution(game, sigma)
    checks = []
    for player in range(game.num_players):
        gains = ce_gains(game, tensor, player)
        names = game.labels(player)
        for a, row in enumerate(gains):
            for b, gain in enumerate(row):
                if a != b:
                    checks.append(ConstraintCheck(f"player {player + 1} / {names[a]} -> {names[b]}", float(gain)))
    return VerificationReport.from_checks("ce", epsilon, checks)


def game_to_dict(game: NormalFormGame) -> dict[str, Any]:
    """JSON-ready representation; rational action values are stored as strings."""
    return {
        "format": GAME_FORMAT,
        "players": game.num_players,
        "actions": [
            [{"label": a.label, "value": None if a.value is None else str(a.value)} for a in acts]
            for acts in game.actions
        ],
        "utilities": [tensor.tolist() for tensor in game.utilities],
        "metadata": dict(game.metadata),
    }


def game_from_dict(data: Mapping[str, Any]) -> NormalFormGame:
    """Inverse of :func:`game_to_dict`."""
    actions = tuple(
        tuple(Action(str(a["label"]), None if a.get("value") is None else Fraction(a["value"])) for a in acts)
        for acts in data["actions"]
    )
    if int(data.get("players", len(actions))) != len(actions):
        raise ShapeError("'players' does not match the number of action lists")
    utilities = tuple(np.asarray(u, dtype=np.float64) for u in data["utilities"])
    return NormalFormGame(actions, utilities, dict(data.get("metadata", {})))


def save_game(game: NormalFormGame, path: Path) -> None:
    path.write_text(json.dumps(game_to_dict(game), indent=2) + "\n", encoding="utf-8")


def load_game(path: Path) -> NormalFormGame:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    logger.debug("loaded game document %s", path)
    return game_from_dict(data)
