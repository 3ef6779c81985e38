"""Game generators: Bertrand competition, first-price auctions and small test games."""

from __future__ import annotations

from collections.abc import Sequence
from fractions import Fraction
import math
from typing import Any

import numpy as np
from numpy.typing import NDArray

from semicoarse.errors import DomainError, ShapeError, UsageError, ValidationError
from semicoarse.game import Action, FloatArray, NormalFormGame, PriceGrid


IntArray = NDArray[np.int64]


def demand_samples(spec: str, n: int) -> FloatArray:
    """Sample a named demand curve on the grid {0, 1/n, ..., 1}.

    Supported specs: ``inelastic`` (D = 1), ``linear`` (1 - p), ``affine:e``
    (1 + e - e p) and ``quadratic`` (1 - p^2).
    """
    grid = [Fraction(k, n) for k in range(n + 1)]
    name, _, arg = spec.partition(":")
    if name == "inelastic":
        values = [Fraction(1)] * len(grid)
    elif name == "linear":
        values = [1 - p for p in grid]
    elif name == "quadratic":
        values = [1 - p * p for p in grid]
    elif name == "affine":
        try:
            slope = Fraction(arg)
        except ValueError as e:
            raise UsageError(f"bad affine demand slope {arg!r}") from e
        values = [1 + slope - slope * p for p in grid]
    else:
        raise UsageError(f"unknown demand spec {spec!r} (inelastic, linear, quadratic, affine:<e>)")
    return np.array([float(v) for v in values])


def _check_demand(n: int, demand: Sequence[float] | FloatArray) -> FloatArray:
    samples = np.asarray(demand, dtype=np.float64)
    if samples.shape != (n + 1,):
        raise ShapeError(f"demand needs {n + 1} grid samples, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)) or np.any(samples < 0) or np.any(samples[:-1] <= 0):
        raise DomainError("demand must be finite, nonnegative, and positive below price 1")
    return samples


def _price_outcome_utilities(
    num_players: int,
    n: int,
    margins: Sequence[FloatArray],
    scale: FloatArray,
    lowest_wins: bool,
) -> tuple[FloatArray, ...]:
    """Winner-take-all utilities with ties split evenly.

    ``margins[i][k]`` is player i's margin at grid index k; ``scale[k]`` multiplies it
    (the demand for prices, 1 for bids).
    """
    index = np.indices((n + 1,) * num_players)
    best = index.min(axis=0) if lowest_wins else index.max(axis=0)
    winners = index == best
    count = winners.sum(axis=0)
    return tuple(
        np.where(winners[i], margins[i][index[i]] * scale[index[i]] / count, 0.0) for i in range(num_players)
    )


def make_bertrand(n: int, costs: Sequence[int], demand: Sequence[float] | FloatArray) -> NormalFormGame:
    """Bertrand price competition on the grid {0, 1/n, ..., 1}.

    The lowest price captures the whole demand, split evenly among ties;
    firm i earns ``(p_i - c_i/n) D(p_i) / |argmin|`` when it posts a minimum price.

    Args:
        n: Grid resolution
        costs: Marginal cost index c_i in {0, ..., n} per firm
        demand: Demand samples D(k/n), k = 0..n

    Returns:
        Game with Bertrand metadata (n, costs, demand)
    """
    if n < 1:
        raise DomainError("grid resolution n must be at least 1")
    if len(costs) < 1:
        raise ValidationError("need at least one firm")
    if any(not 0 <= c <= n for c in costs):
        raise ValidationError(f"cost indices must lie in 0..{n}, got {list(costs)}")
    samples = _check_demand(n, demand)
    margins = [np.array([float(Fraction(k - c, n)) for k in range(n + 1)]) for c in costs]
    utilities = _price_outcome_utilities(len(costs), n, margins, samples, lowest_wins=True)
    actions = (PriceGrid.uniform(n).actions(),) * len(costs)
    metadata = {"kind": "bertrand", "n": n, "costs": [int(c) for c in costs], "demand": samples.tolist()}
    return NormalFormGame(actions, utilities, metadata)


def make_first_price(n: int, values: Sequence[int], grid: PriceGrid | None = None) -> NormalFormGame:
    """First-price auction with complete information.

    The highest bid wins, ties split evenly; buyer i earns ``(v_i/n - b_i)/|argmax|``.
    On the uniform grid this is the Bertrand game with costs ``n - v_i`` and unit
    demand under the relabeling ``p = 1 - b``.
    """
    grid = grid or PriceGrid.uniform(n)
    if grid.n != n:
        raise ShapeError(f"grid resolution {grid.n} does not match n = {n}")
    if len(values) < 1:
        raise ValidationError("need at least one buyer")
    if any(not 0 <= v <= n for v in values):
        raise ValidationError(f"value indices must lie in 0..{n}, got {list(values)}")
    margins = [np.array([float(Fraction(v, n) - b) for b in grid.values]) for v in values]
    utilities = _price_outcome_utilities(len(values), n, margins, np.ones(n + 1), lowest_wins=False)
    metadata = {
        "kind": "first-price",
        "n": n,
        "values": [int(v) for v in values],
        "gauge": grid.gauge,
        "grid": [str(b) for b in grid.values],
    }
    return NormalFormGame((grid.actions(),) * len(values), utilities, metadata)


def make_bad_game() -> NormalFormGame:
    """The 2 x 3 game whose CCE put mass on the dominated-in-the-limit action M."""
    return NormalFormGame.from_tables(
        [["T", "B"], ["L", "M", "R"]],
        [
            [[0, 0, 0], [0, 0, 0]],
            [[1, 0, 0], [0, 0, 1]],
        ],
        {"kind": "bad-game"},
    )


def make_matching_pennies() -> NormalFormGame:
    table = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return NormalFormGame.from_tables([["H", "T"], ["H", "T"]], [table, -table], {"kind": "matching-pennies"})


def rps_basis() -> tuple[FloatArray, FloatArray, FloatArray]:
    """Orthonormal basis of R^3 with the last vector along (1, 1, 1)."""
    v1 = np.array([1.0, -2.0, 1.0]) / math.sqrt(6.0)
    v2 = np.array([1.0, 0.0, -1.0]) / math.sqrt(2.0)
    v3 = np.ones(3) / math.sqrt(3.0)
    return v1, v2, v3


def rps_table() -> FloatArray:
    """Payoff of the row player along the embedded triplets: ``-sqrt(3) (v1 v2^T - v2 v1^T)``."""
    v1, v2, _ = rps_basis()
    table = -math.sqrt(3.0) * (np.outer(v1, v2) - np.outer(v2, v1))
    return np.round(table, 12) + 0.0


def make_rps_embedded(
    num_players: int,
    action_sizes: Sequence[int],
    i: int,
    j: int,
    triplet_i: Sequence[int],
    triplet_j: Sequence[int],
) -> NormalFormGame:
    """Rock-paper-scissors between players i and j on chosen action triplets.

    Every other payoff, and every payoff of the remaining players, is zero.
    """
    if len(action_sizes) != num_players or num_players < 2:
        raise ShapeError("need one action size per player and at least two players")
    if i == j or not (0 <= i < num_players and 0 <= j < num_players):
        raise DomainError("players i and j must be distinct valid indices")
    for player, triplet in ((i, triplet_i), (j, triplet_j)):
        size = action_sizes[player]
        if size < 3 or len(triplet) != 3 or len(set(triplet)) != 3:
            raise DomainError(f"player {player + 1} needs three distinct triplet actions and at least 3 actions")
        if any(not 0 <= a < size for a in triplet):
            raise DomainError(f"triplet {list(triplet)} out of range for player {player + 1}")
    shape = tuple(action_sizes)
    embedded = np.zeros((action_sizes[i], action_sizes[j]))
    embedded[np.ix_(list(triplet_i), list(triplet_j))] = rps_table()
    index = [np.newaxis] * num_players
    index[i] = slice(None)
    index[j] = slice(None)
    view = embedded if i < j else embedded.T
    u_i = np.broadcast_to(view[tuple(index)], shape).copy()
    utilities = [np.zeros(shape) for _ in range(num_players)]
    utilities[i] = u_i
    utilities[j] = -u_i + 0.0
    labels = [[f"a{k}" for k in range(size)] for size in action_sizes]
    metadata = {"kind": "rps", "players": [i, j], "triplets": [list(triplet_i), list(triplet_j)]}
    return NormalFormGame.from_tables(labels, utilities, metadata)


def make_random_game(
    sizes: Sequence[int],
    seed: int = 0,
    low: float = -1.0,
    high: float = 1.0,
    integer: bool = False,
) -> NormalFormGame:
    """Random payoffs drawn from ``numpy.random.default_rng(seed)``."""
    if not sizes or any(s < 1 for s in sizes):
        raise DomainError("every player needs at least one action")
    rng = np.random.default_rng(seed)
    shape = tuple(sizes)
    if integer:
        utilities = [rng.integers(int(low), int(high) + 1, size=shape).astype(np.float64) for _ in sizes]
    else:
        utilities = [rng.uniform(low, high, size=shape) for _ in sizes]
    labels = [[f"a{k}" for k in range(size)] for size in sizes]
    return NormalFormGame.from_tables(labels, utilities, {"kind": "random", "seed": seed, "sizes": list(sizes)})


def check_weights(game: NormalFormGame, weights: Sequence[Any]) -> tuple[IntArray, ...]:
    """Validate per-player positive integer weight vectors."""
    if len(weights) != game.num_players:
        raise ShapeError(f"need {game.num_players} weight vectors, got {len(weights)}")
    checked = []
    for player, (w, size) in enumerate(zip(weights, game.shape, strict=True)):
        vector = np.asarray(w)
        if vector.shape != (size,):
            raise ShapeError(f"weights of player {player + 1} have shape {vector.shape}, expected ({size},)")
        if np.any(vector != np.round(vector)) or np.any(vector < 1):
            raise ValidationError(f"weights of player {player + 1} must be integers >= 1")
        checked.append(vector.astype(np.int64))
    return tuple(checked)


def expand_weighted_game(game: NormalFormGame, weights: Sequence[Any]) -> tuple[NormalFormGame, tuple[IntArray, ...]]:
    """Duplicate each action ``a`` of player i into ``w_i(a)`` identical copies.

    Returns:
        The expanded game and, per player, the array mapping each copy to its original action
    """
    owners = tuple(np.repeat(np.arange(len(w)), w) for w in check_weights(game, weights))
    utilities = tuple(tensor[np.ix_(*owners)] for tensor in game.utilities)
    actions = tuple(
        tuple(
            Action(f"{game.actions[player][a].label}#{copy}", game.actions[player][a].value)
            for a, copy in zip(owner, _copy_numbers(owner), strict=True)
        )
        for player, owner in enumerate(owners)
    )
    metadata = {"kind": "expanded", "base": dict(game.metadata), "weights": [w.tolist() for w in weights]}
    return NormalFormGame(actions, utilities, metadata), owners


def _copy_numbers(owner: IntArray) -> list[int]:
    seen: dict[int, int] = {}
    numbers = []
    for a in owner.tolist():
        seen[a] = seen.get(a, 0) + 1
        numbers.append(seen[a])
    return numbers


def contract_distribution(sigma: FloatArray, owners: Sequence[IntArray]) -> FloatArray:
    """Sum an expanded-game distribution over the copies of each action."""
    result = np.asarray(sigma, dtype=np.float64)
    for axis, owner in enumerate(owners):
        collapse = np.zeros((int(owner.max()) + 1, len(owner)))
        collapse[owner, np.arange(len(owner))] = 1.0
        result = np.moveaxis(np.tensordot(collapse, result, axes=(1, axis)), 0, axis)
    return result


def lift_objective(d: FloatArray, owners: Sequence[IntArray]) -> FloatArray:
    """Objective on the expanded game: each copy inherits its original outcome's value."""
    return np.asarray(d)[np.ix_(*owners)]
