"""Unit tests for the game generators."""

import numpy as np
import pytest

from semicoarse.errors import DomainError, ShapeError, UsageError, ValidationError
from semicoarse.game import PriceGrid
from semicoarse.generators import (
    contract_distribution,
    demand_samples,
    expand_weighted_game,
    lift_objective,
    make_bad_game,
    make_bertrand,
    make_first_price,
    make_matching_pennies,
    make_random_game,
    make_rps_embedded,
    rps_table,
)


RPS_PATTERN = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


class TestDemandSamples:
    """Tests for named demand curves."""

    def test_inelastic(self) -> None:
        assert demand_samples("inelastic", 3).tolist() == [1.0, 1.0, 1.0, 1.0]

    def test_linear(self) -> None:
        assert demand_samples("linear", 4).tolist() == [1.0, 0.75, 0.5, 0.25, 0.0]

    def test_quadratic(self) -> None:
        assert demand_samples("quadratic", 2).tolist() == [1.0, 0.75, 0.0]

    def test_affine(self) -> None:
        assert demand_samples("affine:2", 2).tolist() == [3.0, 2.0, 1.0]

    def test_unknown(self) -> None:
        with pytest.raises(UsageError):
            demand_samples("cobb-douglas", 4)

    def test_bad_slope(self) -> None:
        with pytest.raises(UsageError):
            demand_samples("affine:steep", 4)


class TestBertrand:
    """Tests for make_bertrand."""

    def test_tie_split(self) -> None:
        game = make_bertrand(2, [0, 0], demand_samples("inelastic", 2))

        assert game.utilities[0][1, 1] == 0.25
        assert game.utilities[1][1, 1] == 0.25

    def test_zero_margin_winner(self) -> None:
        game = make_bertrand(2, [0, 0], demand_samples("inelastic", 2))

        assert game.utilities[0][0, 1] == 0.0
        assert game.utilities[1][0, 1] == 0.0

    def test_below_cost_loses_money(self) -> None:
        game = make_bertrand(2, [0, 2], demand_samples("inelastic", 2))

        assert game.utilities[1][2, 1] == -0.5

    def test_demand_scales_profit(self) -> None:
        game = make_bertrand(4, [0, 0], demand_samples("linear", 4))

        assert game.utilities[0][2, 3] == pytest.approx(0.25)
        assert game.utilities[1][2, 3] == 0.0

    def test_three_firms(self) -> None:
        game = make_bertrand(3, [0, 0, 1], demand_samples("inelastic", 3))

        assert game.shape == (4, 4, 4)
        assert game.utilities[2][3, 3, 2] == pytest.approx(1 / 3)
        assert game.utilities[0][1, 1, 1] == pytest.approx(1 / 9)

    def test_metadata(self) -> None:
        game = make_bertrand(3, [0, 1], demand_samples("linear", 3))

        assert game.metadata["kind"] == "bertrand"
        assert game.metadata["n"] == 3
        assert game.metadata["costs"] == [0, 1]
        assert len(game.metadata["demand"]) == 4

    def test_invalid_cost(self) -> None:
        with pytest.raises(ValidationError):
            make_bertrand(3, [0, 4], demand_samples("inelastic", 3))

    def test_demand_length(self) -> None:
        with pytest.raises(ShapeError):
            make_bertrand(3, [0, 0], [1.0, 1.0])

    def test_demand_must_be_positive(self) -> None:
        with pytest.raises(DomainError):
            make_bertrand(2, [0, 0], [1.0, 0.0, 0.0])


class TestFirstPrice:
    """Tests for make_first_price."""

    def test_zero_margin_tie(self) -> None:
        game = make_first_price(2, [2, 2])

        assert game.utilities[0][2, 2] == 0.0

    def test_winner_pays_bid(self) -> None:
        game = make_first_price(2, [2, 2])

        assert game.utilities[0][1, 0] == 0.5
        assert game.utilities[1][1, 0] == 0.0

    @pytest.mark.parametrize(("n", "values"), [(4, [4, 4]), (5, [5, 3]), (3, [3, 2, 1])])
    def test_equivalent_to_bertrand(self, n: int, values: list[int]) -> None:
        """Bid k/n is price 1 - k/n and value v is cost n - v under unit demand."""
        auction = make_first_price(n, values)
        bertrand = make_bertrand(n, [n - v for v in values], demand_samples("inelastic", n))
        reverse = (slice(None, None, -1),) * len(values)

        for u_auction, u_bertrand in zip(auction.utilities, bertrand.utilities, strict=True):
            assert np.array_equal(u_auction, u_bertrand[reverse])

    def test_square_grid(self) -> None:
        game = make_first_price(2, [2, 2], PriceGrid.square(2))

        assert game.metadata["gauge"] == "square"
        assert game.labels(0) == ["0", "1/4", "1"]
        assert game.utilities[0][1, 0] == 0.75

    def test_grid_mismatch(self) -> None:
        with pytest.raises(ShapeError):
            make_first_price(3, [3, 3], PriceGrid.uniform(4))

    def test_invalid_value(self) -> None:
        with pytest.raises(ValidationError):
            make_first_price(3, [4, 3])


class TestSmallGames:
    """Tests for the fixed example games."""

    def test_bad_game_table(self) -> None:
        game = make_bad_game()

        assert game.utilities[1][0, 0] == 1.0
        assert game.utilities[1][1, 1] == 0.0
        assert np.all(game.utilities[0] == 0.0)

    def test_matching_pennies_zero_sum(self) -> None:
        game = make_matching_pennies()

        assert np.array_equal(game.utilities[0] + game.utilities[1], np.zeros((2, 2)))

    def test_rps_table(self) -> None:
        assert np.array_equal(rps_table(), RPS_PATTERN)

    def test_rps_embedded_pattern(self) -> None:
        game = make_rps_embedded(3, [4, 3, 5], 0, 2, (1, 2, 3), (0, 2, 4))

        u = game.utilities[0]
        restricted = u[np.ix_([1, 2, 3], [0], [0, 2, 4])][:, 0, :]
        assert np.array_equal(restricted, RPS_PATTERN)
        assert np.array_equal(u + game.utilities[2], np.zeros(game.shape))
        assert np.all(game.utilities[1] == 0.0)
        assert np.all(u[0] == 0.0)
        assert np.all(u[:, :, 1] == 0.0)

    def test_rps_embedded_reversed_players(self) -> None:
        """Player j before player i in axis order."""
        game = make_rps_embedded(2, [3, 3], 1, 0, (0, 1, 2), (0, 1, 2))

        assert np.array_equal(game.utilities[1], RPS_PATTERN.T)
        assert np.array_equal(game.utilities[0], -RPS_PATTERN.T)

    def test_rps_embedded_bad_triplet(self) -> None:
        with pytest.raises(DomainError):
            make_rps_embedded(2, [3, 3], 0, 1, (0, 1, 3), (0, 1, 2))

    def test_random_game_seeded(self) -> None:
        first = make_random_game([2, 3], seed=7)
        second = make_random_game([2, 3], seed=7)

        assert all(np.array_equal(a, b) for a, b in zip(first.utilities, second.utilities, strict=True))

    def test_random_integer_game(self) -> None:
        game = make_random_game([3, 3], seed=1, low=-2, high=2, integer=True)

        for tensor in game.utilities:
            assert np.all(tensor == np.round(tensor))
            assert tensor.min() >= -2
            assert tensor.max() <= 2


class TestWeightedExpansion:
    """Tests for the duplicated-action construction."""

    def test_expand_shape(self) -> None:
        game = make_bad_game()

        expanded, owners = expand_weighted_game(game, [[1, 2], [3, 1, 1]])

        assert expanded.shape == (3, 5)
        assert owners[0].tolist() == [0, 1, 1]
        assert owners[1].tolist() == [0, 0, 0, 1, 2]
        assert expanded.labels(0) == ["T#1", "B#1", "B#2"]

    def test_copies_share_payoffs(self) -> None:
        game = make_random_game([2, 2], seed=3)

        expanded, _ = expand_weighted_game(game, [[2, 1], [1, 2]])

        assert expanded.utilities[0][0, 2] == expanded.utilities[0][1, 1] == game.utilities[0][0, 1]

    def test_contract_sums_copies(self) -> None:
        game = make_bad_game()
        _, owners = expand_weighted_game(game, [[1, 2], [2, 1, 1]])
        sigma = np.full((3, 4), 1 / 12)

        contracted = contract_distribution(sigma, owners)

        assert contracted.shape == (2, 3)
        assert contracted.tolist() == pytest.approx([[2 / 12, 1 / 12, 1 / 12], [4 / 12, 2 / 12, 2 / 12]])

    def test_lift_objective(self) -> None:
        d = np.arange(6.0).reshape(2, 3)
        _, owners = expand_weighted_game(make_bad_game(), [[2, 1], [1, 1, 2]])

        lifted = lift_objective(d, owners)

        assert lifted.shape == (3, 4)
        assert lifted[1, 3] == d[0, 2]
        assert lifted[2, 0] == d[1, 0]

    def test_rejects_fractional_weights(self) -> None:
        with pytest.raises(ValidationError):
            expand_weighted_game(make_bad_game(), [[1, 1.5], [1, 1, 1]])

    def test_rejects_wrong_length(self) -> None:
        with pytest.raises(ShapeError):
            expand_weighted_game(make_bad_game(), [[1, 1], [1, 1]])
