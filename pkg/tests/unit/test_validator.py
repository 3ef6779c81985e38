"""Unit tests for validator module."""

import json
from pathlib import Path
from typing import Any

import pytest

from semicoarse.errors import ValidationError
from semicoarse.game import GAME_FORMAT, game_to_dict
from semicoarse.generators import make_bad_game
from semicoarse.output import TextOutputter
from semicoarse.validator import load_validated_game, validate_game_document


def _document() -> dict[str, Any]:
    return game_to_dict(make_bad_game())


class TestValidateGameDocument:
    """Tests for validate_game_document function."""

    def test_valid_document_passes(self, capsys: pytest.CaptureFixture[str]) -> None:
        """A document written by game_to_dict passes silently."""
        assert validate_game_document(_document(), TextOutputter()) is True
        assert capsys.readouterr().err == ""

    def test_root_not_a_dict(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert validate_game_document([1, 2], TextOutputter()) is False
        assert "Root must be a dictionary, got list" in capsys.readouterr().err

    def test_wrong_format(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["format"] = "other/1"

        assert validate_game_document(data, TextOutputter()) is False
        assert f"expected '{GAME_FORMAT}'" in capsys.readouterr().err

    def test_missing_actions(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        del data["actions"]

        assert validate_game_document(data, TextOutputter()) is False
        assert "Missing 'actions' field" in capsys.readouterr().err

    def test_utilities_wrong_type(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["utilities"] = "none"

        assert validate_game_document(data, TextOutputter()) is False
        assert "'utilities' must be a list, got string" in capsys.readouterr().err

    def test_empty_action_list(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["actions"][1] = []

        assert validate_game_document(data, TextOutputter()) is False
        assert "Player 2: actions must be a non-empty list" in capsys.readouterr().err

    def test_action_without_label(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["actions"][0][0] = {"value": "0"}

        assert validate_game_document(data, TextOutputter()) is False
        assert "every action needs a string 'label'" in capsys.readouterr().err

    def test_tensor_count(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["utilities"] = data["utilities"][:1]

        assert validate_game_document(data, TextOutputter()) is False
        assert "Expected 2 utility tensors, got 1" in capsys.readouterr().err

    def test_tensor_shape(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["utilities"][0] = [[0, 0], [0, 0]]

        assert validate_game_document(data, TextOutputter()) is False
        assert "Player 1: utility tensor has shape (2, 2), expected (2, 3)" in capsys.readouterr().err

    def test_non_numeric_tensor(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["utilities"][1] = [["a", "b", "c"], ["d", "e", "f"]]

        assert validate_game_document(data, TextOutputter()) is False
        assert "Player 2: utilities are not a numeric tensor" in capsys.readouterr().err

    def test_non_finite_payoff(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["utilities"][0][0][0] = float("nan")

        assert validate_game_document(data, TextOutputter()) is False
        assert "Player 1: utilities must be finite" in capsys.readouterr().err

    def test_metadata_wrong_type(self, capsys: pytest.CaptureFixture[str]) -> None:
        data = _document()
        data["metadata"] = ["bad"]

        assert validate_game_document(data, TextOutputter()) is False
        assert "'metadata' must be a dictionary, got list" in capsys.readouterr().err

    def test_optional_fields_may_be_absent(self) -> None:
        data = _document()
        del data["metadata"]
        del data["players"]

        assert validate_game_document(data, TextOutputter()) is True


class TestLoadValidatedGame:
    """Tests for reading game documents from disk."""

    def test_round_trip(self, tmp_path: Path) -> None:
        path = tmp_path / "game.json"
        path.write_text(json.dumps(_document()))

        game = load_validated_game(path, TextOutputter())

        assert game.shape == (2, 3)
        assert game.labels(1) == ["L", "M", "R"]
        assert game.metadata["kind"] == "bad-game"

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ValidationError, match="cannot read game document"):
            load_validated_game(tmp_path / "absent.json", TextOutputter())

    def test_invalid_json(self, tmp_path: Path) -> None:
        path = tmp_path / "game.json"
        path.write_text("{not json")

        with pytest.raises(ValidationError, match="cannot read game document"):
            load_validated_game(path, TextOutputter())

    def test_invalid_document(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        path = tmp_path / "game.json"
        path.write_text(json.dumps({"format": GAME_FORMAT}))

        with pytest.raises(ValidationError, match="failed validation"):
            load_validated_game(path, TextOutputter())
        assert "Missing 'actions' field" in capsys.readouterr().err
