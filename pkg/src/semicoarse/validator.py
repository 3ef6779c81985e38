"""Game document validation."""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from semicoarse.errors import ValidationError
from semicoarse.game import GAME_FORMAT, NormalFormGame, game_from_dict
from semicoarse.output import Outputter


_TYPE_NAMES = {
    "str": "string",
    "bool": "boolean",
    "int": "integer",
    "float": "float",
    "list": "list",
    "dict": "dictionary",
}


def _type_name(expected: type | tuple[type, ...]) -> str:
    if isinstance(expected, tuple):
        return " or ".join(_TYPE_NAMES.get(t.__name__, t.__name__) for t in expected)
    return _TYPE_NAMES.get(expected.__name__, expected.__name__)


def _validate_field(
    data: dict[str, Any],
    field_name: str,
    expected_type: type | tuple[type, ...],
    outputter: Outputter,
    required: bool = True,
) -> bool:
    """Check one top-level field's presence and type."""
    if field_name not in data:
        if required:
            outputter.output_warning(f"Missing '{field_name}' field")
        return not required

    if not isinstance(data[field_name], expected_type):
        actual = type(data[field_name]).__name__
        outputter.output_warning(
            f"'{field_name}' must be a {_type_name(expected_type)}, got {_TYPE_NAMES.get(actual, actual)}"
        )
        return False

    return True


def _validate_format(data: dict[str, Any], outputter: Outputter) -> bool:
    if data.get("format") != GAME_FORMAT:
        outputter.output_warning(f"Unexpected format {data.get('format')!r}, expected '{GAME_FORMAT}'")
        return False
    return True


def _validate_actions(actions: list[Any], outputter: Outputter) -> bool:
    valid = True
    for player, acts in enumerate(actions, start=1):
        if not isinstance(acts, list) or not acts:
            outputter.output_warning(f"Player {player}: actions must be a non-empty list")
            valid = False
            continue
        for action in acts:
            if not isinstance(action, dict) or not isinstance(action.get("label"), str):
                outputter.output_warning(f"Player {player}: every action needs a string 'label'")
                valid = False
                break
    return valid


def _validate_utilities(data: dict[str, Any], outputter: Outputter) -> bool:
    shape = tuple(len(acts) for acts in data["actions"])
    if len(data["utilities"]) != len(shape):
        outputter.output_warning(f"Expected {len(shape)} utility tensors, got {len(data['utilities'])}")
        return False
    valid = True
    for player, tensor in enumerate(data["utilities"], start=1):
        try:
            array = np.asarray(tensor, dtype=np.float64)
        except (TypeError, ValueError):
            outputter.output_warning(f"Player {player}: utilities are not a numeric tensor")
            valid = False
            continue
        if array.shape != shape:
            outputter.output_warning(f"Player {player}: utility tensor has shape {array.shape}, expected {shape}")
            valid = False
        elif not all(math.isfinite(x) for x in array.flat):
            outputter.output_warning(f"Player {player}: utilities must be finite")
            valid = False
    return valid


def validate_game_document(data: Any, outputter: Outputter) -> bool:
    """Validate a loaded game document before deserialization.

    Args:
        data: Parsed JSON document
        outputter: Output handler for warnings

    Returns:
        True if valid, False if warnings were issued
    """
    if not isinstance(data, dict):
        outputter.output_warning(f"Root must be a dictionary, got {type(data).__name__}")
        return False

    valid = _validate_format(data, outputter)

    # structure errors are fatal for the remaining checks
    if not (
        _validate_field(data, "actions", list, outputter)
        and _validate_field(data, "utilities", list, outputter)
        and _validate_actions(data["actions"], outputter)
    ):
        return False
    valid &= _validate_field(data, "metadata", dict, outputter, required=False)
    valid &= _validate_field(data, "players", int, outputter, required=False)
    valid &= _validate_utilities(data, outputter)
    return valid


def load_validated_game(path: Path, outputter: Outputter) -> NormalFormGame:
    """Read, validate and deserialize a game document.

    Raises:
        ValidationError: Unreadable JSON or a structurally invalid document
    """
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read game document {path}: {e}") from e
    if not validate_game_document(data, outputter):
        raise ValidationError(f"game document {path} failed validation")
    return game_from_dict(data)
