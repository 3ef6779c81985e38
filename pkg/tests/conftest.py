"""Shared fixtures."""

from collections.abc import Iterator

import pytest

from semicoarse.output import Colors


_COLOR_NAMES = ("RESET", "BOLD", "CYAN", "GREEN", "RED", "YELLOW")


@pytest.fixture(autouse=True)
def _restore_colors() -> Iterator[None]:
    """main() disables colors process-wide; put them back after every test."""
    saved = {name: getattr(Colors, name) for name in _COLOR_NAMES}
    yield
    for name, value in saved.items():
        setattr(Colors, name, value)

