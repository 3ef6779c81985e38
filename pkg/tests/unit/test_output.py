"""Unit tests for the output module."""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from semicoarse.output import (
    CSV_SCHEMA,
    Colors,
    JsonOutputter,
    TextOutputter,
    to_jsonable,
    write_csv,
    write_json,
)
from semicoarse.reports import ConstraintCheck, VerificationReport


class _Capture:
    """Collects output_fn calls and the stream they were sent to."""

    def __init__(self) -> None:
        self.lines: list[str] = []
        self.files: list[Any] = []

    def __call__(self, text: str, file: Any = None) -> None:
        self.lines.append(text)
        self.files.append(file)

    @property
    def text(self) -> str:
        return "\n".join(self.lines)


def _report(passed: bool) -> VerificationReport:
    checks = [
        ConstraintCheck("player 1 / to L", -0.5),
        ConstraintCheck("player 2 / to R", 0.25 if not passed else -0.1),
    ]
    return VerificationReport.from_checks("cce", 1e-9, checks)


class TestColors:
    """Tests for Colors class."""

    def test_disable_colors(self) -> None:
        """disable() blanks every code."""
        Colors.disable()

        assert Colors.RESET == ""
        assert Colors.BOLD == ""
        assert Colors.CYAN == ""
        assert Colors.GREEN == ""
        assert Colors.RED == ""
        assert Colors.YELLOW == ""


class TestToJsonable:
    """Tests for the JSON conversion helper."""

    def test_numpy_values(self) -> None:
        data = {"sigma": np.array([[0.5, 0.5]]), "count": np.int64(3), "value": np.float64(0.25)}

        assert to_jsonable(data) == {"sigma": [[0.5, 0.5]], "count": 3, "value": 0.25}

    def test_paths_and_tuples(self) -> None:
        assert to_jsonable({"path": Path("a/b"), "outcome": (1, 2)}) == {"path": "a/b", "outcome": [1, 2]}

    def test_integer_keys(self) -> None:
        assert to_jsonable({1: "x"}) == {"1": "x"}


class TestArtifactWriters:
    """Tests for JSON and CSV artifacts."""

    def test_write_json_sorted(self, tmp_path: Path) -> None:
        """Keys are sorted and floats keep full precision."""
        path = write_json(tmp_path / "sub" / "out.json", {"b": 0.1 + 0.2, "a": np.array([1.0])})

        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text)["b"] == 0.1 + 0.2
        assert text.endswith("\n")

    def test_write_csv_schema_line(self, tmp_path: Path) -> None:
        """The first line carries the schema tag, floats use 17 significant digits."""
        path = write_csv(tmp_path / "t.csv", ("t", "p"), [(1, 0.1), (2, 1.0)])

        lines = path.read_text().splitlines()
        assert lines[0] == f"# {CSV_SCHEMA}"
        assert lines[1] == "t,p"
        assert lines[2] == "1,0.10000000000000001"
        assert lines[3] == "2,1"

    def test_write_csv_strings_untouched(self, tmp_path: Path) -> None:
        path = write_csv(tmp_path / "t.csv", ("label",), [("(1/2, 1/2)",)])

        assert path.read_text().splitlines()[2] == '"(1/2, 1/2)"'


class TestTextOutputter:
    """Tests for TextOutputter class."""

    def test_output_result(self) -> None:
        """Title first, then one line per key."""
        Colors.disable()
        capture = _Capture()

        TextOutputter().output_result("solution", {"value": 0.5, "support": ["(T, R): 1"]}, capture)

        assert capture.lines[0] == "solution:"
        assert "value" in capture.lines[1]
        assert "0.5" in capture.lines[1]
        assert '["(T, R): 1"]' in capture.lines[2]

    def test_output_report_passed(self) -> None:
        Colors.disable()
        capture = _Capture()

        TextOutputter().output_report(_report(passed=True), capture)

        assert "cce: passed (2 checks)" in capture.text
        assert "violated" not in capture.text

    def test_output_report_failed(self) -> None:
        """Failed reports list their violations."""
        Colors.disable()
        capture = _Capture()

        TextOutputter().output_report(_report(passed=False), capture)

        assert "cce: FAILED" in capture.text
        assert "violated player 2 / to R: 0.25" in capture.text

    def test_output_error_to_stderr(self, capsys: pytest.CaptureFixture[str]) -> None:
        Colors.disable()

        TextOutputter().output_error("linear program is infeasible")

        captured = capsys.readouterr()
        assert "Error: linear program is infeasible" in captured.err
        assert captured.out == ""

    def test_output_warning_to_stderr(self, capsys: pytest.CaptureFixture[str]) -> None:
        Colors.disable()

        TextOutputter().output_warning("Missing 'actions' field")

        assert "Warning: Missing 'actions' field" in capsys.readouterr().err


class TestJsonOutputter:
    """Tests for JsonOutputter class."""

    def test_output_result(self) -> None:
        capture = _Capture()

        JsonOutputter().output_result("certificate", {"epsilon": np.array([1.0, 0.5])}, capture)

        assert json.loads(capture.lines[0]) == {"title": "certificate", "epsilon": [1.0, 0.5]}

    def test_output_report(self) -> None:
        capture = _Capture()

        JsonOutputter().output_report(_report(passed=False), capture)

        data = json.loads(capture.lines[0])
        assert data["title"] == "cce"
        assert data["passed"] is False
        assert data["num_checks"] == 2
        assert [check["name"] for check in data["checks"]] == ["player 2 / to R"]

    def test_output_error(self, capsys: pytest.CaptureFixture[str]) -> None:
        JsonOutputter().output_error("bad")

        assert json.loads(capsys.readouterr().err) == {"error": "bad"}
