from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
import csv
import json
from pathlib import Path
import sys
from typing import Any, Protocol

import numpy as np

from semicoarse.config import Config
from semicoarse.lp_format import format_real
from semicoarse.reports import VerificationReport


CSV_SCHEMA = "semicoarse-csv/1"
KEY_COLUMN_WIDTH = 22
REPORT_LISTED_VIOLATIONS = 10


class Colors:
    """ANSI color codes for terminal output."""

    RESET = "\033[0m"
    BOLD = "\033[1m"
    CYAN = "\033[36m"
    GREEN = "\033[32m"
    RED = "\033[31m"
    YELLOW = "\033[33m"

    @classmethod
    def disable(cls) -> None:
        """Disable all colors (for piped output)."""
        cls.RESET = ""
        cls.BOLD = ""
        cls.CYAN = ""
        cls.GREEN = ""
        cls.RED = ""
        cls.YELLOW = ""


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays, paths and tuples into plain JSON values."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    """Write a JSON artifact with sorted keys and a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV artifact; the first line carries the schema version, floats use 17 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# {CSV_SCHEMA}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_real(cell) if isinstance(cell, float) else cell for cell in row])
    return path


class Outputter(Protocol):
    """Protocol for presenting command results."""

    def output_result(self, title: str, payload: dict[str, Any], output_fn: Callable[..., Any] = print) -> None:
        """Output a key/value summary of a command result."""
        ...

    def output_report(self, report: VerificationReport, output_fn: Callable[..., Any] = print) -> None:
        """Output a verification report."""
        ...

    def output_error(self, message: str, output_fn: Callable[..., Any] = print) -> None:
        """Output an error message."""
        ...

    def output_warning(self, message: str, output_fn: Callable[..., Any] = print) -> None:
        """Output a warning message."""
        ...


def create_outputter(config: Config) -> Outputter:
    """Return a JsonOutputter for ``--json``, a TextOutputter otherwise."""
    if config.args.json_output:
        return JsonOutputter()
    return TextOutputter()


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return format_real(value)
    if isinstance(value, dict | list | tuple | np.ndarray):
        return json.dumps(to_jsonable(value))
    return str(value)


class TextOutputter:
    """Text-based outputter with color support."""

    def output_result(self, title: str, payload: dict[str, Any], output_fn: Callable[..., Any] = print) -> None:
        output_fn(f"{Colors.BOLD}{Colors.CYAN}{title}:{Colors.RESET}")
        for key, value in payload.items():
            output_fn(f"  {Colors.GREEN}{key:<{KEY_COLUMN_WIDTH}}{Colors.RESET} {_format_value(value)}")

    def output_report(self, report: VerificationReport, output_fn: Callable[..., Any] = print) -> None:
        if report.passed:
            status = f"{Colors.GREEN}passed{Colors.RESET}"
        else:
            status = f"{Colors.RED}FAILED{Colors.RESET}"
        output_fn(f"{Colors.BOLD}{report.title}{Colors.RESET}: {status} ({len(report.checks)} checks)")
        worst = report.worst
        if worst is not None:
            output_fn(f"  worst: {worst.name} slack {format_real(worst.slack)}")
        for check in report.violations()[:REPORT_LISTED_VIOLATIONS]:
            output_fn(f"  {Colors.YELLOW}violated{Colors.RESET} {check.name}: {format_real(check.slack)}")

    def output_error(self, message: str, output_fn: Callable[..., Any] = print) -> None:
        output_fn(f"{Colors.RED}Error: {message}{Colors.RESET}", file=sys.stderr)

    def output_warning(self, message: str, output_fn: Callable[..., Any] = print) -> None:
        output_fn(f"{Colors.YELLOW}Warning: {message}{Colors.RESET}", file=sys.stderr)


class JsonOutputter:
    """JSON-based outputter."""

    def output_result(self, title: str, payload: dict[str, Any], output_fn: Callable[..., Any] = print) -> None:
        output_fn(json.dumps({"title": title, **to_jsonable(payload)}, indent=2))

    def output_report(self, report: VerificationReport, output_fn: Callable[..., Any] = print) -> None:
        output_fn(json.dumps(to_jsonable(report.to_dict()), indent=2))

    def output_error(self, message: str, output_fn: Callable[..., Any] = print) -> None:
        output_fn(json.dumps({"error": message}), file=sys.stderr)

    def output_warning(self, message: str, output_fn: Callable[..., Any] = print) -> None:
        output_fn(json.dumps({"warning": message}), file=sys.stderr)
