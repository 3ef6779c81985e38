"""Textual LP format export and the matching line parser.

The export writes the widely supported CPLEX-style LP layout (objective,
``Subject To``, ``Bounds``, ``End``) with every coefficient printed to 17
significant digits, so a double survives the round trip exactly. Every
variable is listed in the bounds section, which fixes the variable order
for :func:`parse_lp_text`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
import re
from typing import Any

import numpy as np

from semicoarse.errors import UsageError
from semicoarse.lp import LinearProgram, LpSolution, Relation


TERMS_PER_LINE = 8

_SECTION_PATTERNS = {
    "objective": re.compile(r"^\s*(maximize|maximise|max|minimize|minimise|min)\s*$", re.IGNORECASE),
    "constraints": re.compile(r"^\s*(subject\s+to|such\s+that|st|s\.t\.)\s*$", re.IGNORECASE),
    "bounds": re.compile(r"^\s*bounds\s*$", re.IGNORECASE),
    "end": re.compile(r"^\s*end\s*$", re.IGNORECASE),
}
_LABEL_PATTERN = re.compile(r"^\s*([A-Za-z_][\w.(){},]*)\s*:\s*(.*)$")
_FREE_PATTERN = re.compile(r"^\s*(\S+)\s+free\s*$", re.IGNORECASE)
_NONNEGATIVE_PATTERN = re.compile(r"^\s*(\S+)\s*>=\s*0\s*$")
_RELATIONS = {"<=": Relation.LE, "=<": Relation.LE, "=": Relation.EQ}


def format_real(value: float) -> str:
    """Fixed 17-significant-digit rendering."""
    return f"{value:.17g}"


def _signed(value: float) -> str:
    text = format_real(value)
    return text if text.startswith("-") else "+" + text


def _expression(coefficients: np.ndarray, names: tuple[str, ...]) -> list[str]:
    """Terms of a linear expression, wrapped to a fixed number per line."""
    nonzero = np.flatnonzero(coefficients)
    if nonzero.size == 0 and names:
        nonzero = np.array([0])
    terms = [f"{_signed(float(coefficients[j]))} {names[j]}" for j in nonzero]
    return [" ".join(terms[k : k + TERMS_PER_LINE]) for k in range(0, len(terms), TERMS_PER_LINE)] or [""]


def export_lp_text(lp: LinearProgram) -> str:
    """Deterministic LP-format text for a linear program."""
    lines = [f"\\ Problem: {lp.name}", "Maximize"]
    objective = _expression(lp.objective, lp.variable_names)
    lines.append(f" obj: {objective[0]}")
    lines += [f"   {chunk}" for chunk in objective[1:]]
    lines.append("Subject To")
    for r, row_name in enumerate(lp.row_names):
        chunks = _expression(lp.matrix[r], lp.variable_names)
        chunks[-1] = f"{chunks[-1]} {lp.relations[r].value} {format_real(float(lp.rhs[r]))}"
        lines.append(f" {row_name}: {chunks[0]}")
        lines += [f"   {chunk}" for chunk in chunks[1:]]
    lines.append("Bounds")
    for name, lower in zip(lp.variable_names, lp.lower, strict=True):
        lines.append(f" {name} free" if math.isinf(lower) else f" {name} >= 0")
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass
class _ParserState:
    """State for parsing LP text."""

    section: str = "preamble"
    name: str = "lp"
    sense: float = 1.0
    objective: dict[str, float] = field(default_factory=dict)
    pending_name: str | None = None
    pending_tokens: list[str] = field(default_factory=list)
    rows: list[tuple[str, dict[str, float], Relation, float]] = field(default_factory=list)
    variables: list[str] = field(default_factory=list)
    free: set[str] = field(default_factory=set)

    def start_section(self, section: str, line: str) -> None:
        """Close any open constraint and enter a new section."""
        self.flush_objective()
        if self.pending_tokens:
            raise UsageError(f"unterminated constraint {self.pending_name!r}")
        self.section = section
        if section == "objective" and line.strip().lower().startswith("min"):
            self.sense = -1.0

    def flush_objective(self) -> None:
        if self.section == "objective" and self.pending_tokens:
            self.objective = _parse_terms(self.pending_tokens)
            self.pending_tokens = []

    def handle_constraint_tokens(self, tokens: list[str]) -> None:
        """Accumulate tokens until a relation and right-hand side close the row."""
        self.pending_tokens += tokens
        relation_at = next((k for k, tok in enumerate(self.pending_tokens) if tok in _RELATIONS), None)
        if relation_at is None:
            return
        if relation_at + 2 != len(self.pending_tokens):
            raise UsageError(f"malformed constraint {self.pending_name!r}")
        coefficients = _parse_terms(self.pending_tokens[:relation_at])
        relation = _RELATIONS[self.pending_tokens[relation_at]]
        rhs = float(self.pending_tokens[relation_at + 1])
        self.rows.append((self.pending_name or f"r{len(self.rows)}", coefficients, relation, rhs))
        self.pending_name = None
        self.pending_tokens = []

    def handle_bound(self, line: str) -> None:
        free = _FREE_PATTERN.match(line)
        nonnegative = _NONNEGATIVE_PATTERN.match(line)
        if free:
            self.variables.append(free.group(1))
            self.free.add(free.group(1))
        elif nonnegative:
            self.variables.append(nonnegative.group(1))
        else:
            raise UsageError(f"unsupported bound line {line.strip()!r}")


def _parse_terms(tokens: list[str]) -> dict[str, float]:
    if len(tokens) % 2:
        raise UsageError(f"expected coefficient/variable pairs, got {' '.join(tokens)!r}")
    terms: dict[str, float] = {}
    for coefficient, name in zip(tokens[::2], tokens[1::2], strict=True):
        terms[name] = terms.get(name, 0.0) + float(coefficient)
    return terms


def _try_handle_section(line: str, state: _ParserState) -> bool:
    for section, pattern in _SECTION_PATTERNS.items():
        if pattern.match(line):
            state.start_section(section, line)
            return True
    return False


def _handle_expression_line(line: str, state: _ParserState) -> None:
    label = _LABEL_PATTERN.match(line)
    body = line
    if label:
        body = label.group(2)
        if state.section == "constraints":
            state.pending_name = label.group(1)
    tokens = body.split()
    if state.section == "objective":
        state.pending_tokens += tokens
    else:
        state.handle_constraint_tokens(tokens)


def _process_line(line: str, state: _ParserState) -> None:
    stripped = line.strip()
    if not stripped:
        return
    if stripped.startswith("\\"):
        if stripped.startswith("\\ Problem:"):
            state.name = stripped.split(":", 1)[1].strip()
        return
    if _try_handle_section(line, state):
        return
    if state.section in ("objective", "constraints"):
        _handle_expression_line(line, state)
    elif state.section == "bounds":
        state.handle_bound(line)
    elif state.section != "end":
        raise UsageError(f"text outside any section: {stripped!r}")


def parse_lp_text(text: str) -> LinearProgram:
    """Parse LP text written by :func:`export_lp_text`.

    Raises:
        UsageError: The text does not follow the exported layout
    """
    state = _ParserState()
    for line in text.splitlines():
        _process_line(line, state)
    if state.section != "end":
        raise UsageError("LP text has no End marker")

    index = {name: j for j, name in enumerate(state.variables)}
    unknown = (set(state.objective) | {v for _, row, _, _ in state.rows for v in row}) - set(index)
    if unknown:
        raise UsageError(f"variables missing from the bounds section: {sorted(unknown)}")
    objective = np.zeros(len(index))
    for name, value in state.objective.items():
        objective[index[name]] = state.sense * value
    matrix = np.zeros((len(state.rows), len(index)))
    for r, (_, row, _, _) in enumerate(state.rows):
        for name, value in row.items():
            matrix[r, index[name]] = value
    return LinearProgram(
        objective,
        matrix,
        tuple(rel for _, _, rel, _ in state.rows),
        np.array([rhs for _, _, _, rhs in state.rows]),
        np.array([-math.inf if name in state.free else 0.0 for name in state.variables]),
        tuple(state.variables),
        tuple(name for name, _, _, _ in state.rows),
        state.name,
    )


def solution_to_dict(solution: LpSolution, lp: LinearProgram | None = None) -> dict[str, Any]:
    """JSON-ready solution dump, with residuals when the program is supplied."""
    data = solution.to_dict()
    if solution.exact_value is not None:
        data["exact_value"] = str(solution.exact_value)
    if lp is not None and solution.optimal:
        data["residuals"] = solution.residuals(lp)
    return data
