"""Verification reports shared by the constraint checkers.

A report is a flat list of named constraints with their slacks. A positive
slack means the constraint is violated by that amount; the report passes
when no slack exceeds its tolerance.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class ConstraintCheck:
    """One evaluated constraint.

    Attributes:
        name: Stable human-readable constraint name (e.g. ``"player 2 / subset{1}"``)
        slack: Constraint value; positive means violated
        outcome: Optional outcome index the check refers to
    """

    name: str
    slack: float
    outcome: tuple[int, ...] | None = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"name": self.name, "slack": self.slack}
        if self.outcome is not None:
            data["outcome"] = list(self.outcome)
        return data


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of checking a family of constraints against a tolerance."""

    title: str
    tolerance: float
    checks: tuple[ConstraintCheck, ...] = field(default_factory=tuple)

    @classmethod
    def from_checks(cls, title: str, tolerance: float, checks: Iterable[ConstraintCheck]) -> VerificationReport:
        return cls(title=title, tolerance=tolerance, checks=tuple(checks))

    @property
    def max_violation(self) -> float:
        """Largest slack over all checks, or 0.0 for an empty report."""
        return max((check.slack for check in self.checks), default=0.0)

    @property
    def worst(self) -> ConstraintCheck | None:
        """The check with the largest slack."""
        if not self.checks:
            return None
        return max(self.checks, key=lambda check: check.slack)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def violations(self) -> list[ConstraintCheck]:
        """Checks whose slack exceeds the tolerance, worst first."""
        bad = [check for check in self.checks if check.slack > self.tolerance]
        return sorted(bad, key=lambda check: check.slack, reverse=True)

    def to_dict(self, include_all: bool = False) -> dict[str, Any]:
        """Serialize the report.

        Args:
            include_all: Include every check instead of only the violations

        Returns:
            JSON-ready dictionary
        """
        listed = self.checks if include_all else tuple(self.violations())
        return {
            "title": self.title,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "max_violation": self.max_violation,
            "num_checks": len(self.checks),
            "checks": [check.to_dict() for check in listed],
        }
