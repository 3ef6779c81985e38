"""Linear strategy modifications.

A modification of player i is a left-stochastic matrix P over A_i (column a is
the distribution the action a is replaced by). The semicoarse family is the
set of such matrices induced by generator pairs (Q, q) with Q symmetric,
column conservation and off-diagonal tangency. This module builds the
canonical subset and cycle modifications, their weighted variants, and
converts between matrices and generator pairs.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from itertools import combinations, permutations
import logging
import math
from typing import Any

import numpy as np

from semicoarse.errors import DomainError, EnumerationBudgetError, NotSemicoarseError, ShapeError, ValidationError
from semicoarse.game import FloatArray
from semicoarse.reports import ConstraintCheck, VerificationReport


logger = logging.getLogger(__name__)

EQUALITY_TOLERANCE = 1e-10
NONNEGATIVITY_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-12
ENUMERATION_BUDGET = 2**20


@dataclass(frozen=True, eq=False)
class GeneratorPair:
    """Symmetric matrix Q and vector q generating the field ``Q x + q``."""

    Q: FloatArray
    q: FloatArray

    def __post_init__(self) -> None:
        Q = np.array(self.Q, dtype=np.float64)
        q = np.array(self.q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or q.shape != (Q.shape[0],):
            raise ShapeError(f"generator pair needs a square Q and matching q, got {Q.shape} and {q.shape}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)

    @classmethod
    def zero(cls, m: int) -> GeneratorPair:
        return cls(np.zeros((m, m)), np.zeros(m))

    @property
    def size(self) -> int:
        return int(self.q.shape[0])

    def field_matrix(self) -> FloatArray:
        """Matrix ``M(a', a) = Q(a', a) + q(a')``; on the simplex ``M x = Q x + q``."""
        return self.Q + self.q[:, None]

    def scaled(self, factor: float) -> GeneratorPair:
        return GeneratorPair(factor * self.Q, factor * self.q)

    def __add__(self, other: GeneratorPair) -> GeneratorPair:
        return GeneratorPair(self.Q + other.Q, self.q + other.q)

    def to_dict(self) -> dict[str, Any]:
        return {"Q": self.Q.tolist(), "q": self.q.tolist()}


@dataclass(frozen=True, eq=False)
class TransformMatrix:
    """Left-stochastic matrix with a descriptive label."""

    matrix: FloatArray
    label: str = ""

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f"transform must be square, got shape {matrix.shape}")
        if np.any(matrix < -NONNEGATIVITY_TOLERANCE) or np.any(np.abs(matrix.sum(axis=0) - 1.0) > EQUALITY_TOLERANCE):
            raise ValidationError(f"transform {self.label or '<unnamed>'} is not left-stochastic")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class TripletCheck:
    """Result of the triplet test; ``witness`` is the first violating triplet."""

    holds: bool
    witness: tuple[int, int, int] | None = None
    lhs: float = 0.0
    rhs: float = 0.0


def validate_generator(
    pair: GeneratorPair,
    equality_tol: float = EQUALITY_TOLERANCE,
    nonnegativity_tol: float = NONNEGATIVITY_TOLERANCE,
    symmetry_tol: float = SYMMETRY_TOLERANCE,
) -> VerificationReport:
    """Check symmetry, column conservation and off-diagonal tangency.

    Each check's slack is its violation minus its own tolerance, so the report
    (tolerance 0) passes iff every condition holds within tolerance.
    """
    Q, field = pair.Q, pair.field_matrix()
    m = pair.size
    checks: list[ConstraintCheck] = []
    for a in range(m):
        for b in range(a + 1, m):
            checks.append(ConstraintCheck(f"symmetry ({a},{b})", abs(Q[a, b] - Q[b, a]) - symmetry_tol))
    for a, total in enumerate(field.sum(axis=0)):
        checks.append(ConstraintCheck(f"conservation column {a}", abs(total) - equality_tol))
    for target in range(m):
        for a in range(m):
            if target != a:
                checks.append(ConstraintCheck(f"tangency ({target},{a})", -field[target, a] - nonnegativity_tol))
    return VerificationReport.from_checks("generator", 0.0, checks)


def to_stochastic(pair: GeneratorPair, **tolerances: float) -> tuple[TransformMatrix, float]:
    """Convert a generator pair into a left-stochastic matrix ``I + delta (Q + q 1^T)``.

    Returns:
        The matrix and the step ``delta = 1/Delta`` (1 when Delta = 0)

    Raises:
        ValidationError: The pair violates its conditions
    """
    report = validate_generator(pair, **tolerances)
    if not report.passed:
        worst = report.worst
        name = worst.name if worst else ""
        raise ValidationError(f"invalid generator pair: {name} off by {report.max_violation:.3g}")
    field = pair.field_matrix()
    off_diagonal = field - np.diag(np.diag(field))
    spread = float(off_diagonal.sum(axis=0).max(initial=0.0))
    delta = 1.0 / spread if spread > 0 else 1.0
    matrix = np.eye(pair.size) + delta * field
    matrix[(matrix < 0) & (matrix > -1e-9)] = 0.0
    return TransformMatrix(matrix, "generated"), delta


def _check_subset(m: int, subset: Iterable[int]) -> list[int]:
    members = sorted(set(subset))
    if any(not 0 <= a < m for a in members):
        raise DomainError(f"subset {members} out of range for {m} actions")
    if len(members) == m:
        raise DomainError("subset must leave a nonempty complement")
    return members


def _check_cycle(m: int, cycle: Sequence[int]) -> list[int]:
    members = list(cycle)
    if len(members) < 2:
        raise DomainError("a cycle needs at least two actions")
    if len(set(members)) != len(members):
        raise DomainError(f"cycle {members} repeats an action")
    if any(not 0 <= a < m for a in members):
        raise DomainError(f"cycle {members} out of range for {m} actions")
    return members


def _check_weight_vector(m: int, weights: Sequence[float] | FloatArray) -> FloatArray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (m,) or np.any(w < 1) or np.any(w != np.round(w)):
        raise ValidationError(f"weights must be {m} integers >= 1")
    return w


def _subset_label(prefix: str, members: Sequence[int]) -> str:
    return prefix + "{" + ",".join(str(a) for a in members) + "}"


def _cycle_label(prefix: str, members: Sequence[int]) -> str:
    return prefix + "(" + ",".join(str(a) for a in members) + ")"


def subset_transform(m: int, subset: Iterable[int]) -> TransformMatrix:
    """Send every action of the subset to the uniform distribution on its complement."""
    members = _check_subset(m, subset)
    return weighted_subset_transform(m, members, np.ones(m), label=_subset_label("subset", members))


def constant_transform(m: int, target: int) -> TransformMatrix:
    """Deviation to a fixed action (subset transform of everything else)."""
    return TransformMatrix(subset_transform(m, [a for a in range(m) if a != target]).matrix, f"to {target}")


def weighted_subset_transform(
    m: int,
    subset: Iterable[int],
    weights: Sequence[float] | FloatArray,
    label: str | None = None,
) -> TransformMatrix:
    """Send every action of the subset to the weight-proportional distribution on its complement."""
    members = _check_subset(m, subset)
    w = _check_weight_vector(m, weights)
    matrix = np.eye(m)
    complement = [a for a in range(m) if a not in members]
    target = np.zeros(m)
    if len(set(w[complement].tolist())) == 1:
        target[complement] = 1.0 / len(complement)
    else:
        target[complement] = w[complement] / w[complement].sum()
    for a in members:
        matrix[:, a] = target
    return TransformMatrix(matrix, label or _subset_label("wsubset", members))


def cycle_transform(m: int, cycle: Sequence[int]) -> TransformMatrix:
    """Send each cycle member to an equal mix of its two cyclic neighbours."""
    members = _check_cycle(m, cycle)
    return weighted_cycle_transform(m, members, np.ones(m), label=_cycle_label("cycle", members))


def weighted_cycle_transform(
    m: int,
    cycle: Sequence[int],
    weights: Sequence[float] | FloatArray,
    label: str | None = None,
) -> TransformMatrix:
    """Weighted cycle modification.

    With ``delta = min_l w(a_l)``, member ``a_l`` keeps mass ``1 - delta/w(a_l)``
    and sends ``delta/(2 w(a_l))`` to each cyclic neighbour.
    """
    members = _check_cycle(m, cycle)
    w = _check_weight_vector(m, weights)
    delta = float(w[members].min())
    matrix = np.eye(m)
    k = len(members)
    for position, a in enumerate(members):
        moved = delta / w[a]
        matrix[a, a] = 1.0 - moved
        matrix[members[position - 1], a] += moved / 2
        matrix[members[(position + 1) % k], a] += moved / 2
    return TransformMatrix(matrix, label or _cycle_label("wcycle", members))


def is_semicoarse_transform(transform: TransformMatrix | FloatArray) -> TripletCheck:
    """Test the triplet condition on every distinct action triplet.

    ``P(a,b) + P(b,c) + P(c,a) = P(a,c) + P(c,b) + P(b,a)`` must hold within 1e-10.
    """
    P = transform.matrix if isinstance(transform, TransformMatrix) else TransformMatrix(transform).matrix
    skew = P - P.T
    cyclic = skew[:, :, None] + skew[None, :, :] + skew.T[:, None, :]
    m = P.shape[0]
    for a, b, c in np.argwhere(np.abs(cyclic) > EQUALITY_TOLERANCE):
        if len({int(a), int(b), int(c)}) == 3:
            lhs = P[a, b] + P[b, c] + P[c, a]
            rhs = P[a, c] + P[c, b] + P[b, a]
            return TripletCheck(False, (int(a), int(b), int(c)), float(lhs), float(rhs))
    logger.debug("triplet condition holds for a %dx%d transform", m, m)
    return TripletCheck(True)


def generator_from_field(field: FloatArray, tolerance: float = 1e-9) -> GeneratorPair:
    """Split a field matrix ``M = Q + q 1^T`` with Q symmetric, using action 0 as reference.

    Raises:
        NotSemicoarseError: No symmetric decomposition exists
    """
    M = np.asarray(field, dtype=np.float64)
    q = M[:, 0] - M[0, :]
    Q = M - q[:, None]
    if np.max(np.abs(Q - Q.T), initial=0.0) > tolerance:
        raise NotSemicoarseError("field has no decomposition with a symmetric Q")
    return GeneratorPair((Q + Q.T) / 2, q)


def generator_from_transform(transform: TransformMatrix | FloatArray) -> GeneratorPair:
    """Generator pair whose field ``Q x + q`` equals ``(P - I) x`` on the simplex.

    Raises:
        NotSemicoarseError: The matrix fails the triplet condition
    """
    P = transform.matrix if isinstance(transform, TransformMatrix) else TransformMatrix(transform).matrix
    check = is_semicoarse_transform(P)
    if not check.holds:
        raise NotSemicoarseError(f"triplet condition fails at {check.witness}: {check.lhs:g} != {check.rhs:g}")
    return generator_from_field(P - np.eye(P.shape[0]))


def canonical_cycles(m: int, max_cycle_len: int) -> list[tuple[int, ...]]:
    """Undirected cycles, each listed once with its minimum first and the smaller neighbour second."""
    cycles: list[tuple[int, ...]] = []
    for k in range(2, max_cycle_len + 1):
        for combo in combinations(range(m), k):
            first, rest = combo[0], combo[1:]
            for order in permutations(rest):
                if k == 2 or order[0] < order[-1]:
                    cycles.append((first, *order))
    return cycles


def cycle_count(m: int, max_cycle_len: int) -> int:
    """Number of undirected cycles of length 2..max_cycle_len on m actions."""
    return sum(
        math.comb(m, k) * (1 if k == 2 else math.factorial(k - 1) // 2) for k in range(2, max_cycle_len + 1)
    )


def _check_enumeration(m: int, max_cycle_len: int | None) -> int:
    if m < 2:
        raise DomainError("enumeration needs at least two actions")
    if 2**m > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(f"2^{m} subsets exceed the enumeration budget")
    length = m if max_cycle_len is None else max_cycle_len
    if not 2 <= length <= m:
        raise DomainError(f"max cycle length must lie in 2..{m}")
    return length


def _proper_subsets(m: int) -> list[list[int]]:
    return [[a for a in range(m) if mask >> a & 1] for mask in range(1, 2**m - 1)]


def enumerate_canonical(m: int, max_cycle_len: int | None = None) -> list[TransformMatrix]:
    """All subset transforms plus all cycle transforms up to the given length."""
    length = _check_enumeration(m, max_cycle_len)
    family = [subset_transform(m, subset) for subset in _proper_subsets(m)]
    family += [cycle_transform(m, cycle) for cycle in canonical_cycles(m, length)]
    logger.debug("enumerated %d canonical transforms on %d actions", len(family), m)
    return family


def enumerate_weighted_canonical(
    m: int,
    weights: Sequence[float] | FloatArray,
    max_cycle_len: int | None = None,
) -> list[TransformMatrix]:
    """Weighted subset and weighted cycle transforms."""
    length = _check_enumeration(m, max_cycle_len)
    family = [weighted_subset_transform(m, subset, weights) for subset in _proper_subsets(m)]
    family += [weighted_cycle_transform(m, cycle, weights) for cycle in canonical_cycles(m, length)]
    return family
