"""CNF formulas, their clause groupings, and DIMACS text I/O.

Variables are 1-based integers (DIMACS convention); everything internal
that indexes into arrays subtracts one.  A ``Cnf`` is immutable once
built, as is every ``ConstraintGroup``; regrouping during strengthening
always constructs new group objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

VarId = int


class DimacsError(ValueError):
    """Malformed DIMACS input; ``line`` is the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GroupFileError(ValueError):
    """Malformed or inconsistent group file."""


class Literal(NamedTuple):
    var: VarId
    positive: bool

    @staticmethod
    def from_int(lit: int) -> "Literal":
        if lit == 0:
            raise ValueError("literal 0 is reserved as the clause terminator")
        return Literal(abs(lit), lit > 0)

    def to_int(self) -> int:
        return self.var if self.positive else -self.var

    def negated(self) -> "Literal":
        return Literal(self.var, not self.positive)


@dataclass(frozen=True)
class Clause:
    """A non-tautological disjunction of distinct literals."""

    literals: tuple[Literal, ...]

    def __post_init__(self):
        if not self.literals:
            raise ValueError("empty clause")
        seen: set[tuple[int, bool]] = set()
        for lit in self.literals:
            if lit in seen:
                raise ValueError(f"duplicate literal {lit.to_int()}")
            if lit.negated() in seen:
                raise ValueError(f"tautological clause: {lit.var} and its negation")
            seen.add(lit)

    @staticmethod
    def from_ints(lits: Iterable[int]) -> "Clause":
        return Clause(tuple(Literal.from_int(l) for l in lits))

    def to_ints(self) -> tuple[int, ...]:
        return tuple(l.to_int() for l in self.literals)

    @property
    def vars(self) -> frozenset[VarId]:
        return frozenset(l.var for l in self.literals)

    def satisfied_by(self, world) -> bool:
        """world: 0/1 per variable, index var-1."""
        return any(bool(world[l.var - 1]) == l.positive for l in self.literals)


@dataclass(frozen=True)
class Cnf:
    num_vars: int
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("negative variable count")
        for i, clause in enumerate(self.clauses):
            for lit in clause.literals:
                if not 1 <= lit.var <= self.num_vars:
                    raise ValueError(
                        f"clause {i + 1}: variable {lit.var} out of range 1..{self.num_vars}"
                    )

    @staticmethod
    def from_ints(num_vars: int, clauses: Iterable[Iterable[int]]) -> "Cnf":
        return Cnf(num_vars, tuple(Clause.from_ints(c) for c in clauses))

    def satisfied_by(self, world) -> bool:
        return all(c.satisfied_by(world) for c in self.clauses)


@dataclass(frozen=True)
class ConstraintGroup:
    """A set of clauses treated as one constraint; circuit attached after compile."""

    id: int
    clause_ids: frozenset[int]
    vars: frozenset[VarId]
    circuit_root: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.clause_ids:
            raise ValueError("group with no clauses")


def group_from_clauses(gid: int, cnf: Cnf, clause_ids: Iterable[int]) -> ConstraintGroup:
    ids = frozenset(clause_ids)
    vars_ = frozenset().union(*(cnf.clauses[i].vars for i in ids))
    return ConstraintGroup(gid, ids, vars_)


def shares_vars(g1: ConstraintGroup, g2: ConstraintGroup) -> bool:
    """True iff the two groups' variable scopes intersect (g vs itself: True)."""
    return not g1.vars.isdisjoint(g2.vars)


def check_partition(cnf: Cnf, groups: Iterable[ConstraintGroup]) -> None:
    """Raise GroupFileError unless the groups exactly partition the clause set."""
    claimed: dict[int, int] = {}
    for g in groups:
        for cid in g.clause_ids:
            if cid in claimed:
                raise GroupFileError(
                    f"clause {cid + 1} claimed by groups {claimed[cid]} and {g.id}"
                )
            claimed[cid] = g.id
    missing = set(range(len(cnf.clauses))) - claimed.keys()
    if missing:
        raise GroupFileError(
            f"clauses not claimed by any group: {sorted(i + 1 for i in missing)}"
        )


def parse_dimacs(text: str) -> Cnf:
    """Parse DIMACS CNF text: ``p cnf V C`` header, 0-terminated clauses.

    Clauses may span lines or share a line; ``c`` lines and blank lines are
    skipped.  Tautological clauses, duplicate literals, out-of-range
    variables, and clause-count mismatches are rejected with the offending
    line number.
    """
    num_vars = None
    num_clauses = None
    clauses: list[Clause] = []
    pending: list[int] = []
    pending_line = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError(lineno, "duplicate header")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(lineno, f"malformed header {line!r}")
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(lineno, f"malformed header {line!r}") from None
            if num_vars < 0 or num_clauses < 0:
                raise DimacsError(lineno, "negative counts in header")
            continue
        if num_vars is None:
            raise DimacsError(lineno, "clause before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(lineno, f"non-integer token {tok!r}") from None
            if lit == 0:
                if not pending:
                    raise DimacsError(lineno, "empty clause")
                try:
                    clauses.append(Clause.from_ints(pending))
                except ValueError as exc:
                    raise DimacsError(pending_line or lineno, str(exc)) from None
                pending = []
            else:
                if abs(lit) > num_vars:
                    raise DimacsError(
                        lineno, f"literal {lit} out of range for {num_vars} variables"
                    )
                if not pending:
                    pending_line = lineno
                pending.append(lit)

    last_line = len(text.splitlines())
    if num_vars is None:
        raise DimacsError(max(last_line, 1), "missing 'p cnf' header")
    if pending:
        raise DimacsError(pending_line, "unterminated clause (missing 0)")
    if len(clauses) != num_clauses:
        raise DimacsError(
            max(last_line, 1),
            f"header declares {num_clauses} clauses, found {len(clauses)}",
        )
    return Cnf(num_vars, tuple(clauses))


def emit_dimacs(cnf: Cnf) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    for clause in cnf.clauses:
        lines.append(" ".join(str(l) for l in clause.to_ints()) + " 0")
    return "\n".join(lines) + "\n"


def parse_groups(text: str | None, cnf: Cnf) -> list[ConstraintGroup]:
    """Parse a group file: one group per line of 1-based clause indices.

    ``#`` starts a comment; empty/absent text yields one singleton group
    per clause.  The groups must partition the clause set exactly.
    """
    n = len(cnf.clauses)
    if text is None or not text.strip():
        return [group_from_clauses(i, cnf, [i]) for i in range(n)]

    groups: list[ConstraintGroup] = []
    claimed: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        ids: list[int] = []
        for tok in line.split():
            try:
                idx = int(tok)
            except ValueError:
                raise GroupFileError(f"line {lineno}: non-integer token {tok!r}") from None
            if not 1 <= idx <= n:
                raise GroupFileError(
                    f"line {lineno}: clause index {idx} out of range 1..{n}"
                )
            cid = idx - 1
            if cid in claimed:
                raise GroupFileError(
                    f"line {lineno}: clause {idx} claimed twice "
                    f"(already in group {claimed[cid]})"
                )
            claimed[cid] = len(groups)
            ids.append(cid)
        if ids:
            groups.append(group_from_clauses(len(groups), cnf, ids))
    check_partition(cnf, groups)
    return groups


def emit_groups(groups: Iterable[ConstraintGroup]) -> str:
    lines = []
    for g in sorted(groups, key=lambda g: g.id):
        lines.append(" ".join(str(cid + 1) for cid in sorted(g.clause_ids)))
    return "\n".join(lines) + "\n"
