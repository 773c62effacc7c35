"""The single variable order shared by every circuit in a run.

All circuits compiled against the same order factorize their scopes
identically (a right-linear hierarchical partitioning), which is the
structural condition that keeps pairwise conjunction polynomial.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .formula import Cnf, VarId

STRATEGIES = ("natural", "degree_desc", "seeded_random")


@dataclass(frozen=True)
class VariableOrder:
    """A permutation of 1..n plus its inverse rank map (position per var)."""

    sequence: tuple[VarId, ...]
    rank: tuple[int, ...] = field(repr=False)  # rank[var] = position, rank[0] unused

    def __post_init__(self):
        n = len(self.sequence)
        if sorted(self.sequence) != list(range(1, n + 1)):
            raise ValueError("sequence is not a permutation of 1..n")
        if len(self.rank) != n + 1:
            raise ValueError("rank table has wrong length")
        for pos, var in enumerate(self.sequence):
            if self.rank[var] != pos:
                raise ValueError("rank table inconsistent with sequence")

    @staticmethod
    def from_sequence(sequence: list[VarId] | tuple[VarId, ...]) -> "VariableOrder":
        seq = tuple(sequence)
        rank = [0] * (len(seq) + 1)
        for pos, var in enumerate(seq):
            rank[var] = pos
        return VariableOrder(seq, tuple(rank))

    @property
    def num_vars(self) -> int:
        return len(self.sequence)

    def rank_of(self, var: VarId) -> int:
        return self.rank[var]

    def to_json(self) -> dict:
        return {"sequence": list(self.sequence)}


def build_order(cnf: Cnf, strategy: str = "degree_desc", seed: int | None = None) -> VariableOrder:
    """Build the shared order.

    ``natural`` is 1..n; ``degree_desc`` sorts by clause-occurrence count
    (ties broken by variable index); ``seeded_random`` is a reproducible
    shuffle and requires ``seed``.
    """
    if cnf.num_vars < 1:
        raise ValueError("cannot order a formula with no variables")
    if strategy == "natural":
        seq = list(range(1, cnf.num_vars + 1))
    elif strategy == "degree_desc":
        counts = Counter(lit.var for clause in cnf.clauses for lit in clause.literals)
        seq = sorted(range(1, cnf.num_vars + 1), key=lambda v: (-counts[v], v))
    elif strategy == "seeded_random":
        if seed is None:
            raise ValueError("seeded_random requires a seed")
        seq = list(range(1, cnf.num_vars + 1))
        random.Random(seed).shuffle(seq)
    else:
        raise ValueError(f"unknown order strategy {strategy!r} (expected one of {STRATEGIES})")
    return VariableOrder.from_sequence(seq)
