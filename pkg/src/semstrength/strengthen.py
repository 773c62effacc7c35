"""MI-guided merging of constraint groups.

Every variable-sharing pair of groups is scored by batch MI; the top
kappa pairs are merged, with transitive closure (connected components of
the chosen pair graph), subject to a per-circuit node budget.  Merges
whose conjunction exceeds the budget are abandoned and reported, never
fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .circuit import BudgetExceededError, NodeStore, circuit_size
from .compiler import compile_group
from .formula import Cnf, ConstraintGroup, check_partition, shares_vars
from .mi import MiEstimate, batch_mi


@dataclass(frozen=True)
class StrengthenConfig:
    """Schedule knobs: merge every ``eta`` epochs, ``kappa`` pairs per round.

    The computational budget is a per-circuit node cap plus a bound on the
    number of rounds (a deterministic stand-in for a wall-clock cap).
    """

    eta: int = 5
    kappa: int = 2
    node_cap: int = 200_000
    max_rounds: int = 4
    mi_batch: int = 32

    def __post_init__(self):
        if self.eta < 1 or self.kappa < 1 or self.node_cap < 1 or self.max_rounds < 0:
            raise ValueError("eta, kappa, node_cap must be >= 1 and max_rounds >= 0")


@dataclass(frozen=True)
class SkippedPair:
    pair: tuple[int, int]
    reason: str  # "disjoint" or "budget"


@dataclass(frozen=True)
class MergePlan:
    """Disjoint group-id sets to union (each of size >= 2), plus skip log."""

    components: tuple[tuple[int, ...], ...]
    skipped: tuple[SkippedPair, ...] = ()


@dataclass(frozen=True)
class MergeRecord:
    ids: tuple[int, ...]
    new_id: int
    nodes_before: tuple[int, ...]
    nodes_after: int


@dataclass(frozen=True)
class AbandonedMerge:
    ids: tuple[int, ...]
    reason: str


@dataclass(frozen=True)
class MergeOutcome:
    groups: tuple[ConstraintGroup, ...]
    merged: tuple[MergeRecord, ...]
    abandoned: tuple[AbandonedMerge, ...]


def rank_pairs(
    groups: Sequence[ConstraintGroup],
    store: NodeStore,
    batch,
    node_cap: int | None = None,
) -> tuple[list[MiEstimate], list[SkippedPair]]:
    """Score all unordered variable-sharing pairs, descending MI.

    Ties break on (lower i, lower j).  Variable-disjoint pairs are skipped
    outright (their MI is identically zero); pairs whose conjunction blows
    the node cap are skipped with reason "budget".
    """
    P = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    scored: list[MiEstimate] = []
    skipped: list[SkippedPair] = []
    by_id = sorted(groups, key=lambda g: g.id)
    for g1, g2 in combinations(by_id, 2):
        pair = (g1.id, g2.id)
        if not shares_vars(g1, g2):
            skipped.append(SkippedPair(pair, "disjoint"))
            continue
        if g1.circuit_root is None or g2.circuit_root is None:
            raise ValueError(f"groups {pair} not compiled")
        try:
            scored.append(
                batch_mi(store, g1.circuit_root, g2.circuit_root, P,
                         node_cap=node_cap, pair=pair)
            )
        except BudgetExceededError:
            skipped.append(SkippedPair(pair, "budget"))
    scored.sort(key=lambda e: (-e.value, e.pair))
    return scored, skipped


def plan_merges(
    ranked: Sequence[MiEstimate],
    kappa: int,
    skipped: Sequence[SkippedPair] = (),
) -> MergePlan:
    """Union-find over the endpoints of the top-kappa pairs.

    Chains merge transitively: picking (a, b) and (b, c) yields one
    component {a, b, c}.
    """
    chosen = list(ranked)[: max(kappa, 0)]
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for est in chosen:
        i, j = est.pair
        parent.setdefault(i, i)
        parent.setdefault(j, j)
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    components: dict[int, list[int]] = {}
    for x in parent:
        components.setdefault(find(x), []).append(x)
    merge_sets = sorted(
        tuple(sorted(c)) for c in components.values() if len(c) >= 2
    )
    return MergePlan(components=tuple(merge_sets), skipped=tuple(skipped))


def apply_merges(
    cnf: Cnf,
    groups: Sequence[ConstraintGroup],
    store: NodeStore,
    plan: MergePlan,
    node_cap: int | None = None,
) -> MergeOutcome:
    """Union each planned component into one compiled group.

    A component whose conjunction exceeds the node cap is abandoned: its
    original groups survive untouched.  The merged group reuses the
    smallest id of its component; the clause partition is preserved either
    way (re-checked before returning).
    """
    by_id = {g.id: g for g in groups}
    merged_records: list[MergeRecord] = []
    abandoned: list[AbandonedMerge] = []
    removed: set[int] = set()
    added: list[ConstraintGroup] = []
    for component in plan.components:
        members = [by_id[i] for i in component]
        clause_ids = frozenset().union(*(g.clause_ids for g in members))
        vars_ = frozenset().union(*(g.vars for g in members))
        new_id = min(component)
        candidate = ConstraintGroup(new_id, clause_ids, vars_)
        try:
            root = compile_group(store, cnf, candidate, node_cap=node_cap)
        except BudgetExceededError:
            abandoned.append(AbandonedMerge(ids=component, reason="budget"))
            continue
        added.append(replace(candidate, circuit_root=root))
        removed.update(component)
        merged_records.append(
            MergeRecord(
                ids=component,
                new_id=new_id,
                nodes_before=tuple(
                    circuit_size(store, g.circuit_root) for g in members
                ),
                nodes_after=circuit_size(store, root),
            )
        )
    new_groups = sorted(
        [g for g in groups if g.id not in removed] + added, key=lambda g: g.id
    )
    check_partition(cnf, new_groups)
    return MergeOutcome(
        groups=tuple(new_groups),
        merged=tuple(merged_records),
        abandoned=tuple(abandoned),
    )
