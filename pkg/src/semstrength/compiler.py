"""Compile clauses and clause groups into circuits; conjoin compatible ones.

Everything here goes through one shared ``NodeStore``, so all results are
ordered by the same variable order and conjunction is the classic
polynomial apply with pairwise memoization.  Canonical handles make the
conjunction commutative and fold-order independent up to pointer
identity; the fold order is still fixed (ascending clause id) so that
intermediate sizes, and hence budget behavior, are reproducible.
"""

from __future__ import annotations

from .circuit import FALSE, TRUE, NodeStore, mk_decision
from .formula import Clause, Cnf, ConstraintGroup


def compile_clause(store: NodeStore, clause: Clause) -> int:
    """Chain of decisions over the clause's variables in order rank.

    At each variable the satisfying polarity branch ends in TRUE; the
    other branch falls through to the rest of the clause.
    """
    lits = sorted(clause.literals, key=lambda l: store.order.rank_of(l.var))
    acc = FALSE
    for lit in reversed(lits):
        if lit.positive:
            acc = mk_decision(store, lit.var, TRUE, acc)
        else:
            acc = mk_decision(store, lit.var, acc, TRUE)
    return acc


def conjoin(store: NodeStore, a: int, b: int, node_cap: int | None = None) -> int:
    """Root whose models are exactly the intersection of both operands'.

    Size is bounded by size(a) * size(b).  If ``node_cap`` is given, the
    operation raises BudgetExceededError once it has created that many new
    nodes in the store.
    """
    with store.budget(node_cap):
        return _conjoin_rec(store, a, b, {})


def _conjoin_rec(store: NodeStore, a: int, b: int, memo: dict) -> int:
    if a == FALSE or b == FALSE:
        return FALSE
    if a == TRUE:
        return b
    if b == TRUE or a == b:
        return a
    key = (a, b) if a <= b else (b, a)
    found = memo.get(key)
    if found is not None:
        return found
    ra, rb = store.top_rank(a), store.top_rank(b)
    top = min(ra, rb)
    if ra == top:
        var, a_hi, a_lo = store.node(a)
    else:
        a_hi = a_lo = a
    if rb == top:
        var, b_hi, b_lo = store.node(b)
    else:
        b_hi = b_lo = b
    hi = _conjoin_rec(store, a_hi, b_hi, memo)
    lo = _conjoin_rec(store, a_lo, b_lo, memo)
    result = mk_decision(store, var, hi, lo)
    memo[key] = result
    return result


def compile_group(
    store: NodeStore, cnf: Cnf, group: ConstraintGroup, node_cap: int | None = None
) -> int:
    """Conjunction of all member clauses, folded in ascending clause id.

    The cap, when given, bounds nodes created across the whole fold
    (intermediates included).
    """
    with store.budget(node_cap):
        acc = TRUE
        for cid in sorted(group.clause_ids):
            clause_circuit = compile_clause(store, cnf.clauses[cid])
            acc = _conjoin_rec(store, acc, clause_circuit, {})
        return acc


def compile_groups(
    store: NodeStore,
    cnf: Cnf,
    groups: list[ConstraintGroup],
    node_cap: int | None = None,
) -> list[ConstraintGroup]:
    """Attach circuits to every group, returning new group objects."""
    from dataclasses import replace

    return [
        replace(g, circuit_root=compile_group(store, cnf, g, node_cap)) for g in groups
    ]
