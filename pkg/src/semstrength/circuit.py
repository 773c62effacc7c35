"""Ordered decision-diagram circuits with exact probability and gradient.

A circuit is stored as handles into a ``NodeStore``.  Handle 0 is FALSE,
handle 1 is TRUE, and handles >= 2 are DECISION nodes ``(var, hi, lo)``.
A DECISION node is the deterministic, decomposable OR of two ANDs:
``(var AND hi) OR (NOT var AND lo)``.  Hash-consing plus the reduction
rule (``hi == lo`` collapses) make every handle canonical for its Boolean
function under the store's variable order, so logically equivalent
circuits are pointer-equal.

Probability evaluation (weighted model counting) plugs the per-variable
Bernoulli parameters into the diagram bottom-up: products along the
decision branches, sums at the implicit OR.  Variables skipped along a
path need no explicit smoothing node because each contributes the factor
``p + (1 - p) = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formula import VarId
from .order import VariableOrder

FALSE = 0
TRUE = 1


class StructureError(ValueError):
    """A node would violate the variable-order / reduction invariants."""


class BudgetExceededError(RuntimeError):
    """An operation created more nodes than its caller-supplied cap allows."""

    def __init__(self, cap: int):
        super().__init__(f"node budget of {cap} exceeded")
        self.cap = cap


class NodeStore:
    """Append-only, hash-consed table of decision nodes under one order.

    Single-writer: construction (mk_decision, conjoin) must be serialized.
    Once built, handles are immutable and reads (wmc etc.) are free to run
    concurrently; evaluation memos are per-call.
    """

    def __init__(self, order: VariableOrder):
        self.order = order
        # nodes[h - 2] = (var, hi, lo); children always precede parents
        self._nodes: list[tuple[VarId, int, int]] = []
        self._unique: dict[tuple[VarId, int, int], int] = {}
        # budget accounting for the currently running capped operation
        self._budget_left: int | None = None

    def __len__(self) -> int:
        return len(self._nodes) + 2

    def is_decision(self, handle: int) -> bool:
        return handle >= 2

    def node(self, handle: int) -> tuple[VarId, int, int]:
        return self._nodes[handle - 2]

    def top_rank(self, handle: int) -> int:
        """Rank of the handle's decision variable; terminals sort last."""
        if handle < 2:
            return self.order.num_vars
        return self.order.rank_of(self._nodes[handle - 2][0])

    def _push_raw(self, var: VarId, hi: int, lo: int) -> int:
        # Bypasses every invariant; exists so tests can feed the validator
        # malformed nodes.
        self._nodes.append((var, hi, lo))
        return len(self._nodes) + 1

    def _charge_budget(self):
        if self._budget_left is not None:
            self._budget_left -= 1
            if self._budget_left < 0:
                raise BudgetExceededError(self._budget_cap)

    def budget(self, node_cap: int | None):
        """Context manager bounding nodes created inside, e.g. during conjoin."""
        return _Budget(self, node_cap)


class _Budget:
    def __init__(self, store: NodeStore, cap: int | None):
        self.store = store
        self.cap = cap

    def __enter__(self):
        if self.cap is not None:
            if self.store._budget_left is not None:
                raise RuntimeError("nested node budgets are not supported")
            self.store._budget_left = self.cap
            self.store._budget_cap = self.cap
        return self

    def __exit__(self, exc_type, exc, tb):
        if self.cap is not None:
            self.store._budget_left = None
        return False


def mk_decision(store: NodeStore, var: VarId, hi: int, lo: int) -> int:
    """Canonical constructor: reduction rule plus hash-consing.

    Requires var's rank to sit strictly above both subtrees (below-root
    variables come later in the order); violating that is a StructureError.
    """
    if hi == lo:
        return hi
    rank = store.order.rank_of(var)
    if rank >= store.top_rank(hi) or rank >= store.top_rank(lo):
        raise StructureError(
            f"variable {var} (rank {rank}) does not precede its children"
        )
    key = (var, hi, lo)
    found = store._unique.get(key)
    if found is not None:
        return found
    store._charge_budget()
    store._nodes.append(key)
    handle = len(store._nodes) + 1
    store._unique[key] = handle
    return handle


def reachable(store: NodeStore, root: int) -> list[int]:
    """All handles reachable from root, ascending (children before parents)."""
    seen = {root}
    stack = [root]
    while stack:
        h = stack.pop()
        if h >= 2:
            _, hi, lo = store.node(h)
            for child in (hi, lo):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
    return sorted(seen)


def circuit_size(store: NodeStore, root: int) -> int:
    return len(reachable(store, root))


def scope(store: NodeStore, root: int) -> frozenset[VarId]:
    """Exact set of decision variables appearing in the circuit."""
    return frozenset(store.node(h)[0] for h in reachable(store, root) if h >= 2)


def wmc(store: NodeStore, root: int, p) -> float:
    """Probability of the circuit's models under the factorized distribution.

    One memoized bottom-up pass, linear in reachable nodes.
    """
    p = np.asarray(p, dtype=np.float64)
    values: dict[int, float] = {FALSE: 0.0, TRUE: 1.0}
    for h in reachable(store, root):
        if h >= 2:
            var, hi, lo = store.node(h)
            pv = float(p[var - 1])
            values[h] = pv * values[hi] + (1.0 - pv) * values[lo]
    return values[root]


def wmc_batch(store: NodeStore, root: int, P: np.ndarray) -> np.ndarray:
    """Vectorized wmc over a batch: P has shape (batch, num_vars)."""
    P = np.asarray(P, dtype=np.float64)
    ones = np.ones(P.shape[0])
    values: dict[int, np.ndarray] = {FALSE: np.zeros(P.shape[0]), TRUE: ones}
    for h in reachable(store, root):
        if h >= 2:
            var, hi, lo = store.node(h)
            pv = P[:, var - 1]
            values[h] = pv * values[hi] + (1.0 - pv) * values[lo]
    return values[root]


def wmc_grad(store: NodeStore, root: int, p) -> tuple[float, np.ndarray]:
    """Probability and its exact gradient d wmc / d p_i.

    One forward (value) pass plus one reverse (path-derivative) pass; the
    circuit is affine in each parameter, so the result is exact up to
    float rounding.  Variables outside the circuit's scope get 0.
    """
    p = np.asarray(p, dtype=np.float64)
    grad = np.zeros(len(p))
    order_asc = reachable(store, root)
    values: dict[int, float] = {FALSE: 0.0, TRUE: 1.0}
    for h in order_asc:
        if h >= 2:
            var, hi, lo = store.node(h)
            pv = float(p[var - 1])
            values[h] = pv * values[hi] + (1.0 - pv) * values[lo]
    contrib: dict[int, float] = {root: 1.0}
    for h in reversed(order_asc):
        if h < 2:
            continue
        c = contrib.pop(h, 0.0)
        if c == 0.0:
            continue
        var, hi, lo = store.node(h)
        pv = float(p[var - 1])
        grad[var - 1] += c * (values[hi] - values[lo])
        contrib[hi] = contrib.get(hi, 0.0) + c * pv
        contrib[lo] = contrib.get(lo, 0.0) + c * (1.0 - pv)
    return values[root], grad


def wmc_grad_batch(store: NodeStore, root: int, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched wmc_grad: returns values (batch,) and gradients (batch, num_vars)."""
    P = np.asarray(P, dtype=np.float64)
    batch, n = P.shape
    grad = np.zeros((batch, n))
    order_asc = reachable(store, root)
    values: dict[int, np.ndarray] = {FALSE: np.zeros(batch), TRUE: np.ones(batch)}
    for h in order_asc:
        if h >= 2:
            var, hi, lo = store.node(h)
            pv = P[:, var - 1]
            values[h] = pv * values[hi] + (1.0 - pv) * values[lo]
    contrib: dict[int, np.ndarray] = {root: np.ones(batch)}
    for h in reversed(order_asc):
        if h < 2:
            continue
        c = contrib.pop(h, None)
        if c is None:
            continue
        var, hi, lo = store.node(h)
        pv = P[:, var - 1]
        grad[:, var - 1] += c * (values[hi] - values[lo])
        if hi in contrib:
            contrib[hi] = contrib[hi] + c * pv
        else:
            contrib[hi] = c * pv
        if lo in contrib:
            contrib[lo] = contrib[lo] + c * (1.0 - pv)
        else:
            contrib[lo] = c * (1.0 - pv)
    return values[root], grad


@dataclass(frozen=True)
class ValidationReport:
    """Structural-property report; a test oracle, not a runtime gate.

    ``deterministic`` is structural in this dialect (the implicit OR's
    branches are guarded by complementary literals).  ``smooth_after_expansion``
    records that once skipped variables are read as implicit tautology
    factors, the expanded OR children share a scope; it holds exactly when
    the decision variable does not reappear below itself.
    """

    decomposable: bool
    deterministic: bool
    smooth_after_expansion: bool
    ordered: bool
    reduced: bool
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(store: NodeStore, root: int) -> ValidationReport:
    order_asc = reachable(store, root)
    scopes: dict[int, frozenset[VarId]] = {FALSE: frozenset(), TRUE: frozenset()}
    decomposable = deterministic = ordered = reduced = True
    violations: list[str] = []
    for h in order_asc:
        if h < 2:
            continue
        var, hi, lo = store.node(h)
        sub = scopes[hi] | scopes[lo]
        scopes[h] = sub | {var}
        if hi == lo:
            reduced = False
            violations.append(f"node {h}: reduction violation (hi == lo)")
        if var in sub:
            decomposable = False
            violations.append(f"node {h}: variable {var} reappears below itself")
        rank = store.order.rank_of(var)
        if any(store.order.rank_of(v) <= rank for v in sub):
            ordered = False
            violations.append(f"node {h}: variable {var} not above its subtree")
    return ValidationReport(
        decomposable=decomposable,
        deterministic=deterministic,
        smooth_after_expansion=decomposable,
        ordered=ordered,
        reduced=reduced,
        violations=tuple(violations),
    )


def dump_circuit(store: NodeStore, root: int) -> str:
    """Debug listing, one node per line; not a stability-guaranteed format."""
    lines = []
    for h in reachable(store, root):
        if h == FALSE:
            lines.append("0 FALSE")
        elif h == TRUE:
            lines.append("1 TRUE")
        else:
            var, hi, lo = store.node(h)
            lines.append(f"{h} DECISION {var} {hi} {lo}")
    return "\n".join(lines) + "\n"


def as_prob_vector(p, num_vars: int) -> np.ndarray:
    """Validate and convert per-variable Bernoulli parameters."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (num_vars,):
        raise ValueError(f"expected {num_vars} probabilities, got shape {arr.shape}")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return arr
