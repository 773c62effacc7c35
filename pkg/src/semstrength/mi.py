"""Pairwise conditional mutual information between constraint circuits.

For two constraints with satisfaction indicators X and Y, three circuit
evaluations (each operand plus their conjunction) determine the full 2x2
joint distribution by total probability; the MI of that table, averaged
over a batch of per-example predictions, scores how costly it is to keep
treating the pair as independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import NodeStore, scope, wmc_batch
from .compiler import conjoin

CONSISTENCY_TOL = 1e-9


class JointConsistencyError(ValueError):
    """The three probabilities cannot come from one distribution."""


@dataclass(frozen=True)
class JointTable:
    """2x2 joint over (X, Y); q[x][y], entries clamped and renormalized."""

    q: np.ndarray

    @property
    def marginal_x(self) -> np.ndarray:
        return self.q.sum(axis=1)

    @property
    def marginal_y(self) -> np.ndarray:
        return self.q.sum(axis=0)


@dataclass(frozen=True)
class MiEstimate:
    pair: tuple[int, int]
    value: float
    batch_size: int


def joint_from_probs(p1: float, p2: float, p12: float) -> JointTable:
    """Total probability: the pair probabilities pin down all four cells.

    q[1][1] = p12, q[1][0] = p1 - p12, q[0][1] = p2 - p12,
    q[0][0] = 1 - p1 - p2 + p12.  Rounding negatives within tolerance are
    clamped to zero and the table renormalized to sum 1.
    """
    q = np.array([
        [1.0 - p1 - p2 + p12, p2 - p12],
        [p1 - p12, p12],
    ])
    if np.any(q < -CONSISTENCY_TOL):
        raise JointConsistencyError(
            f"inconsistent probabilities p1={p1}, p2={p2}, p12={p12}: "
            f"cell minimum {q.min():.3e}"
        )
    q = np.clip(q, 0.0, None)
    total = q.sum()
    if total <= 0.0:
        raise JointConsistencyError("joint table sums to zero")
    return JointTable(q / total)


def mi_from_joint(table: JointTable) -> float:
    """MI in nats; zero-mass cells and degenerate marginals contribute 0."""
    q = table.q
    qx = table.marginal_x
    qy = table.marginal_y
    total = 0.0
    for x in (0, 1):
        for y in (0, 1):
            cell = q[x, y]
            if cell <= 0.0:
                continue
            if qx[x] <= 0.0 or qx[x] >= 1.0 or qy[y] <= 0.0 or qy[y] >= 1.0:
                continue
            total += cell * math.log(cell / (qx[x] * qy[y]))
    return max(total, 0.0)


def pair_mi(
    store: NodeStore,
    c1: int,
    c2: int,
    p,
    node_cap: int | None = None,
) -> float:
    """MI of two constraints under one prediction vector.

    Conjoins the circuits (which may raise BudgetExceededError under a
    node cap), evaluates the three probabilities, and scores the joint.
    """
    values, _ = _pair_probs(store, c1, c2, np.atleast_2d(np.asarray(p, dtype=np.float64)), node_cap)
    return values[0]


def batch_mi(
    store: NodeStore,
    c1: int,
    c2: int,
    batch,
    node_cap: int | None = None,
    pair: tuple[int, int] | None = None,
) -> MiEstimate:
    """Arithmetic mean of pair_mi over a non-empty batch of predictions.

    ``pair`` labels the estimate (group ids when called from ranking);
    it defaults to the circuit handles.
    """
    P = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if P.shape[0] == 0:
        raise ValueError("empty batch")
    values, _ = _pair_probs(store, c1, c2, P, node_cap)
    return MiEstimate(
        pair=pair if pair is not None else (c1, c2),
        value=float(np.mean(values)),
        batch_size=P.shape[0],
    )


def _pair_probs(
    store: NodeStore, c1: int, c2: int, P: np.ndarray, node_cap: int | None
) -> tuple[list[float], int]:
    if scope(store, c1).isdisjoint(scope(store, c2)):
        # factorized WMC makes p12 = p1 * p2 identically: MI is exactly 0
        return [0.0] * P.shape[0], -1
    both = conjoin(store, c1, c2, node_cap=node_cap)
    w1 = wmc_batch(store, c1, P)
    w2 = wmc_batch(store, c2, P)
    w12 = wmc_batch(store, both, P)
    values = [
        mi_from_joint(joint_from_probs(float(a), float(b), float(ab)))
        for a, b, ab in zip(w1, w2, w12)
    ]
    return values, both
