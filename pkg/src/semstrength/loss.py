"""Factorized constraint loss: negative log-probability summed over groups.

The loss treats the current groups as independent given the prediction,
so it is the negative log of a product of exact per-group probabilities.
With all clauses in singleton groups this is the product-relaxation
baseline; as groups merge, each factor becomes the exact joint of its
member clauses.  Probabilities are clamped at ``eps`` before the log so
a hard-violated constraint yields a large finite loss instead of inf;
pass ``eps=0.0`` to disable clamping (gradients are then undefined at
violated deterministic predictions and are reported as zero).
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .circuit import NodeStore, wmc_grad, wmc_grad_batch
from .compiler import compile_clause
from .formula import Cnf, ConstraintGroup

DEFAULT_EPS = 1e-12


def semantic_loss(
    groups: Sequence[ConstraintGroup],
    store: NodeStore,
    p,
    eps: float = DEFAULT_EPS,
) -> tuple[float, np.ndarray]:
    """Loss and exact gradient for one prediction vector.

    loss = sum over groups of -log(max(P(group), eps)); the gradient is
    the matching sum of -grad P / max(P, eps).
    """
    p = np.asarray(p, dtype=np.float64)
    loss = 0.0
    grad = np.zeros(len(p))
    for g in groups:
        if g.circuit_root is None:
            raise ValueError(f"group {g.id} not compiled")
        w, gw = wmc_grad(store, g.circuit_root, p)
        w_c = max(w, eps)
        if w_c <= 0.0:
            loss = math.inf
            continue
        loss += -math.log(w_c)
        grad += -gw / w_c
    return loss, grad


def semantic_loss_batch(
    groups: Sequence[ConstraintGroup],
    store: NodeStore,
    P: np.ndarray,
    eps: float = DEFAULT_EPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-example losses (batch,) and gradients (batch, num_vars)."""
    P = np.asarray(P, dtype=np.float64)
    loss = np.zeros(P.shape[0])
    grad = np.zeros_like(P)
    for g in groups:
        if g.circuit_root is None:
            raise ValueError(f"group {g.id} not compiled")
        w, gw = wmc_grad_batch(store, g.circuit_root, P)
        w_c = np.maximum(w, eps)
        with np.errstate(divide="ignore"):
            loss += np.where(w_c > 0.0, -np.log(np.maximum(w_c, 1e-300)), np.inf)
        nonzero = w_c > 0.0
        grad[nonzero] += -gw[nonzero] / w_c[nonzero, None]
    return loss, grad


def product_tnorm_loss(
    cnf: Cnf, store: NodeStore, p, eps: float = DEFAULT_EPS
) -> tuple[float, np.ndarray]:
    """The frozen one-clause-per-group relaxation of semantic_loss.

    For a CNF this coincides with the product-fuzzy reading of the formula,
    since a clause's probability is exactly its fuzzy product disjunction.
    """
    p = np.asarray(p, dtype=np.float64)
    loss = 0.0
    grad = np.zeros(len(p))
    for clause in cnf.clauses:
        root = compile_clause(store, clause)
        w, gw = wmc_grad(store, root, p)
        w_c = max(w, eps)
        if w_c <= 0.0:
            loss = math.inf
            continue
        loss += -math.log(w_c)
        grad += -gw / w_c
    return loss, grad
