"""Brute-force ground truth for probabilities and mutual information.

Exhaustive enumeration over all 2^n worlds, hard-capped at 24 variables.
Worlds are rows of a uint8 matrix in lexicographic order (variable 1 is
the most significant bit), so the row index doubles as the world's
integer encoding.  Everything downstream is checked against this module
on small instances.
"""

from __future__ import annotations

import numpy as np

from .circuit import FALSE, TRUE, NodeStore
from .formula import Cnf

MAX_VARS = 24


class TooManyVariablesError(ValueError):
    def __init__(self, n: int):
        super().__init__(f"{n} variables exceed the {MAX_VARS}-variable enumeration cap")


def _check_cap(n: int) -> None:
    if n > MAX_VARS:
        raise TooManyVariablesError(n)
    if n < 0:
        raise ValueError("negative variable count")


def all_worlds(n: int) -> np.ndarray:
    """(2^n, n) uint8 matrix of assignments, lexicographic row order."""
    _check_cap(n)
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def cnf_truth_table(cnf: Cnf) -> np.ndarray:
    """(2^n,) bool: whether each world (by integer encoding) satisfies the CNF."""
    _check_cap(cnf.num_vars)
    worlds = all_worlds(cnf.num_vars)
    sat = np.ones(worlds.shape[0], dtype=bool)
    for clause in cnf.clauses:
        clause_sat = np.zeros(worlds.shape[0], dtype=bool)
        for lit in clause.literals:
            col = worlds[:, lit.var - 1].astype(bool)
            clause_sat |= col if lit.positive else ~col
        sat &= clause_sat
    return sat


def circuit_truth_table(store: NodeStore, root: int, num_vars: int) -> np.ndarray:
    """(2^num_vars,) bool table by direct evaluation of every decision."""
    _check_cap(num_vars)
    worlds = all_worlds(num_vars)
    values: dict[int, np.ndarray] = {
        FALSE: np.zeros(worlds.shape[0], dtype=bool),
        TRUE: np.ones(worlds.shape[0], dtype=bool),
    }
    from .circuit import reachable

    for h in reachable(store, root):
        if h >= 2:
            var, hi, lo = store.node(h)
            bit = worlds[:, var - 1].astype(bool)
            values[h] = np.where(bit, values[hi], values[lo])
    return values[root]


def enumerate_models(cnf: Cnf) -> np.ndarray:
    """Exact model set as a (M, n) uint8 matrix, lexicographic rows."""
    return all_worlds(cnf.num_vars)[cnf_truth_table(cnf)]


def enumerate_circuit_models(store: NodeStore, root: int, num_vars: int) -> np.ndarray:
    return all_worlds(num_vars)[circuit_truth_table(store, root, num_vars)]


def world_masses(p: np.ndarray) -> np.ndarray:
    """(2^n,) mass of every world under the factorized distribution."""
    p = np.asarray(p, dtype=np.float64)
    _check_cap(len(p))
    mass = np.ones(1 << len(p))
    worlds = all_worlds(len(p))
    for i in range(len(p)):
        bit = worlds[:, i].astype(bool)
        mass *= np.where(bit, p[i], 1.0 - p[i])
    return mass


def exact_probability(models: np.ndarray, p) -> float:
    """Sum of factorized-world masses over the given model rows."""
    p = np.asarray(p, dtype=np.float64)
    models = np.asarray(models, dtype=np.uint8)
    if models.size == 0:
        return 0.0
    bits = models.astype(bool)
    mass = np.prod(np.where(bits, p[None, :], 1.0 - p[None, :]), axis=1)
    return float(mass.sum())


def _model_indices(models: np.ndarray, n: int) -> np.ndarray:
    models = np.asarray(models, dtype=np.int64).reshape(-1, n)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return (models << shifts[None, :]).sum(axis=1)


def exact_mi(models1: np.ndarray, models2: np.ndarray, p) -> float:
    """Mutual information of the two constraints' satisfaction indicators.

    Builds the exact 2x2 joint by pushing every world's mass into its
    (X, Y) cell, then sums q * log(q / (qx * qy)) in nats with the usual
    0 log 0 = 0 convention.
    """
    p = np.asarray(p, dtype=np.float64)
    n = len(p)
    _check_cap(n)
    mass = world_masses(p)
    x = np.zeros(1 << n, dtype=bool)
    y = np.zeros(1 << n, dtype=bool)
    if np.asarray(models1).size:
        x[_model_indices(models1, n)] = True
    if np.asarray(models2).size:
        y[_model_indices(models2, n)] = True
    q = np.empty((2, 2))
    q[0, 0] = mass[~x & ~y].sum()
    q[0, 1] = mass[~x & y].sum()
    q[1, 0] = mass[x & ~y].sum()
    q[1, 1] = mass[x & y].sum()
    return mi_of_table(q)


def mi_of_table(q: np.ndarray) -> float:
    """MI in nats of a 2x2 joint; cells with zero mass or degenerate marginals contribute 0."""
    qx = q.sum(axis=1)
    qy = q.sum(axis=0)
    total = 0.0
    for i in (0, 1):
        for j in (0, 1):
            if q[i, j] <= 0.0 or qx[i] <= 0.0 or qy[j] <= 0.0:
                continue
            if qx[i] >= 1.0 or qy[j] >= 1.0:
                continue
            total += q[i, j] * np.log(q[i, j] / (qx[i] * qy[j]))
    return max(total, 0.0)
