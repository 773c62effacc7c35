"""Desk-scale structured-prediction tasks: 4x4 Sudoku and grid matching.

Both tasks encode validity as CNF over indicator variables and ship with
seeded dataset generators whose labels provably satisfy the constraints.
Sudoku variables follow the fixed numbering var(r, c, v) = 16(r-1) +
4(c-1) + v, which group files and tests reference directly.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .formula import Clause, Cnf, ConstraintGroup, group_from_clauses

SUDOKU_N = 4
SUDOKU_BLOCK = 2
SUDOKU_VARS = SUDOKU_N * SUDOKU_N * SUDOKU_N


@dataclass(frozen=True)
class TaskCnf:
    cnf: Cnf
    groups: tuple[ConstraintGroup, ...]
    group_names: tuple[str, ...]


@dataclass
class Instance:
    """One training example; target always satisfies the task CNF."""

    features: np.ndarray
    target: np.ndarray
    givens_mask: np.ndarray
    meta: dict = field(default_factory=dict)


def sudoku_var(r: int, c: int, v: int) -> int:
    """1-based variable id for 'cell (r, c) holds value v' (all args 1..4)."""
    return 16 * (r - 1) + 4 * (c - 1) + v


def _exactly_one(var_ids: list[int]) -> list[list[int]]:
    clauses = [list(var_ids)]
    clauses.extend([-a, -b] for a, b in combinations(var_ids, 2))
    return clauses


def sudoku4_cnf() -> TaskCnf:
    """4x4 Sudoku validity over 64 indicators, grouped per unit.

    Groups: cell(r,c) exactly-one-value, and row/col/block(unit, v)
    exactly-one-cell, each one at-least-one clause plus pairwise
    at-most-one clauses.
    """
    n, b = SUDOKU_N, SUDOKU_BLOCK
    clauses: list[list[int]] = []
    group_clause_ids: list[list[int]] = []
    names: list[str] = []

    def add_group(name: str, group_clauses: list[list[int]]):
        start = len(clauses)
        clauses.extend(group_clauses)
        group_clause_ids.append(list(range(start, len(clauses))))
        names.append(name)

    for r in range(1, n + 1):
        for c in range(1, n + 1):
            add_group(f"cell({r},{c})", _exactly_one([sudoku_var(r, c, v) for v in range(1, n + 1)]))
    for r in range(1, n + 1):
        for v in range(1, n + 1):
            add_group(f"row({r},{v})", _exactly_one([sudoku_var(r, c, v) for c in range(1, n + 1)]))
    for c in range(1, n + 1):
        for v in range(1, n + 1):
            add_group(f"col({c},{v})", _exactly_one([sudoku_var(r, c, v) for r in range(1, n + 1)]))
    for br in range(n // b):
        for bc in range(n // b):
            cells = [
                (br * b + dr + 1, bc * b + dc + 1)
                for dr in range(b)
                for dc in range(b)
            ]
            for v in range(1, n + 1):
                add_group(
                    f"block({br * (n // b) + bc + 1},{v})",
                    _exactly_one([sudoku_var(r, c, v) for r, c in cells]),
                )

    cnf = Cnf.from_ints(SUDOKU_VARS, clauses)
    groups = tuple(
        group_from_clauses(i, cnf, ids) for i, ids in enumerate(group_clause_ids)
    )
    return TaskCnf(cnf, groups, tuple(names))


def _sudoku_block_of(r: int, c: int) -> int:
    return ((r - 1) // SUDOKU_BLOCK) * (SUDOKU_N // SUDOKU_BLOCK) + (c - 1) // SUDOKU_BLOCK


def solve_sudoku(board: list[list[int]], limit: int = 2, rng: random.Random | None = None):
    """Backtracking completions of a 4x4 board (0 = blank), up to ``limit``.

    Candidate values are tried in ascending order unless ``rng`` is given,
    which shuffles them (used to sample uniform-ish complete boards).
    """
    n = SUDOKU_N
    grid = [row[:] for row in board]
    solutions: list[list[list[int]]] = []

    def candidates(r: int, c: int) -> list[int]:
        used = set(grid[r]) | {grid[i][c] for i in range(n)}
        br, bc = (r // SUDOKU_BLOCK) * SUDOKU_BLOCK, (c // SUDOKU_BLOCK) * SUDOKU_BLOCK
        used |= {
            grid[br + dr][bc + dc]
            for dr in range(SUDOKU_BLOCK)
            for dc in range(SUDOKU_BLOCK)
        }
        cands = [v for v in range(1, n + 1) if v not in used]
        if rng is not None:
            rng.shuffle(cands)
        return cands

    def step() -> bool:
        for r in range(n):
            for c in range(n):
                if grid[r][c] == 0:
                    for v in candidates(r, c):
                        grid[r][c] = v
                        if step():
                            return True
                        grid[r][c] = 0
                    return False
        solutions.append([row[:] for row in grid])
        return len(solutions) >= limit

    step()
    return solutions


def board_to_assignment(board: list[list[int]]) -> np.ndarray:
    out = np.zeros(SUDOKU_VARS, dtype=np.uint8)
    for r in range(SUDOKU_N):
        for c in range(SUDOKU_N):
            v = board[r][c]
            if v:
                out[sudoku_var(r + 1, c + 1, v) - 1] = 1
    return out


def sudoku4_dataset(
    n: int, holes: int = 6, seed: int = 0, retry_limit: int = 1000
) -> list[Instance]:
    """Seeded unique-solution puzzles: complete board minus ``holes`` cells.

    Features are the 64 one-hot given indicators (blanks zeroed) followed
    by 16 per-cell given flags.
    """
    if not 0 <= holes < SUDOKU_N * SUDOKU_N:
        raise ValueError("holes must be in 0..15")
    rng = random.Random(seed)
    instances: list[Instance] = []
    attempts = 0
    cells = [(r, c) for r in range(SUDOKU_N) for c in range(SUDOKU_N)]
    while len(instances) < n:
        attempts += 1
        if attempts > retry_limit + n:
            raise RuntimeError("puzzle generation retry limit exceeded")
        empty = [[0] * SUDOKU_N for _ in range(SUDOKU_N)]
        board = solve_sudoku(empty, limit=1, rng=rng)[0]
        for _ in range(50):
            masked_cells = rng.sample(cells, holes)
            puzzle = [row[:] for row in board]
            for r, c in masked_cells:
                puzzle[r][c] = 0
            if holes == 0 or len(solve_sudoku(puzzle, limit=2)) == 1:
                break
        else:
            continue
        target = board_to_assignment(board)
        given_onehot = board_to_assignment(puzzle).astype(np.float64)
        given_flags = np.array(
            [1.0 if puzzle[r][c] else 0.0 for r in range(SUDOKU_N) for c in range(SUDOKU_N)]
        )
        mask = np.repeat(given_flags.astype(np.uint8), SUDOKU_N)
        instances.append(
            Instance(
                features=np.concatenate([given_onehot, given_flags]),
                target=target,
                givens_mask=mask,
                meta={"task": "sudoku4"},
            )
        )
    return instances


def grid_edges(rows: int, cols: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Edges of the rows x cols grid graph: per vertex row-major, right then down."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append(((r, c), (r, c + 1)))
            if r + 1 < rows:
                edges.append(((r, c), (r + 1, c)))
    return edges


def matching_cnf(rows: int, cols: int) -> TaskCnf:
    """Perfect-matching validity: one variable per grid edge, one
    exactly-one-incident-edge group per vertex."""
    if (rows * cols) % 2 != 0:
        raise ValueError("odd vertex count admits no perfect matching")
    edges = grid_edges(rows, cols)
    incident: dict[tuple[int, int], list[int]] = {}
    for i, (u, v) in enumerate(edges):
        incident.setdefault(u, []).append(i + 1)
        incident.setdefault(v, []).append(i + 1)
    clauses: list[list[int]] = []
    group_clause_ids: list[list[int]] = []
    names: list[str] = []
    for r in range(rows):
        for c in range(cols):
            start = len(clauses)
            clauses.extend(_exactly_one(incident[(r, c)]))
            group_clause_ids.append(list(range(start, len(clauses))))
            names.append(f"vertex({r + 1},{c + 1})")
    cnf = Cnf.from_ints(len(edges), clauses)
    groups = tuple(
        group_from_clauses(i, cnf, ids) for i, ids in enumerate(group_clause_ids)
    )
    return TaskCnf(cnf, groups, tuple(names))


def matching_edge_costs(digits: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Two-digit edge costs: tens digit at the left/top endpoint."""
    grid = np.asarray(digits, dtype=np.int64).reshape(rows, cols)
    costs = []
    for (r1, c1), (r2, c2) in grid_edges(rows, cols):
        costs.append(10 * grid[r1, c1] + grid[r2, c2])
    return np.array(costs, dtype=np.int64)


def enumerate_matchings(rows: int, cols: int) -> np.ndarray:
    """All perfect matchings as edge-indicator rows (lexicographic order)."""
    from .oracle import enumerate_models

    return enumerate_models(matching_cnf(rows, cols).cnf)


def matching_dataset(rows: int, cols: int, n: int, seed: int = 0) -> list[Instance]:
    """Uniform digit grids labeled with the min-cost perfect matching.

    Cost ties break on the lexicographically least edge-indicator vector.
    """
    rng = random.Random(seed)
    matchings = enumerate_matchings(rows, cols)
    num_edges = matchings.shape[1]
    instances: list[Instance] = []
    for _ in range(n):
        digits = np.array([rng.randint(0, 9) for _ in range(rows * cols)], dtype=np.float64)
        costs = matching_edge_costs(digits, rows, cols)
        totals = matchings @ costs
        min_cost = int(totals.min())
        best = min(
            tuple(int(x) for x in m) for m, t in zip(matchings, totals) if t == min_cost
        )
        instances.append(
            Instance(
                features=digits,
                target=np.array(best, dtype=np.uint8),
                givens_mask=np.zeros(num_edges, dtype=np.uint8),
                meta={"task": "matching", "rows": rows, "cols": cols, "min_cost": min_cost},
            )
        )
    return instances


def random_cnf(num_vars: int, num_clauses: int, width: int, seed: int = 0) -> Cnf:
    """Seeded random CNF with clause lengths 1..width, no duplicate clauses."""
    if width > num_vars:
        raise ValueError("clause width exceeds variable count")
    rng = random.Random(seed)
    seen: set[frozenset[int]] = set()
    clauses: list[list[int]] = []
    attempts = 0
    while len(clauses) < num_clauses:
        attempts += 1
        if attempts > 1000 * num_clauses + 1000:
            raise RuntimeError("could not sample enough distinct clauses")
        k = rng.randint(1, width)
        vars_ = rng.sample(range(1, num_vars + 1), k)
        lits = [v if rng.random() < 0.5 else -v for v in vars_]
        key = frozenset(lits)
        if key in seen:
            continue
        seen.add(key)
        clauses.append(lits)
    return Cnf.from_ints(num_vars, clauses)


def write_dataset(instances: list[Instance], path) -> None:
    """One JSON object per line: {"features", "target", "mask"}."""
    with open(path, "w") as fh:
        for inst in instances:
            fh.write(
                json.dumps(
                    {
                        "features": [float(x) for x in inst.features],
                        "target": [int(x) for x in inst.target],
                        "mask": [int(x) for x in inst.givens_mask],
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_dataset(path, task: str | None = None, rows: int | None = None, cols: int | None = None) -> list[Instance]:
    instances: list[Instance] = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            meta: dict = {}
            if task:
                meta["task"] = task
            if task == "matching":
                if rows is None or cols is None:
                    raise ValueError("matching datasets need rows and cols to decode")
                meta.update(rows=rows, cols=cols)
            instances.append(
                Instance(
                    features=np.array(obj["features"], dtype=np.float64),
                    target=np.array(obj["target"], dtype=np.uint8),
                    givens_mask=np.array(obj["mask"], dtype=np.uint8),
                    meta=meta,
                )
            )
    return instances
