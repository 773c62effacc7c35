import numpy as np
import pytest

from semstrength.circuit import NodeStore
from semstrength.compiler import compile_groups
from semstrength.formula import Cnf, parse_dimacs, parse_groups
from semstrength.order import build_order

FIG_PAIR_DIMACS = "p cnf 3 2\n3 -1 0\n3 -2 0\n"
FIG_PAIR_P = [0.3, 0.5, 0.2]  # p_A, p_B, p_C


def compile_cnf(cnf: Cnf, group_text: str | None = None, strategy: str = "natural"):
    """Order + store + compiled groups in one call (tests only)."""
    order = build_order(cnf, strategy, seed=0)
    store = NodeStore(order)
    groups = compile_groups(store, cnf, parse_groups(group_text, cnf))
    return store, groups


def random_probs(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=n)


@pytest.fixture
def fig_pair():
    """The two-clause example whose probabilities are pinned in tests."""
    cnf = parse_dimacs(FIG_PAIR_DIMACS)
    store, groups = compile_cnf(cnf)
    return cnf, store, groups
