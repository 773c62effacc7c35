"""Exact constraint-probability losses over tractable circuits, with
iterative MI-guided strengthening of the independence approximation."""

__version__ = "0.1.0"

from .formula import (
    Clause,
    Cnf,
    ConstraintGroup,
    Literal,
    parse_dimacs,
    emit_dimacs,
    parse_groups,
    emit_groups,
    shares_vars,
)
from .order import VariableOrder, build_order
from .circuit import (
    FALSE,
    TRUE,
    BudgetExceededError,
    NodeStore,
    circuit_size,
    mk_decision,
    scope,
    validate,
    wmc,
    wmc_grad,
)
from .compiler import compile_clause, compile_group, compile_groups, conjoin
from .mi import JointTable, MiEstimate, batch_mi, joint_from_probs, pair_mi
from .strengthen import (
    MergePlan,
    StrengthenConfig,
    apply_merges,
    plan_merges,
    rank_pairs,
)
from .loss import product_tnorm_loss, semantic_loss
from .oracle import enumerate_models, exact_mi, exact_probability
from .tasks import (
    Instance,
    matching_cnf,
    matching_dataset,
    random_cnf,
    sudoku4_cnf,
    sudoku4_dataset,
)
from .train import Model, RunConfig, evaluate, train

__all__ = [name for name in dir() if not name.startswith("_")]
