import numpy as np
import pytest

from semstrength.formula import Cnf, parse_dimacs
from semstrength.oracle import (
    TooManyVariablesError,
    all_worlds,
    cnf_truth_table,
    enumerate_models,
    exact_mi,
    exact_probability,
    mi_of_table,
    world_masses,
)
from semstrength.tasks import random_cnf

from conftest import compile_cnf, random_probs


class TestEnumerateModels:
    def test_disjunction(self):
        cnf = parse_dimacs("p cnf 2 1\n1 2 0\n")
        models = enumerate_models(cnf)
        assert {tuple(m) for m in models} == {(0, 1), (1, 0), (1, 1)}

    def test_lexicographic_order(self):
        cnf = parse_dimacs("p cnf 2 1\n1 2 0\n")
        models = enumerate_models(cnf)
        assert [tuple(m) for m in models] == [(0, 1), (1, 0), (1, 1)]

    def test_contradiction_empty(self):
        cnf = parse_dimacs("p cnf 1 2\n1 0\n-1 0\n")
        assert enumerate_models(cnf).shape[0] == 0

    def test_variable_cap(self):
        with pytest.raises(TooManyVariablesError):
            all_worlds(25)

    def test_sudoku_row_restriction_counts_permutations(self):
        # one row of 4x4 Sudoku: 4 cells, exactly-one value each, each value
        # exactly once across the row -> 4! = 24 models over 16 vars
        from semstrength.tasks import sudoku4_cnf

        bundle = sudoku4_cnf()
        row_clauses = []
        for name, group in zip(bundle.group_names, bundle.groups):
            if name.startswith("cell(1,") or name.startswith("row(1,"):
                row_clauses.extend(
                    bundle.cnf.clauses[cid].to_ints() for cid in sorted(group.clause_ids)
                )
        restricted = Cnf.from_ints(16, row_clauses)
        assert enumerate_models(restricted).shape[0] == 24


class TestExactProbability:
    def test_full_world_set(self):
        worlds = all_worlds(3)
        p = [0.2, 0.9, 0.4]
        assert exact_probability(worlds, p) == pytest.approx(1.0)

    def test_empty_set(self):
        assert exact_probability(np.zeros((0, 3), dtype=np.uint8), [0.5, 0.5, 0.5]) == 0.0

    def test_fig_clause(self):
        cnf = parse_dimacs("p cnf 3 1\n3 -1 0\n")
        p = [0.3, 0.5, 0.2]
        assert exact_probability(enumerate_models(cnf), p) == pytest.approx(0.76)

    def test_masses_sum_to_one(self):
        rng = np.random.default_rng(1)
        p = random_probs(rng, 6)
        assert world_masses(p).sum() == pytest.approx(1.0)


class TestExactMi:
    def test_disjoint_vars_zero(self):
        c1 = parse_dimacs("p cnf 4 1\n1 0\n")
        c2 = parse_dimacs("p cnf 4 1\n4 0\n")
        mi = exact_mi(enumerate_models(c1), enumerate_models(c2), [0.3, 0.5, 0.6, 0.8])
        assert mi == pytest.approx(0.0, abs=1e-12)

    def test_identical_constraint_gives_entropy(self):
        c = parse_dimacs("p cnf 1 1\n1 0\n")
        models = enumerate_models(c)
        mi = exact_mi(models, models, [0.5])
        assert mi == pytest.approx(np.log(2), abs=1e-12)

    def test_fig_pair_value(self):
        c1 = parse_dimacs("p cnf 3 1\n3 -1 0\n")
        c2 = parse_dimacs("p cnf 3 1\n3 -2 0\n")
        mi = exact_mi(enumerate_models(c1), enumerate_models(c2), [0.3, 0.5, 0.2])
        assert mi == pytest.approx(0.0064928, abs=1e-6)


class TestSelfConsistency:
    def test_oracle_matches_circuit_wmc(self):
        # the module's reason to exist: enumeration equals circuit evaluation
        from semstrength.circuit import wmc
        from semstrength.compiler import conjoin

        rng = np.random.default_rng(7)
        for seed in range(20):
            cnf = random_cnf(8, 10, 4, seed=300 + seed)
            store, groups = compile_cnf(cnf)
            full = groups[0].circuit_root
            for g in groups[1:]:
                full = conjoin(store, full, g.circuit_root)
            models = enumerate_models(cnf)
            p = random_probs(rng, 8)
            assert wmc(store, full, p) == pytest.approx(
                exact_probability(models, p), abs=1e-9
            )


def test_mi_of_table_uniform_independent():
    q = np.full((2, 2), 0.25)
    assert mi_of_table(q) == 0.0


def test_truth_table_matches_python_eval():
    cnf = random_cnf(5, 6, 3, seed=9)
    table = cnf_truth_table(cnf)
    worlds = all_worlds(5)
    for idx in range(32):
        assert table[idx] == cnf.satisfied_by(worlds[idx])
