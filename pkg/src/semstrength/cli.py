"""Batch command-line front door.

Every subcommand is a thin wrapper over the library: parse arguments and
files, call one or two functions, emit JSON on stdout (or ``--out``).
Failures print a single machine-parsable JSON line on stderr and exit
nonzero.  All randomized behavior takes an explicit seed.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .circuit import NodeStore, circuit_size, wmc
from .compiler import compile_groups
from .formula import Cnf, parse_dimacs, parse_groups, emit_groups
from .oracle import MAX_VARS, enumerate_models, exact_probability
from .order import STRATEGIES, build_order
from .report import render_history_figures, write_history_csv
from .runs import TASKS, VARIANTS, run_task
from .strengthen import StrengthenConfig, apply_merges, plan_merges, rank_pairs
from .tasks import write_dataset
from .train import RunConfig, history_to_jsonl

OUT_DIR_ENV = "SEMSTRENGTH_OUT_DIR"


def _fail(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(1)


def _json_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, RuntimeError, OSError, json.JSONDecodeError) as exc:
            _fail(type(exc).__name__, str(exc))

    return wrapper


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_cnf(path: str) -> Cnf:
    return parse_dimacs(Path(path).read_text())


def _load_groups(path: str | None, cnf: Cnf):
    text = Path(path).read_text() if path else None
    return parse_groups(text, cnf)


def _load_p(path: str, num_vars: int) -> np.ndarray:
    values = json.loads(Path(path).read_text())
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (num_vars,):
        raise ValueError(f"{path}: expected {num_vars} probabilities, got {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{path}: probabilities must lie in [0, 1]")
    return arr


def _load_p_batch(path: str, num_vars: int) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        row = np.asarray(json.loads(line), dtype=np.float64)
        if row.shape != (num_vars,):
            raise ValueError(f"{path}:{lineno}: expected {num_vars} probabilities")
        rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty probability batch")
    return np.stack(rows)


def _compiled(cnf: Cnf, groups, order_strategy: str, seed: int | None):
    order = build_order(cnf, order_strategy, seed=seed)
    store = NodeStore(order)
    return order, store, compile_groups(store, cnf, groups)


@click.group()
@click.version_option(__version__)
def main():
    """Exact constraint losses over tractable circuits, with MI-guided
    semantic strengthening."""


@main.command("compile")
@click.option("--cnf", "cnf_path", required=True, type=click.Path(exists=True))
@click.option("--groups", "groups_path", type=click.Path(exists=True))
@click.option("--order", "order_strategy", default="degree_desc",
              type=click.Choice(STRATEGIES), show_default=True)
@click.option("--seed", type=int, default=None, help="Required for seeded_random order.")
@click.option("--out", type=click.Path())
@_json_errors
def compile_cmd(cnf_path, groups_path, order_strategy, seed, out):
    """Compile groups to circuits and report their sizes."""
    cnf = _load_cnf(cnf_path)
    order, store, groups = _compiled(cnf, _load_groups(groups_path, cnf), order_strategy, seed)
    _emit(
        {
            "num_vars": cnf.num_vars,
            "num_clauses": len(cnf.clauses),
            "order": {"strategy": order_strategy, **order.to_json()},
            "groups": [
                {
                    "id": g.id,
                    "clauses": sorted(c + 1 for c in g.clause_ids),
                    "num_vars": len(g.vars),
                    "nodes": circuit_size(store, g.circuit_root),
                }
                for g in groups
            ],
            "total_nodes": len(store),
        },
        out,
    )


@main.command("prob")
@click.option("--cnf", "cnf_path", required=True, type=click.Path(exists=True))
@click.option("--p", "p_path", required=True, type=click.Path(exists=True))
@click.option("--groups", "groups_path", type=click.Path(exists=True))
@click.option("--order", "order_strategy", default="degree_desc",
              type=click.Choice(STRATEGIES), show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path())
@_json_errors
def prob_cmd(cnf_path, p_path, groups_path, order_strategy, seed, out):
    """Per-group constraint probabilities and their factorized product."""
    cnf = _load_cnf(cnf_path)
    p = _load_p(p_path, cnf.num_vars)
    _, store, groups = _compiled(cnf, _load_groups(groups_path, cnf), order_strategy, seed)
    probs = [wmc(store, g.circuit_root, p) for g in groups]
    product = 1.0
    for value in probs:
        product *= value
    _emit({"groups": probs, "product": product}, out)


@main.command("mi")
@click.option("--cnf", "cnf_path", required=True, type=click.Path(exists=True))
@click.option("--groups", "groups_path", required=True, type=click.Path(exists=True))
@click.option("--p-batch", "batch_path", required=True, type=click.Path(exists=True))
@click.option("--top", type=int, default=None, help="Keep only the K highest pairs.")
@click.option("--node-cap", type=int, default=None)
@click.option("--order", "order_strategy", default="degree_desc",
              type=click.Choice(STRATEGIES), show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path())
@_json_errors
def mi_cmd(cnf_path, groups_path, batch_path, top, node_cap, order_strategy, seed, out):
    """Rank variable-sharing group pairs by batch mutual information."""
    cnf = _load_cnf(cnf_path)
    batch = _load_p_batch(batch_path, cnf.num_vars)
    _, store, groups = _compiled(cnf, _load_groups(groups_path, cnf), order_strategy, seed)
    ranked, skipped = rank_pairs(groups, store, batch, node_cap=node_cap)
    if top is not None:
        ranked = ranked[:top]
    _emit(
        {
            "pairs": [
                {"i": e.pair[0], "j": e.pair[1], "mi": e.value, "batch_size": e.batch_size}
                for e in ranked
            ],
            "skipped": [
                {"i": s.pair[0], "j": s.pair[1], "reason": s.reason} for s in skipped
            ],
        },
        out,
    )


@main.command("strengthen")
@click.option("--cnf", "cnf_path", required=True, type=click.Path(exists=True))
@click.option("--groups", "groups_path", required=True, type=click.Path(exists=True))
@click.option("--p-batch", "batch_path", required=True, type=click.Path(exists=True))
@click.option("--kappa", type=int, required=True)
@click.option("--node-cap", type=int, required=True)
@click.option("--out-groups", type=click.Path(), required=True,
              help="Where to write the merged group file.")
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Append one JSON line describing the round.")
@click.option("--order", "order_strategy", default="degree_desc",
              type=click.Choice(STRATEGIES), show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path())
@_json_errors
def strengthen_cmd(cnf_path, groups_path, batch_path, kappa, node_cap, out_groups,
                   log_path, order_strategy, seed, out):
    """One strengthening round: rank pairs, merge the top-kappa components."""
    cnf = _load_cnf(cnf_path)
    batch = _load_p_batch(batch_path, cnf.num_vars)
    _, store, groups = _compiled(cnf, _load_groups(groups_path, cnf), order_strategy, seed)
    sizes_before = {g.id: circuit_size(store, g.circuit_root) for g in groups}
    ranked, skipped = rank_pairs(groups, store, batch, node_cap=node_cap)
    plan = plan_merges(ranked, kappa, skipped)
    outcome = apply_merges(cnf, groups, store, plan, node_cap=node_cap)
    Path(out_groups).write_text(emit_groups(outcome.groups))
    record = {
        "round": 0,
        "scored": [
            {"i": e.pair[0], "j": e.pair[1], "mi": e.value, "batch_size": e.batch_size}
            for e in ranked
        ],
        "skipped": [{"i": s.pair[0], "j": s.pair[1], "reason": s.reason} for s in skipped],
        "components": [list(c) for c in plan.components],
        "merged": [
            {
                "ids": list(m.ids),
                "new_id": m.new_id,
                "nodes_before": list(m.nodes_before),
                "nodes_after": m.nodes_after,
            }
            for m in outcome.merged
        ],
        "abandoned": [{"ids": list(a.ids), "reason": a.reason} for a in outcome.abandoned],
        "sizes_before": sizes_before,
        "groups_after": len(outcome.groups),
    }
    if log_path:
        with open(log_path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    _emit(
        {
            "groups_file": str(out_groups),
            "num_groups": len(outcome.groups),
            "merged": record["merged"],
            "abandoned": record["abandoned"],
        },
        out,
    )


@main.command("train")
@click.option("--task", required=True, type=click.Choice(TASKS))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--variant", default="strengthened", type=click.Choice(VARIANTS),
              show_default=True)
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--out-dir", type=click.Path(), default=None,
              help=f"Defaults to ./runs/<task>-<variant>-<seed>; ${OUT_DIR_ENV} overrides the base.")
@_json_errors
def train_cmd(task, config_path, variant, seed, out_dir):
    """Train a predictor with the configured constraint loss; write
    history, metrics, model, and figures."""
    raw = json.loads(Path(config_path).read_text())
    task_keys = {k: raw.pop(k) for k in
                 ("n_train", "n_test", "holes", "rows", "cols", "grouping", "order")
                 if k in raw}
    if seed is not None:
        raw["seed"] = seed
    if "seed" not in raw:
        raise ValueError("a seed is required: set it in the config or pass --seed")
    cfg = RunConfig.from_json(raw)

    result = run_task(
        task,
        variant,
        cfg,
        n_train=task_keys.get("n_train", 2000),
        n_test=task_keys.get("n_test", 500),
        holes=task_keys.get("holes", 6),
        rows=task_keys.get("rows", 2),
        cols=task_keys.get("cols", 4),
        grouping=task_keys.get("grouping", "clause"),
        order_strategy=task_keys.get("order", "degree_desc"),
    )

    base = os.environ.get(OUT_DIR_ENV)
    if out_dir is None:
        root = Path(base) if base else Path("runs")
        out_dir = root / f"{task}-{variant}-{cfg.seed}"
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    (out_dir / "history.jsonl").write_text(history_to_jsonl(result["history"]))
    write_history_csv(result["history"], out_dir / "history.csv")
    rounds = [m for rec in result["history"] for m in rec["merges"]]
    (out_dir / "strengthening.jsonl").write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in rounds)
    )
    (out_dir / "model.json").write_text(json.dumps(result["model"].to_json()))
    write_dataset(result["train_set"], out_dir / "train.jsonl")
    write_dataset(result["test_set"], out_dir / "test.jsonl")
    metrics = {
        "task": task,
        "variant": variant,
        "config": result["config"],
        "order": result["order"],
        "grouping": result["grouping"],
        "train": result["metrics_train"],
        "test": result["metrics_test"],
        "final_num_groups": len(result["final_groups"]),
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    figures = render_history_figures(result["history"], out_dir)
    _emit({**metrics, "out_dir": str(out_dir), "figures": figures}, None)


@main.command("oracle")
@click.option("--cnf", "cnf_path", required=True, type=click.Path(exists=True))
@click.option("--p", "p_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path())
@_json_errors
def oracle_cmd(cnf_path, p_path, out):
    """Exhaustive model count (and exact probability) for small formulas."""
    cnf = _load_cnf(cnf_path)
    if cnf.num_vars > MAX_VARS:
        raise ValueError(f"oracle is capped at {MAX_VARS} variables")
    models = enumerate_models(cnf)
    result: dict = {"num_vars": cnf.num_vars, "model_count": int(models.shape[0])}
    if p_path:
        p = _load_p(p_path, cnf.num_vars)
        result["probability"] = exact_probability(models, p)
    _emit(result, out)


if __name__ == "__main__":
    main()
