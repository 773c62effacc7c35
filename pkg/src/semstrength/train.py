"""Training loop: cross-entropy plus weighted constraint loss, with
strengthening rounds interleaved every eta epochs.

The predictor is a hand-differentiated affine map (optionally one tanh
hidden layer) into per-variable sigmoid outputs.  Given outputs (Sudoku
givens) are clamped to their known 0/1 values before any loss is
evaluated, and their logits receive no gradient.  All randomness flows
from the run seed through separate streams for initialization/shuffling
and for MI-batch selection, so disabling strengthening does not perturb
the weight trajectory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .circuit import NodeStore
from .formula import Cnf, ConstraintGroup
from .loss import semantic_loss_batch
from .strengthen import StrengthenConfig, apply_merges, plan_merges, rank_pairs
from .tasks import Instance

CE_EPS = 1e-12


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class Model:
    """Affine (or one-hidden-layer tanh) map to per-variable logits."""

    hidden: int
    weights: dict[str, np.ndarray]

    @staticmethod
    def init(num_features: int, num_outputs: int, hidden: int = 0, rng=None) -> "Model":
        rng = rng if rng is not None else np.random.default_rng(0)
        if hidden > 0:
            w = {
                "W1": rng.normal(0.0, 1.0 / math.sqrt(num_features), (num_features, hidden)),
                "b1": np.zeros(hidden),
                "W2": rng.normal(0.0, 1.0 / math.sqrt(hidden), (hidden, num_outputs)),
                "b2": np.zeros(num_outputs),
            }
        else:
            w = {
                "W": rng.normal(0.0, 1.0 / math.sqrt(num_features), (num_features, num_outputs)),
                "b": np.zeros(num_outputs),
            }
        return Model(hidden=hidden, weights=w)

    def forward(self, X: np.ndarray) -> tuple[np.ndarray, dict]:
        X = np.asarray(X, dtype=np.float64)
        if self.hidden > 0:
            H = np.tanh(X @ self.weights["W1"] + self.weights["b1"])
            Z = H @ self.weights["W2"] + self.weights["b2"]
            cache = {"X": X, "H": H}
        else:
            Z = X @ self.weights["W"] + self.weights["b"]
            cache = {"X": X}
        return _sigmoid(Z), cache

    def backward(self, cache: dict, dZ: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients given d loss / d logits (summed over batch)."""
        if self.hidden > 0:
            H, X = cache["H"], cache["X"]
            grads = {
                "W2": H.T @ dZ,
                "b2": dZ.sum(axis=0),
            }
            dH = (dZ @ self.weights["W2"].T) * (1.0 - H * H)
            grads["W1"] = X.T @ dH
            grads["b1"] = dH.sum(axis=0)
            return grads
        return {"W": cache["X"].T @ dZ, "b": dZ.sum(axis=0)}

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def flat_norm(self) -> float:
        return float(
            math.sqrt(sum(float((w * w).sum()) for w in self.weights.values()))
        )

    def to_json(self) -> dict:
        return {
            "hidden": self.hidden,
            "weights": {k: v.tolist() for k, v in self.weights.items()},
        }

    @staticmethod
    def from_json(obj: dict) -> "Model":
        return Model(
            hidden=int(obj["hidden"]),
            weights={k: np.array(v, dtype=np.float64) for k, v in obj["weights"].items()},
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


@dataclass(frozen=True)
class RunConfig:
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 0.5
    lam: float = 0.5
    seed: int = 0
    optimizer: str = "sgd_momentum"  # or "sgd"
    momentum: float = 0.9
    hidden: int = 0
    strengthen: StrengthenConfig = field(default_factory=StrengthenConfig)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size, learning_rate must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.optimizer not in ("sgd", "sgd_momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def to_json(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @staticmethod
    def from_json(obj: dict) -> "RunConfig":
        obj = dict(obj)
        if "lambda" in obj:
            obj["lam"] = obj.pop("lambda")
        if "strengthen" in obj and isinstance(obj["strengthen"], dict):
            obj["strengthen"] = StrengthenConfig(**obj["strengthen"])
        return RunConfig(**obj)


def clamp_givens(P: np.ndarray, targets: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Overwrite given outputs with their known 0/1 probabilities."""
    return np.where(masks.astype(bool), targets.astype(np.float64), P)


def batch_objective(
    model: Model,
    Xb: np.ndarray,
    Yb: np.ndarray,
    Mb: np.ndarray,
    groups: Sequence[ConstraintGroup],
    store: NodeStore,
    lam: float,
) -> tuple[float, float, float, dict[str, np.ndarray]]:
    """Mean of CE + lam * constraint loss over a minibatch, with exact
    parameter gradients (given outputs clamped, their logits frozen).

    Returns (mean loss, CE sum, constraint-loss sum, gradient dict).
    """
    Yb = np.asarray(Yb, dtype=np.float64)
    Mb = np.asarray(Mb, dtype=np.float64)
    free = 1.0 - Mb
    P, cache = model.forward(Xb)
    P_eff = clamp_givens(P, Yb, Mb)

    P_ce = np.clip(P_eff, CE_EPS, 1.0 - CE_EPS)
    ce = -(Yb * np.log(P_ce) + (1.0 - Yb) * np.log(1.0 - P_ce)).sum(axis=1)
    dZ = (P_eff - Yb) * free

    if lam > 0.0:
        sl, dSL = semantic_loss_batch(groups, store, P_eff)
        dZ = dZ + lam * dSL * P * (1.0 - P) * free
    else:
        sl = np.zeros(P.shape[0])
    loss = float(np.mean(ce + lam * sl))
    grads = model.backward(cache, dZ / P.shape[0])
    return loss, float(ce.sum()), float(sl.sum()), grads


def train(
    model: Model,
    dataset: Sequence[Instance],
    cnf: Cnf,
    groups: Sequence[ConstraintGroup],
    store: NodeStore,
    cfg: RunConfig,
) -> tuple[Model, list[dict], list[ConstraintGroup]]:
    """Minibatch SGD on mean(CE + lambda * constraint loss), merging the
    most-dependent groups every eta epochs while rounds remain.

    Returns the trained model, one history record per epoch, and the final
    group set.  History records are JSON-serializable and deterministic
    given (config, seed).
    """
    if not dataset:
        raise ValueError("empty dataset")
    for g in groups:
        if g.circuit_root is None:
            raise ValueError(f"group {g.id} not compiled")

    X = np.stack([inst.features for inst in dataset])
    Y = np.stack([inst.target for inst in dataset]).astype(np.float64)
    M = np.stack([inst.givens_mask for inst in dataset]).astype(np.float64)
    n_examples = X.shape[0]

    rng = np.random.default_rng([cfg.seed, 0])
    velocity = {k: np.zeros_like(w) for k, w in model.weights.items()}
    groups = list(groups)
    sc = cfg.strengthen
    rounds_done = 0
    history: list[dict] = []
    task = dataset[0].meta.get("task") if dataset[0].meta else None

    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n_examples)
        ce_total = 0.0
        sl_total = 0.0
        for start in range(0, n_examples, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            loss, ce_sum, sl_sum, grads = batch_objective(
                model, X[idx], Y[idx], M[idx], groups, store, cfg.lam
            )
            ce_total += ce_sum
            sl_total += sl_sum
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at epoch {epoch}"
                )
            for k, g in grads.items():
                if cfg.optimizer == "sgd_momentum":
                    velocity[k] = cfg.momentum * velocity[k] + g
                    model.weights[k] -= cfg.learning_rate * velocity[k]
                else:
                    model.weights[k] -= cfg.learning_rate * g

        merges: list[dict] = []
        if (
            sc.max_rounds > 0
            and rounds_done < sc.max_rounds
            and epoch % sc.eta == 0
            and len(groups) > 1
        ):
            record = _strengthen_round(
                model, X, Y, M, cnf, groups, store, sc, cfg.seed, rounds_done
            )
            groups = record.pop("_groups")
            rounds_done += 1
            merges.append(record)

        metrics = evaluate(model, dataset, cnf, task=task)
        history.append(
            {
                "epoch": epoch,
                "ce": ce_total / n_examples,
                "sl": sl_total / n_examples,
                "exact": metrics["exact"],
                "consistent": metrics["consistent"],
                "merges": merges,
                "num_groups": len(groups),
                "w_norm": model.flat_norm(),
            }
        )
    return model, history, groups


def _strengthen_round(
    model, X, Y, M, cnf, groups, store, sc: StrengthenConfig, seed: int, round_idx: int
) -> dict:
    rng_mi = np.random.default_rng([seed, 1, round_idx])
    sel = rng_mi.choice(X.shape[0], size=min(sc.mi_batch, X.shape[0]), replace=False)
    P = clamp_givens(model.predict(X[sel]), Y[sel], M[sel])
    ranked, skipped = rank_pairs(groups, store, P, node_cap=sc.node_cap)
    plan = plan_merges(ranked, sc.kappa, skipped)
    outcome = apply_merges(cnf, groups, store, plan, node_cap=sc.node_cap)
    return {
        "round": round_idx,
        "scored": [
            {"i": e.pair[0], "j": e.pair[1], "mi": e.value, "batch_size": e.batch_size}
            for e in ranked
        ],
        "skipped": [
            {"i": s.pair[0], "j": s.pair[1], "reason": s.reason} for s in skipped
        ],
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
        "abandoned": [
            {"ids": list(a.ids), "reason": a.reason} for a in outcome.abandoned
        ],
        "_groups": list(outcome.groups),
    }


def decode_predictions(P: np.ndarray, dataset: Sequence[Instance], task: str | None) -> np.ndarray:
    """Per-variable 0.5 threshold with task-specific structure.

    Sudoku: argmax over each cell's four value variables, givens forced.
    """
    if task == "sudoku4":
        n = P.shape[0]
        pred = np.zeros_like(P, dtype=np.uint8)
        cells = P.reshape(n, 16, 4)
        choice = cells.argmax(axis=2)
        pred.reshape(n, 16, 4)[np.arange(n)[:, None], np.arange(16)[None, :], choice] = 1
        for i, inst in enumerate(dataset):
            given = inst.givens_mask.astype(bool)
            pred[i, given] = inst.target[given]
        return pred
    return (P >= 0.5).astype(np.uint8)


def _consistent_rows(pred: np.ndarray, cnf: Cnf) -> np.ndarray:
    ok = np.ones(pred.shape[0], dtype=bool)
    bits = pred.astype(bool)
    for clause in cnf.clauses:
        sat = np.zeros(pred.shape[0], dtype=bool)
        for lit in clause.literals:
            col = bits[:, lit.var - 1]
            sat |= col if lit.positive else ~col
        ok &= sat
    return ok


def evaluate(
    model: Model, dataset: Sequence[Instance], cnf: Cnf, task: str | None = None
) -> dict:
    """Exact / Consistent / per-label accuracy of thresholded predictions.

    Exact means the decoded structure equals the unique target (Sudoku,
    where it coincides with Consistent) or attains the minimum cost
    (matching); Consistent means it satisfies the task CNF.
    """
    if not dataset:
        return {"exact": 0.0, "consistent": 0.0, "label_acc": 0.0}
    if task is None and dataset[0].meta:
        task = dataset[0].meta.get("task")
    X = np.stack([inst.features for inst in dataset])
    Y = np.stack([inst.target for inst in dataset]).astype(np.uint8)
    P = model.predict(X)
    pred = decode_predictions(P, dataset, task)
    consistent = _consistent_rows(pred, cnf)

    if task == "matching":
        from .oracle import enumerate_models
        from .tasks import matching_edge_costs

        rows = dataset[0].meta["rows"]
        cols = dataset[0].meta["cols"]
        matchings = enumerate_models(cnf)
        exact = np.zeros(len(dataset), dtype=bool)
        for i, inst in enumerate(dataset):
            costs = matching_edge_costs(inst.features, rows, cols)
            if consistent[i]:
                exact[i] = int(pred[i] @ costs) == int((matchings @ costs).min())
    else:
        exact = (pred == Y).all(axis=1)

    return {
        "exact": float(exact.mean()),
        "consistent": float(consistent.mean()),
        "label_acc": float((pred == Y).mean()),
    }


def history_to_jsonl(history: list[dict]) -> str:
    """Deterministic serialization: sorted keys, one record per line."""
    return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in history)
