"""Run reporting: delimited history output plus rendered figures."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HISTORY_COLUMNS = ["epoch", "ce", "sl", "exact", "consistent", "num_groups", "w_norm"]


def write_history_csv(history: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for rec in history:
            writer.writerow(rec)


def render_history_figures(history: list[dict], outdir) -> list[str]:
    """Loss and accuracy curves as PNGs next to the delimited output."""
    outdir = Path(outdir)
    epochs = [rec["epoch"] for rec in history]
    written: list[str] = []

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [rec["ce"] for rec in history], label="cross-entropy")
    ax.plot(epochs, [rec["sl"] for rec in history], label="constraint loss")
    for rec in history:
        if rec.get("merges"):
            ax.axvline(rec["epoch"], color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss per example")
    ax.legend()
    fig.tight_layout()
    loss_path = outdir / "loss_curves.png"
    fig.savefig(loss_path, dpi=120)
    plt.close(fig)
    written.append(str(loss_path))

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [rec["exact"] for rec in history], label="exact")
    ax.plot(epochs, [rec["consistent"] for rec in history], label="consistent")
    ax.set_xlabel("epoch")
    ax.set_ylabel("fraction of training set")
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    fig.tight_layout()
    acc_path = outdir / "accuracy_curves.png"
    fig.savefig(acc_path, dpi=120)
    plt.close(fig)
    written.append(str(acc_path))
    return written
