"""Render-stage and consistency reports: JSON + CSV + matplotlib figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .compositor import RenderResult  # noqa: E402
from .consistency import ConsistencyModel  # noqa: E402

CHANNEL_NAMES = ("R", "G", "B")


def write_timing_report(result: RenderResult, out_dir) -> dict:
    """timings.json / timings.csv / timings.png under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = result.timing_report()

    with open(out_dir / "timings.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)

    with open(out_dir / "timings.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region", "stage", "seconds"])
        for stage in report["stages"]:
            writer.writerow([stage["region"], stage["stage"],
                             f"{stage['seconds']:.6f}"])

    if report["stages"]:
        labels = [f"{s['region']}/{s['stage']}" for s in report["stages"]]
        seconds = [s["seconds"] for s in report["stages"]]
        fig, ax = plt.subplots(figsize=(7, 0.4 * len(labels) + 1.2))
        ax.barh(range(len(labels)), seconds, color="#5b8dbf")
        ax.set_yticks(range(len(labels)), labels, fontsize=8)
        ax.invert_yaxis()
        ax.set_xlabel("seconds")
        ax.set_title(f"render stages, total {report['total_seconds']:.2f}s")
        fig.tight_layout()
        fig.savefig(out_dir / "timings.png", dpi=120)
        plt.close(fig)
    return report


def write_consistency_report(model: ConsistencyModel, image_names: list[str],
                             out_dir) -> list[dict]:
    """model.json / model.csv plus parameter and convergence figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries = [{
        "image": name,
        "a": [float(v) for v in model.scale_of(i)],
        "gamma": [float(v) for v in model.gamma_of(i)],
    } for i, name in enumerate(image_names)]
    with open(out_dir / "model.json", "w", encoding="utf-8") as fh:
        json.dump(entries, fh, indent=2)

    with open(out_dir / "model.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image"]
                        + [f"a_{c}" for c in CHANNEL_NAMES]
                        + [f"gamma_{c}" for c in CHANNEL_NAMES])
        for entry in entries:
            writer.writerow([entry["image"]]
                            + [f"{v:.6f}" for v in entry["a"]]
                            + [f"{v:.6f}" for v in entry["gamma"]])

    colors = {"R": "tab:red", "G": "tab:green", "B": "tab:blue"}
    indices = range(len(image_names))
    fig, (ax_a, ax_g) = plt.subplots(1, 2, figsize=(10, 4))
    for c, name in enumerate(CHANNEL_NAMES):
        ax_a.plot(indices, [e["a"][c] for e in entries], "o-", label=name,
                  color=colors[name])
        ax_g.plot(indices, [e["gamma"][c] for e in entries], "o-", label=name,
                  color=colors[name])
    ax_a.set_title("white-balance scale per image")
    ax_g.set_title("gamma per image")
    for ax in (ax_a, ax_g):
        ax.set_xlabel("image index")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_dir / "consistency_params.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for c, channel in enumerate(model.channels):
        ax.semilogy([v + 1e-300 for v in channel.history],
                    label=CHANNEL_NAMES[c])
    ax.set_xlabel("sweep")
    ax.set_ylabel("objective")
    ax.set_title("factorization convergence")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_dir / "consistency_convergence.png", dpi=120)
    plt.close(fig)
    return entries
