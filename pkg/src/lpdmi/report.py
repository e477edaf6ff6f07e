"""Report rendering: deterministic JSON/text/CSV plus figure files.

`report.json` holds the canonical report body (sorted keys, no timings)
so identical runs produce identical bytes; wall-clock numbers go to
`timings.json`. The confusion matrix is written both as CSV and as a
heatmap PNG, and sweeps get a CSV table plus an accuracy-vs-layers chart.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import ExperimentReport


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.body(), indent=2, sort_keys=True) + "\n"


def report_text(report: ExperimentReport) -> str:
    lines = [
        f"protocol        {report.protocol}"
        + (f" ({report.subset})" if report.subset else ""),
        f"train / test    {report.train_count} / {report.test_count} samples",
        f"descriptor dims {report.descriptor_dims}",
        f"pca components  {report.pca_components}",
        f"accuracy        {report.accuracy:.4f}",
        "",
        "per-class accuracy",
    ]
    for label in report.classes:
        acc = report.per_class[label]
        shown = "  (no test samples)" if acc is None else f"{acc:.4f}"
        lines.append(f"  class {label:>3}   {shown}")
    lines.append("")
    lines.append("confusion (rows = true, cols = predicted)")
    header = "      " + "".join(f"{c:>6}" for c in report.classes)
    lines.append(header)
    for label, row in zip(report.classes, report.matrix.counts):
        lines.append(f"{label:>6}" + "".join(f"{int(v):>6}" for v in row))
    return "\n".join(lines) + "\n"


def write_confusion_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\predicted"] + [str(c) for c in report.classes])
        for label, row in zip(report.classes, report.matrix.counts):
            writer.writerow([str(label)] + [str(int(v)) for v in row])


def plot_confusion(report: ExperimentReport, path) -> None:
    counts = report.matrix.counts
    m = counts.shape[0]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * m + 2), max(3.5, 0.5 * m + 1.5)))
    im = ax.imshow(counts, cmap="Blues")
    fig.colorbar(im, ax=ax, fraction=0.046)
    threshold = counts.max() / 2 if counts.size else 0
    for i in range(m):
        for j in range(m):
            ax.text(j, i, str(int(counts[i, j])), ha="center", va="center",
                    color="white" if counts[i, j] > threshold else "black",
                    fontsize=8)
    ax.set_xticks(range(m), [str(c) for c in report.classes])
    ax.set_yticks(range(m), [str(c) for c in report.classes])
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"{report.protocol}"
                 + (f" {report.subset}" if report.subset else "")
                 + f"  accuracy {report.accuracy:.2%}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(report: ExperimentReport, outdir) -> dict[str, Path]:
    """Render one experiment into a directory; returns the file map."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": outdir / "report.json",
        "text": outdir / "report.txt",
        "confusion_csv": outdir / "confusion.csv",
        "confusion_png": outdir / "confusion.png",
        "timings": outdir / "timings.json",
    }
    paths["json"].write_text(report_json(report))
    paths["text"].write_text(report_text(report))
    write_confusion_csv(report, paths["confusion_csv"])
    plot_confusion(report, paths["confusion_png"])
    paths["timings"].write_text(
        json.dumps({k: round(v, 6) for k, v in report.timings.items()},
                   indent=2, sort_keys=True) + "\n"
    )
    return paths


# --- sweeps ---------------------------------------------------------------


def sweep_rows(reports: list[tuple[str, int, ExperimentReport]]) -> list[dict]:
    return [
        {
            "pyramid": kind,
            "layers": layers,
            "accuracy": rep.accuracy,
            "descriptor_dims": rep.descriptor_dims,
            "train_count": rep.train_count,
            "test_count": rep.test_count,
        }
        for kind, layers, rep in reports
    ]


def write_sweep_csv(rows: list[dict], path) -> None:
    fieldnames = ["pyramid", "layers", "accuracy", "descriptor_dims",
                  "train_count", "test_count"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fieldnames})


def sweep_text(rows: list[dict]) -> str:
    lines = [f"{'pyramid':<10} {'layers':>6} {'accuracy':>9} {'dims':>8}"]
    for row in rows:
        lines.append(
            f"{row['pyramid']:<10} {row['layers']:>6} "
            f"{row['accuracy']:>9.4f} {row['descriptor_dims']:>8}"
        )
    return "\n".join(lines) + "\n"


def plot_sweep(rows: list[dict], path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    kinds = sorted({row["pyramid"] for row in rows})
    markers = {"laplacian": "o", "gaussian": "s"}
    for kind in kinds:
        pts = sorted((r["layers"], r["accuracy"]) for r in rows if r["pyramid"] == kind)
        ax.plot([p[0] for p in pts], [100 * p[1] for p in pts],
                marker=markers.get(kind, "o"), label=kind)
    ax.set_xlabel("pyramid layers")
    ax.set_ylabel("accuracy (%)")
    ax.set_title("recognition accuracy by layer count")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_sweep(rows: list[dict], outdir) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": outdir / "sweep.csv",
        "text": outdir / "sweep.txt",
        "png": outdir / "sweep.png",
    }
    write_sweep_csv(rows, paths["csv"])
    paths["text"].write_text(sweep_text(rows))
    plot_sweep(rows, paths["png"])
    return paths
