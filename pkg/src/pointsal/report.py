"""Evaluation report writers: machine-readable JSON first, then an aligned
text table, the PR curve as CSV, and rendered figures next to them."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import EvalResult, f_curve


def write_eval_json(result: EvalResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")


def write_eval_table(result: EvalResult, path: str | Path) -> None:
    header = f"{'image':<24}{'f_max':>10}{'f_mean':>10}{'mae':>10}{'s_m':>10}"
    lines = [header, "-" * len(header)]
    for rec in result.per_image:
        lines.append(
            f"{rec.stem:<24}{rec.f_max:>10.4f}{rec.f_mean:>10.4f}"
            f"{rec.mae:>10.4f}{rec.s_measure:>10.4f}"
        )
    lines.append("-" * len(header))
    lines.append(
        f"{'dataset':<24}{result.f_max:>10.4f}{result.f_mean:>10.4f}"
        f"{result.mae:>10.4f}{result.s_measure:>10.4f}"
    )
    if result.skipped:
        lines.append("")
        lines.append("skipped:")
        for entry in result.skipped:
            lines.append(f"  {entry['stem']}: {entry['reason']}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_pr_csv(result: EvalResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall"])
        for t, p, r in zip(result.pr.thresholds, result.pr.precision, result.pr.recall):
            writer.writerow([f"{t:.10g}", f"{p:.10g}", f"{r:.10g}"])


def render_pr_figure(result: EvalResult, path: str | Path, beta_sq: float = 0.3) -> None:
    """PR curve and F-vs-threshold panels; metadata is pinned so repeated
    runs produce byte-identical files."""
    fig, (ax_pr, ax_f) = plt.subplots(1, 2, figsize=(9, 4))
    ax_pr.plot(result.pr.recall, result.pr.precision, lw=1.5)
    ax_pr.set_xlabel("recall")
    ax_pr.set_ylabel("precision")
    ax_pr.set_xlim(0, 1)
    ax_pr.set_ylim(0, 1.02)
    ax_pr.set_title("PR curve")
    ax_pr.grid(alpha=0.3)

    curve = f_curve(result.pr, beta_sq)
    ax_f.plot(result.pr.thresholds, curve, lw=1.5)
    ax_f.set_xlabel("threshold")
    ax_f.set_ylabel("F-measure")
    ax_f.set_xlim(0, 1)
    ax_f.set_ylim(0, 1.02)
    ax_f.set_title(f"F vs threshold (max={result.f_max:.4f})")
    ax_f.grid(alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def write_eval_reports(result: EvalResult, out_dir: str | Path, beta_sq: float = 0.3) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / "report.json",
        "table": out / "report.txt",
        "pr_csv": out / "pr_curve.csv",
        "pr_png": out / "pr_curve.png",
    }
    write_eval_json(result, paths["json"])
    write_eval_table(result, paths["table"])
    write_pr_csv(result, paths["pr_csv"])
    render_pr_figure(result, paths["pr_png"], beta_sq=beta_sq)
    return {k: str(v) for k, v in paths.items()}
