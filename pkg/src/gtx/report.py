"""Render experiment results: delimited tables plus summary figures.

`results.csv` is the per-cell table, `long.csv` the per-grammar records for
downstream plotting, and `correlations.csv` one row per string length with
the sweep-axis correlations.  Figures are line charts of the same numbers
and land next to the CSVs.  All floats are written with six decimals so a
rerun with the same seed produces byte-identical tables.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .experiment import CellResult, ExperimentResult
from .metrics import DegenerateStatisticError, pearson


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.6f}"


def _cell_stats(cell: CellResult, explainers) -> dict:
    row: dict = {
        "string_length": cell.key.string_length,
        "g_complexity": cell.key.g_complexity,
        "dataset_size": cell.key.dataset_size,
        "pos_threshold": cell.pos_threshold,
        "accuracy_k": cell.accuracy_k,
        "grammars_ok": len(cell.runs),
        "grammars_failed": len(cell.failures),
    }
    aucs = cell.auc_values()
    row["auc_mean"] = float(np.mean(aucs)) if aucs else None
    row["auc_std"] = float(np.std(aucs)) if aucs else None
    for ex in explainers:
        means = cell.kacc_means(ex)
        inst = cell.kacc_instance_values(ex)
        scored, skipped = cell.counts(ex)
        row[f"{ex}_kacc_mean"] = float(np.mean(means)) if means else None
        row[f"{ex}_kacc_std_grammar"] = float(np.std(means)) if means else None
        row[f"{ex}_kacc_std_instance"] = float(np.std(inst)) if inst else None
        row[f"{ex}_scored"] = scored
        row[f"{ex}_skipped"] = skipped
    return row


def results_csv_text(result: ExperimentResult) -> str:
    explainers = result.config.explainers
    columns = [
        "string_length", "g_complexity", "dataset_size",
        "pos_threshold", "accuracy_k", "grammars_ok", "grammars_failed",
        "auc_mean", "auc_std",
    ]
    for ex in explainers:
        columns += [f"{ex}_kacc_mean", f"{ex}_kacc_std_grammar",
                    f"{ex}_kacc_std_instance", f"{ex}_scored", f"{ex}_skipped"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for cell in result.cells:
        row = _cell_stats(cell, explainers)
        writer.writerow([
            row[c] if isinstance(row[c], int) else _fmt(row[c]) for c in columns])
    return buf.getvalue()


def long_csv_text(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["string_length", "g_complexity", "dataset_size",
                     "grammar_index", "metric", "explainer", "value"])
    for cell in result.cells:
        key = cell.key
        base = [key.string_length, key.g_complexity, key.dataset_size]
        for run in cell.runs:
            writer.writerow(base + [run.grammar_index, "train_auc", "", _fmt(run.train_auc)])
            writer.writerow(base + [run.grammar_index, "test_auc", "", _fmt(run.test_auc)])
            for ex in result.config.explainers:
                summary = run.summaries.get(ex)
                if summary is None:
                    continue
                writer.writerow(
                    base + [run.grammar_index, "kacc_mean", ex, _fmt(summary.mean)])
                writer.writerow(
                    base + [run.grammar_index, "scored", ex, summary.num_scored])
    return buf.getvalue()


def _axis_name(sweep: str) -> str:
    return "dataset_size" if sweep == "dataset-size" else "g_complexity"


def _safe_pearson(xs, ys) -> float | None:
    pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
    if len(pairs) < 2:
        return None
    try:
        return pearson([p[0] for p in pairs], [p[1] for p in pairs])
    except DegenerateStatisticError:
        return None


def correlations_csv_text(result: ExperimentResult) -> str:
    """One row per string length: how AUC and k-accuracy move with the sweep
    axis, plus how k-accuracy moves with AUC."""
    cfg = result.config
    axis = _axis_name(cfg.sweep)
    explainers = cfg.explainers
    columns = ["string_length", "x_axis", "cells", "auc_x_pearson"]
    for ex in explainers:
        columns.append(f"{ex}_kacc_x_pearson")
    for ex in explainers:
        columns.append(f"{ex}_kacc_auc_pearson")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for length in cfg.string_lengths:
        cells = [c for c in result.cells if c.key.string_length == length]
        xs = [getattr(c.key, axis) for c in cells]
        aucs = [float(np.mean(c.auc_values())) if c.runs else None for c in cells]
        row = [length, axis, len(cells), _fmt(_safe_pearson(xs, aucs))]
        kacc_by_ex = {}
        for ex in explainers:
            means = [float(np.mean(c.kacc_means(ex))) if c.kacc_means(ex) else None
                     for c in cells]
            kacc_by_ex[ex] = means
            row.append(_fmt(_safe_pearson(xs, means)))
        for ex in explainers:
            row.append(_fmt(_safe_pearson(aucs, kacc_by_ex[ex])))
        writer.writerow(row)
    return buf.getvalue()


def _render_figures(result: ExperimentResult, out_dir: Path) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cfg = result.config
    axis = _axis_name(cfg.sweep)
    written: list[Path] = []
    for length in cfg.string_lengths:
        cells = [c for c in result.cells if c.key.string_length == length and c.runs]
        if not cells:
            continue
        cells = sorted(cells, key=lambda c: getattr(c.key, axis))
        xs = [getattr(c.key, axis) for c in cells]
        fig, (ax_auc, ax_k) = plt.subplots(1, 2, figsize=(9, 3.4))

        auc_mean = [float(np.mean(c.auc_values())) for c in cells]
        auc_std = [float(np.std(c.auc_values())) for c in cells]
        ax_auc.errorbar(xs, auc_mean, yerr=auc_std, marker="o", capsize=3)
        ax_auc.set_xlabel(axis.replace("_", " "))
        ax_auc.set_ylabel("test AUC")
        ax_auc.set_title(f"classification, length {length}")
        ax_auc.grid(True, alpha=0.3)

        for ex in cfg.explainers:
            pts = [(x, c.kacc_means(ex)) for x, c in zip(xs, cells) if c.kacc_means(ex)]
            if not pts:
                continue
            ax_k.errorbar(
                [p[0] for p in pts],
                [float(np.mean(p[1])) for p in pts],
                yerr=[float(np.std(p[1])) for p in pts],
                marker="o", capsize=3, label=ex)
        ax_k.set_xlabel(axis.replace("_", " "))
        ax_k.set_ylabel(f"top-{cells[0].accuracy_k} accuracy")
        ax_k.set_title(f"explanations, length {length}")
        ax_k.grid(True, alpha=0.3)
        ax_k.legend()

        fig.tight_layout()
        path = out_dir / f"sweep_length{length}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def report(
    result: ExperimentResult,
    out_dir: str | Path,
    figures: bool = True,
) -> list[Path]:
    """Write results.csv, long.csv, correlations.csv and (optionally) the
    figures; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (
        ("results.csv", results_csv_text(result)),
        ("long.csv", long_csv_text(result)),
        ("correlations.csv", correlations_csv_text(result)),
    ):
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    if figures:
        written.extend(_render_figures(result, out))
    return written
