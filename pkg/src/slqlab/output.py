"""CSV and SVG emission for experiment reports."""

from __future__ import annotations

import csv
import os

import numpy as np

RAW_COLUMNS = ("recipe", "n", "replication", "observable", "time", "value", "seed")
AGG_COLUMNS = ("recipe", "n", "observable", "stat", "value", "lo95", "hi95")


def emit_csv(report, path: str, table: str = "raw") -> str:
    """Write the raw (long format) or aggregate table of ``report`` to ``path``."""
    if table == "raw":
        cols, rows = RAW_COLUMNS, report.raw
    elif table == "aggregate":
        cols, rows = AGG_COLUMNS, report.aggregate
    else:
        raise ValueError(f"unknown table {table!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def emit_svg(report, path: str) -> str:
    """ECDF overlays and n-curves registered by the recipe, one panel each."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = [("ecdf", p) for p in report.ecdfs] + [("curve", p) for p in report.curves]
    cols = max(1, min(3, len(panels)))
    rows = max(1, -(-len(panels) // cols))
    with matplotlib.rc_context({"svg.hashsalt": "slqlab", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(rows, cols, figsize=(4.5 * cols, 3.5 * rows), squeeze=False)
        for ax in axes.ravel()[len(panels):]:
            ax.axis("off")
        for ax, (kind, panel) in zip(axes.ravel(), panels):
            if kind == "ecdf":
                title, samples = panel
                for label, vals in samples.items():
                    v = np.sort(np.asarray(vals))
                    ax.step(v, np.arange(1, v.size + 1) / v.size, where="post", label=label)
                ax.set_ylabel("ECDF")
            else:
                title, xlabel, series = panel
                for label, (x, y) in series.items():
                    ax.plot(x, y, marker="o", label=label)
                ax.set_xscale("log")
                ax.set_xlabel(xlabel)
            ax.set_title(title, fontsize=9)
            ax.legend(fontsize=8)
        if not panels:
            axes[0, 0].text(0.5, 0.5, report.config.recipe, ha="center")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def write_outputs(report, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, report.config.recipe)
    paths = {
        "raw": emit_csv(report, stem + "_raw.csv", "raw"),
        "aggregate": emit_csv(report, stem + "_summary.csv", "aggregate"),
        "svg": emit_svg(report, stem + ".svg"),
    }
    with open(stem + "_config.json", "w", encoding="utf-8") as fh:
        fh.write(report.config.dumps() + "\n")
    paths["config"] = stem + "_config.json"
    return paths
