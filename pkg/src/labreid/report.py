"""Evaluation report output.

One evaluation run (or ablation sweep) produces a list of MetricsReport
rows.  This module renders them three ways: an aligned text table for
the terminal, a tab-separated file for machines, and bar-chart figures
saved next to the delimited file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import MetricsReport

TSV_HEADER = "preset\trank1\trank10\tmAP\tnum_queries"


def format_table(reports: Sequence[MetricsReport]) -> str:
    """Aligned human-readable table, metrics to one decimal."""
    rows = [("preset", "rank-1", "rank-10", "mAP", "queries")]
    for r in reports:
        rows.append(
            (
                r.preset or "-",
                f"{r.rank_1:.1f}",
                f"{r.rank_10:.1f}",
                f"{r.mean_ap:.1f}",
                str(r.num_queries),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for idx, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [
            cell.rjust(widths[i]) for i, cell in enumerate(row) if i > 0
        ]
        lines.append("  ".join(cells))
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def write_tsv(reports: Sequence[MetricsReport], path: str | Path) -> Path:
    """Line-oriented machine format: one row per preset."""
    path = Path(path)
    lines = [TSV_HEADER] + [r.row() for r in reports]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def render_figures(reports: Sequence[MetricsReport], stem: str | Path) -> list[Path]:
    """Bar charts of the CMC ranks and of mAP, written as
    <stem>_ranks.png and <stem>_map.png."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    names = [r.preset or f"run{i}" for i, r in enumerate(reports, start=1)]
    x = range(len(reports))
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(reports)), 4.0))
    width = 0.38
    ax.bar([i - width / 2 for i in x], [r.rank_1 for r in reports], width, label="rank-1")
    ax.bar([i + width / 2 for i in x], [r.rank_10 for r in reports], width, label="rank-10")
    ax.set_ylabel("CMC accuracy, %")
    ax.set_ylim(0, 100)
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.legend()
    ax.set_title("CMC rank-1 / rank-10 by preset")
    fig.tight_layout()
    ranks_path = stem.parent / (stem.name + "_ranks.png")
    fig.savefig(ranks_path, dpi=120)
    plt.close(fig)
    written.append(ranks_path)

    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(reports)), 4.0))
    ax.bar(list(x), [r.mean_ap for r in reports], 0.6, color="#336790")
    ax.set_ylabel("mAP, %")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_title("Mean average precision by preset")
    fig.tight_layout()
    map_path = stem.parent / (stem.name + "_map.png")
    fig.savefig(map_path, dpi=120)
    plt.close(fig)
    written.append(map_path)
    return written


def write_report(reports: Sequence[MetricsReport], report_path: str | Path) -> dict[str, list[Path]]:
    """Write the TSV and its companion figures.

    Figures land next to the delimited file, named after its stem.
    Returns the written paths keyed by kind.
    """
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    tsv = write_tsv(reports, report_path)
    stem = report_path.parent / report_path.stem
    figures = render_figures(reports, stem)
    return {"table": [tsv], "figures": figures}
