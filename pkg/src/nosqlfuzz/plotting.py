"""Coverage-over-evaluations output: a CSV table and a matching figure."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Sequence

from nosqlfuzz.report import RunReport

CSV_NAME = "coverage.csv"
PNG_NAME = "coverage.png"


def coverage_rows(report: RunReport) -> List[tuple]:
    """Step points (evaluation, covered, ratio), closed at the last evaluation."""
    n = len(report.targets) or 1
    rows = [(0, 0, 0.0)]
    for ev, covered in report.history:
        rows.append((ev, covered, covered / n))
    if rows[-1][0] != report.evaluations:
        last = rows[-1][1]
        rows.append((report.evaluations, last, last / n))
    return rows


def write_csv(reports: Sequence[RunReport], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "evaluation", "covered", "coverage_ratio"])
        for r in reports:
            for ev, covered, ratio in coverage_rows(r):
                w.writerow([r.config["seed"], ev, covered, f"{ratio:.6f}"])


def plot_coverage(reports: Sequence[RunReport], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for r in reports:
        rows = coverage_rows(r)
        ax.step([x for x, _, _ in rows], [y * 100 for _, _, y in rows], where="post",
                linewidth=1.2, label=f"seed {r.config['seed']}")
    ax.set_xlabel("evaluations")
    ax.set_ylabel("targets covered (%)")
    ax.set_ylim(0, 105)
    ax.set_title(reports[0].scenario if reports else "")
    ax.grid(True, alpha=0.3)
    if 1 < len(reports) <= 10:
        ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    # fixed metadata keeps the image bytes reproducible
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def write_report_dir(reports: Sequence[RunReport], directory: Path) -> List[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    csv_path, png_path = directory / CSV_NAME, directory / PNG_NAME
    write_csv(reports, csv_path)
    plot_coverage(reports, png_path)
    return [csv_path, png_path]
