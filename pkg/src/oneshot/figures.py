"""Optional rendering of battery slack distributions to image files.

Nothing in the verification path depends on this module; the report files
stay the machine-readable source of truth and figures are generated only on
request.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import BatteryReport


def render_battery_figures(report: BatteryReport, out_dir) -> list[Path]:
    """Write one slack-histogram image per suite and return the paths.

    Each panel shows the slack samples of one check with the zero line and
    the failure threshold at -tol marked.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for suite in sorted({c.suite for c in report.checks}):
        rows = [c for c in report.checks if c.suite == suite]
        fig, axes = plt.subplots(
            1, len(rows), figsize=(3.4 * len(rows), 3.2), squeeze=False
        )
        for ax, row in zip(axes[0], rows):
            finite = [s for s in row.samples if math.isfinite(s)]
            if finite:
                ax.hist(finite, bins=24, color="#4878a8")
            ax.axvline(0.0, color="black", linewidth=0.9)
            ax.axvline(-report.tol, color="#b04030", linewidth=0.9, linestyle="--")
            ax.set_title(f"{row.check} (fail {row.fails}/{row.trials})", fontsize=9)
            ax.set_xlabel("slack [bits]", fontsize=8)
            ax.tick_params(labelsize=7)
        fig.suptitle(f"suite {suite}: verifier slack distributions", fontsize=10)
        fig.tight_layout()
        path = out / f"slack_{suite}.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
