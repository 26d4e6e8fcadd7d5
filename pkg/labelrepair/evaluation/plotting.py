from pathlib import Path

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from labelrepair.evaluation.schemas import ExperimentReport  # noqa: E402

PLOT_STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (6.0, 3.7),
}


def plot_repeats(report: ExperimentReport, path: Path) -> None:
    """Per-repeat success rates, one line per (level, variant) cell."""
    with mpl.rc_context(PLOT_STYLE):
        fig, ax = plt.subplots()
        try:
            for cell in report.cells:
                if not cell.repeats:
                    continue
                ax.plot(
                    [r.repeat + 1 for r in cell.repeats],
                    [r.success_rate for r in cell.repeats],
                    marker="o",
                    label=f"{cell.missing_level} {cell.variant}",
                )
            ax.set_xlabel("repeat")
            ax.set_ylabel("success rate")
            ax.set_ylim(0.0, 1.05)
            if ax.lines:
                ax.legend(loc="lower right")
            fig.tight_layout()
            fig.savefig(path)
        finally:
            plt.close(fig)
