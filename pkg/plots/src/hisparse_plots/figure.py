"""The detection figure: mean detected users vs. number of groups.

One solid curve per per-group load sigma (mean +- standard error over
trials), the Monte Carlo single-pool baseline dotted in the same color, and
the analytic baseline dashed. Batch rendering only.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sweep_data import aggregate


def render_detection_figure(rows, output=None, dpi=150):
    """Build the figure from sweep rows; optionally save it.

    Returns (figure, cell stats) so callers can check the plotted numbers.
    """
    cells = aggregate(rows)
    sigmas = sorted({sigma for sigma, _ in cells})

    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for ci, sigma in enumerate(sigmas):
        color = colors[ci % len(colors)]
        stats = [cells[key] for key in sorted(cells) if key[0] == sigma]
        Ns = [c.N for c in stats]
        ax.errorbar(
            Ns, [c.mean_detected for c in stats],
            yerr=[c.se_detected for c in stats],
            color=color, marker="o", capsize=2.5,
            label=f"grouped detection, sigma={sigma}",
        )
        ax.errorbar(
            Ns, [c.mean_baseline for c in stats],
            yerr=[c.se_baseline for c in stats],
            color=color, marker="x", linestyle=":", alpha=0.75, capsize=2.5,
            label=f"single-pool baseline (MC), sigma={sigma}",
        )
        ax.plot(
            Ns, [c.analytic_baseline for c in stats],
            color=color, linestyle="--", alpha=0.75,
            label=f"single-pool baseline (analytic), sigma={sigma}",
        )
    ax.set_xlabel("number of groups N")
    ax.set_ylabel("mean detected users")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    if output is not None:
        fig.savefig(output, dpi=dpi)
    return fig, cells
