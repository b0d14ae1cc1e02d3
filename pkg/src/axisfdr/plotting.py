"""Two-panel SVG: histogram with null densities, and FDR curves against threshold."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import theoretical_null  # noqa: E402


def fdr_figure_svg(result, path):
    plt.rcParams["svg.hashsalt"] = "axisfdr"
    h = result.histogram
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 7))
    top.bar(h.edges[:-1], h.counts, width=h.bin_width, align="edge", color="0.8", edgecolor="0.5", lw=0.3)
    upper = max(h.edges[-1], 1e-9)
    t = np.linspace(upper / 2000, upper, 2000)
    scale = h.total * h.bin_width
    theo = theoretical_null(result.config.target_df, result.config.b)
    with np.errstate(all="ignore"):
        top.plot(t, scale * theo.density(t), "k--", lw=1, label="theoretical null")
        if result.fit is not None:
            top.plot(t, scale * result.fit.p0 * result.fit.density(t), "k-", lw=1, label="empirical null")
    top.set_ylim(0, 1.1 * max(h.counts.max(), 1))
    top.set_xlabel("T")
    top.set_ylabel("count")
    top.legend(frameon=False)

    curves = result.curves
    bottom.plot(curves["theoretical"].thresholds, curves["theoretical"].fdr_hat, "k--", lw=1, label="theoretical null")
    if "empirical" in curves:
        bottom.plot(curves["empirical"].thresholds, curves["empirical"].fdr_hat, "k-", lw=1, label="empirical null")
    for r in result.per_alpha:
        if r.u_alpha is not None:
            bottom.plot([r.u_alpha, r.u_alpha], [0, r.alpha], "k:", lw=0.8)
    bottom.set_ylim(0, 1.05)
    bottom.set_xlabel("threshold u")
    bottom.set_ylabel("estimated FDR")
    bottom.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
