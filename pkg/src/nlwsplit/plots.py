"""Static SVG output for convergence reports."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import ConvergenceReport  # noqa: E402


def emit_plots(report: ConvergenceReport, path) -> Path:
    """Log-log error against tau with the fitted line and reference slopes 1 and 3/2.

    The SVG is byte-identical for identical input (fixed hash salt, no date).
    """
    if not report.rows:
        raise ValueError("cannot plot an empty report")
    report.sort()
    tau = np.array([r.tau for r in report.rows])
    err = np.array([r.err_l2hm1 for r in report.rows])
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "nlwsplit", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        ax.loglog(tau, err, "o", color="C0", label=r"error in $L^2\times H^{-1}$")
        anchor_t, anchor_e = tau[0], err[0]
        for order, style in ((1.0, ":"), (1.5, "--")):
            ax.loglog(tau, anchor_e * (tau / anchor_t) ** order, style, color="0.5",
                      label=f"slope {order:g}")
        if math.isfinite(report.fitted_slope):
            x, y = np.log2(tau), np.log2(err)
            intercept = np.mean(y - report.fitted_slope * x)
            ax.loglog(tau, 2.0 ** (report.fitted_slope * x + intercept), "-", color="C1",
                      label=f"fit {report.fitted_slope:.3f}")
        ax.set_xlabel(r"$\tau$")
        ax.set_ylabel("error")
        scheme = report.manifest.get("scheme", "")
        if scheme:
            ax.set_title(str(scheme))
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
