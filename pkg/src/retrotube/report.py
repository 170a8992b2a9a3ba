"""Figure rendering for run artifacts.

Every function draws one figure from already-computed results and writes
it to the given path; nothing here recomputes statistics.  The Agg
backend is forced so rendering works without a display.
"""

from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def save_trace_figure(ic, result, path) -> str:
    """Draw the folded trajectory inside the tube with its mirrors.

    Expects a trace run with horizontal wall events included, so
    consecutive events are joined by straight segments.
    """
    xs = [0.0]
    ys = [ic.y_in]
    bx, by = [], []
    for ev in result.events:
        xs.append(ev.x)
        ys.append(ev.y)
        if ev.kind == "barrier":
            bx.append(ev.x)
            by.append(ev.y)
    span = max(2, int(math.ceil(max(xs))) + 1)
    fig, ax = plt.subplots(figsize=(max(6.0, min(1.2 * span, 14.0)), 3.2))
    ax.axhline(0.0, color="black", lw=1.2)
    ax.axhline(1.0, color="black", lw=1.2)
    half = ic.epsilon / 2.0
    for k in range(1, span + 1):
        ax.plot([k, k], [0.0, half], color="firebrick", lw=2.0)
        ax.plot([k, k], [1.0 - half, 1.0], color="firebrick", lw=2.0)
    ax.plot(xs, ys, color="steelblue", lw=1.0)
    ax.plot(bx, by, "o", color="firebrick", ms=4)
    ax.plot([0.0], [ic.y_in], ">", color="black", ms=7)
    if result.record is not None:
        ax.plot([0.0], [result.record.y_out], "<", color="black", ms=7)
    ax.set_xlim(-0.3, span + 0.3)
    ax.set_ylim(-0.08, 1.08)
    ax.set_xlabel("distance along the tube")
    ax.set_ylabel("height")
    title = "trajectory"
    if result.record is not None:
        title += (f": {result.record.q} mirror hits, "
                  f"{'reversed' if result.record.reversed_exactly else 'not reversed'}")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def save_reversal_figure(report, path) -> str:
    """Reversal probability against barrier height, with intervals."""
    eps = [r.epsilon for r in report.rows]
    est = [r.estimate for r in report.rows]
    lo = [r.estimate - r.ci[0] for r in report.rows]
    hi = [r.ci[1] - r.estimate for r in report.rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(eps, est, yerr=[lo, hi], fmt="o-", color="steelblue",
                capsize=3)
    ax.set_xscale("log")
    ax.invert_xaxis()
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("barrier height (smaller to the right)")
    ax.set_ylabel(f"reversal probability (tolerance {report.delta:g})")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def save_pmf_figure(estimates, path) -> str:
    """Bar chart of one or more exit-index distributions.

    ``estimates`` is a sequence of (label, PmfEstimate) pairs sharing one
    support.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    support = estimates[0][1].support
    width = 0.8 / len(estimates)
    colors = ("steelblue", "darkorange", "seagreen")
    for i, (label, pm) in enumerate(estimates):
        offs = [k + (i - (len(estimates) - 1) / 2) * width for k in support]
        ax.bar(offs, pm.probs, width=width, label=label,
               color=colors[i % len(colors)])
    ax.set_xticks(list(support))
    ax.set_xlabel("exit index")
    ax.set_ylabel("probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def save_cdf_figure(curves, path) -> str:
    """Rescaled flight-time distribution functions on a log time axis.

    ``curves`` is a sequence of (label, CdfEstimate) pairs.
    """
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    for label, cdf in curves:
        ax.step(cdf.grid, cdf.values, where="post", label=label)
    ax.set_xscale("log")
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("rescaled flight time")
    ax.set_ylabel("cumulative probability")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def save_tail_figure(diag, path) -> str:
    """Visit-count survival on log-log axes with the fitted power line."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ks = [k for k, s in zip(diag.ks, diag.survival) if s > 0]
    sv = [s for s in diag.survival if s > 0]
    ax.loglog(ks, sv, "o", ms=4, color="steelblue", label="survival")
    fit_y = [math.exp(diag.intercept + diag.slope * math.log(k))
             for k in diag.fit_ks]
    ax.loglog(diag.fit_ks, fit_y, "-", color="darkorange",
              label=f"fit, slope {diag.slope:.2f}")
    ax.set_xlabel("visit count threshold")
    ax.set_ylabel("exceedance probability")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def save_iet_figure(iet, path) -> str:
    """Before/after bar diagram of the induced interval exchange."""
    lo = 0.0
    edges = (lo,) + tuple(iet.breaks) + (iet.domain,)
    colors = ("steelblue", "darkorange", "seagreen")
    fig, ax = plt.subplots(figsize=(7.0, 2.8))
    for i in range(len(edges) - 1):
        w = edges[i + 1] - edges[i]
        ax.barh(1.0, w, left=edges[i], height=0.32,
                color=colors[i % len(colors)], edgecolor="black")
        ax.barh(0.0, w, left=edges[i] + iet.shifts[i], height=0.32,
                color=colors[i % len(colors)], edgecolor="black")
        ax.text(edges[i] + w / 2, 1.0, str(iet.labels[i]),
                ha="center", va="center", fontsize=8, color="white")
    ax.set_yticks([0.0, 1.0])
    ax.set_yticklabels(["after", "before"])
    ax.set_xlabel("window coordinate (pieces tagged by return time)")
    ax.set_xlim(-0.02 * iet.domain, 1.02 * iet.domain)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)
