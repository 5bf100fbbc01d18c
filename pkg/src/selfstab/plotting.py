"""Figures written next to the CSV output of the bounds report."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_bounds(rows: Sequence[dict], path: str) -> None:
    """Measured worst-case first hit against (3n+1)(n-2)/2, one series per regime.

    ``rows`` are the dictionaries written to the bounds CSV; unbounded rows
    are drawn as crosses on the top edge.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ns = sorted({r["n"] for r in rows})
    ax.plot(ns, [(3 * n + 1) * (n - 2) / 2 for n in ns], "k--", lw=1, label="(3n+1)(n-2)/2")
    offsets = sorted({r["colours"] - r["n"] for r in rows})
    finite_max = max([r["measured"] for r in rows if isinstance(r["measured"], int)] + [1])
    for off in offsets:
        series = [r for r in rows if r["colours"] - r["n"] == off]
        label = "|C| = n" if off == 0 else f"|C| = n{off:+d}"
        finite = [(r["n"], r["measured"]) for r in series if isinstance(r["measured"], int)]
        if finite:
            ax.plot(*zip(*finite), "o-", ms=5, label=label)
        unbounded = [r["n"] for r in series if not isinstance(r["measured"], int)]
        if unbounded:
            ax.plot(unbounded, [finite_max * 1.1] * len(unbounded), "x", ms=8, label=f"{label}: unbounded")
    ax.set_xlabel("players n")
    ax.set_ylabel("worst-case steps to legitimacy")
    ax.set_xticks(ns)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
