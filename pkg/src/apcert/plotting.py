"""Render the invariant-set cover and cycle enclosures to image files."""

from __future__ import annotations

from pathlib import Path

from .graph import Partition, TransitionGraph, node_boxes
from .implicit_map import MapContext


def plot_cover(
    ctx: MapContext,
    g: TransitionGraph,
    partition: Partition,
    path: str | Path,
    survivors=(),
    title: str = "",
) -> Path:
    """Draw each node box as a filled rectangle and each surviving cycle's phase boxes on top."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.collections import PatchCollection
    from matplotlib.patches import Rectangle

    fig, ax = plt.subplots(figsize=(7, 6))
    if g.n_nodes:
        xs, us = node_boxes(ctx, g, partition)
        rects = [
            Rectangle((a, c), b - a, d - c)
            for a, b, c, d in zip(xs.lo, xs.hi, us.lo, us.hi)
        ]
        ax.add_collection(PatchCollection(rects, facecolor="0.6", edgecolor="none"))
        ax.set_xlim(xs.lo.min(), xs.hi.max())
        ax.set_ylim(us.lo.min(), us.hi.max())
    colours = {"ProvenHyperbolic": "tab:blue", "EllipticCandidate": "tab:red", "Inconclusive": "tab:orange"}
    for sv in survivors:
        ivs = sv.enclosure.intervals
        n = len(ivs)
        c = colours.get(sv.verdict.classification.value, "k")
        for t in range(n):
            x = ivs[t]
            u = -ctx.s.eval(ivs[(t + 1) % n], x)
            ax.plot([x.mid], [u.mid], marker="o", ms=3, color=c, ls="none")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    if title:
        ax.set_title(title)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
