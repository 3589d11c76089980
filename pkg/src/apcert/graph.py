"""Combinatorial representation of the map on a partition of positions.

Only the position coordinate is discretized.  A node ``(i, j)`` stands for
all orbit points whose position lies in cell ``i`` and whose next position
lies in cell ``j``; its phase-space box is ``I_i × -s(I_j, I_i)``.  Three
consecutive positions satisfy ``s(x, y) + s(z, y) = 0``, so the successors
of ``(i, j)`` are found by solving that equation for ``z`` over
``I_i × I_j`` and intersecting the result with the cells.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ParseError
from .genfunc import GeneratingFunction
from .implicit_map import MapContext
from .interval import Interval, IntervalArray

log = logging.getLogger(__name__)

# number of node pairs handled per vectorised batch
_CHUNK = 200_000


@dataclass
class Partition:
    """Sorted cells of the position interval, possibly with gaps after refinement.

    A freshly built uniform partition covers ``domain`` exactly; adjacent
    cells share one float endpoint.  ``depth`` counts bisections since the
    base discretization of ``base`` cells.
    """

    domain: Interval
    lo: np.ndarray
    hi: np.ndarray
    depth: np.ndarray
    base: int

    @classmethod
    def uniform(cls, domain: Interval, n: int) -> "Partition":
        if n < 1:
            raise ValueError("a partition needs at least one cell")
        k = np.arange(n + 1, dtype=float)
        edges = domain.lo + (domain.hi - domain.lo) * (k / n)
        edges[0], edges[-1] = domain.lo, domain.hi
        edges = np.maximum.accumulate(edges)
        return cls(domain, edges[:-1].copy(), edges[1:].copy(), np.zeros(n, dtype=np.int64), n)

    def __len__(self) -> int:
        return len(self.lo)

    def cell(self, k: int) -> Interval:
        return Interval(self.lo[k], self.hi[k])

    @property
    def cells(self) -> list[Interval]:
        return [Interval(a, b) for a, b in zip(self.lo, self.hi)]

    def as_array(self, idx=None) -> IntervalArray:
        if idx is None:
            return IntervalArray(self.lo, self.hi)
        return IntervalArray(self.lo[idx], self.hi[idx])

    @property
    def nominal_discretization(self) -> int:
        d = int(self.depth.max()) if len(self.depth) else 0
        return self.base * 2**d

    def overlapping(self, zlo: np.ndarray, zhi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Index range [start, stop) of cells meeting each closed interval."""
        start = np.searchsorted(self.hi, zlo, side="left")
        stop = np.searchsorted(self.lo, zhi, side="right")
        return start, np.maximum(stop, start)

    def locate(self, x: float) -> list[int]:
        """All cells containing the point ``x`` (two when it sits on a shared endpoint)."""
        s, e = self.overlapping(np.array([x]), np.array([x]))
        return list(range(int(s[0]), int(e[0])))

    def bisect(self, keep: np.ndarray) -> tuple["Partition", np.ndarray]:
        """Bisect the cells listed in ``keep`` and drop the rest.

        Returns the new partition and, for every old cell, the index of its
        first child (or -1 when the cell was dropped).
        """
        keep = np.unique(keep)
        lo, hi = self.lo[keep], self.hi[keep]
        mid = IntervalArray(lo, hi).mid()
        new_lo = np.empty(2 * len(keep))
        new_hi = np.empty(2 * len(keep))
        new_lo[0::2], new_hi[0::2] = lo, mid
        new_lo[1::2], new_hi[1::2] = mid, hi
        depth = np.repeat(self.depth[keep] + 1, 2)
        first_child = np.full(len(self), -1, dtype=np.int64)
        first_child[keep] = 2 * np.arange(len(keep))
        return Partition(self.domain, new_lo, new_hi, depth, self.base), first_child

    def hull_of(self, cells: np.ndarray) -> Interval | None:
        if len(cells) == 0:
            return None
        return Interval(self.lo[cells].min(), self.hi[cells].max())


@dataclass
class TransitionGraph:
    """Directed graph on cell pairs; edge ``(i, j, k)`` joins ``(i, j)`` to ``(j, k)``."""

    nodes: np.ndarray
    edges: np.ndarray
    n_cells: int

    def __post_init__(self):
        self.nodes = _unique_rows(np.asarray(self.nodes, dtype=np.int64).reshape(-1, 2))
        self.edges = _unique_rows(np.asarray(self.edges, dtype=np.int64).reshape(-1, 3))

    @classmethod
    def empty(cls, n_cells: int) -> "TransitionGraph":
        return cls(np.empty((0, 2)), np.empty((0, 3)), n_cells)

    @classmethod
    def from_pairs(cls, nodes: Iterable, edges: Iterable, n_cells: int | None = None):
        nodes = np.array(list(nodes), dtype=np.int64).reshape(-1, 2)
        edges = np.array(list(edges), dtype=np.int64).reshape(-1, 3)
        if n_cells is None:
            n_cells = int(max(nodes.max(initial=-1), edges.max(initial=-1))) + 1
        return cls(nodes, edges, n_cells)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node_keys(self) -> np.ndarray:
        return self.nodes[:, 0] * self.n_cells + self.nodes[:, 1]

    def edge_keys(self) -> tuple[np.ndarray, np.ndarray]:
        e, n = self.edges, self.n_cells
        return e[:, 0] * n + e[:, 1], e[:, 1] * n + e[:, 2]

    def node_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.nodes}

    def edge_set(self) -> set[tuple[tuple[int, int], tuple[int, int]]]:
        return {((int(i), int(j)), (int(j), int(k))) for i, j, k in self.edges}

    def successors(self) -> dict[tuple[int, int], list[int]]:
        """Map node (i, j) to the sorted list of k with an edge to (j, k)."""
        out: dict[tuple[int, int], list[int]] = {}
        for i, j, k in self.edges.tolist():
            out.setdefault((i, j), []).append(k)
        return out

    def cells_used(self) -> np.ndarray:
        return np.unique(self.nodes)

    def subgraph(self, node_mask: np.ndarray) -> "TransitionGraph":
        nodes = self.nodes[node_mask]
        keys = nodes[:, 0] * self.n_cells + nodes[:, 1]
        src, dst = self.edge_keys()
        emask = np.isin(src, keys) & np.isin(dst, keys)
        return TransitionGraph(nodes, self.edges[emask], self.n_cells)


def _unique_rows(a: np.ndarray) -> np.ndarray:
    if len(a) == 0:
        return a.reshape(0, a.shape[1]) if a.ndim == 2 else a
    return np.unique(a, axis=0)


# ---------------------------------------------------------------------------
# three-point equation


def _three_point_batch(
    s: GeneratingFunction,
    xs: IntervalArray,
    ys: IntervalArray,
    z_domain: Interval,
    min_width: float,
    max_iter: int = 200,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Enclose all z in ``z_domain`` with 0 in s(x, y) + s(z, y), row by row.

    Interval Newton in z, with bisection wherever s1(z, y) may vanish.
    Returns ``(row, zlo, zhi)`` arrays; a row may own several pieces.
    """
    m = len(xs)
    a = s.eval(xs, ys)
    row = np.arange(m)
    zlo = np.full(m, z_domain.lo)
    zhi = np.full(m, z_domain.hi)
    out_row, out_lo, out_hi = [], [], []

    for _ in range(max_iter):
        if len(row) == 0:
            break
        y = ys[row]
        z = IntervalArray(zlo, zhi)
        arow = a[row]
        dz = s.d1(z, y)
        regular = ~dz.contains_zero()
        next_row, next_lo, next_hi = [], [], []

        if regular.any():
            r = np.flatnonzero(regular)
            zr = z[r]
            mid = zr.mid()
            g = arow[r] + s.eval(IntervalArray(mid), y[r])
            newton = mid - g / dz[r]
            cut, empty = zr.intersect(newton)
            live = ~empty
            w_old = zr.width()
            w_new = cut.width()
            done = live & ((w_new >= 0.9 * w_old) | (w_new <= min_width))
            more = live & ~done
            out_row.append(row[r[done]])
            out_lo.append(cut.lo[done])
            out_hi.append(cut.hi[done])
            next_row.append(row[r[more]])
            next_lo.append(cut.lo[more])
            next_hi.append(cut.hi[more])

        if (~regular).any():
            r = np.flatnonzero(~regular)
            zr = z[r]
            rng = arow[r] + s.eval(zr, y[r])
            possible = rng.contains_zero()
            small = possible & (zr.width() <= min_width)
            split = possible & ~small
            out_row.append(row[r[small]])
            out_lo.append(zr.lo[small])
            out_hi.append(zr.hi[small])
            sr = r[split]
            mid = zr[split].mid()
            next_row.append(np.repeat(row[sr], 2))
            lo2 = np.empty(2 * len(sr))
            hi2 = np.empty(2 * len(sr))
            lo2[0::2], hi2[0::2] = zlo[sr], mid
            lo2[1::2], hi2[1::2] = mid, zhi[sr]
            next_lo.append(lo2)
            next_hi.append(hi2)

        row = np.concatenate(next_row) if next_row else np.empty(0, dtype=np.int64)
        zlo = np.concatenate(next_lo) if next_lo else np.empty(0)
        zhi = np.concatenate(next_hi) if next_hi else np.empty(0)
    else:
        # iteration budget exhausted: keep what is left, still sound
        out_row.append(row)
        out_lo.append(zlo)
        out_hi.append(zhi)

    if not out_row:
        return np.empty(0, dtype=np.int64), np.empty(0), np.empty(0)
    return np.concatenate(out_row), np.concatenate(out_lo), np.concatenate(out_hi)


def three_point_solve(
    s: GeneratingFunction,
    x: Interval,
    y: Interval,
    z_domain: Interval,
    min_width: float | None = None,
) -> list[Interval]:
    """Intervals covering every z in ``z_domain`` solving s(x, y) + s(z, y) = 0."""
    s._check(x, y, z_domain)
    if min_width is None:
        min_width = max(z_domain.width * 2.0**-20, 1e-12)
    _, lo, hi = _three_point_batch(
        s, IntervalArray([x.lo], [x.hi]), IntervalArray([y.lo], [y.hi]), z_domain, min_width
    )
    order = np.argsort(lo, kind="stable")
    return [Interval(lo[k], hi[k]) for k in order]


# ---------------------------------------------------------------------------
# graph construction


def _admissible(s: GeneratingFunction, xs: IntervalArray, ys: IntervalArray, momentum) -> np.ndarray:
    ok = s.in_domain(xs) & s.in_domain(ys)
    if not ok.any():
        return ok
    idx = np.flatnonzero(ok)
    u = -s.eval(ys[idx], xs[idx])
    good = np.isfinite(u.lo) & np.isfinite(u.hi)
    if momentum is not None:
        good &= (u.lo >= momentum.lo) & (u.hi <= momentum.hi)
    ok[idx] = good
    return ok


def _edges_for(
    s: GeneratingFunction,
    partition: Partition,
    pairs: np.ndarray,
    min_width: float,
) -> np.ndarray:
    """Candidate edges (i, j, k) for node pairs, before target filtering."""
    if len(pairs) == 0:
        return np.empty((0, 3), dtype=np.int64)
    xs = partition.as_array(pairs[:, 0])
    ys = partition.as_array(pairs[:, 1])
    zdom = _z_domain(s, partition)
    row, zlo, zhi = _three_point_batch(s, xs, ys, zdom, min_width)
    start, stop = partition.overlapping(zlo, zhi)
    counts = stop - start
    rows = np.repeat(row, counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    ks = np.repeat(start, counts) + offs
    edges = np.column_stack([pairs[rows, 0], pairs[rows, 1], ks])
    return _unique_rows(edges)


def _z_domain(s: GeneratingFunction, partition: Partition) -> Interval:
    """Hull of the cells, clipped to the closed interior of the bi-disk."""
    lo = max(float(partition.lo.min()), math.nextafter(s.center - s.radius, math.inf))
    hi = min(float(partition.hi.max()), math.nextafter(s.center + s.radius, -math.inf))
    while not s.in_domain(Interval(lo, lo)):
        lo = math.nextafter(lo, math.inf)
    while not s.in_domain(Interval(hi, hi)):
        hi = math.nextafter(hi, -math.inf)
    return Interval(lo, hi)


def _work(args):
    s, partition, pairs, min_width = args
    return _edges_for(s, partition, pairs, min_width)


def _map_chunks(s, partition, pairs, min_width, workers: int) -> np.ndarray:
    chunks = [pairs[k : k + _CHUNK] for k in range(0, len(pairs), _CHUNK)] or [pairs]
    jobs = [(s, partition, c, min_width) for c in chunks]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_work, jobs))
    else:
        parts = [_work(j) for j in jobs]
    parts = [p for p in parts if len(p)]
    return np.concatenate(parts) if parts else np.empty((0, 3), dtype=np.int64)


def _default_min_width(partition: Partition) -> float:
    return float(np.min(partition.hi - partition.lo)) / 16.0


def build_graph(
    ctx: MapContext,
    partition: Partition,
    momentum: Interval | None = None,
    workers: int = 1,
) -> TransitionGraph:
    """Unreduced transition graph on all admissible cell pairs."""
    s = ctx.s
    n = len(partition)
    node_parts = []
    cells = partition.as_array()
    for i0 in range(0, n, max(1, _CHUNK // n)):
        i1 = min(n, i0 + max(1, _CHUNK // n))
        ii, jj = np.meshgrid(np.arange(i0, i1), np.arange(n), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        ok = _admissible(s, cells[ii], cells[jj], momentum)
        node_parts.append(np.column_stack([ii[ok], jj[ok]]))
    nodes = np.concatenate(node_parts) if node_parts else np.empty((0, 2), dtype=np.int64)
    edges = _map_chunks(s, partition, nodes, _default_min_width(partition), workers)
    edges = _keep_edges_to_nodes(edges, nodes, n)
    g = TransitionGraph(nodes, edges, n)
    log.info("built graph: %d cells, %d nodes, %d edges", n, g.n_nodes, g.n_edges)
    return g


def _keep_edges_to_nodes(edges: np.ndarray, nodes: np.ndarray, n: int) -> np.ndarray:
    if len(edges) == 0:
        return edges
    keys = nodes[:, 0] * n + nodes[:, 1]
    return edges[np.isin(edges[:, 1] * n + edges[:, 2], keys)]


def reduce_graph(g: TransitionGraph) -> TransitionGraph:
    """Largest subgraph in which every node has an incoming and an outgoing edge."""
    n = g.n_cells
    keys = g.node_keys()
    edges = g.edges
    src = edges[:, 0] * n + edges[:, 1]
    dst = edges[:, 1] * n + edges[:, 2]
    emask = np.isin(src, keys) & np.isin(dst, keys)
    src, dst, edges = src[emask], dst[emask], edges[emask]
    while True:
        keep = np.isin(keys, src) & np.isin(keys, dst)
        if keep.all():
            break
        keys = keys[keep]
        emask = np.isin(src, keys) & np.isin(dst, keys)
        src, dst, edges = src[emask], dst[emask], edges[emask]
    nodes = np.column_stack([keys // n, keys % n]) if len(keys) else np.empty((0, 2), dtype=np.int64)
    return TransitionGraph(nodes, edges, n)


def node_boxes(ctx: MapContext, g: TransitionGraph, partition: Partition) -> tuple[IntervalArray, IntervalArray]:
    """Phase boxes ``I_i × -s(I_j, I_i)`` of every node."""
    xs = partition.as_array(g.nodes[:, 0])
    ys = partition.as_array(g.nodes[:, 1])
    return xs, -ctx.s.eval(ys, xs)


def invariant_cover_area(ctx: MapContext, g: TransitionGraph, partition: Partition) -> float:
    """Rigorous upper bound on the total area of the node boxes."""
    if g.n_nodes == 0:
        return 0.0
    xs, us = node_boxes(ctx, g, partition)
    areas = np.nextafter(xs.width_up() * us.width_up(), np.inf)
    total = math.fsum(areas.tolist())
    return math.nextafter(total, math.inf) if total > 0.0 else 0.0


def refine(
    ctx: MapContext,
    g: TransitionGraph,
    partition: Partition,
    momentum: Interval | None = None,
    workers: int = 1,
) -> tuple[TransitionGraph, Partition]:
    """Bisect every surviving cell, regenerate edges between children, reduce."""
    if g.n_nodes == 0:
        return TransitionGraph.empty(0), Partition(
            partition.domain, np.empty(0), np.empty(0), np.empty(0, dtype=np.int64), partition.base
        )
    s = ctx.s
    n_old = g.n_cells
    new_part, first = partition.bisect(g.cells_used())
    n_new = len(new_part)

    ci = first[g.nodes[:, 0]]
    cj = first[g.nodes[:, 1]]
    kids = np.stack(
        [
            np.column_stack([ci + a, cj + b])
            for a in (0, 1)
            for b in (0, 1)
        ],
        axis=1,
    ).reshape(-1, 2)
    cells = new_part.as_array()
    ok = _admissible(s, cells[kids[:, 0]], cells[kids[:, 1]], momentum)
    kids = kids[ok]

    parent_of = np.full(n_new, -1, dtype=np.int64)
    used = np.flatnonzero(first >= 0)
    parent_of[first[used]] = used
    parent_of[first[used] + 1] = used

    cand = _map_chunks(s, new_part, kids, _default_min_width(new_part), workers)
    if len(cand):
        pi, pj, pk = parent_of[cand[:, 0]], parent_of[cand[:, 1]], parent_of[cand[:, 2]]
        old_keys = (g.edges[:, 0] * n_old + g.edges[:, 1]) * n_old + g.edges[:, 2]
        mask = (pk >= 0) & np.isin((pi * n_old + pj) * n_old + pk, old_keys)
        cand = cand[mask]
    edges = _keep_edges_to_nodes(cand, kids, n_new)
    refined = reduce_graph(TransitionGraph(kids, edges, n_new))
    return refined, new_part


# ---------------------------------------------------------------------------
# text formats


def dump_graph(g: TransitionGraph, partition: Partition) -> str:
    lines = [
        "# apcert transition graph",
        f"domain {float(partition.domain.lo)!r} {float(partition.domain.hi)!r} {partition.base}",
    ]
    for k in range(len(partition)):
        lines.append(f"cell {k} {float(partition.lo[k])!r} {float(partition.hi[k])!r} {int(partition.depth[k])}")
    lines.extend(f"node {i} {j}" for i, j in g.nodes.tolist())
    lines.extend(f"edge {i} {j} {k}" for i, j, k in g.edges.tolist())
    return "\n".join(lines) + "\n"


def load_graph(text: str) -> tuple[TransitionGraph, Partition | None]:
    domain, base = None, 0
    cells: list[tuple[float, float, int]] = []
    nodes, edges = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "node" and len(parts) == 3:
                nodes.append((int(parts[1]), int(parts[2])))
            elif parts[0] == "edge" and len(parts) == 4:
                edges.append((int(parts[1]), int(parts[2]), int(parts[3])))
            elif parts[0] == "cell" and len(parts) == 5:
                if int(parts[1]) != len(cells):
                    raise ParseError(f"line {lineno}: cells must be listed in order")
                cells.append((float(parts[2]), float(parts[3]), int(parts[4])))
            elif parts[0] == "domain" and len(parts) == 4:
                domain = Interval(float(parts[1]), float(parts[2]))
                base = int(parts[3])
            else:
                raise ParseError(f"line {lineno}: unrecognised record {line!r}")
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    partition = None
    if cells:
        lo, hi, depth = (np.array(c) for c in zip(*cells))
        if domain is None:
            domain = Interval(lo.min(), hi.max())
        partition = Partition(domain, lo.astype(float), hi.astype(float), depth.astype(np.int64), base or len(cells))
    n_cells = len(cells) if cells else None
    g = TransitionGraph.from_pairs(nodes, edges, n_cells)
    return g, partition
