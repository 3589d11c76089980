"""Closed walks of a given length in a transition graph.

A length-n cycle is a position sequence ``(i_1, ..., i_n)`` such that every
node ``(i_t, i_{t+1})`` exists and consecutive nodes are joined by edges,
wrapping around.  Rotations describe the same cycle; the canonical
representative is the lexicographically smallest rotation, so ``i_1`` is the
smallest index.  Walks that repeat a node are kept: a genuine period-n
orbit may visit the same pair of cells twice.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .errors import ResourceLimit
from .graph import TransitionGraph


@dataclass(frozen=True, order=True)
class CandidateCycle:
    positions: tuple[int, ...]

    def __post_init__(self):
        if len(self.positions) < 1:
            raise ValueError("a cycle needs at least one position")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def nodes(self) -> list[tuple[int, int]]:
        p = self.positions
        return [(p[t], p[(t + 1) % len(p)]) for t in range(len(p))]

    @property
    def multiplicity(self) -> int:
        """Number of distinct rotations, i.e. how often a rooted count sees this cycle."""
        return rotation_period(self.positions)


def rotation_period(p: tuple[int, ...]) -> int:
    n = len(p)
    for d in range(1, n + 1):
        if n % d == 0 and p[d:] + p[:d] == p:
            return d
    return n


def canonical_rotation(p) -> tuple[int, ...]:
    p = tuple(p)
    return min(p[r:] + p[:r] for r in range(len(p)))


def _is_canonical(p: tuple[int, ...]) -> bool:
    first = p[0]
    for r in range(1, len(p)):
        if p[r] == first and p[r:] + p[:r] < p:
            return False
    return True


# ---------------------------------------------------------------------------
# adjacency helpers


def _indexed(g: TransitionGraph):
    """Node ids (rows of g.nodes) and edge (src_id, dst_id) arrays."""
    keys = g.node_keys()
    src, dst = g.edge_keys()
    si = np.searchsorted(keys, src)
    di = np.searchsorted(keys, dst)
    ok = (si < len(keys)) & (di < len(keys))
    ok[ok] &= (keys[si[ok]] == src[ok]) & (keys[di[ok]] == dst[ok])
    return keys, si[ok], di[ok], ok


def _adjacency(g: TransitionGraph, dtype=np.int64) -> sp.csr_matrix:
    keys, si, di, _ = _indexed(g)
    m = len(keys)
    data = np.ones(len(si), dtype=dtype)
    return sp.csr_matrix((data, (si, di)), shape=(m, m))


def _walk_blocks(a: sp.csr_matrix, steps: int, block: int, boolean: bool):
    """Yield (rows, R) with R = a^steps restricted to the given rows."""
    m = a.shape[0]
    for r0 in range(0, m, block):
        rows = np.arange(r0, min(m, r0 + block))
        r = sp.csr_matrix(
            (np.ones(len(rows), dtype=a.dtype), (np.arange(len(rows)), rows)),
            shape=(len(rows), m),
        )
        for _ in range(steps):
            r = r @ a
            if boolean:
                r.data[:] = 1
            r.eliminate_zeros()
        yield rows, r


def period_subgraph(g: TransitionGraph, n: int, block: int = 1024) -> TransitionGraph:
    """Nodes and edges lying on at least one closed walk of length exactly ``n``.

    Edge ``u -> w`` lies on such a walk iff some walk of length n-1 leads
    from ``w`` back to ``u``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if g.n_edges == 0:
        return TransitionGraph.empty(g.n_cells)
    keys, si, di, ok = _indexed(g)
    edges = g.edges[ok]
    a = _adjacency(g, np.int8)
    keep = np.zeros(len(si), dtype=bool)
    order = np.argsort(di, kind="stable")
    di_sorted = di[order]
    for rows, r in _walk_blocks(a, n - 1, block, boolean=True):
        lo = np.searchsorted(di_sorted, rows[0], side="left")
        hi = np.searchsorted(di_sorted, rows[-1], side="right")
        sel = order[lo:hi]
        if len(sel) == 0:
            continue
        vals = np.asarray(r[di[sel] - rows[0], si[sel]]).ravel()
        keep[sel] = vals != 0
    kept = edges[keep]
    used = np.unique(np.concatenate([si[keep], di[keep]]))
    return TransitionGraph(g.nodes[used], kept, g.n_cells)


def count_closed_walks(g: TransitionGraph, n: int, block: int = 1024) -> int:
    """trace(A^n): closed walks of length n counted once per starting node."""
    if g.n_edges == 0:
        return 0
    a = _adjacency(g, np.int64)
    total = 0
    for rows, r in _walk_blocks(a, n, block, boolean=False):
        total += int(r[np.arange(len(rows)), rows].sum())
    return total


# ---------------------------------------------------------------------------
# enumeration


class _Search:
    """Per-graph adjacency shared by the depth-first searches."""

    def __init__(self, g: TransitionGraph, n: int):
        self.n = n
        self.succ: dict[tuple[int, int], list[int]] = {}
        self.pred: dict[tuple[int, int], list[int]] = {}
        for i, j, k in g.edges.tolist():
            self.succ.setdefault((i, j), []).append(k)
            self.pred.setdefault((j, k), []).append(i)
        for v in self.succ.values():
            v.sort()
        self.starts = [
            (i, j) for i, j in g.nodes.tolist() if j >= i and (i, j) in self.succ
        ]

    def _back_layers(self, start: tuple[int, int]) -> list[set]:
        """back[r]: nodes with positions >= start[0] reaching start in exactly r steps."""
        p0 = start[0]
        back = [{start}]
        for _ in range(self.n - 1):
            layer = set()
            for j, k in back[-1]:
                for i in self.pred.get((j, k), ()):
                    if i >= p0:
                        layer.add((i, j))
            back.append(layer)
        return back

    def from_start(self, start: tuple[int, int]) -> list[tuple[int, ...]]:
        """Canonical cycles whose first node is ``start``, in lexicographic order."""
        n, p0 = self.n, start[0]
        succ = self.succ
        if n == 1:
            return [(p0,)] if start[1] == p0 and p0 in succ.get(start, ()) else []
        back = self._back_layers(start)
        out: list[tuple[int, ...]] = []
        path = [p0, start[1]]
        stack = [(start, 0, iter(succ.get(start, ())))]
        while stack:
            node, t, it = stack[-1]
            need = back[n - t - 1]
            for k in it:
                if k < p0:
                    continue
                nxt = (node[1], k)
                if nxt not in need:
                    continue
                if t + 1 == n - 1:
                    # nxt reaches start in one step, so k == p0 closes the walk
                    cyc = tuple(path)
                    if _is_canonical(cyc):
                        out.append(cyc)
                    continue
                path.append(k)
                stack.append((nxt, t + 1, iter(succ.get(nxt, ()))))
                break
            else:
                stack.pop()
                if t > 0:
                    path.pop()
        return out


_WORKER: _Search | None = None


def _init_worker(g: TransitionGraph, n: int) -> None:
    global _WORKER
    _WORKER = _Search(g, n)


def _worker_starts(starts: list[tuple[int, int]]) -> list[tuple[int, ...]]:
    out = []
    for st in starts:
        out.extend(_WORKER.from_start(st))
    return out


def _batches(items: list, size: int):
    for k in range(0, len(items), size):
        yield items[k : k + size]


def enumerate_cycles(
    g: TransitionGraph,
    n: int,
    workers: int = 1,
    max_cycles: int | None = None,
    time_budget: float | None = None,
) -> Iterator[CandidateCycle]:
    """Stream one canonical representative of every length-``n`` closed walk.

    Each start node is searched independently and never descends below its
    own first position, so workers cannot produce duplicates.  Output order
    is the same for every worker count.
    """
    if n < 1:
        raise ValueError("n must be positive")
    search = _Search(g, n)
    t0 = time.monotonic()
    count = 0

    def check():
        if max_cycles is not None and count > max_cycles:
            raise ResourceLimit(f"more than {max_cycles} cycles of length {n}")
        if time_budget is not None and time.monotonic() - t0 > time_budget:
            raise ResourceLimit(f"cycle search for length {n} exceeded {time_budget}s")

    if workers > 1 and len(search.starts) > 1:
        size = max(1, len(search.starts) // (8 * workers))
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(g, n)) as pool:
            for chunk in pool.map(_worker_starts, _batches(search.starts, size)):
                for cyc in chunk:
                    count += 1
                    check()
                    yield CandidateCycle(cyc)
        return
    for st in search.starts:
        for cyc in search.from_start(st):
            count += 1
            check()
            yield CandidateCycle(cyc)
        check()


def cycle_counts(cycles) -> tuple[int, int]:
    """(canonical count, b_n) where b_n counts every rotation separately."""
    canon = 0
    rooted = 0
    for c in cycles:
        canon += 1
        rooted += c.multiplicity
    return canon, rooted
