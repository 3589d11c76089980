"""Independent reference computations used by the tests.

Nothing here imports the package: closed forms for the Henon family,
brute-force graph algorithms and a dense-grid floating Newton search for
periodic orbits polished in multiprecision.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

import mpmath
import numpy as np


# ---------------------------------------------------------------------------
# Henon family s(x, y) = x - 1 + a y^2


def henon_fixed_point(a: float) -> float:
    """Positive root of a x^2 + x - 1 = 0."""
    return (-1.0 + math.sqrt(1.0 + 4.0 * a)) / (2.0 * a)


def henon_next(a, x, y):
    """Third position of an orbit segment: s(x, y) + s(z, y) = 0."""
    return 2 - 2 * a * y * y - x


def henon_fixed_trace(a: float) -> float:
    return -4.0 * a * henon_fixed_point(a)


def henon_dF(a: float, x: float, y: float) -> np.ndarray:
    """DF at the phase point with positions x then y (s1 = 1, s2 = 2 a y)."""
    return np.array([[-2 * a * x, -1.0], [1.0 - 4 * a * a * x * y, -2 * a * y]])


# ---------------------------------------------------------------------------
# brute-force graph algorithms on (i, j) nodes and (i, j, k) edges


def naive_reduce(nodes, edges, rng: random.Random | None = None):
    """Remove nodes lacking an in- or out-edge one at a time, in random order."""
    nodes = set(nodes)
    edges = set(edges)
    rng = rng or random.Random(0)
    while True:
        ins = {(j, k) for i, j, k in edges if (i, j) in nodes}
        outs = {(i, j) for i, j, k in edges if (j, k) in nodes}
        bad = [v for v in nodes if v not in ins or v not in outs]
        if not bad:
            break
        v = rng.choice(sorted(bad))
        nodes.discard(v)
        edges = {e for e in edges if (e[0], e[1]) != v and (e[1], e[2]) != v}
    edges = {e for e in edges if (e[0], e[1]) in nodes and (e[1], e[2]) in nodes}
    return nodes, edges


def closed_walks(nodes, edges, n):
    """Every closed walk of length n as a position tuple, each rotation separately."""
    succ = {}
    for i, j, k in edges:
        if (i, j) in nodes and (j, k) in nodes:
            succ.setdefault((i, j), []).append(k)
    out = []
    for start in nodes:
        stack = [(start, (start[0],))]
        while stack:
            node, pos = stack.pop()
            if len(pos) == n:
                if node[1] == start[0] and start[1] in succ.get(node, ()):
                    out.append(pos)
                continue
            for k in succ.get(node, ()):
                stack.append(((node[1], k), pos + (node[1],)))
    return out


def rotations(p):
    return [tuple(p[r:] + p[:r]) for r in range(len(p))]


def brute_canonical_cycles(nodes, edges, n):
    return {min(rotations(w)) for w in closed_walks(nodes, edges, n)}


def random_graph(rng: random.Random, n_cells: int, n_nodes: int, edge_prob: float):
    cells = range(n_cells)
    pairs = [(i, j) for i in cells for j in cells]
    rng.shuffle(pairs)
    nodes = set(pairs[:n_nodes])
    edges = set()
    for i, j in nodes:
        for k in cells:
            if (j, k) in nodes and rng.random() < edge_prob:
                edges.add((i, j, k))
    return nodes, edges


# ---------------------------------------------------------------------------
# periodic orbits of the Henon family by dense-grid Newton


def _z_and_jacobian(a: float, x: np.ndarray):
    """Cyclic system Z_i = x_{i-1} + x_{i+1} - 2 + 2 a x_i^2 and its Jacobian."""
    m, n = x.shape
    prev = np.roll(x, 1, axis=1)
    nxt = np.roll(x, -1, axis=1)
    z = prev + nxt - 2.0 + 2.0 * a * x * x
    jac = np.zeros((m, n, n))
    rows = np.arange(n)
    jac[:, rows, rows] += 4.0 * a * x
    jac[:, rows, np.roll(rows, 1)] += 1.0
    jac[:, rows, np.roll(rows, -1)] += 1.0
    return z, jac


def grid_newton_orbits(
    a: float,
    n: int,
    lo: float,
    hi: float,
    step: float = 1e-3,
    dedup: float = 1e-6,
    iterations: int = 40,
    chunk: int = 200_000,
) -> list[np.ndarray]:
    """Distinct period-n position vectors (period dividing n) inside [lo, hi].

    Seeds are all grid points (x_1, x_2) of spacing ``step``; the rest of the
    seed vector follows from the recurrence.  Results are float roots of the
    cyclic system, deduplicated up to rotation with max-norm ``dedup``.
    """
    grid = np.arange(lo, hi + 0.5 * step, step)
    if n == 1:
        seeds = grid[:, None]
    else:
        g1, g2 = np.meshgrid(grid, grid, indexing="ij")
        seeds = np.column_stack([g1.ravel(), g2.ravel()])
    found: list[np.ndarray] = []
    for k in range(0, len(seeds), chunk):
        part = seeds[k : k + chunk]
        x = np.empty((len(part), n))
        x[:, : part.shape[1]] = part
        for t in range(2, n):
            x[:, t] = np.clip(henon_next(a, x[:, t - 2], x[:, t - 1]), -4.0, 4.0)
        active = np.ones(len(x), dtype=bool)
        for _ in range(iterations):
            idx = np.flatnonzero(active)
            if len(idx) == 0:
                break
            z, jac = _z_and_jacobian(a, x[idx])
            with np.errstate(all="ignore"):
                ok = np.abs(np.linalg.det(jac)) > 1e-12
                dx = np.zeros_like(z)
                if ok.any():
                    dx[ok] = np.linalg.solve(jac[ok], z[ok][..., None])[..., 0]
            x[idx] -= dx
            far = ~ok | ~np.all(np.isfinite(x[idx]), axis=1) | (np.abs(x[idx]).max(axis=1) > 10.0)
            still = np.abs(dx).max(axis=1) > 1e-15
            active[idx[far | ~still]] = False
            x[idx[far]] = np.nan
        good = np.all(np.isfinite(x), axis=1)
        x = x[good]
        if len(x) == 0:
            continue
        z, _ = _z_and_jacobian(a, x)
        inside = (x.min(axis=1) >= lo) & (x.max(axis=1) <= hi)
        x = x[(np.abs(z).max(axis=1) < 1e-9) & inside]
        found.extend(_dedup_rows(x, dedup))
    return _dedup_list(found, dedup)


def _canonical_float(v: np.ndarray, tol: float) -> np.ndarray:
    rots = [np.roll(v, -r) for r in range(len(v))]
    keys = [tuple(np.round(r / tol).astype(np.int64)) for r in rots]
    return rots[min(range(len(v)), key=lambda r: keys[r])]


def _dedup_rows(x: np.ndarray, tol: float) -> list[np.ndarray]:
    if len(x) == 0:
        return []
    # collapse repeats cheaply before canonicalizing rotations one by one
    _, first = np.unique(np.round(x / tol).astype(np.int64), axis=0, return_index=True)
    x = x[np.sort(first)]
    canon = np.array([_canonical_float(v, tol) for v in x])
    keys = np.round(canon / tol).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return [canon[i] for i in sorted(first)]


def _dedup_list(rows: list[np.ndarray], tol: float) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in rows:
        if any(
            min(np.abs(np.roll(v, r) - w).max() for r in range(len(v))) <= tol for w in out
        ):
            continue
        out.append(v)
    return out


def polish_orbit(a: float, x: np.ndarray, dps: int = 40) -> list[mpmath.mpf]:
    """Multiprecision Newton on the cyclic system from a float root."""
    n = len(x)
    with mpmath.workdps(dps):
        av = mpmath.mpf(Fraction(a).numerator) / Fraction(a).denominator
        v = mpmath.matrix([mpmath.mpf(float(t)) for t in x])
        for _ in range(60):
            z = mpmath.matrix(n, 1)
            j = mpmath.matrix(n, n)
            for i in range(n):
                p, q = v[(i - 1) % n], v[(i + 1) % n]
                z[i] = p + q - 2 + 2 * av * v[i] ** 2
                j[i, i] += 4 * av * v[i]
                j[i, (i - 1) % n] += 1
                j[i, (i + 1) % n] += 1
            dv = mpmath.lu_solve(j, z)
            v = v - dv
            if mpmath.norm(dv, mpmath.inf) < mpmath.mpf(10) ** (-dps + 5):
                break
        return [+v[i] for i in range(n)]


def inside(lo: float, hi: float, value) -> bool:
    """Exact comparison of a multiprecision value against float endpoints."""
    return mpmath.mpf(lo) <= value <= mpmath.mpf(hi)


# ---------------------------------------------------------------------------
# shadowing


def float_segments(a, lo, hi, count, length, rng: np.random.Generator):
    """Non-escaping floating orbit segments of positions within [lo, hi]."""
    out = []
    while len(out) < count:
        m = 4 * (count - len(out)) + 64
        x = rng.uniform(lo, hi, size=(m, 2))
        seg = np.empty((m, length))
        seg[:, :2] = x
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(2, length):
                seg[:, t] = henon_next(a, seg[:, t - 2], seg[:, t - 1])
            keep = np.all((seg >= lo) & (seg <= hi), axis=1)
        out.extend(seg[keep][: count - len(out)])
    return out


def exact_triples(a, seg):
    """(x, y, z) triples with z computed exactly from the float pair (x, y)."""
    fa = Fraction(a)
    for t in range(len(seg) - 1):
        x, y = Fraction(float(seg[t])), Fraction(float(seg[t + 1]))
        yield x, y, henon_next(fa, x, y)


def cells_containing(lo: np.ndarray, hi: np.ndarray, value: Fraction) -> list[int]:
    """Indices of cells [lo_k, hi_k] containing ``value``, compared exactly."""
    f = float(value)
    k = int(np.searchsorted(hi, f, side="left"))
    out = []
    for c in range(max(0, k - 2), min(len(lo), k + 3)):
        if Fraction(float(lo[c])) <= value <= Fraction(float(hi[c])):
            out.append(c)
    return out


def all_products(mats):
    out = np.eye(2)
    for m in mats:
        out = m @ out
    return out

