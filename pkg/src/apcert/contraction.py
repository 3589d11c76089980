"""Contract candidate cycles onto periodic orbits, or discard them.

A period-n orbit with positions ``x_1..x_n`` solves the cyclic system

    Z_i(x) = s(x_{i-1}, x_i) + s(x_{i+1}, x_i) = 0,   indices mod n.

Two contractors are applied: a Gauss-Seidel sweep of one-dimensional
interval Newton steps (one coordinate at a time, neighbours held as
intervals), then the Krawczyk operator on the whole system.  Both only
remove points that cannot be on an orbit; an ``Alive`` result is not an
existence claim.

Everything is batched: a batch is an :class:`IntervalArray` of shape
``(cycles, n)``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .genfunc import GeneratingFunction
from .graph import Partition
from .interval import Interval, IntervalArray

log = logging.getLogger(__name__)

STALL = 0.01


class Status(enum.Enum):
    ALIVE = "Alive"
    DISCARDED = "Discarded"


@dataclass(frozen=True)
class OrbitEnclosure:
    intervals: tuple[Interval, ...]
    status: Status = Status.ALIVE

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def alive(self) -> bool:
        return self.status is Status.ALIVE

    def width(self) -> float:
        return max(iv.width for iv in self.intervals)

    def contains(self, positions: Sequence[float]) -> bool:
        return all(iv.contains(p) for iv, p in zip(self.intervals, positions))

    def as_batch(self) -> IntervalArray:
        return IntervalArray(
            np.array([[iv.lo for iv in self.intervals]]),
            np.array([[iv.hi for iv in self.intervals]]),
        )

    @classmethod
    def from_cells(cls, partition: Partition, positions: Sequence[int]) -> "OrbitEnclosure":
        return cls(tuple(partition.cell(int(k)) for k in positions))


def batch_from_cycles(partition: Partition, cycles: Sequence) -> IntervalArray:
    """Cell intervals of each cycle's positions as a ``(len(cycles), n)`` batch."""
    idx = np.array([c.positions for c in cycles], dtype=np.int64)
    return IntervalArray(partition.lo[idx], partition.hi[idx])


def enclosures_from_batch(batch: IntervalArray, alive: np.ndarray) -> list[OrbitEnclosure]:
    return [
        OrbitEnclosure(
            tuple(Interval(a, b) for a, b in zip(batch.lo[r], batch.hi[r])),
            Status.ALIVE if alive[r] else Status.DISCARDED,
        )
        for r in range(batch.shape[0])
    ]


# ---------------------------------------------------------------------------
# the cyclic system


def build_system(
    s: GeneratingFunction,
) -> tuple[Callable[[IntervalArray], IntervalArray], Callable[[IntervalArray], IntervalArray]]:
    """Evaluators for Z and its Jacobian DZ on ``(cycles, n)`` batches.

    DZ is returned as an ``(cycles, n, n)`` array.  Entries are accumulated
    so that short cycles, where the two neighbours coincide, get the sum of
    both contributions.
    """

    def z_eval(x: IntervalArray) -> IntervalArray:
        prev = x[:, _roll(x, 1)]
        nxt = x[:, _roll(x, -1)]
        return s.eval(prev, x) + s.eval(nxt, x)

    def dz_eval(x: IntervalArray) -> IntervalArray:
        c, n = x.shape
        ip, inx = _roll(x, 1), _roll(x, -1)
        prev, nxt = x[:, ip], x[:, inx]
        diag = s.d2(prev, x) + s.d2(nxt, x)
        left = s.d1(prev, x)
        right = s.d1(nxt, x)
        out = IntervalArray(np.zeros((c, n, n)), np.zeros((c, n, n)))
        rows = np.arange(n)
        for cols, vals in ((rows, diag), (ip, left), (inx, right)):
            cur = out[:, rows, cols]
            out[:, rows, cols] = _sum_exact_zero(cur, vals)
        return out

    return z_eval, dz_eval


def _roll(x: IntervalArray, shift: int) -> np.ndarray:
    return np.roll(np.arange(x.shape[1]), shift)


def _sum_exact_zero(a: IntervalArray, b: IntervalArray) -> IntervalArray:
    """a + b, but without an outward nudge where ``a`` is still exactly zero."""
    s = a + b
    fresh = (a.lo == 0.0) & (a.hi == 0.0)
    return IntervalArray(np.where(fresh, b.lo, s.lo), np.where(fresh, b.hi, s.hi))


def _total_width(x: IntervalArray) -> np.ndarray:
    return x.width().sum(axis=-1)


# ---------------------------------------------------------------------------
# one-dimensional Newton sweeps


def newton_batch(
    s: GeneratingFunction,
    x: IntervalArray,
    alive: np.ndarray | None = None,
    max_sweeps: int = 20,
) -> tuple[IntervalArray, np.ndarray]:
    """Gauss-Seidel interval Newton sweeps; returns (contracted, alive mask).

    Coordinates whose derivative enclosure contains zero are skipped for
    that sweep.  A row dies when any intersection empties.
    """
    x = x.copy()
    c, n = x.shape
    alive = np.ones(c, dtype=bool) if alive is None else alive.copy()
    active = alive.copy()
    ip, inx = np.roll(np.arange(n), 1), np.roll(np.arange(n), -1)
    for _ in range(max_sweeps):
        if not active.any():
            break
        rows = np.flatnonzero(active)
        before = _total_width(x[rows])
        for i in range(n):
            cur = x[rows, i]
            prev = x[rows, ip[i]]
            nxt = x[rows, inx[i]]
            den = s.d2(prev, cur) + s.d2(nxt, cur)
            ok = ~den.contains_zero()
            if not ok.any():
                continue
            m = IntervalArray(cur.mid())
            num = s.eval(prev, m) + s.eval(nxt, m)
            den = IntervalArray(np.where(ok, den.lo, 1.0), np.where(ok, den.hi, 1.0))
            img = m - num / den
            new, empty = cur.intersect(img)
            empty &= ok
            upd = ok & ~empty
            sel = rows[upd]
            x[sel, i] = new[upd]
            dead = rows[empty]
            alive[dead] = False
            active[dead] = False
        live = alive[rows]
        after = _total_width(x[rows])
        stalled = after >= before * (1.0 - STALL)
        active[rows[stalled | ~live]] = False
    return x, alive


def newton_pass(s: GeneratingFunction, orbit: OrbitEnclosure, max_sweeps: int = 20) -> OrbitEnclosure:
    """One-dimensional Newton sweeps on a single orbit until they stall."""
    if not orbit.alive:
        return orbit
    x, alive = newton_batch(s, orbit.as_batch(), max_sweeps=max_sweeps)
    return enclosures_from_batch(x, alive)[0]


# ---------------------------------------------------------------------------
# Krawczyk


def _point_matvec(c: np.ndarray, v: IntervalArray) -> IntervalArray:
    """Point matrices (k, n, n) times interval vectors (k, n)."""
    n = v.shape[1]
    acc = IntervalArray(c[:, :, 0]) * v[:, None, 0]
    for j in range(1, n):
        acc = acc + IntervalArray(c[:, :, j]) * v[:, None, j]
    return acc


def _point_matmul(c: np.ndarray, m: IntervalArray) -> IntervalArray:
    """Point matrices (k, n, n) times interval matrices (k, n, n)."""
    n = m.shape[1]
    acc = IntervalArray(c[:, :, 0, None]) * m[:, None, 0, :]
    for j in range(1, n):
        acc = acc + IntervalArray(c[:, :, j, None]) * m[:, None, j, :]
    return acc


def _interval_matvec(m: IntervalArray, v: IntervalArray) -> IntervalArray:
    n = v.shape[1]
    acc = m[:, :, 0] * v[:, None, 0]
    for j in range(1, n):
        acc = acc + m[:, :, j] * v[:, None, j]
    return acc


def _preconditioners(
    dz_mid: np.ndarray, previous: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    """Approximate inverses of the midpoint Jacobians and a mask of fallbacks."""
    k, n, _ = dz_mid.shape
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(dz_mid) if k else np.zeros(0)
    bad = ~np.isfinite(cond) | (cond > 1e14)
    safe = dz_mid.copy()
    safe[bad] = np.eye(n)
    c = np.linalg.inv(safe)
    if bad.any():
        if previous is not None:
            c[bad] = previous[bad]
        else:
            diag = np.diagonal(dz_mid[bad], axis1=1, axis2=2)
            scale = np.where(np.abs(diag) > 0.0, 1.0 / np.where(diag == 0.0, 1.0, diag), 1.0)
            c[bad] = scale[:, :, None] * np.eye(n)
    return c, bad


def krawczyk_batch(
    s: GeneratingFunction,
    x: IntervalArray,
    alive: np.ndarray | None = None,
    max_iter: int = 30,
) -> tuple[IntervalArray, np.ndarray, np.ndarray]:
    """Iterate I <- I ∩ K(I) per row until stalled.

    Returns (contracted batch, alive mask, rows that needed a fallback
    preconditioner at least once).
    """
    z_eval, dz_eval = build_system(s)
    x = x.copy()
    c, n = x.shape
    alive = np.ones(c, dtype=bool) if alive is None else alive.copy()
    active = alive.copy()
    flagged = np.zeros(c, dtype=bool)
    prev_c: np.ndarray | None = None
    prev_rows: np.ndarray | None = None
    eye = np.eye(n)
    for _ in range(max_iter):
        if not active.any():
            break
        rows = np.flatnonzero(active)
        cur = x[rows]
        m = cur.mid()
        dz = dz_eval(cur)
        dz_mid = 0.5 * dz.lo + 0.5 * dz.hi
        old = None
        if prev_c is not None:
            old = prev_c[np.searchsorted(prev_rows, rows)]
        pre, bad = _preconditioners(dz_mid, old)
        if bad.any():
            flagged[rows[bad]] = True
            log.info("singular preconditioner on %d cycles, fallback applied", int(bad.sum()))
        prev_c, prev_rows = pre, rows
        zm = z_eval(IntervalArray(m))
        cdz = _point_matmul(pre, dz)
        resid = IntervalArray(eye) - cdz
        k = (m - _point_matvec(pre, zm)) + _interval_matvec(resid, cur - m)
        new, empty = cur.intersect(k)
        dead = empty.any(axis=1)
        keep = ~dead
        before = _total_width(cur)
        x[rows[keep]] = new[keep]
        alive[rows[dead]] = False
        after = _total_width(new)
        stalled = keep & (after >= before * (1.0 - STALL))
        active[rows[dead | stalled]] = False
    return x, alive, flagged


def krawczyk_pass(s: GeneratingFunction, orbit: OrbitEnclosure, max_iter: int = 30) -> OrbitEnclosure:
    """Krawczyk iteration on a single orbit until it stalls."""
    if not orbit.alive:
        return orbit
    x, alive, _ = krawczyk_batch(s, orbit.as_batch(), max_iter=max_iter)
    return enclosures_from_batch(x, alive)[0]


@dataclass(frozen=True)
class ContractionSettings:
    newton_sweeps: int = 20
    krawczyk_iterations: int = 30


def contract_batch(
    s: GeneratingFunction,
    x: IntervalArray,
    settings: ContractionSettings = ContractionSettings(),
) -> tuple[IntervalArray, np.ndarray]:
    """Newton sweeps followed by Krawczyk; returns (batch, alive mask)."""
    x, alive = newton_batch(s, x, max_sweeps=settings.newton_sweeps)
    if alive.any():
        x, alive, _ = krawczyk_batch(s, x, alive, max_iter=settings.krawczyk_iterations)
    return x, alive


def contract(
    s: GeneratingFunction,
    orbit: OrbitEnclosure,
    settings: ContractionSettings = ContractionSettings(),
) -> OrbitEnclosure:
    if not orbit.alive:
        return orbit
    x, alive = contract_batch(s, orbit.as_batch(), settings)
    return enclosures_from_batch(x, alive)[0]
