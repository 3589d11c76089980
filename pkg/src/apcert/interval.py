"""Outward-rounded interval arithmetic.

Every endpoint produced by an arithmetic operation is nudged one ulp away
from the interval with ``nextafter``.  IEEE round-to-nearest is accurate to
half an ulp, so the nudged result always encloses the exact real result.

Two flavours share the same semantics:

* :class:`Interval` holds a single pair of Python floats.
* :class:`IntervalArray` holds numpy arrays of endpoints and is used by the
  bulk stages (graph construction, batched contraction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateSplit, DivisionByZeroInterval, InvalidInterval

DEFAULT_SPLIT_FLOOR = 1e-13

_INF = math.inf
_dn_s = math.nextafter


def _dn(x: float) -> float:
    if x != x:
        return -_INF
    return _dn_s(x, -_INF)


def _up(x: float) -> float:
    if x != x:
        return _INF
    return _dn_s(x, _INF)


class Interval:
    """Closed interval ``[lo, hi]`` of reals with float endpoints."""

    __slots__ = ("lo", "hi")
    __array_ufunc__ = None

    def __init__(self, lo: float, hi: float | None = None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if not (lo <= hi):
            raise InvalidInterval(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo: float, hi: float) -> "Interval":
        obj = object.__new__(cls)
        obj.lo = lo
        obj.hi = hi
        return obj

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def from_decimal(cls, text: str) -> "Interval":
        """Smallest float interval containing the decimal number ``text``."""
        from fractions import Fraction

        exact = Fraction(text)
        f = float(exact)
        fr = Fraction(f)
        if fr == exact:
            return cls(f, f)
        if fr < exact:
            return cls(f, _up(f))
        return cls(_dn(f), f)

    def __repr__(self) -> str:
        return f"Interval({float(self.lo)!r}, {float(self.hi)!r})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Interval):
            return self.lo == other.lo and self.hi == other.hi
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __iter__(self):
        yield self.lo
        yield self.hi

    # arithmetic -----------------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval._raw(-self.hi, -self.lo)

    def __pos__(self) -> "Interval":
        return self

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval._raw(_dn(self.lo + other.lo), _up(self.hi + other.hi))
        if isinstance(other, (int, float)):
            other = float(other)
            return Interval._raw(_dn(self.lo + other), _up(self.hi + other))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Interval):
            return Interval._raw(_dn(self.lo - other.hi), _up(self.hi - other.lo))
        if isinstance(other, (int, float)):
            other = float(other)
            return Interval._raw(_dn(self.lo - other), _up(self.hi - other))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            other = float(other)
            return Interval._raw(_dn(other - self.hi), _up(other - self.lo))
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Interval):
            a, b, c, d = self.lo, self.hi, other.lo, other.hi
            p = (a * c, a * d, b * c, b * d)
            if any(v != v for v in p):
                # 0 * inf: fall back to the trivially sound enclosure
                return Interval._raw(-_INF, _INF)
            return Interval._raw(_dn(min(p)), _up(max(p)))
        if isinstance(other, (int, float)):
            c = float(other)
            p, q = self.lo * c, self.hi * c
            if p != p or q != q:
                return Interval._raw(-_INF, _INF)
            if p > q:
                p, q = q, p
            return Interval._raw(_dn(p), _up(q))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            other = Interval(other)
        if not isinstance(other, Interval):
            return NotImplemented
        if other.lo <= 0.0 <= other.hi:
            raise DivisionByZeroInterval(f"division by {other!r}")
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        p = (a / c, a / d, b / c, b / d)
        if any(v != v for v in p):
            # inf / inf
            return Interval._raw(-_INF, _INF)
        return Interval._raw(_dn(min(p)), _up(max(p)))

    def __rtruediv__(self, other):
        if isinstance(other, (int, float)):
            return Interval(other) / self
        return NotImplemented

    def sqr(self) -> "Interval":
        lo, hi = self.lo, self.hi
        if lo >= 0.0:
            return Interval._raw(max(0.0, _dn(lo * lo)), _up(hi * hi))
        if hi <= 0.0:
            return Interval._raw(max(0.0, _dn(hi * hi)), _up(lo * lo))
        m = max(-lo, hi)
        return Interval._raw(0.0, _up(m * m))

    def __pow__(self, n: int) -> "Interval":
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        if n == 0:
            return Interval._raw(1.0, 1.0)
        if n % 2 == 0:
            return self.sqr() ** (n // 2) if n > 2 else self.sqr()
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    # set operations -------------------------------------------------------

    def intersect(self, other: "Interval") -> "Interval | None":
        """Intersection, or ``None`` when the intervals are disjoint."""
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval._raw(lo, hi)

    def hull(self, other: "Interval") -> "Interval":
        return Interval._raw(min(self.lo, other.lo), max(self.hi, other.hi))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def interior_contains(self, other: "Interval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    @property
    def mid(self) -> float:
        lo, hi = self.lo, self.hi
        if lo == hi:
            return lo
        m = 0.5 * lo + 0.5 * hi
        if not math.isfinite(m):
            m = 0.0 if lo < 0.0 < hi else (lo if math.isfinite(lo) else hi)
        return min(max(m, lo), hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def width_up(self) -> float:
        """Upper bound on the width."""
        return _up(self.hi - self.lo) if self.hi > self.lo else 0.0

    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def bisect(self) -> tuple["Interval", "Interval"]:
        m = self.mid
        return Interval._raw(self.lo, m), Interval._raw(m, self.hi)


def outward_arith(a: Interval, b: Interval, op: str) -> Interval:
    """Apply ``op`` (``add``, ``sub``, ``mul`` or ``div``) to two intervals."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def intersect(a: Interval, b: Interval) -> Interval | None:
    return a.intersect(b)


def mid_width(a: Interval) -> tuple[float, float]:
    return a.mid, a.width


@dataclass(frozen=True)
class IntervalBox:
    """Rectangle ``x × u`` in the phase plane."""

    x: Interval
    u: Interval

    def coords(self) -> tuple[Interval, Interval]:
        return self.x, self.u

    def intersect(self, other: "IntervalBox") -> "IntervalBox | None":
        x = self.x.intersect(other.x)
        u = self.u.intersect(other.u)
        if x is None or u is None:
            return None
        return IntervalBox(x, u)

    def area_up(self) -> float:
        return _up(self.x.width_up() * self.u.width_up())


@dataclass(frozen=True)
class IntervalMatrix2:
    """2x2 interval matrix ``[[a, b], [c, d]]``."""

    a: Interval
    b: Interval
    c: Interval
    d: Interval

    @classmethod
    def from_rows(cls, rows) -> "IntervalMatrix2":
        (a, b), (c, d) = rows
        conv = lambda v: v if isinstance(v, Interval) else Interval(v)
        return cls(conv(a), conv(b), conv(c), conv(d))

    @classmethod
    def identity(cls) -> "IntervalMatrix2":
        one, zero = Interval(1.0), Interval(0.0)
        return cls(one, zero, zero, one)

    def rows(self) -> tuple[tuple[Interval, Interval], tuple[Interval, Interval]]:
        return (self.a, self.b), (self.c, self.d)

    def __matmul__(self, other: "IntervalMatrix2") -> "IntervalMatrix2":
        return IntervalMatrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def trace(self) -> Interval:
        return self.a + self.d

    def det(self) -> Interval:
        return self.a * self.d - self.b * self.c

    def contains(self, m) -> bool:
        m = np.asarray(m, dtype=float)
        return (
            self.a.contains(m[0, 0])
            and self.b.contains(m[0, 1])
            and self.c.contains(m[1, 0])
            and self.d.contains(m[1, 1])
        )


def split_widest(points: Sequence, floor: float = DEFAULT_SPLIT_FLOOR) -> tuple[list, list]:
    """Bisect the widest coordinate found anywhere in ``points``.

    ``points`` may hold :class:`IntervalBox` or bare :class:`Interval` items.
    Both returned sequences equal the input except at the split position.
    """
    if not points:
        raise ValueError("split_widest needs a nonempty sequence")
    best, where = -1.0, None
    for k, p in enumerate(points):
        coords = p.coords() if isinstance(p, IntervalBox) else (p,)
        for c, iv in enumerate(coords):
            if iv.width > best:
                best, where = iv.width, (k, c)
    if best < floor:
        raise DegenerateSplit(f"widest width {best:.3e} below floor {floor:.1e}")
    k, c = where
    p = points[k]
    if isinstance(p, IntervalBox):
        left, right = p.coords()[c].bisect()
        if c == 0:
            pl, pr = IntervalBox(left, p.u), IntervalBox(right, p.u)
        else:
            pl, pr = IntervalBox(p.x, left), IntervalBox(p.x, right)
    else:
        pl, pr = p.bisect()
    first = list(points)
    second = list(points)
    first[k] = pl
    second[k] = pr
    return first, second


# ---------------------------------------------------------------------------
# vectorised intervals

ArrayLike = Union[np.ndarray, float]


def _vdn(x: np.ndarray) -> np.ndarray:
    x = np.nextafter(x, -np.inf)
    return np.where(np.isnan(x), -np.inf, x)


def _vup(x: np.ndarray) -> np.ndarray:
    x = np.nextafter(x, np.inf)
    return np.where(np.isnan(x), np.inf, x)


class IntervalArray:
    """Array of intervals stored as two float64 endpoint arrays."""

    __slots__ = ("lo", "hi")
    __array_ufunc__ = None

    def __init__(self, lo: ArrayLike, hi: ArrayLike | None = None):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = self.lo if hi is None else np.asarray(hi, dtype=float)

    @classmethod
    def from_intervals(cls, items: Sequence[Interval]) -> "IntervalArray":
        return cls([i.lo for i in items], [i.hi for i in items])

    @staticmethod
    def _coerce(other):
        if isinstance(other, IntervalArray):
            return other.lo, other.hi
        if isinstance(other, Interval):
            return other.lo, other.hi
        if isinstance(other, (int, float, np.ndarray)):
            v = np.asarray(other, dtype=float)
            return v, v
        return None

    def __repr__(self) -> str:
        return f"IntervalArray(lo={self.lo!r}, hi={self.hi!r})"

    def __len__(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return self.lo.shape

    def __getitem__(self, key) -> "IntervalArray":
        return IntervalArray(self.lo[key], self.hi[key])

    def __setitem__(self, key, value) -> None:
        lo, hi = self._coerce(value)
        self.lo[key] = lo
        self.hi[key] = hi

    def item(self, *idx) -> Interval:
        return Interval(self.lo[idx], self.hi[idx])

    def to_list(self) -> list[Interval]:
        return [Interval(a, b) for a, b in zip(self.lo.ravel(), self.hi.ravel())]

    def copy(self) -> "IntervalArray":
        return IntervalArray(self.lo.copy(), self.hi.copy())

    def __neg__(self) -> "IntervalArray":
        return IntervalArray(-self.hi, -self.lo)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return IntervalArray(_vdn(self.lo + o[0]), _vup(self.hi + o[1]))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return IntervalArray(_vdn(self.lo - o[1]), _vup(self.hi - o[0]))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return IntervalArray(_vdn(o[0] - self.hi), _vup(o[1] - self.lo))

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        c, d = o
        with np.errstate(invalid="ignore", over="ignore"):
            p1, p2 = self.lo * c, self.lo * d
            p3, p4 = self.hi * c, self.hi * d
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        return IntervalArray(_vdn(lo), _vup(hi))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        c, d = o
        if np.any((c <= 0.0) & (d >= 0.0)):
            raise DivisionByZeroInterval("denominator contains zero")
        with np.errstate(invalid="ignore", over="ignore"):
            p1, p2 = self.lo / c, self.lo / d
            p3, p4 = self.hi / c, self.hi / d
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        return IntervalArray(_vdn(lo), _vup(hi))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return IntervalArray(*o) / self

    def sqr(self) -> "IntervalArray":
        lo, hi = self.lo, self.hi
        a, b = lo * lo, hi * hi
        straddle = (lo < 0.0) & (hi > 0.0)
        out_lo = np.where(straddle, 0.0, np.maximum(_vdn(np.minimum(a, b)), 0.0))
        return IntervalArray(out_lo, _vup(np.maximum(a, b)))

    def intersect(self, other) -> tuple["IntervalArray", np.ndarray]:
        """Return the elementwise intersection and a mask of empty results."""
        c, d = self._coerce(other)
        lo = np.maximum(self.lo, c)
        hi = np.minimum(self.hi, d)
        return IntervalArray(lo, hi), lo > hi

    def contains_zero(self) -> np.ndarray:
        return (self.lo <= 0.0) & (self.hi >= 0.0)

    def contains(self, x) -> np.ndarray:
        c, d = self._coerce(x)
        return (self.lo <= c) & (d <= self.hi)

    def mid(self) -> np.ndarray:
        m = 0.5 * self.lo + 0.5 * self.hi
        m = np.where(self.lo == self.hi, self.lo, m)
        return np.minimum(np.maximum(m, self.lo), self.hi)

    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def width_up(self) -> np.ndarray:
        w = self.hi - self.lo
        return np.where(w > 0.0, _vup(w), 0.0)
