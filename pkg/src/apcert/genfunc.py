"""Polynomial generating functions with interval coefficients.

A generating function is stored in the shifted monomial basis

    s(x, y) = sum_ij c_ij (x - center)^i (y - center)^j

and defines an area-preserving map implicitly by
``(x, -s(y, x)) -> (y, s(x, y))``.  All evaluations accept floats,
:class:`Interval` or :class:`IntervalArray` arguments.

An optional ``ball_radius`` r turns the function into the set of all
analytic functions within weighted l1 distance r of the polynomial.  Such a
perturbation is bounded by r on the bi-disk and its partial derivatives by
``r/radius * max_i i*q**(i-1)`` with ``q = |arg - center| / radius``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import InvariantViolation, OutOfDomain, ParseError
from .interval import Interval, IntervalArray

@dataclass(frozen=True)
class SymmetryReport:
    ok: bool
    first_violation: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class NormalizationReport:
    value_at_1_0: Interval
    d2_at_1_0: Interval
    ok: bool


def _as_interval(v) -> Interval:
    if isinstance(v, Interval):
        return v
    if isinstance(v, tuple):
        return Interval(*v)
    return Interval(v)


def _coef_arrays(coeffs: Mapping[tuple[int, int], Interval]) -> tuple[np.ndarray, np.ndarray]:
    if not coeffs:
        return np.zeros((1, 1)), np.zeros((1, 1))
    nx = max(i for i, _ in coeffs) + 1
    ny = max(j for _, j in coeffs) + 1
    lo = np.zeros((nx, ny))
    hi = np.zeros((nx, ny))
    for (i, j), c in coeffs.items():
        lo[i, j] = c.lo
        hi[i, j] = c.hi
    return lo, hi


def _scaled(c: Interval, k: int) -> Interval:
    return c * float(k)


def _horner(lo: np.ndarray, hi: np.ndarray, X, Y):
    """Evaluate sum c_ij X^i Y^j by nested Horner; X, Y already shifted."""
    acc = None
    for i in range(lo.shape[0] - 1, -1, -1):
        row = None
        for j in range(lo.shape[1] - 1, -1, -1):
            zero = lo[i, j] == 0.0 and hi[i, j] == 0.0
            if row is None:
                if not zero:
                    row = Interval._raw(float(lo[i, j]), float(hi[i, j]))
                continue
            row = row * Y
            if not zero:
                row = row + Interval._raw(float(lo[i, j]), float(hi[i, j]))
        if acc is None:
            acc = row
            continue
        acc = acc * X
        if row is not None:
            acc = acc + row
    return Interval(0.0) if acc is None else acc


def _ball_factor(q):
    """Upper bound on max_{i>=1} i*q**(i-1) for 0 <= q < 1 (scalar or array)."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        istar = np.where(q > 0.0, -1.0 / np.log(np.where(q > 0.0, q, 0.5)), 1.0)
    best = np.ones_like(q)
    for i in (np.floor(istar), np.ceil(istar)):
        i = np.maximum(i, 1.0)
        best = np.maximum(best, i * q ** (i - 1.0))
    return best * (1.0 + 1e-9)


class GeneratingFunction:
    """Bivariate polynomial ``s(x, y)`` with interval coefficients."""

    def __init__(
        self,
        coeffs: Mapping[tuple[int, int], Interval | float | tuple[float, float]],
        center: float = 0.5,
        radius: float = 1.6,
        ball_radius: float = 0.0,
        symmetric: bool | None = None,
        name: str = "",
    ):
        if radius <= 0.0:
            raise InvariantViolation("radius must be positive")
        if ball_radius < 0.0:
            raise InvariantViolation("ball_radius must be nonnegative")
        cleaned: dict[tuple[int, int], Interval] = {}
        for (i, j), c in coeffs.items():
            if i < 0 or j < 0:
                raise InvariantViolation(f"negative degree ({i}, {j})")
            try:
                cleaned[(int(i), int(j))] = _as_interval(c)
            except ValueError as exc:
                raise InvariantViolation(f"coefficient ({i}, {j}): {exc}") from exc
        self.coeffs = cleaned
        self.center = float(center)
        self.radius = float(radius)
        self.ball_radius = float(ball_radius)
        self.name = name

        self._lo, self._hi = _coef_arrays(cleaned)
        d1 = {(i - 1, j): _scaled(c, i) for (i, j), c in cleaned.items() if i > 0}
        d2 = {(i, j - 1): _scaled(c, j) for (i, j), c in cleaned.items() if j > 0}
        self._d1lo, self._d1hi = _coef_arrays(d1)
        self._d2lo, self._d2hi = _coef_arrays(d2)
        self._d1_coeffs = d1

        report = check_symmetry(self)
        self.symmetric = report.ok if symmetric is None else bool(symmetric)
        if self.symmetric:
            # hull of the d1 coefficient matrix and its transpose, so that
            # d1(a, b) and d1(b, a) can share one evaluation order
            n = max(self._d1lo.shape)
            lo = np.zeros((n, n))
            hi = np.zeros((n, n))
            lo[: self._d1lo.shape[0], : self._d1lo.shape[1]] = self._d1lo
            hi[: self._d1hi.shape[0], : self._d1hi.shape[1]] = self._d1hi
            self._d1slo = np.minimum(lo, lo.T)
            self._d1shi = np.maximum(hi, hi.T)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return (
            f"<GeneratingFunction{label} center={self.center} radius={self.radius} "
            f"terms={len(self.coeffs)} ball={self.ball_radius}>"
        )

    # domain -----------------------------------------------------------------

    def in_domain(self, z):
        """True where the argument lies inside the open disk around center."""
        lo, hi = _endpoints(z)
        return (lo > self.center - self.radius) & (hi < self.center + self.radius)

    def _check(self, *args) -> None:
        for z in args:
            if not np.all(self.in_domain(z)):
                raise OutOfDomain(
                    f"argument leaves |z - {self.center}| < {self.radius}"
                )

    def _shift(self, z):
        if not isinstance(z, (Interval, IntervalArray)):
            z = Interval(z)
        if self.center == 0.0:
            return z
        return z - self.center

    def _ball_term(self, z, deriv: bool):
        r = self.ball_radius
        lo, hi = _endpoints(z)
        if not deriv:
            bound = r
        else:
            t = np.maximum(np.abs(lo - self.center), np.abs(hi - self.center))
            bound = r / self.radius * _ball_factor(t / self.radius)
        if np.ndim(bound) == 0:
            b = math.nextafter(float(bound), math.inf)
            return Interval(-b, b)
        b = np.nextafter(bound, np.inf)
        return IntervalArray(-b, b)

    # evaluation -------------------------------------------------------------

    def eval(self, x, y):
        """Enclosure of ``s`` over the box ``x × y``."""
        self._check(x, y)
        out = _horner(self._lo, self._hi, self._shift(x), self._shift(y))
        if self.ball_radius:
            out = out + self._ball_term(x, False)
        return _broadcast(out, x, y)

    __call__ = eval

    def d1(self, x, y):
        """Enclosure of the partial derivative in the first argument."""
        self._check(x, y)
        if self.symmetric:
            a, b = _canonical_pair(x, y)
            out = _horner(self._d1slo, self._d1shi, self._shift(a), self._shift(b))
            if self.ball_radius:
                # the larger of the two one-variable bounds keeps d1(x, y) == d1(y, x)
                out = out + _ihull(self._ball_term(x, True), self._ball_term(y, True))
        else:
            out = _horner(self._d1lo, self._d1hi, self._shift(x), self._shift(y))
            if self.ball_radius:
                out = out + self._ball_term(x, True)
        return _broadcast(out, x, y)

    def d2(self, x, y):
        """Enclosure of the partial derivative in the second argument."""
        self._check(x, y)
        out = _horner(self._d2lo, self._d2hi, self._shift(x), self._shift(y))
        if self.ball_radius:
            out = out + self._ball_term(y, True)
        return _broadcast(out, x, y)

    # diagnostics --------------------------------------------------------------

    def norm(self) -> float:
        """Upper bound on sum |c_ij| rho^(i+j) (plus the ball radius)."""
        rho = Interval(self.radius)
        total = Interval(self.ball_radius)
        for (i, j), c in self.coeffs.items():
            total = total + Interval(c.mag()) * rho ** (i + j)
        return total.hi

    def check_normalization(self, value: float = 0.0, slope: float = 0.2) -> NormalizationReport:
        """Report whether s(1, 0) ∋ value and d2 s(1, 0) ∋ slope."""
        v = self.eval(1.0, 0.0)
        d = self.d2(1.0, 0.0)
        return NormalizationReport(v, d, v.contains(value) and d.contains(slope))

    def to_text(self) -> str:
        lines = [f"center {self.center!r}", f"radius {self.radius!r}"]
        if self.ball_radius:
            lines.append(f"ball_radius {self.ball_radius!r}")
        for (i, j), c in sorted(self.coeffs.items()):
            lines.append(f"{i} {j} {c.lo!r} {c.hi!r}")
        return "\n".join(lines) + "\n"


def _ihull(a, b):
    if isinstance(a, Interval) and isinstance(b, Interval):
        return a.hull(b)
    alo, ahi = _endpoints(a)
    blo, bhi = _endpoints(b)
    return IntervalArray(np.minimum(alo, blo), np.maximum(ahi, bhi))


def _endpoints(z):
    if isinstance(z, (Interval, IntervalArray)):
        return z.lo, z.hi
    z = float(z)
    return z, z


def _canonical_pair(x, y):
    """Order the two arguments so that the lexicographically smaller comes first."""
    if isinstance(x, IntervalArray) or isinstance(y, IntervalArray):
        xl, xh = _endpoints(x)
        yl, yh = _endpoints(y)
        xl, xh, yl, yh = np.broadcast_arrays(xl, xh, yl, yh)
        swap = (yl < xl) | ((yl == xl) & (yh < xh))
        a = IntervalArray(np.where(swap, yl, xl), np.where(swap, yh, xh))
        b = IntervalArray(np.where(swap, xl, yl), np.where(swap, xh, yh))
        return a, b
    xl, xh = _endpoints(x)
    yl, yh = _endpoints(y)
    if (yl, yh) < (xl, xh):
        return y, x
    return x, y


def _broadcast(out, x, y):
    arrays = [z for z in (x, y) if isinstance(z, IntervalArray)]
    if not arrays:
        return out
    shape = np.broadcast_shapes(*(z.shape for z in arrays))
    if isinstance(out, IntervalArray) and out.shape == shape:
        return out
    lo, hi = _endpoints(out)
    return IntervalArray(np.broadcast_to(lo, shape).copy(), np.broadcast_to(hi, shape).copy())


def check_symmetry(s: GeneratingFunction) -> SymmetryReport:
    """Check that d1 s(x, y) = d1 s(y, x) at the coefficient level.

    The coefficient of X^p Y^q in d1 s is (p+1) c_{p+1,q}; symmetry asks
    it to agree with (q+1) c_{q+1,p}.  Interval coefficients pass when the
    two enclosures overlap.
    """
    d1 = s._d1_coeffs
    zero = Interval(0.0)
    keys = sorted(set(d1) | {(q, p) for p, q in d1})
    for p, q in keys:
        if p >= q:
            continue
        a = d1.get((p, q), zero)
        b = d1.get((q, p), zero)
        if a.intersect(b) is None:
            return SymmetryReport(False, (p, q))
    return SymmetryReport(True)


def henon(a: float = 1.0, radius: float = 10.0) -> GeneratingFunction:
    """Area-preserving Henon family s(x, y) = x - 1 + a y^2."""
    return GeneratingFunction(
        {(0, 0): -1.0, (1, 0): 1.0, (0, 2): Interval.from_decimal(repr(a))},
        center=0.0,
        radius=radius,
        name=f"henon a={a}",
    )


def _parse_real(token: str, lineno: int) -> Interval:
    try:
        return Interval.from_decimal(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"line {lineno}: cannot parse {token!r}") from exc


def parse_map(text: str, name: str = "") -> GeneratingFunction:
    """Parse the map-definition text format.

    Header lines ``center <real>``, ``radius <real>``, optional
    ``ball_radius <real>``; then one ``i j lo hi`` (or ``i j value``) line
    per coefficient.  ``#`` starts a comment.
    """
    header: dict[str, float] = {}
    coeffs: dict[tuple[int, int], Interval] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0].lower()
        if key in ("center", "radius", "ball_radius"):
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected '{key} <real>'")
            iv = _parse_real(parts[1], lineno)
            if key == "center" and iv.lo != iv.hi:
                # the basis shift must be exact for the coefficients to mean what they say
                raise ParseError(f"line {lineno}: center {parts[1]} is not a binary float")
            # outward choice keeps the ball conservative
            header[key] = iv.hi if key == "ball_radius" else float(Fraction(parts[1]))
            continue
        if len(parts) not in (3, 4):
            raise ParseError(f"line {lineno}: expected 'i j lo hi'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad degree pair") from exc
        if i < 0 or j < 0:
            raise ParseError(f"line {lineno}: negative degree")
        lo = _parse_real(parts[2], lineno)
        hi = _parse_real(parts[3], lineno) if len(parts) == 4 else lo
        if Fraction(parts[2]) > Fraction(parts[-1]):
            raise InvariantViolation(f"line {lineno}: coefficient lo > hi")
        if (i, j) in coeffs:
            raise ParseError(f"line {lineno}: duplicate coefficient ({i}, {j})")
        coeffs[(i, j)] = Interval(lo.lo, hi.hi)
    for key in ("center", "radius"):
        if key not in header:
            raise ParseError(f"missing '{key}' header")
    return GeneratingFunction(
        coeffs,
        center=header["center"],
        radius=header["radius"],
        ball_radius=header.get("ball_radius", 0.0),
        name=name,
    )


def load_from_file(path: str | os.PathLike) -> GeneratingFunction:
    with open(path, encoding="utf-8") as fh:
        return parse_map(fh.read(), name=os.path.basename(str(path)))


def resolve_map(spec: str) -> GeneratingFunction:
    """Load a map from a file path or a builtin spec such as ``henon:1.0``."""
    if spec.startswith("henon:"):
        parts = spec.split(":")
        a = float(parts[1])
        radius = float(parts[2]) if len(parts) > 2 else 10.0
        return henon(a, radius)
    return load_from_file(spec)
