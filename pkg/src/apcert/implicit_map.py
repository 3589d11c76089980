"""The area-preserving map defined implicitly by a generating function.

``F(x, u) = (y, s(x, y))`` where ``y`` solves ``u = -s(y, x)``.  Only the
forward map is evaluated; the inverse is ``T∘F∘T`` with ``T(x, u) = (x, -u)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import EmptySolution, InvariantViolation, NoUniqueSolution, SingularImplicit
from .genfunc import GeneratingFunction
from .interval import Interval, IntervalBox, IntervalMatrix2

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MapContext:
    s: GeneratingFunction
    y_search_domain: Interval | None = None
    max_bisections: int = 12
    max_newton_steps: int = 60
    rel_tol: float = 1e-3

    def __post_init__(self):
        if self.y_search_domain is None:
            # largest float interval strictly inside the open disk slice
            c, r = self.s.center, self.s.radius
            lo = math.nextafter((Interval(c) - r).hi, math.inf)
            hi = math.nextafter((Interval(c) + r).lo, -math.inf)
            object.__setattr__(self, "y_search_domain", Interval(lo, hi))
        if not bool(self.s.in_domain(self.y_search_domain)):
            raise ValueError("y_search_domain must lie inside the bi-disk of s")


@dataclass
class _Piece:
    y: Interval
    depth: int


def _newton_image(s: GeneratingFunction, x: Interval, u: Interval, y: Interval) -> Interval | None:
    """Interval Newton image of ``y`` for g(y) = s(y, x) + u, or None if 0 in g'."""
    dg = s.d1(y, x)
    if dg.contains_zero():
        return None
    m = y.mid
    g = s.eval(Interval(m), x) + u
    return m - g / dg


def solve_y(ctx: MapContext, x: Interval, u: Interval) -> Interval:
    """Certified enclosure of the unique y with ``u = -s(y, x)``.

    Returns ``Y`` such that the Newton operator maps some iterate strictly
    into its interior, which proves one and only one solution in ``Y``.
    """
    s = ctx.s
    certified: list[Interval] = []
    unresolved = 0
    work = [_Piece(ctx.y_search_domain, 0)]
    while work:
        piece = work.pop()
        y = piece.y
        ok = False
        for _ in range(ctx.max_newton_steps):
            n = _newton_image(s, x, u, y)
            if n is None:
                break
            if y.interior_contains(n):
                ok = True
                break
            new = y.intersect(n)
            if new is None:
                y = None
                break
            if new.width >= y.width * (1.0 - ctx.rel_tol):
                y = new
                break
            y = new
        if y is None:
            continue
        if ok:
            certified.append(_tighten(s, x, u, y, ctx))
            continue
        g = s.eval(y, x) + u
        if not g.contains_zero():
            continue
        if piece.depth >= ctx.max_bisections:
            unresolved += 1
            continue
        left, right = y.bisect()
        work.append(_Piece(right, piece.depth + 1))
        work.append(_Piece(left, piece.depth + 1))
    if not certified and not unresolved:
        raise EmptySolution(f"no solution of u = -s(y, x) in {ctx.y_search_domain}")
    if len(certified) != 1 or unresolved:
        raise NoUniqueSolution(
            f"{len(certified)} certified pieces, {unresolved} unresolved pieces"
        )
    return certified[0]


def _tighten(s, x, u, y: Interval, ctx: MapContext) -> Interval:
    """Shrink a certified ``y``.

    Uniqueness is already proved on ``y``; any root in ``y`` also lies in its
    Newton image, so plain intersection needs no fresh certificate.
    """
    for _ in range(ctx.max_newton_steps):
        n = _newton_image(s, x, u, y)
        if n is None:
            return y
        new = y.intersect(n)
        if new is None:
            raise InvariantViolation(f"Newton image left the certified enclosure {y}")
        if new.width >= y.width * (1.0 - ctx.rel_tol):
            return new
        y = new
    return y


def forward(ctx: MapContext, p: IntervalBox) -> IntervalBox:
    """Enclosure of F(p)."""
    y = solve_y(ctx, p.x, p.u)
    return IntervalBox(y, ctx.s.eval(p.x, y))


def reverse(p: IntervalBox) -> IntervalBox:
    """The reversor T(x, u) = (x, -u)."""
    return IntervalBox(p.x, -p.u)


def backward(ctx: MapContext, p: IntervalBox) -> IntervalBox:
    """Enclosure of F^-1(p) computed as T(F(T(p)))."""
    return reverse(forward(ctx, reverse(p)))


def derivative_xy(s: GeneratingFunction, x, y) -> IntervalMatrix2:
    """DF at the phase point whose consecutive positions are ``x`` then ``y``."""
    s1_yx = s.d1(y, x)
    if s1_yx.contains_zero():
        raise SingularImplicit(f"s1(y, x) = {s1_yx} contains zero")
    s2_yx = s.d2(y, x)
    s1_xy = s.d1(x, y)
    s2_xy = s.d2(x, y)
    r = s2_yx / s1_yx
    return IntervalMatrix2(
        -r,
        -(1.0 / s1_yx),
        s1_xy - s2_xy * r,
        -(s2_xy / s1_yx),
    )


def derivative(ctx: MapContext, x: Interval, u: Interval) -> IntervalMatrix2:
    """Enclosure of DF over the phase box ``x × u``."""
    y = solve_y(ctx, x, u)
    return derivative_xy(ctx.s, x, y)


@dataclass
class ConsistencyReport:
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_reversibility(ctx: MapContext, samples) -> ConsistencyReport:
    """For each sample p check that F(T(F(p))) meets T(p)."""
    report = ConsistencyReport()
    for p in samples:
        q = forward(ctx, reverse(forward(ctx, p)))
        report.checked += 1
        if q.intersect(reverse(p)) is None:
            report.violations.append((p, q))
    return report


def check_area_preservation(ctx: MapContext, samples) -> ConsistencyReport:
    """For each sample p check that det DF(p) can equal 1."""
    report = ConsistencyReport()
    for p in samples:
        det = derivative(ctx, p.x, p.u).det()
        report.checked += 1
        if not det.contains(1.0):
            report.violations.append((p, det))
    return report
