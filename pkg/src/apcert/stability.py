"""Hyperbolicity certificates from monodromy enclosures.

For an area-preserving map the multipliers of a periodic orbit are either
real or complex of unit modulus, so the trace of the monodromy matrix
decides: ``|tr| > 2`` is hyperbolic, ``|tr| < 2`` elliptic, and ``tr = ±2``
(parabolic) cannot be separated by any interval enclosure.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

from .contraction import ContractionSettings, OrbitEnclosure, contract
from .errors import DegenerateSplit, SingularImplicit
from .implicit_map import MapContext, derivative_xy
from .interval import DEFAULT_SPLIT_FLOOR, Interval, IntervalMatrix2, split_widest

log = logging.getLogger(__name__)


class Classification(enum.Enum):
    HYPERBOLIC = "ProvenHyperbolic"
    ELLIPTIC = "EllipticCandidate"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class StabilityVerdict:
    classification: Classification
    trace: Interval
    det: Interval
    splits_used: int = 0
    # how the search ended: "certified", "empty", "split_floor", "max_splits" or "singular"
    termination: str = "certified"
    # (depth, classification) for every enclosure that was classified
    trail: list[tuple[int, Classification]] = field(default_factory=list)
    leaves: list[OrbitEnclosure] = field(default_factory=list)

    @property
    def hyperbolic(self) -> bool:
        return self.classification is Classification.HYPERBOLIC


def monodromy(ctx: MapContext, orbit: OrbitEnclosure) -> IntervalMatrix2:
    """DF(p_n) ... DF(p_1) along the phase points ``p_t = (I_t, -s(I_{t+1}, I_t))``.

    The derivative at ``p_t`` only needs the consecutive positions
    ``I_t, I_{t+1}``, so no implicit solve is required.
    """
    ivs = orbit.intervals
    n = len(ivs)
    m = IntervalMatrix2.identity()
    for t in range(n):
        m = derivative_xy(ctx.s, ivs[t], ivs[(t + 1) % n]) @ m
    return m


def classify(m: IntervalMatrix2, unit_det: bool = True) -> StabilityVerdict:
    """Classify from the trace (``unit_det``) or from the discriminant tr^2 - 4 det."""
    tr = m.trace()
    det = m.det()
    if unit_det:
        if not det.contains(1.0):
            log.warning("monodromy determinant %s misses 1", det)
        if tr.hi < -2.0 or tr.lo > 2.0:
            c = Classification.HYPERBOLIC
        elif tr.lo > -2.0 and tr.hi < 2.0:
            c = Classification.ELLIPTIC
        else:
            c = Classification.INCONCLUSIVE
    else:
        disc = tr.sqr() - 4.0 * det
        if disc.lo > 0.0:
            c = Classification.HYPERBOLIC
        elif disc.hi < 0.0:
            c = Classification.ELLIPTIC
        else:
            c = Classification.INCONCLUSIVE
    return StabilityVerdict(c, tr, det)


def certify_cycle(
    ctx: MapContext,
    orbit: OrbitEnclosure,
    max_splits: int = 40,
    floor: float = DEFAULT_SPLIT_FLOOR,
    settings: ContractionSettings = ContractionSettings(),
) -> StabilityVerdict:
    """Classify, splitting the widest enclosure while the answer is unclear.

    ``max_splits`` caps the total number of bisections for this cycle, which
    also bounds the depth.  Halves are re-contracted and dropped when they
    empty.  The cycle is hyperbolic only if every surviving leaf is; one
    elliptic leaf makes it an elliptic candidate.  If every half empties the
    enclosure holds no orbit and the verdict is vacuously hyperbolic.
    """
    unit_det = bool(ctx.s.symmetric)
    stack: list[tuple[OrbitEnclosure, int]] = [(orbit, 0)]
    trail: list[tuple[int, Classification]] = []
    leaves: list[OrbitEnclosure] = []
    splits = 0
    termination = "certified"
    inconclusive = False
    tr_hull: Interval | None = None
    det_hull: Interval | None = None

    def finish(c: Classification) -> StabilityVerdict:
        return StabilityVerdict(
            c,
            tr_hull if tr_hull is not None else Interval(-float("inf"), float("inf")),
            det_hull if det_hull is not None else Interval(-float("inf"), float("inf")),
            splits,
            termination,
            trail,
            leaves,
        )

    while stack:
        o, depth = stack.pop()
        try:
            v = classify(monodromy(ctx, o), unit_det)
        except SingularImplicit:
            v = None
        if v is not None:
            trail.append((depth, v.classification))
            tr_hull = v.trace if tr_hull is None else tr_hull.hull(v.trace)
            det_hull = v.det if det_hull is None else det_hull.hull(v.det)
            if v.classification is Classification.HYPERBOLIC:
                leaves.append(o)
                continue
            if v.classification is Classification.ELLIPTIC:
                leaves.append(o)
                return finish(Classification.ELLIPTIC)
        if splits >= max_splits:
            termination = "max_splits"
            inconclusive = True
            leaves.append(o)
            continue
        try:
            left, right = split_widest(list(o.intervals), floor)
        except DegenerateSplit:
            termination = "split_floor" if v is not None else "singular"
            inconclusive = True
            leaves.append(o)
            continue
        splits += 1
        for half in (right, left):
            h = contract(ctx.s, OrbitEnclosure(tuple(half)), settings)
            if h.alive:
                stack.append((h, depth + 1))
    if inconclusive:
        log.info("cycle left inconclusive after %d splits (%s)", splits, termination)
        return finish(Classification.INCONCLUSIVE)
    if not leaves:
        termination = "empty"
    return finish(Classification.HYPERBOLIC)
