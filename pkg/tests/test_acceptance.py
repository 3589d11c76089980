"""Acceptance criteria, each at its stated size and tolerance.

Expensive shared work (the a=1 certification run and the dense-grid orbit
oracle) lives in session fixtures.  A summary line per criterion is printed
at the end of the run by ``conftest.py``.
"""

from __future__ import annotations

import os
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from apcert.contraction import OrbitEnclosure, build_system
from apcert.cycles import count_closed_walks, enumerate_cycles
from apcert.genfunc import GeneratingFunction, henon, load_from_file
from apcert.graph import Partition, TransitionGraph, build_graph, reduce_graph
from apcert.implicit_map import MapContext
from apcert.interval import Interval, IntervalArray
from apcert.pipeline import RunConfig, bootstrap_domain, run_certification, run_measure_study, survivors_by_period
from apcert.stability import Classification, certify_cycle, monodromy

from oracles import (
    brute_canonical_cycles,
    cells_containing,
    closed_walks,
    exact_triples,
    float_segments,
    grid_newton_orbits,
    inside,
    naive_reduce,
    polish_orbit,
    random_graph,
    rotations,
)

MAX_PERIOD = 6
N = 400


def _fraction(v: mpmath.mpf) -> Fraction:
    # man_exp drops the sign, so read the raw tuple
    sign, man, exp, _ = v._mpf_
    return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** exp


# ---------------------------------------------------------------------------
# shared runs


@pytest.fixture(scope="session")
def domain_a1() -> Interval:
    return bootstrap_domain(RunConfig(map_file="henon:1.0"))


@pytest.fixture(scope="session")
def report_a1(domain_a1):
    cfg = RunConfig(
        map_file="henon:1.0",
        position_domain=domain_a1,
        nominal_discretization=N,
        max_period=MAX_PERIOD,
    )
    return run_certification(cfg, write=False)


@pytest.fixture(scope="session")
def oracle_orbits(domain_a1):
    """Polished period-n position vectors for n <= 6, found by grid Newton."""
    out = {}
    for n in range(1, MAX_PERIOD + 1):
        raw = grid_newton_orbits(1.0, n, domain_a1.lo, domain_a1.hi, step=1e-3, dedup=1e-6)
        out[n] = [polish_orbit(1.0, v) for v in raw]
    return out


# ---------------------------------------------------------------------------
# 1


@pytest.mark.acceptance(1)
def test_hyperbolic_fixed_point(report_a1):
    with mpmath.workdps(40):
        xs = (mpmath.sqrt(5) - 1) / 2
        trace = -4 * xs
    period1 = survivors_by_period(report_a1)[1]
    hits = [sv for sv in period1 if inside(sv.enclosure.intervals[0].lo, sv.enclosure.intervals[0].hi, xs)]
    assert len(hits) == 1
    (sv,) = hits
    iv = sv.enclosure.intervals[0]
    assert iv.width <= 1e-8
    assert sv.verdict.classification is Classification.HYPERBOLIC
    assert inside(sv.verdict.trace.lo, sv.verdict.trace.hi, trace)
    assert sv.verdict.trace.width < 1e-6


# ---------------------------------------------------------------------------
# 2


@pytest.mark.acceptance(2)
def test_elliptic_fixed_point(tmp_path):
    report = run_certification(
        RunConfig(map_file="henon:0.3", nominal_discretization=N, output_dir=str(tmp_path))
    )
    with mpmath.workdps(40):
        xs = (-1 + mpmath.sqrt(mpmath.mpf(22) / 10)) / (mpmath.mpf(6) / 10)
    elliptic = report.of_class(Classification.ELLIPTIC)
    hits = [sv for sv in elliptic if inside(sv.enclosure.intervals[0].lo, sv.enclosure.intervals[0].hi, xs)]
    assert len(hits) == 1
    tr = hits[0].verdict.trace
    assert -2.0 < tr.lo and tr.hi < 2.0
    assert report.claim is None
    assert "claim: refused" in (tmp_path / "summary.txt").read_text()


# ---------------------------------------------------------------------------
# 3


@pytest.mark.acceptance(3)
def test_parabolic_period_two(report_a1):
    ctx = MapContext(henon(1.0))
    point = OrbitEnclosure((Interval(0.0), Interval(1.0)))
    m = monodromy(ctx, point)
    assert m.contains(np.array([[-1.0, 4.0], [0.0, -1.0]]))
    assert m.trace().contains(-2.0)

    on_orbit = [
        sv for sv in survivors_by_period(report_a1)[2]
        if any(sv.enclosure.contains(r) for r in ([0.0, 1.0], [1.0, 0.0]))
    ]
    assert len(on_orbit) == 1
    starts = [on_orbit[0].enclosure, OrbitEnclosure((Interval(-0.02, 0.01), Interval(0.99, 1.03)))]
    max_splits = 40
    for enc in starts:
        v = certify_cycle(ctx, enc, max_splits=max_splits)
        assert v.classification is Classification.INCONCLUSIVE
        assert v.trace.contains(-2.0)
        assert v.trail and all(c is Classification.INCONCLUSIVE for _, c in v.trail)
        assert v.termination in ("split_floor", "max_splits")
        assert v.splits_used <= max_splits
    assert on_orbit[0].verdict.classification is Classification.INCONCLUSIVE


# ---------------------------------------------------------------------------
# 4


@pytest.mark.acceptance(4)
def test_orbit_completeness(report_a1, oracle_orbits):
    by_period = survivors_by_period(report_a1)
    missing = []
    for n in range(1, MAX_PERIOD + 1):
        assert oracle_orbits[n], f"oracle found nothing for n={n}"
        encs = [sv.enclosure for sv in by_period.get(n, [])]
        for orbit in oracle_orbits[n]:
            ok = any(
                all(inside(iv.lo, iv.hi, v) for iv, v in zip(e.intervals, rot))
                for e in encs
                for rot in rotations(list(orbit))
            )
            if not ok:
                missing.append((n, [float(v) for v in orbit]))
    assert not missing, missing


# ---------------------------------------------------------------------------
# 5


@pytest.mark.acceptance(5)
def test_measure_monotone(domain_a1, tmp_path):
    cfg = RunConfig(
        map_file="henon:1.0",
        position_domain=domain_a1,
        nominal_discretization=N,
        refinement_levels=6,
        output_dir=str(tmp_path),
    )
    report = run_measure_study(cfg)
    areas = [r.enclosed_area for r in report.rows]
    assert [r.nominal_discretization for r in report.rows] == [N * 2**k for k in range(6)]
    assert all(b <= a for a, b in zip(areas, areas[1:])), areas


@pytest.mark.acceptance(5)
def test_shadowing(domain_a1, oracle_orbits):
    lo, hi = domain_a1.lo, domain_a1.hi
    ctx = MapContext(henon(1.0))
    p = Partition.uniform(domain_a1, N)
    g = build_graph(ctx, p)
    edges = {tuple(e) for e in g.edges.tolist()}
    segs = float_segments(1.0, lo, hi, 10_000, 12, np.random.default_rng(2024))
    assert len(segs) == 10_000
    checked = 0
    for seg in segs:
        for x, y, z in exact_triples(1.0, seg):
            if not (Fraction(lo) <= z <= Fraction(hi)):
                continue
            ii = cells_containing(p.lo, p.hi, x)
            jj = cells_containing(p.lo, p.hi, y)
            kk = cells_containing(p.lo, p.hi, z)
            assert any((i, j, k) in edges for i in ii for j in jj for k in kk), (x, y, z)
            checked += 1
    assert checked > 10_000

    # full periodic orbits inside the domain survive reduction, edges included
    red = reduce_graph(g)
    red_edges = {tuple(e) for e in red.edges.tolist()}
    for n, orbits in oracle_orbits.items():
        for orbit in orbits:
            cells = [cells_containing(p.lo, p.hi, _fraction(v)) for v in orbit]
            for t in range(n):
                a, b, c = cells[t], cells[(t + 1) % n], cells[(t + 2) % n]
                assert any((i, j, k) in red_edges for i in a for j in b for k in c)


# ---------------------------------------------------------------------------
# 6


def _nested_pairs(rng, m, positive=False):
    """Random intervals A and sub-intervals A' of A, as endpoint arrays."""
    a = rng.uniform(0.1, 10, (m, 2)) if positive else rng.uniform(-10, 10, (m, 2))
    a.sort(axis=1)
    t = np.sort(rng.uniform(0, 1, (m, 2)), axis=1)
    sub_lo = a[:, 0] + t[:, 0] * (a[:, 1] - a[:, 0])
    sub_hi = a[:, 0] + t[:, 1] * (a[:, 1] - a[:, 0])
    sub_hi = np.maximum(sub_lo, np.minimum(sub_hi, a[:, 1]))
    return IntervalArray(a[:, 0], a[:, 1]), IntervalArray(sub_lo, sub_hi)


@pytest.mark.acceptance(6)
def test_interval_monotonicity():
    rng = np.random.default_rng(6)
    m = 100_000
    A, A2 = _nested_pairs(rng, m)
    B, B2 = _nested_pairs(rng, m)
    P, P2 = _nested_pairs(rng, m, positive=True)
    for big, small in (
        (A + B, A2 + B2), (A - B, A2 - B2), (A * B, A2 * B2), (A / P, A2 / P2), (A.sqr(), A2.sqr())
    ):
        assert np.all(big.lo <= small.lo) and np.all(small.hi <= big.hi)

    # scalar intervals on the same number of cases
    ops = [lambda a, b: a + b, lambda a, b: a - b, lambda a, b: a * b, lambda a, b: a / b]
    for k in range(m):
        op = ops[k % 4]
        b_big = P.item(k) if k % 4 == 3 else B.item(k)
        b_small = P2.item(k) if k % 4 == 3 else B2.item(k)
        assert op(A.item(k), b_big).contains(op(A2.item(k), b_small))

    # generating-function evaluation on the same nested boxes, scaled into the disk
    s = GeneratingFunction({(0, 0): -0.3, (1, 0): 1.0, (2, 1): 0.4, (1, 3): -0.2, (0, 2): 0.7},
                           center=0.5, radius=1.6, ball_radius=1e-9)
    X, X2 = (IntervalArray(v.lo / 10 * 0.7 + 0.5, v.hi / 10 * 0.7 + 0.5) for v in (A, A2))
    Y, Y2 = (IntervalArray(v.lo / 10 * 0.7 + 0.5, v.hi / 10 * 0.7 + 0.5) for v in (B, B2))
    for fn in (s.eval, s.d1, s.d2):
        big, small = fn(X, Y), fn(X2, Y2)
        assert np.all(big.lo <= small.lo) and np.all(small.hi <= big.hi)


@pytest.mark.acceptance(6)
def test_reduce_idempotent_and_order_independent():
    rng = random.Random(61)
    sizes = [10, 50, 200, 500, 1000, 1000, 800, 1000]
    for size in sizes:
        cells = max(4, int(size**0.5) + 4)
        nodes, edges = random_graph(rng, cells, size, 1.6 / cells)
        assert len(nodes) <= 1000
        g = TransitionGraph.from_pairs(nodes, edges, cells)
        r = reduce_graph(g)
        again = reduce_graph(r)
        assert again.node_set() == r.node_set() and again.edge_set() == r.edge_set()
        # same answer for a shuffled input and for two different removal orders
        nl, el = list(nodes), list(edges)
        rng.shuffle(nl)
        rng.shuffle(el)
        shuffled = reduce_graph(TransitionGraph.from_pairs(nl, el, cells))
        assert shuffled.node_set() == r.node_set()
        for seed in (1, 2):
            n_ref, e_ref = naive_reduce(nodes, edges, random.Random(seed))
            assert r.node_set() == n_ref
            assert {(a, b, c) for (a, b), (_, c) in r.edge_set()} == e_ref


@pytest.mark.acceptance(6)
def test_cycle_uniqueness_against_brute_force():
    rng = random.Random(62)
    for trial in range(60):
        cells = rng.randint(2, 8)
        size = rng.randint(1, min(30, cells * cells))
        nodes, edges = random_graph(rng, cells, size, rng.uniform(0.2, 0.7))
        g = TransitionGraph.from_pairs(nodes, edges, cells)
        for n in range(1, 9):
            cycles = [c.positions for c in enumerate_cycles(g, n)]
            assert len(cycles) == len(set(cycles))
            assert all(c == min(rotations(list(c))) for c in cycles)
            assert set(cycles) == brute_canonical_cycles(nodes, edges, n)
            walks = closed_walks(nodes, edges, n)
            assert sum(len(set(rotations(list(c)))) for c in cycles) == len(walks) == count_closed_walks(g, n)


def _random_symmetric(rng: np.random.Generator) -> GeneratingFunction:
    """s(x, y) = integral of a symmetric polynomial P(t, y) dt plus g(y)."""
    d = int(rng.integers(1, 5))
    p = rng.normal(size=(d, d))
    p = (p + p.T) / 2
    coeffs = {}
    for i in range(d):
        for j in range(d):
            coeffs[(i + 1, j)] = Interval(float(p[i, j])) / Interval(float(i + 1))
    for j in range(int(rng.integers(0, 4))):
        coeffs[(0, j)] = float(rng.normal())
    ball = float(rng.choice([0.0, 1e-6]))
    return GeneratingFunction(coeffs, center=0.5, radius=1.6, ball_radius=ball)


@pytest.mark.acceptance(6)
def test_dz_symmetry():
    rng = np.random.default_rng(63)
    for _ in range(40):
        s = _random_symmetric(rng)
        assert s.symmetric
        _, dz = build_system(s)
        for n in range(1, 11):
            lo = rng.uniform(-1.0, 1.9, (25, n))
            w = rng.choice([0.0, 1e-9, 1e-3, 0.1], size=(25, n))
            m = dz(IntervalArray(lo, lo + w))
            assert np.array_equal(m.lo, np.swapaxes(m.lo, 1, 2))
            assert np.array_equal(m.hi, np.swapaxes(m.hi, 1, 2))


# ---------------------------------------------------------------------------
# 7 (needs the external coefficient file)

TABLE1_ROW_400 = 0.3742
# n: (nodes, edges, b_n, floor(b_n / n), h_n)
TABLE2 = {
    1: (1, 1, 1, 1, 1),
    2: (15, 27, 15, 7, 2),
    3: (15, 28, 22, 7, 3),
    4: (146, 425, 419, 104, 5),
    5: (52, 92, 206, 41, 3),
    6: (167, 385, 1938, 323, 8),
    7: (117, 234, 1807, 258, 3),
    8: (1663, 5336, 212547, 26568, 29),
}
FIXED_POINT_DOMAIN = Interval(-0.55, 1.13)


@pytest.fixture(scope="module")
def fixed_point_map() -> str:
    path = os.environ.get("APCERT_FIXED_POINT_MAP")
    if not path or not os.path.exists(path):
        pytest.skip("APCERT_FIXED_POINT_MAP does not name a coefficient file")
    load_from_file(path)
    return path


@pytest.mark.acceptance(7)
def test_fixed_point_area_row(fixed_point_map, tmp_path):
    cfg = RunConfig(
        map_file=fixed_point_map,
        position_domain=FIXED_POINT_DOMAIN,
        nominal_discretization=400,
        refinement_levels=1,
        output_dir=str(tmp_path),
    )
    (row,) = run_measure_study(cfg).rows
    assert abs(row.enclosed_area - TABLE1_ROW_400) <= 0.05 * TABLE1_ROW_400


@pytest.mark.acceptance(7)
def test_fixed_point_period_counts(fixed_point_map, tmp_path):
    cfg = RunConfig(
        map_file=fixed_point_map,
        position_domain=FIXED_POINT_DOMAIN,
        nominal_discretization=3200,
        max_period=8,
        worker_count=os.cpu_count() or 1,
        output_dir=str(tmp_path),
    )
    rows = {r.n: r for r in run_certification(cfg).periods}
    r1 = rows[1]
    assert (r1.nodes, r1.edges, r1.b_n, r1.b_n // 1, r1.h_n) == TABLE2[1]
    for n, (_, _, b, fl, h) in TABLE2.items():
        r = rows[n]
        assert (r.b_n, r.b_n // n, r.h_n) == (b, fl, h), n
