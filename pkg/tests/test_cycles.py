from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apcert.cycles import (
    CandidateCycle,
    canonical_rotation,
    count_closed_walks,
    cycle_counts,
    enumerate_cycles,
    period_subgraph,
    rotation_period,
)
from apcert.errors import ResourceLimit
from apcert.graph import TransitionGraph

from oracles import brute_canonical_cycles, closed_walks, random_graph, rotations

TWO = TransitionGraph.from_pairs([(0, 1), (1, 0)], [(0, 1, 0), (1, 0, 1)])
LOOP = TransitionGraph.from_pairs([(2, 2)], [(2, 2, 2)])
TRIANGLE = TransitionGraph.from_pairs([(0, 1), (1, 2), (2, 0)], [(0, 1, 2), (1, 2, 0), (2, 0, 1)])


def test_period_subgraph_parity():
    assert period_subgraph(TWO, 2).node_set() == TWO.node_set()
    assert period_subgraph(TWO, 4).n_edges == 2
    assert period_subgraph(TWO, 3).n_nodes == 0


def test_period_subgraph_self_loop():
    for n in (1, 2, 5, 9):
        assert period_subgraph(LOOP, n).node_set() == {(2, 2)}


def test_enumerate_examples():
    assert [c.positions for c in enumerate_cycles(TWO, 2)] == [(0, 1)]
    assert [c.positions for c in enumerate_cycles(TRIANGLE, 3)] == [(0, 1, 2)]
    assert list(enumerate_cycles(TRIANGLE, 2)) == []
    assert [c.positions for c in enumerate_cycles(LOOP, 3)] == [(2, 2, 2)]


def test_repeated_node_walks_are_kept():
    # figure-eight through (0, 0): loops of length 1 and 2 combine into length 3
    g = TransitionGraph.from_pairs(
        [(0, 0), (0, 1), (1, 0)], [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]
    )
    got = sorted(c.positions for c in enumerate_cycles(g, 3))
    assert got == [(0, 0, 0), (0, 0, 1)]
    assert count_closed_walks(g, 3) == cycle_counts(enumerate_cycles(g, 3))[1]


def test_multiplicity():
    assert CandidateCycle((0, 1, 0, 1)).multiplicity == 2
    assert CandidateCycle((3,)).multiplicity == 1
    assert CandidateCycle((0, 1, 2)).nodes == [(0, 1), (1, 2), (2, 0)]
    with pytest.raises(ValueError):
        CandidateCycle(())


def test_resource_limit():
    with pytest.raises(ResourceLimit):
        list(enumerate_cycles(LOOP, 1, max_cycles=0))


@given(st.lists(st.integers(0, 4), min_size=1, max_size=9))
def test_rotation_helpers(p):
    p = tuple(p)
    c = canonical_rotation(p)
    assert c == min(rotations(list(p)))
    d = rotation_period(p)
    assert p[d:] + p[:d] == p and len(p) % d == 0
    assert len(set(rotations(list(p)))) == d


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 6))
def test_enumeration_matches_brute_force(seed, n_cells, n):
    rng = random.Random(seed)
    nodes, edges = random_graph(rng, n_cells, rng.randint(1, n_cells * n_cells), 0.5)
    g = TransitionGraph.from_pairs(nodes, edges, n_cells)
    cycles = list(enumerate_cycles(g, n))
    got = [c.positions for c in cycles]
    assert len(got) == len(set(got))
    assert set(got) == brute_canonical_cycles(nodes, edges, n)
    assert cycle_counts(cycles)[1] == len(closed_walks(nodes, edges, n)) == count_closed_walks(g, n)
    sub = period_subgraph(g, n)
    used = {v for c in cycles for v in c.nodes}
    assert sub.node_set() == used


def test_worker_count_does_not_change_output():
    rng = random.Random(5)
    nodes, edges = random_graph(rng, 9, 60, 0.4)
    g = TransitionGraph.from_pairs(nodes, edges, 9)
    serial = list(enumerate_cycles(g, 5))
    assert serial == list(enumerate_cycles(g, 5, workers=2))
    assert serial == sorted(serial)
