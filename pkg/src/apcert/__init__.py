"""Rigorous enclosure and classification of periodic orbits of area-preserving maps.

The maps are defined implicitly by a polynomial generating function.  The
pipeline discretizes positions, builds a transition graph, enumerates its
cycles, contracts them with interval Newton and Krawczyk operators and
classifies the survivors from monodromy enclosures.
"""

from .contraction import OrbitEnclosure, Status, build_system, contract, krawczyk_pass, newton_pass
from .cycles import CandidateCycle, enumerate_cycles, period_subgraph
from .errors import APCertError
from .genfunc import GeneratingFunction, check_symmetry, henon, load_from_file, parse_map
from .graph import (
    Partition,
    TransitionGraph,
    build_graph,
    invariant_cover_area,
    reduce_graph,
    refine,
    three_point_solve,
)
from .implicit_map import MapContext, backward, derivative, forward, solve_y
from .interval import Interval, IntervalArray, IntervalBox, IntervalMatrix2, split_widest
from .pipeline import RunConfig, bootstrap_domain, load_config, run_certification, run_measure_study
from .stability import Classification, StabilityVerdict, certify_cycle, classify, monodromy

__all__ = [
    "APCertError", "CandidateCycle", "Classification", "GeneratingFunction", "Interval",
    "IntervalArray", "IntervalBox", "IntervalMatrix2", "MapContext", "OrbitEnclosure",
    "Partition", "RunConfig", "StabilityVerdict", "Status", "TransitionGraph",
    "backward", "bootstrap_domain", "build_graph", "build_system", "certify_cycle",
    "check_symmetry", "classify", "contract", "derivative", "enumerate_cycles", "forward",
    "henon", "invariant_cover_area", "krawczyk_pass", "load_config", "load_from_file",
    "monodromy", "newton_pass", "parse_map", "period_subgraph", "reduce_graph", "refine",
    "run_certification", "run_measure_study", "solve_y", "split_widest", "three_point_solve",
]
