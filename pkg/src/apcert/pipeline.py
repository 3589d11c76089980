"""End-to-end runs: domain bootstrap, measure study and orbit certification."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .contraction import ContractionSettings, OrbitEnclosure, batch_from_cycles, enclosures_from_batch, contract_batch
from .cycles import CandidateCycle, enumerate_cycles, period_subgraph
from .errors import EmptyInvariantSet, ParseError, ResourceLimit
from .genfunc import GeneratingFunction, resolve_map
from .graph import Partition, TransitionGraph, build_graph, invariant_cover_area, reduce_graph, refine
from .implicit_map import MapContext
from .interval import DEFAULT_SPLIT_FLOOR, Interval
from .stability import Classification, StabilityVerdict, certify_cycle

log = logging.getLogger(__name__)

# cycles contracted together in one vectorised batch
_BATCH = 4096


@dataclass
class RunConfig:
    map_file: str = "henon:1.0"
    position_domain: Interval | None = None
    nominal_discretization: int = 400
    max_period: int = 1
    refinement_levels: int = 6
    max_splits: int = 40
    worker_count: int = 1
    max_cycles: int | None = None
    time_budget: float | None = None
    output_dir: str = "apcert-out"
    bootstrap_discretization: int = 100
    bootstrap_start: Interval | None = None
    bootstrap_max_iterations: int = 10
    momentum_bound: Interval | None = None
    newton_sweeps: int = 20
    krawczyk_iterations: int = 30
    split_floor: float = DEFAULT_SPLIT_FLOOR

    def __post_init__(self):
        if self.nominal_discretization < 1:
            raise ValueError("nominal_discretization must be at least 1")
        if self.max_period < 1:
            raise ValueError("max_period must be at least 1")
        if self.refinement_levels < 0:
            raise ValueError("refinement_levels must be nonnegative")

    @property
    def contraction(self) -> ContractionSettings:
        return ContractionSettings(self.newton_sweeps, self.krawczyk_iterations)

    def generating_function(self) -> GeneratingFunction:
        return resolve_map(self.map_file)

    def context(self) -> MapContext:
        return MapContext(self.generating_function())


def parse_interval(text: str) -> Interval:
    parts = text.replace("[", " ").replace("]", " ").replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(f"expected two endpoints, got {text!r}")
    return Interval(float(parts[0]), float(parts[1]))


def _optional(conv):
    def parse(text: str):
        if text.strip().lower() in ("", "none"):
            return None
        return conv(text)

    return parse


_CONVERTERS = {
    "map_file": str,
    "position_domain": _optional(parse_interval),
    "nominal_discretization": int,
    "max_period": int,
    "refinement_levels": int,
    "max_splits": int,
    "worker_count": int,
    "max_cycles": _optional(int),
    "time_budget": _optional(float),
    "output_dir": str,
    "bootstrap_discretization": int,
    "bootstrap_start": _optional(parse_interval),
    "bootstrap_max_iterations": int,
    "momentum_bound": _optional(parse_interval),
    "newton_sweeps": int,
    "krawczyk_iterations": int,
    "split_floor": float,
}


def parse_config(text: str, base_dir: str | os.PathLike | None = None, **overrides) -> RunConfig:
    """Read ``key = value`` lines; ``#`` starts a comment.

    A relative ``map_file`` is resolved against ``base_dir``.  Keyword
    overrides (already converted values) win over the file.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    mf = values.get("map_file")
    if base_dir is not None and isinstance(mf, str) and not mf.startswith("henon:"):
        mf = os.path.expandvars(mf)
        if not os.path.isabs(mf):
            mf = os.path.join(base_dir, mf)
        values["map_file"] = mf
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def load_config(path: str | os.PathLike, **overrides) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent, **overrides)


def config_text(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, Interval):
            v = f"[{float(v.lo)!r}, {float(v.hi)!r}]"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# domain bootstrap


def _start_domain(cfg: RunConfig, s: GeneratingFunction) -> Interval:
    if cfg.bootstrap_start is not None:
        return cfg.bootstrap_start
    if cfg.position_domain is not None:
        return cfg.position_domain
    lo = math.nextafter(s.center - s.radius, math.inf)
    hi = math.nextafter(s.center + s.radius, -math.inf)
    return Interval(lo, hi)


def bootstrap_domain(cfg: RunConfig, ctx: MapContext | None = None) -> Interval:
    """Shrink the position interval to the hull of the reduced coarse graph until it stabilizes."""
    ctx = ctx or cfg.context()
    domain = _start_domain(cfg, ctx.s)
    for it in range(cfg.bootstrap_max_iterations):
        p = Partition.uniform(domain, cfg.bootstrap_discretization)
        g = reduce_graph(build_graph(ctx, p, cfg.momentum_bound, cfg.worker_count))
        hull = p.hull_of(g.cells_used())
        if hull is None:
            raise EmptyInvariantSet(f"every orbit leaves {domain}")
        log.info("bootstrap %d: %s -> %s", it, domain, hull)
        if hull == domain:
            break
        domain = hull
    return domain


def working_domain(cfg: RunConfig, ctx: MapContext) -> Interval:
    return cfg.position_domain if cfg.position_domain is not None else bootstrap_domain(cfg, ctx)


# ---------------------------------------------------------------------------
# measure study


MEASURE_HEADER = ["nominal_discretization", "nodes", "enclosed_area", "improvement"]


@dataclass
class MeasureRow:
    nominal_discretization: int
    nodes: int
    enclosed_area: float
    improvement: float | None


@dataclass
class MeasureReport:
    domain: Interval | None
    rows: list[MeasureRow] = field(default_factory=list)

    def to_csv(self) -> str:
        out = []
        for r in self.rows:
            imp = "-" if r.improvement is None else f"{r.improvement:.4f}"
            out.append([r.nominal_discretization, r.nodes, repr(r.enclosed_area), imp])
        return _csv(MEASURE_HEADER, out)


def run_measure_study(cfg: RunConfig, write: bool = True) -> MeasureReport:
    """Cover areas of the invariant set for successive bisections of the partition."""
    ctx = cfg.context()
    if cfg.refinement_levels == 0:
        report = MeasureReport(None)
    else:
        domain = working_domain(cfg, ctx)
        report = MeasureReport(domain)
        p = Partition.uniform(domain, cfg.nominal_discretization)
        g = reduce_graph(build_graph(ctx, p, cfg.momentum_bound, cfg.worker_count))
        prev = None
        for level in range(cfg.refinement_levels):
            if level:
                g, p = refine(ctx, g, p, cfg.momentum_bound, cfg.worker_count)
            area = invariant_cover_area(ctx, g, p)
            nominal = cfg.nominal_discretization * 2**level
            imp = prev / area if prev is not None and area > 0.0 else None
            report.rows.append(MeasureRow(nominal, g.n_nodes, area, imp))
            log.info("measure level %d: N=%d nodes=%d area=%.6g", level, nominal, g.n_nodes, area)
            prev = area
    if write:
        _write(Path(cfg.output_dir) / "measure.csv", report.to_csv())
    return report


# ---------------------------------------------------------------------------
# certification


PERIOD_HEADER = [
    "n", "nodes", "edges", "b_n", "floor_b_n_over_n", "h_n",
    "cycles", "hyperbolic", "elliptic", "inconclusive", "resource_limit",
]
VERDICT_HEADER = ["period", "cycle_id", "classification", "trace_lo", "trace_hi", "splits_used"]


@dataclass
class Survivor:
    period: int
    cycle_id: int
    cycle: CandidateCycle
    enclosure: OrbitEnclosure
    verdict: StabilityVerdict


@dataclass
class PeriodRow:
    n: int
    nodes: int
    edges: int
    b_n: int
    h_n: int
    cycles: int
    hyperbolic: int = 0
    elliptic: int = 0
    inconclusive: int = 0
    resource_limit: bool = False

    @property
    def clean(self) -> bool:
        return not (self.elliptic or self.inconclusive or self.resource_limit)


@dataclass
class CertificationReport:
    domain: Interval
    graph_nodes: int
    graph_edges: int
    max_period: int
    periods: list[PeriodRow] = field(default_factory=list)
    survivors: list[Survivor] = field(default_factory=list)

    @property
    def certified_below(self) -> int:
        """Largest P such that every period < P is fully certified hyperbolic."""
        for row in self.periods:
            if not row.clean:
                return row.n
        return self.max_period + 1

    @property
    def claim(self) -> str | None:
        """The no-elliptic-islands statement, or None when the run does not support it."""
        if self.certified_below <= self.max_period:
            return None
        return f"no elliptic islands of period less than {self.certified_below}"

    def of_class(self, c: Classification) -> list[Survivor]:
        return [sv for sv in self.survivors if sv.verdict.classification is c]

    def periods_csv(self) -> str:
        rows = [
            [r.n, r.nodes, r.edges, r.b_n, r.b_n // r.n, r.h_n, r.cycles,
             r.hyperbolic, r.elliptic, r.inconclusive, int(r.resource_limit)]
            for r in self.periods
        ]
        return _csv(PERIOD_HEADER, rows)

    def verdicts_csv(self) -> str:
        rows = [
            [sv.period, sv.cycle_id, sv.verdict.classification.value,
             repr(float(sv.verdict.trace.lo)), repr(float(sv.verdict.trace.hi)), sv.verdict.splits_used]
            for sv in self.survivors
        ]
        return _csv(VERDICT_HEADER, rows)

    def summary(self) -> str:
        lines = [
            f"domain [{float(self.domain.lo)!r}, {float(self.domain.hi)!r}]",
            f"graph {self.graph_nodes} nodes {self.graph_edges} edges",
            f"periods checked 1..{self.max_period}",
            f"all periods below {self.certified_below} certified hyperbolic",
        ]
        if self.claim:
            lines.append(f"claim: {self.claim}")
        else:
            lines.append("claim: refused (see listed cycles)")
        for r in self.periods:
            if r.resource_limit:
                lines.append(f"period {r.n}: resource limit reached, enumeration incomplete")
        for label, c in (("elliptic candidate", Classification.ELLIPTIC),
                         ("inconclusive", Classification.INCONCLUSIVE)):
            for sv in self.of_class(c):
                pos = " ".join(f"[{float(iv.lo)!r}, {float(iv.hi)!r}]" for iv in sv.enclosure.intervals)
                lines.append(
                    f"{label}: period {sv.period} cycle {sv.cycle_id} trace "
                    f"[{float(sv.verdict.trace.lo)!r}, {float(sv.verdict.trace.hi)!r}] positions {pos}"
                )
        return "\n".join(lines) + "\n"


def _certify_period(
    cfg: RunConfig,
    ctx: MapContext,
    g: TransitionGraph,
    p: Partition,
    n: int,
    report: CertificationReport,
) -> None:
    t0 = time.monotonic()
    sg = period_subgraph(g, n)
    row = PeriodRow(n, sg.n_nodes, sg.n_edges, 0, 0, 0)
    stream = enumerate_cycles(sg, n, cfg.worker_count, cfg.max_cycles, cfg.time_budget)
    pending: list[CandidateCycle] = []
    ids = 0

    def flush():
        nonlocal ids
        if not pending:
            return
        batch, alive = contract_batch(ctx.s, batch_from_cycles(p, pending), cfg.contraction)
        for cyc, enc in zip(pending, enclosures_from_batch(batch, alive)):
            cid = ids
            ids += 1
            if not enc.alive:
                continue
            v = certify_cycle(ctx, enc, cfg.max_splits, cfg.split_floor, cfg.contraction)
            if v.termination == "empty":
                # every split half contracted away: no orbit after all
                continue
            row.h_n += 1
            if v.classification is Classification.HYPERBOLIC:
                row.hyperbolic += 1
            elif v.classification is Classification.ELLIPTIC:
                row.elliptic += 1
            else:
                row.inconclusive += 1
            report.survivors.append(Survivor(n, cid, cyc, enc, v))
        pending.clear()

    try:
        for cyc in stream:
            row.cycles += 1
            row.b_n += cyc.multiplicity
            pending.append(cyc)
            if len(pending) >= _BATCH:
                flush()
    except ResourceLimit as exc:
        log.warning("period %d: %s", n, exc)
        row.resource_limit = True
    flush()
    report.periods.append(row)
    log.info(
        "period %d: %d nodes, %d edges, b_n=%d, h_n=%d (%.2fs)",
        n, row.nodes, row.edges, row.b_n, row.h_n, time.monotonic() - t0,
    )


def run_certification(cfg: RunConfig, write: bool = True) -> CertificationReport:
    """Enclose and classify every periodic orbit of period up to ``max_period``."""
    ctx = cfg.context()
    domain = working_domain(cfg, ctx)
    p = Partition.uniform(domain, cfg.nominal_discretization)
    g = reduce_graph(build_graph(ctx, p, cfg.momentum_bound, cfg.worker_count))
    report = CertificationReport(domain, g.n_nodes, g.n_edges, cfg.max_period)
    for n in range(1, cfg.max_period + 1):
        _certify_period(cfg, ctx, g, p, n, report)
    if write:
        out = Path(cfg.output_dir)
        _write(out / "periods.csv", report.periods_csv())
        _write(out / "verdicts.csv", report.verdicts_csv())
        _write(out / "summary.txt", report.summary())
    return report


def survivors_by_period(report: CertificationReport) -> dict[int, list[Survivor]]:
    out: dict[int, list[Survivor]] = {}
    for sv in report.survivors:
        out.setdefault(sv.period, []).append(sv)
    return out


def enclosure_array(survivors: list[Survivor]) -> tuple[np.ndarray, np.ndarray]:
    """(lo, hi) arrays of shape (len, n) for survivors of one period."""
    lo = np.array([[iv.lo for iv in sv.enclosure.intervals] for sv in survivors])
    hi = np.array([[iv.hi for iv in sv.enclosure.intervals] for sv in survivors])
    return lo, hi
