"""Command line entry point: ``apcert <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import APCertError, EmptyInvariantSet
from .graph import Partition, build_graph, dump_graph, reduce_graph
from .pipeline import (
    RunConfig,
    parse_interval,
    bootstrap_domain,
    load_config,
    run_certification,
    run_measure_study,
    working_domain,
)

log = logging.getLogger("apcert")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--map", dest="map_file", help="map file path or henon:A")
    p.add_argument("--domain", dest="position_domain", type=parse_interval,
                   help="position interval, e.g. '[-0.55, 1.13]'; bootstrapped when omitted")
    p.add_argument("-N", "--discretization", dest="nominal_discretization", type=int)
    p.add_argument("--max-period", type=int)
    p.add_argument("--levels", dest="refinement_levels", type=int)
    p.add_argument("--max-splits", type=int)
    p.add_argument("--workers", dest="worker_count", type=int)
    p.add_argument("--max-cycles", type=int)
    p.add_argument("--time-budget", type=float, help="seconds per period for cycle enumeration")
    p.add_argument("-o", "--output-dir")
    p.add_argument("-v", "--verbose", action="store_true")


_FIELDS = (
    "map_file", "position_domain", "nominal_discretization", "max_period",
    "refinement_levels", "max_splits", "worker_count", "max_cycles", "time_budget", "output_dir",
)


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k) for k in _FIELDS}
    if args.config:
        return load_config(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_bootstrap(cfg: RunConfig, args) -> int:
    try:
        d = bootstrap_domain(cfg)
    except EmptyInvariantSet as exc:
        print(f"empty invariant set: {exc}")
        return 0
    print(f"[{float(d.lo)!r}, {float(d.hi)!r}]")
    return 0


def _cmd_measure(cfg: RunConfig, args) -> int:
    report = run_measure_study(cfg)
    sys.stdout.write(report.to_csv())
    return 0


def _cmd_certify(cfg: RunConfig, args) -> int:
    report = run_certification(cfg)
    sys.stdout.write(report.periods_csv())
    sys.stdout.write(report.summary())
    return 0


def _reduced(cfg: RunConfig):
    ctx = cfg.context()
    domain = working_domain(cfg, ctx)
    p = Partition.uniform(domain, cfg.nominal_discretization)
    g = reduce_graph(build_graph(ctx, p, cfg.momentum_bound, cfg.worker_count))
    return ctx, g, p


def _cmd_graph_dump(cfg: RunConfig, args) -> int:
    _, g, p = _reduced(cfg)
    out = Path(args.out) if args.out else Path(cfg.output_dir) / "graph.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dump_graph(g, p))
    print(f"{g.n_nodes} nodes, {g.n_edges} edges -> {out}")
    return 0


def _cmd_plot(cfg: RunConfig, args) -> int:
    from .plotting import plot_cover

    ctx, g, p = _reduced(cfg)
    survivors = run_certification(cfg, write=False).survivors if args.cycles else ()
    out = Path(args.out) if args.out else Path(cfg.output_dir) / "cover.png"
    plot_cover(ctx, g, p, out, survivors, title=ctx.s.name)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apcert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
        ("bootstrap", _cmd_bootstrap, "find the invariant position interval"),
        ("measure", _cmd_measure, "area bounds under successive refinement"),
        ("certify", _cmd_certify, "enclose and classify periodic orbits"),
        ("graph-dump", _cmd_graph_dump, "write the reduced transition graph"),
        ("plot", _cmd_plot, "draw the invariant-set cover"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.set_defaults(func=fn)
        if name in ("graph-dump", "plot"):
            p.add_argument("--out", help="output file")
        if name == "plot":
            p.add_argument("--cycles", action="store_true", help="overlay certified cycles")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        cfg = _config(args)
        return args.func(cfg, args)
    except (APCertError, ValueError, OSError) as exc:
        print(f"apcert: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
