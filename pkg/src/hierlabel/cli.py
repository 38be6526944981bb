"""Command-line experiment runner.

    hierlabel run --config fig2.json --out results/
    hierlabel topo --family geometric --n 50 --radius 0.25 --seed 3
"""
from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .config import ConfigError, ScenarioConfig, load_scenario
from .sim import MetricsReport, SimulationError, metrics_csv, run
from .topology import Family, InvalidSpec, TopoSpec, generate

log = logging.getLogger("hierlabel")

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 1, 2


@dataclass
class RunOutcome:
    scenario: str
    seed: int
    metrics: Optional[MetricsReport] = None
    trace: Optional[str] = None
    labels: Optional[dict] = None
    error: Optional[str] = None


def run_one(scenario: ScenarioConfig, seed: int, want_trace: bool = False) -> RunOutcome:
    try:
        topology = scenario.build_topology(seed)
        result = run(topology, scenario, seed, trace=want_trace)
    except (SimulationError, ConfigError) as exc:
        return RunOutcome(scenario.name, seed, error=f"{type(exc).__name__}: {exc}")
    labels = {n: [str(l) for l in ls] for n, ls in result.labels.items()}
    return RunOutcome(
        scenario.name, seed, result.metrics,
        result.trace_text() if want_trace else None, labels,
    )


def _star(args):
    return run_one(*args)


def summarize(outcomes: list[RunOutcome]) -> dict:
    by_scenario: dict[str, list[MetricsReport]] = {}
    for o in outcomes:
        if o.metrics is not None:
            by_scenario.setdefault(o.scenario, []).append(o.metrics)
    summary = {}
    for name, reports in by_scenario.items():
        conv = [m.convergence_time for m in reports]
        tx_per_node = [m.total_tx / max(len(m.tx_count), 1) for m in reports]
        tables = [t for m in reports for t in m.table_size_per_node.values()]
        summary[name] = {
            "runs": len(reports),
            "convergence_ms": {"mean": statistics.fmean(conv), "min": min(conv), "max": max(conv)},
            "tx_per_node": {"mean": statistics.fmean(tx_per_node), "min": min(tx_per_node), "max": max(tx_per_node)},
            "table_size": {
                "mean": statistics.fmean(tables) if tables else 0.0,
                "min": min(tables, default=0),
                "max": max(tables, default=0),
            },
            "frames_delivered": sum(m.frames_delivered for m in reports),
            "frames_dropped": sum(m.frames_dropped for m in reports),
        }
    return summary


def execute(scenarios: list[ScenarioConfig], out_dir: Path, fmt: str = "csv",
            trace_path: Optional[Path] = None, jobs: int = 1, quiet: bool = False) -> int:
    tasks = [(sc, seed, trace_path is not None) for sc in scenarios for seed in sc.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_star, tasks))  # map keeps task order
    else:
        outcomes = [run_one(*t) for t in tasks]

    out_dir.mkdir(parents=True, exist_ok=True)
    ok = [o for o in outcomes if o.metrics is not None]
    if fmt == "csv":
        text = metrics_csv([o.metrics.csv_row(o.scenario, o.seed) for o in ok])
        (out_dir / "metrics.csv").write_text(text)
    else:
        rows = [{"scenario": o.scenario, "seed": o.seed, **o.metrics.to_dict()} for o in ok]
        (out_dir / "metrics.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    summary = summarize(outcomes)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if trace_path is not None:
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        with open(trace_path, "w") as fh:
            for o in ok:
                fh.write(f"# scenario={o.scenario} seed={o.seed}\n")
                fh.write(o.trace)

    failed = [o for o in outcomes if o.error]
    for o in failed:
        log.error("scenario %s seed %d failed: %s", o.scenario, o.seed, o.error)
    if not quiet:
        for name, s in summary.items():
            c = s["convergence_ms"]
            print(
                f"{name}: {s['runs']} run(s), convergence mean={c['mean']:.1f} ms "
                f"min={c['min']} max={c['max']}, tx/node={s['tx_per_node']['mean']:.2f}, "
                f"table max={s['table_size']['max']}"
            )
        if len(ok) == 1 and len(ok[0].labels) <= 32:
            for node, labels in ok[0].labels.items():
                print(f"  node {node}: {{{', '.join(labels)}}}")
    return EXIT_RUN if failed else EXIT_OK


def cmd_run(args) -> int:
    scenarios = []
    try:
        for path in args.config:
            sc = load_scenario(path)
            if args.seed is not None:
                sc = sc.with_seeds([args.seed])
            scenarios.append(sc)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return execute(scenarios, Path(args.out), args.format,
                   Path(args.trace) if args.trace else None, args.jobs, args.quiet)


def cmd_topo(args) -> int:
    spec = TopoSpec(
        family=Family(args.family), n=args.n, gateways=args.gateways, seed=args.seed,
        base_delay=args.base_delay, jitter=args.jitter, arity=args.arity,
        width=args.width, height=args.height, p=args.p, radius=args.radius,
    )
    try:
        topo = generate(spec)
    except InvalidSpec as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    print(topo.dumps())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hierlabel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run scenario files across their seeds")
    p.add_argument("--config", action="append", required=True, help="scenario JSON (repeatable)")
    p.add_argument("--seed", type=int, help="run only this seed")
    p.add_argument("--trace", help="write event traces to this file")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    t = sub.add_parser("topo", help="print a generated topology as JSON")
    t.add_argument("--family", choices=[f.value for f in Family], required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--gateways", type=int, default=1)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--base-delay", type=int, default=10)
    t.add_argument("--jitter", type=int, default=0)
    t.add_argument("--arity", type=int, default=2)
    t.add_argument("--width", type=int)
    t.add_argument("--height", type=int)
    t.add_argument("--p", type=float)
    t.add_argument("--radius", type=float)
    t.set_defaults(func=cmd_topo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
        format="%(levelname)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
