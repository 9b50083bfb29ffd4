"""Command-line entry point: simulate, sweep, fit, report.

Exit codes: 0 success, 1 invalid arguments or spec, 2 I/O failure,
3 a detection-rate ordering check failed.
"""
from __future__ import annotations

import argparse
import sys

from . import metrics
from .netsim import ConfigError, SimConfig, run

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_ORDERING = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clonedetect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="single run, one-row CSV plus a summary")
    sim.add_argument("--protocol", choices=("ppp", "broadcast", "rmulticast"), default="ppp")
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--degree", type=int, default=8)
    sim.add_argument("--load", type=float, default=0.0)
    sim.add_argument("--clones", type=int, default=0)
    sim.add_argument("--clone-tick", type=int, default=30)
    sim.add_argument("--ticks", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--placement", choices=("random", "far"), default="random")
    sim.add_argument("--adversary", choices=("identity", "stolen-key"), default="identity")
    sim.add_argument("--generations", type=int, default=1)
    sim.add_argument("--out", required=True)

    sweep = sub.add_parser("sweep", help="run a sweep described by a key = value spec file")
    sweep.add_argument("--spec", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--jobs", type=int, default=1)

    fit = sub.add_parser("fit", help="fit the communication-complexity exponent")
    fit.add_argument("--in", dest="path", required=True)
    fit.add_argument("--protocol", required=True)

    report = sub.add_parser("report", help="detection-rate table and ordering verdicts")
    report.add_argument("--in", dest="path", required=True)
    return parser


def cmd_simulate(args) -> int:
    config = SimConfig(
        protocol=args.protocol,
        n=args.n,
        degree_D=args.degree,
        load=args.load,
        clone_count=args.clones,
        clone_injection_tick=args.clone_tick,
        ticks=args.ticks,
        seed=args.seed,
        clone_placement=args.placement,
        adversary=args.adversary,
        generations=args.generations,
    )
    trace = run(config)
    row = metrics.MetricsRow.from_trace(trace)
    metrics.emit_csv([row], args.out)
    print(f"protocol {row.protocol}  n={row.n}  D={row.degree_D}  s={row.diameter_s}  load={row.load}")
    print(f"messages {row.messages_total}  bytes {row.bytes_total}  dropped {trace.messages_dropped}")
    print(f"memory: station {row.station_peak_entries}  node peak {row.node_peak_memory_entries}")
    print(
        f"clones {row.clones_detected}/{row.clones_injected} detected, "
        f"false positives {row.false_positives}, mean latency {row.mean_detection_latency_ticks:.3f}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = metrics.SweepSpec.load(args.spec)
    rows = metrics.run_sweep(spec, jobs=args.jobs)
    metrics.emit_csv(rows, args.out)
    print(f"{len(rows)} rows -> {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    rows = metrics.parse_csv(args.path)
    result = metrics.fit_complexity(rows, args.protocol)
    try:
        comm, mem = metrics.lookup(args.protocol)
    except KeyError:
        comm = mem = "(no reference row)"
    print(f"{'protocol':<12}{'exponent':>10}{'intercept':>11}{'r^2':>8}   reference comm / memory")
    print(
        f"{result.protocol:<12}{result.exponent:>10.4f}{result.intercept:>11.4f}"
        f"{result.r_squared:>8.4f}   {comm} / {mem}"
    )
    print("n values: " + ", ".join(str(n) for n in result.n_values))
    return EXIT_OK


def cmd_report(args) -> int:
    rows = metrics.parse_csv(args.path)
    report = metrics.detection_report(rows)
    print(f"{'load':>8}  {'protocol':<12}{'trials':>7}{'rate':>8}   95% interval")
    for r in report:
        lo, hi = r.interval
        print(f"{r.load:>8g}  {r.protocol:<12}{r.trials:>7}{r.mean_rate:>8.3f}   [{lo:.3f}, {hi:.3f}]")
    present = {r.protocol for r in report}
    order = [p for p in metrics.DEFAULT_ORDER if p in present]
    if len(order) < 2:
        print("ordering check skipped: fewer than two protocols")
        return EXIT_OK
    verdicts = metrics.ordering_check(report, order)
    failed = False
    for v in verdicts:
        status = "confirmed" if v.confirmed else ("holds (unconfirmed)" if v.holds else "VIOLATED")
        failed |= not v.confirmed
        print(
            f"load {v.load:g}: rate({v.higher}) >= rate({v.lower})  "
            f"diff {v.difference:+.3f}, 95% low {v.difference_low:+.3f}  {status}"
        )
    return EXIT_ORDERING if failed else EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "fit": cmd_fit, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except metrics.CsvIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (metrics.SpecError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
