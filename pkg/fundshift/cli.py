"""
Command line front end.

    fundshift simulate --spec <file> --out <dir> [--seed N]
    fundshift analyze --nav <dir> --factors <file> --bench-map <file> --bench-nav <dir> --out <file> [options]
    fundshift report --in <file> --table <name> --format <csv|md>

Exit codes: 0 success, 2 usage or configuration, 3 I/O, 4 nothing analysable.
"""
import argparse
import json
import sys
import typing
from pathlib import Path

import pandas as pd

from fundshift import __version__, cohort, marketdata, report, synth, validation
from fundshift.config import AnalysisConfig
from fundshift.log import logger

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_EMPTY = 4


def _fail(message: str, code: int) -> int:
    logger.error(message)
    print(f"fundshift: error: {message}", file=sys.stderr)
    return code


def cmd_simulate(spec_path: str, out_dir: str, seed: typing.Optional[int] = None) -> int:
    """
    Write fund and benchmark NAVs, factors, the benchmark map and the
    planted truth for a simulation spec.
    """
    try:
        spec = synth.load_simulation_spec(spec_path)
        simulation = synth.simulate(spec, seed)
    except (validation.InvalidSimulationSpec, ValueError) as e:
        return _fail(f"invalid simulation spec: {e}", EXIT_USAGE)
    except OSError as e:
        return _fail(f"cannot read simulation spec: {e}", EXIT_IO)

    out = Path(out_dir)
    try:
        (out / "nav").mkdir(parents=True, exist_ok=True)
        (out / "bench").mkdir(parents=True, exist_ok=True)
        for fund_id, nav in sorted(simulation.funds.items()):
            marketdata.write_nav_csv(nav, out / "nav" / f"{fund_id}.csv")
        for benchmark_id, nav in sorted(simulation.benchmarks.items()):
            marketdata.write_nav_csv(nav, out / "bench" / f"{benchmark_id}.csv")
        marketdata.write_factor_csv(simulation.factors, out / "factors.csv")
        marketdata.write_benchmark_map(simulation.benchmark_map, out / "bench_map.csv")
        truth = {fund_id: t.to_record() for fund_id, t in sorted(simulation.truths.items())}
        with open(out / "truth.json", "w", encoding="utf-8") as f:
            f.write(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        return _fail(f"cannot write to {out}: {e}", EXIT_IO)
    logger.info(f"Simulation written to {out}")
    return EXIT_OK


def cmd_analyze(config: AnalysisConfig) -> int:
    """
    Analyse every fund of the NAV directory and write the JSON report.
    """
    try:
        fund_cohort = cohort.Cohort(config)
    except validation.InvalidConfig as e:
        return _fail(f"invalid configuration: {e}", EXIT_USAGE)
    try:
        fund_cohort.get_factors(config.factors_path)
        fund_cohort.get_benchmark_map(config.bench_map_path)
        fund_cohort.get_navs(config.nav_dir)
        fund_cohort.get_benchmark_navs(config.bench_nav_dir)
    except (
        validation.InvalidDataFrame,
        validation.InvalidSeries,
        validation.InvalidBenchmarkMap,
        pd.errors.EmptyDataError,
        pd.errors.ParserError,
    ) as e:
        return _fail(f"invalid input: {e}", EXIT_USAGE)
    except OSError as e:
        return _fail(f"cannot read input: {e}", EXIT_IO)

    records = fund_cohort.analyse()
    if not records:
        return _fail("no fund could be analysed", EXIT_EMPTY)
    try:
        cohort.write_report(fund_cohort.build_report(), config.out_path)
    except OSError as e:
        return _fail(f"cannot write report: {e}", EXIT_IO)
    return EXIT_OK


def cmd_report(report_path: str, table: str, fmt: str, stream: typing.Optional[typing.TextIO] = None) -> int:
    if table not in report.TABLES:
        return _fail(f"unknown table {table!r}, expected one of {', '.join(report.TABLES)}", EXIT_USAGE)
    if fmt not in report.FORMATS:
        return _fail(f"unknown format {fmt!r}", EXIT_USAGE)
    try:
        analysis = cohort.load_report(report_path)
    except OSError as e:
        return _fail(f"cannot read report: {e}", EXIT_IO)
    except json.JSONDecodeError as e:
        return _fail(f"report is not valid JSON: {e}", EXIT_USAGE)
    try:
        frame = report.build_table(analysis, table)
    except KeyError as e:
        return _fail(f"report lacks {e}", EXIT_USAGE)
    (stream or sys.stdout).write(report.render(frame, fmt))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundshift",
        description="Benchmark-adjusted style breaks and risk-shift attribution for mutual funds",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="generate funds with planted regimes")
    simulate.add_argument("--spec", required=True, help="simulation spec JSON file")
    simulate.add_argument("--out", required=True, help="output directory")
    simulate.add_argument("--seed", type=int, default=None, help="override the spec seed")

    analyze = commands.add_parser("analyze", help="run the break, style and performance pipeline")
    analyze.add_argument("--nav", required=True, help="directory of fund NAV CSVs")
    analyze.add_argument("--factors", required=True, help="factor CSV")
    analyze.add_argument("--bench-map", required=True, help="fund to benchmark CSV")
    analyze.add_argument("--bench-nav", required=True, help="directory of benchmark NAV CSVs")
    analyze.add_argument("--out", required=True, help="report JSON file")
    analyze.add_argument("--sig", type=float, default=0.05, help="significance level")
    analyze.add_argument("--trim", type=float, default=0.15, help="minimum regime as a share of the sample")
    analyze.add_argument("--max-breaks", type=int, default=5)
    analyze.add_argument("--min-regime-obs", type=int, default=0, help="500 approximates 24 months of daily data")
    analyze.add_argument("--annualization", type=int, default=252)
    analyze.add_argument("--break-model", choices=["agt", "ff3"], default="agt")
    analyze.add_argument("--hac", action="store_true", help="Newey-West standard errors")
    analyze.add_argument("--carhart", action="store_true", help="add per-regime Carhart fits")
    analyze.add_argument("--jobs", type=int, default=1, help="funds analysed in parallel")

    show = commands.add_parser("report", help="render a table from a report")
    show.add_argument("--in", dest="report", required=True, help="report JSON file")
    show.add_argument("--table", required=True, help=f"one of {', '.join(report.TABLES)}")
    show.add_argument("--format", dest="fmt", default="md", help="csv or md")
    return parser


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return cmd_simulate(args.spec, args.out, args.seed)
    if args.command == "analyze":
        config = AnalysisConfig(
            nav_dir=args.nav,
            factors_path=args.factors,
            bench_map_path=args.bench_map,
            bench_nav_dir=args.bench_nav,
            out_path=args.out,
            sig_level=args.sig,
            trim=args.trim,
            max_breaks=args.max_breaks,
            min_regime_obs=args.min_regime_obs,
            annualization=args.annualization,
            hac=args.hac,
            carhart=args.carhart,
            break_model=args.break_model,
            jobs=args.jobs,
        )
        return cmd_analyze(config)
    return cmd_report(args.report, args.table, args.fmt)


if __name__ == "__main__":
    sys.exit(main())
