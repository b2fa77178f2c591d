#!/usr/bin/env python3
"""
Main CLI entry point for the quasiid tool.
"""
import argparse
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

from quasiid import __version__
from quasiid.charfn import CharFn, ScaledShift
from quasiid.config import (SCHEMA_VERSION, AnalysisConfig, DistributionSpec, parse_probes,
                            read_config, with_probes)
from quasiid.criteria import CriterionReport, Verdict, classify_cf
from quasiid.dlog import LogTrace
from quasiid.exceptions import ConfigInvalid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

DEFAULT_WORKERS = 4
MAX_WORKERS = 32


def create_parser():
    """Create and configure the argument parser."""
    parser = argparse.ArgumentParser(
        prog='quasiid',
        description='Numerical diagnostics for rational and quasi-infinite divisibility '
                    'of probability laws',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Analyze every distribution in a config, report to the config's path
  quasiid analyze --config analysis.json

  # Write the report elsewhere and export plot-ready traces
  quasiid analyze --config analysis.json --out results/report.json \\
                  --export-traces results/traces/

  # Override the probe points and use more workers
  quasiid analyze --config analysis.json --probes 0.25,1,3 --workers 8
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    subparsers = parser.add_subparsers(dest='command', metavar='<command>')
    analyze = subparsers.add_parser(
        'analyze',
        help='Classify the distributions of a config and write a JSON report',
        description='Classify the distributions of a config and write a JSON report',
    )

    io_group = analyze.add_argument_group('Input/Output')
    io_group.add_argument(
        '--config',
        required=True,
        metavar='<file>',
        help='Analysis config (JSON)'
    )
    io_group.add_argument(
        '--out',
        metavar='<file>',
        help='Report path (default: outputs.report from the config)'
    )
    io_group.add_argument(
        '--export-traces',
        metavar='<directory>',
        help='Write one t,re_lnf,im_lnf CSV per distribution into this directory'
    )

    analysis_group = analyze.add_argument_group('Analysis Options')
    analysis_group.add_argument(
        '--probes',
        metavar='<t1,t2,...>',
        help='Comma-separated probe points overriding t_probes from the config'
    )
    analysis_group.add_argument(
        '--workers',
        type=int,
        default=DEFAULT_WORKERS,
        metavar='<n>',
        help=f'Parallel analysis workers (default: {DEFAULT_WORKERS}, max: {MAX_WORKERS})'
    )
    analysis_group.add_argument(
        '--verbose',
        action='store_true',
        help='Log progress of trace building and recovery to stderr'
    )

    return parser


def validate_args(args, parser):
    """
    Validate argument combinations and values.

    Returns:
        None (exits with status 2 on validation errors)
    """
    if args.command is None:
        parser.print_help(sys.stderr)
        print("\nError: a command is required (e.g. 'analyze')", file=sys.stderr)
        sys.exit(EXIT_CONFIG)

    if not 1 <= args.workers <= MAX_WORKERS:
        print(f"Error: --workers must be between 1 and {MAX_WORKERS}", file=sys.stderr)
        print(f"       Got: {args.workers}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _lattice_normalized(cf: CharFn) -> Tuple[CharFn, Optional[float]]:
    spacing = cf.jump_lattice
    if spacing is not None and spacing > 0 and abs(spacing - 1.0) > 1e-9:
        logger.info("Rescaling a law on the lattice with spacing %.17g to spacing 1", spacing)
        return ScaledShift(cf, scale=1.0 / spacing), spacing
    return cf, spacing


def analyze_distribution(spec: DistributionSpec,
                         config: AnalysisConfig) -> Tuple[CriterionReport, Optional[LogTrace]]:
    """Build the trace of one distribution, recover its pair and classify it."""
    cf, spacing = _lattice_normalized(spec.cf)
    report, trace = classify_cf(
        cf,
        t_max=config.t_max,
        step=config.step,
        k_max=config.k_max,
        name=spec.name,
        tolerances=config.tolerances,
        h_sequence=config.h_sequence,
        t_probes=config.t_probes,
    )
    report.lattice = spacing
    return report, trace


def _trace_filename(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name) + ".csv"


def export_trace(trace: LogTrace, path: str) -> int:
    """
    Write a trace as CSV with header t,re_lnf,im_lnf at full precision.

    Returns:
        0 on success, 3 if the file cannot be written
    """
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        trace.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        print(f"Error: Could not write trace file '{path}': {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def render_report(config: AnalysisConfig, reports: List[CriterionReport]) -> str:
    """Deterministic JSON text of a full run."""
    document = {
        "schema_version": SCHEMA_VERSION,
        "settings": config.settings(),
        "tolerances": config.tolerances.to_dict(),
        "reports": [report.to_dict() for report in reports],
    }
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def run_analysis(config: AnalysisConfig, workers: int = DEFAULT_WORKERS) -> int:
    """
    Analyze every distribution of a config and write the report.

    Distributions run concurrently; results keep config order.

    Returns:
        0 when every distribution was processed (whatever the verdicts),
        3 when an output file could not be written
    """
    total = len(config.distributions)
    print(f"Processing {total} distribution(s)...")

    with ThreadPoolExecutor(max_workers=min(workers, max(total, 1))) as executor:
        outcomes = list(executor.map(lambda spec: analyze_distribution(spec, config),
                                     config.distributions))

    status = EXIT_OK
    reports = []
    for i, (spec, (report, trace)) in enumerate(zip(config.distributions, outcomes), start=1):
        reports.append(report)
        print(f"Analyzed distribution {i}/{total}: {spec.name} -> {report.verdict.value}")
        if report.verdict is Verdict.NOT_APPLICABLE:
            print(f"Warning: {spec.name}: {report.reason}", file=sys.stderr)

        if config.traces is not None:
            if trace is None:
                print(f"Warning: no trace for {spec.name}, skipping export", file=sys.stderr)
            else:
                path = str(Path(config.traces) / _trace_filename(spec.name))
                status = max(status, export_trace(trace, path))

    output_path = Path(config.report)
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(render_report(config, reports))
    except OSError as e:
        print(f"Error: Could not write to output file '{config.report}': {e}", file=sys.stderr)
        return EXIT_IO

    print(f"Successfully analyzed {total} distribution(s) -> '{config.report}'")
    return status


def main():
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args()
    validate_args(args, parser)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = read_config(args.config)
        if args.probes:
            config = with_probes(config, parse_probes(args.probes, "--probes"))
    except ConfigInvalid as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)
    except OSError as e:
        print(f"Error: Could not read config file '{args.config}': {e}", file=sys.stderr)
        sys.exit(EXIT_IO)

    if args.out:
        config.report = args.out
    if args.export_traces:
        config.traces = args.export_traces

    sys.exit(run_analysis(config, workers=args.workers))


if __name__ == "__main__":
    main()
