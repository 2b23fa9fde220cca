"""
Command line entry point: `tick-drift <subcommand> --config <path> [...]`.

Exit codes: 0 success, 2 usage or config error, 3 model/runtime error.
"""

import argparse
import logging
import sys

from tick_drift import settings
from tick_drift.errors import ConfigError, TickDriftError
from tick_drift.experiments import RUNNERS, load_config, run_experiment, write_outputs

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tick-drift",
        description="Simulate pure-jump tick prices with drift and test the t-statistic's behavior.",
    )
    parser.add_argument("--log-level", default=None, help="overrides TICK_DRIFT_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    for name in RUNNERS:
        sub = commands.add_parser(name, help=f"run the {name} experiment")
        sub.add_argument("--config", required=True, help="JSON experiment config")
        sub.add_argument("--seed", type=int, default=None, help="master seed")
        sub.add_argument("--out", default=None, help=f"output directory (default {settings.OUTPUT_DIR})")
        sub.add_argument("--spacing", type=float, default=None, help="calendar spacing T")
        sub.add_argument("--threads", type=int, default=None, help="worker threads")
        sub.add_argument("--mu0-star", type=float, default=None, help="hypothesized mean return")

    serve = commands.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _print_report(report) -> None:
    print(f"\n[{report.kind}] {report.config.scenario_id}")
    for key, value in report.summary.items():
        print(f" - {key}: {value}")
    for row in report.rows:
        n = "" if row["n"] is None else f" (n={row['n']})"
        se = f" ± {row['std_error']:.4g}" if row["std_error"] else ""
        print(f" - {row['metric']}{n}: {row['value']:.6g}{se}")


def _serve(args) -> int:
    import uvicorn

    uvicorn.run("tick_drift.api_server:app", host=args.host, port=args.port)
    return EXIT_OK


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    settings.configure_logging(args.log_level)
    if args.command == "serve":
        return _serve(args)

    try:
        config = load_config(
            args.config,
            master_seed=args.seed,
            spacing=args.spacing,
            threads=args.threads,
            mu0_star=args.mu0_star,
            outputs=args.out,
        )
        report = run_experiment(args.command, config)
        manifest = write_outputs(report)
    except ConfigError as exc:
        logger.error("Config error: %s", exc)
        return EXIT_CONFIG
    except TickDriftError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME

    _print_report(report)
    print(f"\n[SUCCESS] Outputs listed in {manifest}")
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
