"""Command-line entrypoint."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from agentlab import __version__
from agentlab.cli.commands import (
    cmd_classify,
    cmd_cluster,
    cmd_features,
    cmd_simulate,
    cmd_stylized,
)
from agentlab.cli.dependencies import get_scenario, get_store
from agentlab.cli.reproduce import TABLE_TARGETS, cmd_reproduce
from agentlab.core.config import Settings
from agentlab.core.errors import AgentLabError
from agentlab.core.logging import configure_logging
from agentlab.schemas.features import MergeMode

logger = logging.getLogger("agentlab")


def create_parser() -> argparse.ArgumentParser:
    """
    Parser Factory: shared flags on every subcommand, one subcommand per pipeline step.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML settings file")
    common.add_argument("--seed", type=int, dest="master_seed", help="Master seed")
    common.add_argument("--runs", type=int, dest="n_runs", help="Number of runs")
    common.add_argument("--horizon", type=float, help="Run length in time units (0.1 s)")
    common.add_argument(
        "--merge",
        dest="merge_mode",
        choices=[m.value for m in MergeMode],
        help="Noise-merge setting",
    )
    common.add_argument(
        "--features", dest="feature_view", type=int, choices=[9, 18], help="Feature view"
    )
    common.add_argument("--k", dest="k_values", type=int, nargs="+", help="Cluster counts")
    common.add_argument("--jobs", type=int, help="Parallel workers")
    common.add_argument("--out-dir", type=Path, help="Artifact root")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(
        prog="agentlab",
        description="Simulate a limit order book market and identify its trading agents.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("simulate", parents=[common], help="Run a seeded batch")
    commands.add_parser("features", parents=[common], help="Extract the labeled dataset")
    commands.add_parser("classify", parents=[common], help="Grid-search and test the SVM")
    commands.add_parser("cluster", parents=[common], help="Agglomerative clustering per k")
    commands.add_parser("stylized", parents=[common], help="Return and activity statistics")
    reproduce = commands.add_parser(
        "reproduce", parents=[common], help="Compare the pipeline with a published table"
    )
    reproduce.add_argument("table", type=int, choices=sorted(TABLE_TARGETS))
    return parser


def load_settings(args: argparse.Namespace) -> Settings:
    overrides = {
        name: getattr(args, name)
        for name in (
            "master_seed",
            "n_runs",
            "horizon",
            "merge_mode",
            "feature_view",
            "k_values",
            "jobs",
            "out_dir",
            "log_level",
        )
    }
    return Settings.from_sources(args.config, **overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = create_parser().parse_args(argv)
    try:
        settings = load_settings(args)
        configure_logging(settings.log_level, settings.log_format)
        store = get_store(settings)
        spec = get_scenario(settings)

        match args.command:
            case "simulate":
                cmd_simulate(settings, store, spec)
            case "features":
                cmd_features(settings, store, spec)
            case "classify":
                cmd_classify(settings, store, spec)
            case "cluster":
                cmd_cluster(settings, store, spec)
            case "stylized":
                cmd_stylized(settings, store, spec)
            case "reproduce":
                frame = cmd_reproduce(settings, store, spec, args.table)
                sys.stdout.write(frame.to_csv(index=False, float_format="%.4f"))
    except AgentLabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
