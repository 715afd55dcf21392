"""Command line interface: ``velomap {gen,pipeline,render,eval,reproduce}``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import replace
from pathlib import Path
from typing import NoReturn

from .const import (
    DEFAULT_GRID_NODES,
    DEFAULT_TAU,
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    SNAPSHOT_KIND_RANDOM,
    SNAPSHOT_KINDS,
)
from .dataset import sample_arrays
from .field import SnapshotSpec, generate_snapshot, load_snapshot, save_snapshot
from .mlp import load_mlp, predict
from .pipeline import (
    PipelineConfig,
    PipelineReport,
    PipelineStageError,
    accuracy_within_tol,
    default_reproduction_config,
    load_pipeline_config,
    run_pipeline,
    write_outputs,
)
from .render import read_matrix_csv, render_pgm

LOGGER = logging.getLogger(__name__)

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with :data:`EXIT_USAGE`."""

    def error(self, message: str) -> NoReturn:
        """Print usage and exit with the usage-error code."""
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cmd_gen(args: argparse.Namespace) -> None:
    spec = SnapshotSpec(
        kind=args.kind,
        n=args.n,
        re=args.re,
        pr=args.pr,
        seed=args.seed,
        amplitude=args.amplitude,
        a=args.a,
        b=args.b,
        c=args.c,
    )
    save_snapshot(generate_snapshot(spec), args.out)
    LOGGER.info("Wrote snapshot %s to %s", spec.label, args.out)


def _print_report(report: PipelineReport, report_path: Path) -> None:
    for snap in report.snapshots:
        print(
            f"{snap.label}: sizes={snap.sizes} stop_reason={snap.stop_reason} epochs={snap.epochs_run} "
            f"validation_accuracy={snap.validation_accuracy:.4f} test_accuracy={snap.test_accuracy:.4f}"
        )
    for point in report.bracket:
        print(f"tau={point.tau:g} mean_validation_accuracy={point.validation:.4f} mean_test_accuracy={point.test:.4f}")
    print(f"reference_accuracy={report.reference_accuracy}")
    print(f"report={report_path}")


def _run_and_write(cfg: PipelineConfig, out_dir: Path) -> None:
    run = run_pipeline(cfg)
    report_path = write_outputs(run.report, out_dir, run.models)
    _print_report(run.report, report_path)


def _with_workers(cfg: PipelineConfig, workers: int | None) -> PipelineConfig:
    if workers is None:
        return cfg
    return replace(cfg, workers=workers)


def _cmd_pipeline(args: argparse.Namespace) -> None:
    _run_and_write(_with_workers(load_pipeline_config(args.config), args.workers), args.out_dir)


def _cmd_reproduce(args: argparse.Namespace) -> None:
    _run_and_write(_with_workers(default_reproduction_config(), args.workers), args.out_dir)


def _cmd_render(args: argparse.Namespace) -> None:
    render_pgm(read_matrix_csv(args.input), args.out)
    LOGGER.info("Rendered %s to %s", args.input, args.out)


def _cmd_eval(args: argparse.Namespace) -> None:
    model, normalizer = load_mlp(args.model)
    inputs, targets = sample_arrays(load_snapshot(args.field))
    if normalizer is not None:
        inputs = normalizer.apply(inputs)
    print(f"accuracy={accuracy_within_tol(predict(model, inputs), targets, args.tau)}")


def build_parser() -> argparse.ArgumentParser:
    """Assemble the argument parser with one subparser per command."""
    parser = _ArgumentParser(prog="velomap", description="Two-tier velocity-field surrogate (LM-BR network + SOM).")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a synthetic snapshot file")
    gen.add_argument("--kind", choices=SNAPSHOT_KINDS, default=SNAPSHOT_KIND_RANDOM)
    gen.add_argument("--n", type=int, default=DEFAULT_GRID_NODES, help="nodes per axis")
    gen.add_argument("--re", type=float, default=100.0, help="global Reynolds number")
    gen.add_argument("--pr", type=float, default=0.7, help="Prandtl number")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--amplitude", type=float, default=1.0, help="velocity scale of random fields")
    for coefficient in ("a", "b", "c"):
        gen.add_argument(f"--{coefficient}", type=float, default=1.0, help="ABC flow coefficient")
    gen.add_argument("--out", type=Path, required=True)
    gen.set_defaults(handler=_cmd_gen)

    pipeline = commands.add_parser("pipeline", help="run both tiers from a JSON config")
    pipeline.add_argument("--config", type=Path, required=True)
    pipeline.add_argument("--out-dir", type=Path, required=True)
    pipeline.add_argument("--workers", type=int, default=None, help="override the config's worker count")
    pipeline.set_defaults(handler=_cmd_pipeline)

    render = commands.add_parser("render", help="render a CSV matrix as a PGM graymap")
    render.add_argument("--in", dest="input", type=Path, required=True)
    render.add_argument("--out", type=Path, required=True)
    render.set_defaults(handler=_cmd_render)

    evaluate = commands.add_parser("eval", help="score a saved model against a snapshot")
    evaluate.add_argument("--model", type=Path, required=True)
    evaluate.add_argument("--field", type=Path, required=True)
    evaluate.add_argument("--tau", type=float, default=DEFAULT_TAU)
    evaluate.set_defaults(handler=_cmd_eval)

    reproduce = commands.add_parser("reproduce", help="six seeded snapshots with default settings")
    reproduce.add_argument("--out-dir", type=Path, required=True)
    reproduce.add_argument("--workers", type=int, default=None)
    reproduce.set_defaults(handler=_cmd_reproduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and map failures to exit codes (1 usage, 2 data, 3 numerical)."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format=_LOG_FORMAT)
    logging.getLogger("velomap").setLevel(logging.DEBUG if args.verbose else logging.INFO)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        LOGGER.error("--workers must be at least 1, got %s", args.workers)
        return EXIT_USAGE

    handler: Callable[[argparse.Namespace], None] = args.handler
    try:
        handler(args)
    except PipelineStageError as err:
        LOGGER.error("%s", err)
        return EXIT_NUMERICAL if isinstance(err.__cause__, ArithmeticError) else EXIT_DATA
    except ArithmeticError as err:
        LOGGER.error("Numerical failure: %s", err)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as err:
        LOGGER.error("%s", err)
        return EXIT_DATA
    return EXIT_OK
