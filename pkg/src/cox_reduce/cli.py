"""CLI entry point for cox-reduce."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__, pipeline
from .confset import DEFAULT_BUDGET, ConfidenceSetConfig
from .errors import EXIT_DATA, EXIT_OK, CoxReduceError
from .ingest import DataSet, ingest, read_table, write_rows
from .reduction import ReductionConfig
from .regression_stats import SigmaMode
from .report import write_report
from .simulation import EXPERIMENTS, desk_spec, null_acceptance_experiment, noncentral_moment_experiment
from .stages import (
    Collect,
    confidence_set_stage,
    interval_stage,
    lasso_stage,
    reduce_stage,
    screen_stage,
)
from .verify import run_suite

logger = logging.getLogger(__name__)

EXIT_VERIFY_FAILED = 1

# comprehensive model of the desk-scale simulated data
DESK_MODEL = (10, 40, 70, 100)


def _sigma(value: str) -> SigmaMode:
    if value == "estimate":
        return SigmaMode.estimate()
    try:
        return SigmaMode.known(float(value))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'estimate', got '{value}'") from e


def _names(value: str) -> List[str]:
    return [name.strip() for name in value.split(",") if name.strip()]


def _shared(parser: argparse.ArgumentParser, needs_input: bool = True) -> None:
    if needs_input:
        parser.add_argument("--input", type=Path, required=True, help="CSV file with a header row")
        parser.add_argument("--response", help="response column (default: first column)")
    parser.add_argument("--output", type=Path, help="write the report here plus OUTPUT.json")
    parser.add_argument("--seed", type=int, default=0, help="root seed (default: 0)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    verbosity.add_argument("--quiet", action="store_true", help="log warnings only")


def _reduction_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("reduction")
    group.add_argument("--k1", type=int, help="first-round side (default: smallest that fits)")
    group.add_argument("--k2", type=int, help="second-round side (default: smallest that fits)")
    group.add_argument("--dims1", type=int, default=3, help="first-round dimension (default: 3)")
    group.add_argument("--dims2", type=int, default=2, help="second-round dimension (default: 2)")
    group.add_argument("--alpha", type=float, default=0.01, help="second-round level (default: 0.01)")
    group.add_argument("--pair-threshold", type=float, default=0.97, help="pairing |corr| (default: 0.97)")
    group.add_argument("--subsample", type=float, default=0.35, help="first-part fraction (default: 0.35)")
    group.add_argument("--no-split", action="store_true", help="use all observations in every round")
    group.add_argument(
        "--holdout", type=float, default=0.0, help="fraction kept back for model assessment only (default: 0)"
    )
    group.add_argument("--rerand", type=int, default=1, help="rerandomisations B (default: 1)")
    group.add_argument("--vote", type=float, default=0.5, help="vote fraction (default: 0.5)")
    group.add_argument("--force", type=_names, default=[], help="covariates kept in every regression")


def _sigma_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--sigma", type=_sigma, default=SigmaMode.estimate(), help="known sigma or 'estimate' (default)"
    )


def _confset_flags(parser: argparse.ArgumentParser, comprehensive: bool = False) -> None:
    group = parser.add_argument_group("confidence set")
    group.add_argument("--theta", type=float, default=0.05, help="test level (default: 0.05)")
    group.add_argument("--smax", type=int, default=4, help="largest model size (default: 4)")
    group.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="most models tested")
    group.add_argument("--predict", type=Path, help="CSV of covariate rows for prediction intervals")
    group.add_argument("--level", type=float, default=0.95, help="interval level (default: 0.95)")
    if comprehensive:
        group.add_argument(
            "--comprehensive", type=_names, required=True, help="comma-separated covariate names"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cox-reduce",
        description="Cox reduction and likelihood-ratio confidence sets of models",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    reduce = commands.add_parser("reduce", help="run the reduction only")
    _shared(reduce)
    _reduction_flags(reduce)
    _sigma_flag(reduce)

    confset = commands.add_parser("confset", help="confidence set for a given comprehensive model")
    _shared(confset)
    _sigma_flag(confset)
    _confset_flags(confset, comprehensive=True)

    full = commands.add_parser("pipeline", help="reduction, confidence set and intervals")
    _shared(full)
    _reduction_flags(full)
    _sigma_flag(full)
    _confset_flags(full)

    compare = commands.add_parser("compare", help="baseline reduction by screening or LASSO")
    _shared(compare)
    compare.add_argument("--method", choices=("marginal", "lasso"), default="marginal")
    compare.add_argument("--shat", type=int, required=True, help="number of variables to keep")

    simulate = commands.add_parser("simulate", help="run one Monte-Carlo experiment")
    _shared(simulate, needs_input=False)
    simulate.add_argument("--experiment", choices=sorted(EXPERIMENTS), required=True)
    simulate.add_argument("--replicates", type=int, help="replicate count (default: per experiment)")
    simulate.add_argument("--table", type=Path, help="write per-replicate rows as CSV")

    verify = commands.add_parser("verify", help="run the oracle suite")
    _shared(verify, needs_input=False)
    verify.add_argument("--full", action="store_true", help="acceptance scale, adds coverage")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _reduction_config(args: argparse.Namespace, data: DataSet) -> ReductionConfig:
    config = ReductionConfig(
        dims1=args.dims1,
        dims2=args.dims2,
        side1=args.k1,
        side2=args.k2,
        alpha=args.alpha,
        sigma_mode=args.sigma,
        pair_threshold=args.pair_threshold,
        subsample_fraction=args.subsample,
        holdout_fraction=args.holdout,
        alternate_subsamples=not args.no_split,
        rerandomisations=args.rerand,
        vote_fraction=args.vote,
        seed=args.seed,
        forced=data.indices_of(args.force),
        threads=args.threads,
    )
    config.validate(data.p)
    return config


def _confset_config(args: argparse.Namespace) -> ConfidenceSetConfig:
    config = ConfidenceSetConfig(
        theta=args.theta,
        s_max=args.smax,
        budget=args.budget,
        sigma_mode=args.sigma,
        level=args.level,
        threads=args.threads,
    )
    config.validate()
    return config


def _header(args: argparse.Namespace, data: Optional[DataSet] = None) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "run": {"command": args.command, "version": __version__, "seed": args.seed}
    }
    if data is not None:
        record["data"] = data.to_record()
    return record


def _run_data_command(args: argparse.Namespace) -> Dict[str, Any]:
    data = ingest(args.input, args.response)
    chain = pipeline()
    if args.command in ("reduce", "pipeline"):
        chain = chain.then(*reduce_stage(_reduction_config(args, data)))
    if args.command in ("confset", "pipeline"):
        config = _confset_config(args)
        named = data.indices_of(args.comprehensive) if args.command == "confset" else None
        chain = chain.then(*confidence_set_stage(config, named))
        if args.predict is not None:
            _, points = read_table(args.predict, data.names)
            chain = chain.then(*interval_stage(points, config.level, config.sigma_mode))
    if args.command == "compare":
        stage = screen_stage if args.method == "marginal" else lasso_stage
        chain = chain.then(*stage(args.shat))
    chain = chain.then(Collect())

    logger.info("Running stages %s", chain.describe()["stages"])
    context = chain.run({"data": data, "record": _header(args, data), "timings": {}})
    for name, seconds in context["timings"].items():
        logger.info("Stage %s took %.2fs", name, seconds)
    return context["record"]


def _run_simulate(args: argparse.Namespace) -> Dict[str, Any]:
    name = args.experiment
    options: Dict[str, Any] = {"seed": args.seed}
    if args.replicates is not None:
        options["replicates"] = args.replicates
    if name in ("spurious", "retention", "coverage", "contrast"):
        options["threads"] = args.threads
    if name == "null":
        spec = desk_spec(args.seed, signal=0.0)
        report = null_acceptance_experiment(spec, DESK_MODEL, (), threads=args.threads, **options)
    elif name == "noncentral":
        spec = desk_spec(args.seed)
        report = noncentral_moment_experiment(
            spec, DESK_MODEL + (0, 1), DESK_MODEL[:2], threads=args.threads, **options
        )
    elif name == "companions":
        report = EXPERIMENTS[name](4, 8, 3, **options)
    elif name == "generator":
        options.pop("replicates", None)
        report = EXPERIMENTS[name](desk_spec().law, **options)
    else:
        report = EXPERIMENTS[name](**options)

    if args.table is not None:
        write_rows(args.table, report.rows)
    record = _header(args)
    record["experiment"] = report.to_record()
    return record


def main(argv: Optional[Sequence[str]] = None):
    """Main CLI entry point."""
    args = build_parser().parse_args(argv)
    _configure_logging(args)

    try:
        if args.command == "verify":
            results = run_suite(full=args.full, seed=args.seed, threads=args.threads)
            record = _header(args)
            record["checks"] = [result.to_record() for result in results]
            write_report(record, args.output, title="cox-reduce verify")
            failed = [result.name for result in results if not result.passed]
            if failed:
                print(f"Failed checks: {', '.join(failed)}", file=sys.stderr)
                sys.exit(EXIT_VERIFY_FAILED)
            sys.exit(EXIT_OK)

        if args.command == "simulate":
            record = _run_simulate(args)
        else:
            record = _run_data_command(args)
        write_report(record, args.output, title=f"cox-reduce {args.command}")
    except CoxReduceError as e:
        logger.debug("Failure", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_DATA)

    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
