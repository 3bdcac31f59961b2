"""Command-line interface: ``tailmix <command> ...``.

Exit codes: 0 success, 2 usage or invalid parameters, 3 data error,
4 numerical failure.  Diagnostics go to standard error; data go to
standard output or ``--out``.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .diagnostics import DEFAULT_PROBS, qq_normal_data, quantile_table, tail_plot_series
from .errors import ConstructionError, DataError, ParameterError, TailmixError
from .estimation import FitOptions, ModelKind, fit
from .io import ModelFile, ingest, write_csv
from .study import ALL_KINDS, StudyConfig, run_study
from .transform_model import WarpMode

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
SEED_ENV = "TAILMIX_SEED"

logger = logging.getLogger("tailmix")


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception, code: int):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.code = code


@contextlib.contextmanager
def stage(name: str):
    """Tag any failure inside the block with the pipeline stage."""
    try:
        yield
    except (ParameterError, ConstructionError) as exc:
        raise StageError(name, exc, EXIT_USAGE) from exc
    except (DataError, OSError) as exc:
        raise StageError(name, exc, EXIT_DATA) from exc
    except (TailmixError, ArithmeticError, RuntimeError, ValueError) as exc:
        raise StageError(name, exc, EXIT_NUMERIC) from exc


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise StageError("seed", ValueError(f"{SEED_ENV}={env!r} is not an integer"), EXIT_USAGE)


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _load_model(args) -> ModelFile:
    if args.model_file is not None:
        with stage("load model"):
            return ModelFile.load(args.model_file)
    if args.kind is None or args.params is None:
        raise StageError("load model", ValueError("give --model-file or both --kind and --params"),
                         EXIT_USAGE)
    with stage("build model"):
        return ModelFile.from_params(args.kind, args.params, transform_eps=args.transform_eps,
                                     transform_mode=args.transform_mode)


def _load_data(args):
    with stage("ingest"):
        return ingest(args.data, column=args.column, returns_from_prices=args.returns)


def cmd_fit(args) -> int:
    data = _load_data(args)
    seed = _seed(args)
    opts = FitOptions(n_starts=args.n_starts, max_iter=args.max_iter, seed=seed,
                      transform_eps=args.transform_eps, transform_mode=args.transform_mode)
    with stage("fit"):
        res = fit(args.model, data.values, opts)
    if not res.converged:
        logger.warning("fit did not converge: %s", res.message)
    mf = ModelFile.from_fit(res, data.values, seed=seed)
    mf.metadata["provenance"] = data.provenance.value
    mf.metadata["mu"] = data.mu
    with _output(args.out) as fh:
        fh.write(json.dumps(mf.to_dict(), indent=2) + "\n")
    logger.info("loglik %.6f, converged %s", res.loglik, res.converged)
    return EXIT_OK


def cmd_simulate(args) -> int:
    mf = _load_model(args)
    with stage("simulate"):
        x = mf.model().sample(np.random.default_rng(_seed(args)), args.n)
    with _output(args.out) as fh:
        write_csv(fh, ["x"], [x])
    return EXIT_OK


def cmd_quantile(args) -> int:
    mf = _load_model(args)
    with stage("quantile"):
        rows = quantile_table(mf.model(), args.p)
    with _output(args.out) as fh:
        write_csv(fh, ["p", "x"], list(zip(*rows)))
    return EXIT_OK


def cmd_density(args) -> int:
    mf = _load_model(args)
    with stage("density"):
        model = mf.model()
        lo = args.lo if args.lo is not None else float(model.ppf(args.tail))
        hi = args.hi if args.hi is not None else float(model.ppf(1 - args.tail))
        if not lo < hi:
            raise ParameterError(f"empty grid [{lo}, {hi}]")
        x = np.linspace(lo, hi, args.points)
        pdf, cdf = model.pdf(x), model.cdf(x)
    with _output(args.out) as fh:
        write_csv(fh, ["x", "pdf", "cdf"], [x, pdf, cdf])
    return EXIT_OK


def cmd_study(args) -> int:
    with stage("configure study"):
        config = StudyConfig(
            generator=args.generator, true_params=tuple(args.params),
            sample_sizes=tuple(args.sizes), self_fit_sizes=tuple(args.self_fit_sizes),
            replications=args.replications,
            fit_kinds=tuple(args.fit_kinds or ALL_KINDS),
            seed=_seed(args), transform_eps=args.transform_eps, transform_mode=args.transform_mode,
            n_jobs=args.jobs,
        )
    with stage("study"):
        report = run_study(config)
    logger.info("\n%s", report.format_table())
    with _output(args.out) as fh:
        fh.write(json.dumps(report.to_dict(include_replications=args.keep_replications), indent=2) + "\n")
    return EXIT_OK


def cmd_tailplot(args) -> int:
    mf = _load_model(args)
    data = _load_data(args)
    with stage("tailplot"):
        series = tail_plot_series(data.values, mf.model(), args.side)
    if series.clamped.any():
        logger.warning("%d model probabilities clamped before the log", int(series.clamped.sum()))
    with _output(args.out) as fh:
        write_csv(fh, ["x", "log_model", "log_empirical", "clamped"],
                  [series.x, series.log_model, series.log_empirical, series.clamped])
    return EXIT_OK


def cmd_qq(args) -> int:
    data = _load_data(args)
    with stage("qq"):
        theoretical, empirical = qq_normal_data(data.values)
    with _output(args.out) as fh:
        write_csv(fh, ["theoretical", "empirical"], [theoretical, empirical])
    return EXIT_OK


def _probability(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    kinds = [k.value for k in ModelKind]
    modes = [m.value for m in WarpMode]

    parser = argparse.ArgumentParser(prog="tailmix", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--seed", type=int, help=f"random seed (fallback ${SEED_ENV}, then 0)")

    transform = argparse.ArgumentParser(add_help=False)
    transform.add_argument("--transform-eps", type=float, default=None,
                           help="zone half-width of transform models (default: sigma_2)")
    transform.add_argument("--transform-mode", choices=modes, default=WarpMode.FULL_C2.value)

    model = argparse.ArgumentParser(add_help=False, parents=[transform])
    model.add_argument("--model-file", help="ModelFile JSON written by 'fit'")
    model.add_argument("--kind", choices=kinds, help="model kind, with --params")
    model.add_argument("--params", type=float, nargs=5, metavar="P", help="five parameters")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", required=True, help="CSV file, optional header row")
    data.add_argument("--column", default=None, help="column name or zero-based index")
    data.add_argument("--returns", action="store_true",
                      help="treat the column as prices and use centered log returns")

    p = sub.add_parser("fit", parents=[common, data, transform], help="fit a model, write a ModelFile")
    p.add_argument("--model", required=True, choices=kinds)
    p.add_argument("--n-starts", type=_positive_int, default=1)
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", parents=[common, model], help="draw samples, one CSV column")
    p.add_argument("-n", type=_positive_int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("quantile", parents=[common, model], help="print (p, x) pairs")
    p.add_argument("--p", type=_probability, nargs="+", default=list(DEFAULT_PROBS))
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("density", parents=[common, model], help="(x, pdf, cdf) over a grid")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--points", type=_positive_int, default=2001)
    p.add_argument("--tail", type=_probability, default=1e-7,
                   help="default grid spans the tail..1-tail quantiles")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("study", parents=[common, transform], help="cross-fitting Monte Carlo study")
    p.add_argument("--generator", required=True, choices=kinds)
    p.add_argument("--params", type=float, nargs=5, required=True, metavar="P")
    p.add_argument("--replications", "-k", type=int, default=50)
    p.add_argument("--sizes", type=int, nargs="*", default=[1000])
    p.add_argument("--self-fit-sizes", type=int, nargs="*", default=[10000])
    p.add_argument("--fit-kinds", choices=kinds, nargs="+")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--keep-replications", action="store_true",
                   help="include per-replication records in the JSON")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("tailplot", parents=[common, model, data], help="log tail-plot series")
    p.add_argument("--side", choices=["left", "right"], default="right")
    p.set_defaults(func=cmd_tailplot)

    p = sub.add_parser("qq", parents=[common, data], help="normal QQ pairs of standardized data")
    p.set_defaults(func=cmd_qq)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="tailmix: %(levelname)s: %(message)s", stream=sys.stderr)
    if getattr(args, "column", None) is not None and str(args.column).lstrip("-").isdigit():
        args.column = int(args.column)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"tailmix: error in {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
