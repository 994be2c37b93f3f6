"""
Command Line Interface
    python -m magbill run <config> [--out DIR] [--threads N] [--seed S]
    python -m magbill check <config>
    python -m magbill sae1d [--theta ...] [--u ...] [--profile ALPHA]
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from magbill import __version__
from magbill.api.selfadjoint1d.interval_api import robin_profile
from magbill.domain.errors import ConfigError, MagbillError
from magbill.domain.gauge.potential import PhysicalParams
from magbill.pipeline.config import ExperimentConfig, Sae1dSection, SolverSection, parse_config, validate
from magbill.pipeline.emit import emit_csv
from magbill.pipeline.runner import failed_manifest, run

logger = logging.getLogger("magbill")


def _threads(value: Optional[int]) -> int:
    if value is not None:
        return value
    load_dotenv()
    raw = os.getenv("MAGBILL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring MAGBILL_THREADS=%r, not an integer", raw)
        return 1


def _complex_entries(text: str) -> List[complex]:
    return [complex(item.strip()) for item in text.split(",") if item.strip()]


def _float_entries(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magbill", description="Magnetic billiard spectra and property checks.")
    parser.add_argument("--version", action="version", version=f"magbill {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run the experiment described by a config file")
    run_parser.add_argument("config", help="experiment config file")
    run_parser.add_argument("--out", default=None, help="output directory (default: [output] directory)")
    run_parser.add_argument("--threads", type=int, default=None, help="sweep worker threads (env MAGBILL_THREADS)")
    run_parser.add_argument("--seed", type=int, default=None, help="override the solver seed")

    check_parser = commands.add_parser("check", help="validate a config file without running it")
    check_parser.add_argument("config", help="experiment config file")

    sae = commands.add_parser("sae1d", help="self-adjoint boundary conditions on an interval")
    sae.add_argument("--theta", type=_float_entries, default=[], help="comma-separated angles of U = exp(i theta) I")
    sae.add_argument("--u", type=_complex_entries, default=[], help="four complex entries of U, row-major")
    sae.add_argument("--length", type=float, default=Sae1dSection.length)
    sae.add_argument("--n", type=int, default=Sae1dSection.n, help="number of cells")
    sae.add_argument("--k", type=int, default=3, help="number of eigenvalues")
    sae.add_argument("--potential", choices=("none", "constant", "sine"), default="none")
    sae.add_argument("--amplitude", type=float, default=1.0)
    sae.add_argument("--method", choices=("iterative", "dense"), default="iterative")
    sae.add_argument("--profile", type=float, default=None, metavar="ALPHA",
                     help="emit the Robin ground state on (-L, L) as groundstate.csv instead")
    sae.add_argument("--half-length", type=float, default=1.0, help="L of the Robin profile")
    sae.add_argument("--out", default="results")
    sae.add_argument("--seed", type=int, default=0)
    return parser


def _run(args) -> int:
    try:
        config = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        out_dir = args.out or "results"
        logger.error("config rejected: %s", exc)
        failed_manifest(exc, out_dir)
        return 2
    manifest = run(config, args.out, _threads(args.threads), args.seed)
    return 0 if manifest.passed else 1


def _check(args) -> int:
    try:
        config = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    print(f"{args.config}: ok ({config.kind} on {config.domain.kind})")
    return 0


def _sae1d(args) -> int:
    if args.profile is not None:
        table = robin_profile(args.profile, args.half_length, args.n, PhysicalParams())
        emit_csv(table, os.path.join(args.out, "groundstate.csv"))
        return 0
    config = ExperimentConfig(
        kind="sae1d",
        sae1d=Sae1dSection(
            length=args.length, n=args.n, u=args.u, theta=args.theta,
            potential=args.potential, amplitude=args.amplitude,
        ),
        solver=SolverSection(method=args.method, k=args.k, seed=args.seed),
    )
    try:
        validate(config)
    except ConfigError as exc:
        logger.error("%s", exc)
        failed_manifest(exc, args.out, "sae1d")
        return 2
    return 0 if run(config, args.out).passed else 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
    )
    handlers = {"run": _run, "check": _check, "sae1d": _sae1d}
    try:
        return handlers[args.command](args)
    except MagbillError as exc:
        logger.error("%s", exc)
        return 1
    except Exception as exc:
        # the runner has already written a failed manifest
        logger.error("unexpected %s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
