"""unidioph command-line entry point"""
import argparse
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from loguru import logger

from app import __version__
from app.models.database import record_run
from app.models.schemas import ExperimentManifest
from app.services.finite_catalog import METRICS
from app.services.orchestrator import EMPIRICAL_SAMPLES, EXIT_USAGE, ExperimentOrchestrator
from app.utils import serialization as codec
from app.utils.parallel import DEFAULT_WORKERS

load_dotenv()

DEFAULT_LOG_LEVEL = os.getenv("UNIDIOPH_LOG_LEVEL", "WARNING")

# Flags that steer the run itself and stay out of the manifest parameters
RUN_FLAGS = {"command", "log_level", "manifest", "record", "path"}


def configure_logging(level: str) -> None:
    """Single stderr sink; stdout carries only payloads"""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <8} | {name}:{line} - {message}")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="thread count (env UNIDIOPH_WORKERS)")
    common.add_argument("--log-level", default=DEFAULT_LOG_LEVEL, help="stderr log level")
    common.add_argument("--manifest", metavar="PATH", help="write an experiment manifest to PATH")
    common.add_argument("--record", action="store_true", help="append the run to the experiment ledger")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="unidioph", description="Dirichlet-type approximation bounds on compact groups",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phi", parents=[common], help="displacement φ(A) of a unitary matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--empirical", action="store_true", help="also report the sampled lower estimate")
    p.add_argument("--samples", type=int, help=f"sample count for --empirical (default {EMPIRICAL_SAMPLES})")

    p = sub.add_parser("phi-dist", parents=[common], help="distribution function Φ(t) on U(N)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--method", choices=("mc", "eigen", "quadrature"), default="mc")
    p.add_argument("--grid", type=int, default=64)

    p = sub.add_parser("phi-curve", parents=[common], help="Φ(t) on a t grid with the lower bound")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=10**4)
    p.add_argument("--method", choices=("mc", "quadrature"), default="mc")
    p.add_argument("--grid", type=int, default=64)

    p = sub.add_parser("delta-set", parents=[common], help="δ(𝒜) of a finite set of unitaries")
    p.add_argument("--matrices", help="JSON list of matrices; Haar samples when omitted")
    p.add_argument("--n", type=int)
    p.add_argument("--cardinality", type=int)

    p = sub.add_parser("delta-powers", parents=[common], help="δ_N(a) over powers of one matrix")
    p.add_argument("--a")
    p.add_argument("--n", type=int)
    p.add_argument("--n-max", type=int, required=True)

    p = sub.add_parser("delta-jk", parents=[common], help="δ_{J,K}(A, B) over two-letter words")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--n", type=int)
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--K", type=int, required=True)

    p = sub.add_parser("delta-jkl", parents=[common], help="δ_{J,K,L}(A, B, C), conjectural bound")
    for name in ("--a", "--b", "--c"):
        p.add_argument(name)
    p.add_argument("--n", type=int)
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--L", type=int, required=True)

    p = sub.add_parser("verify", parents=[common], help="randomized or exhaustive bound verification")
    p.add_argument("--theorem", choices=("1", "2", "3", "4", "corollary", "3-unitary"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--cardinality", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--method", choices=("quadrature", "mc"))
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--group", help="restrict finite sweeps to one catalog group, e.g. s4")
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--table")
    p.add_argument("--subset-size", type=int, default=4)
    p.add_argument("--samples", type=int)
    p.add_argument("--max-exponent", type=int, default=2)

    p = sub.add_parser("torus-delta", parents=[common], help="simultaneous approximation on (ℝ/ℤ)^L")
    p.add_argument("--alphas", required=True)
    p.add_argument("--ks", required=True, help="comma-separated bounds, e.g. 10,10")

    p = sub.add_parser("torus-phi-curve", parents=[common], help="empirical Φ on (ℝ/ℤ)^L against (2t)^L")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--samples", type=int, default=10**4)

    p = sub.add_parser("finite", help="exact checks on finite group actions")
    actions = p.add_subparsers(dest="action", required=True)
    for name, text in (
        ("verify", "Theorem-3 bounds on one subset or a subset sweep"),
        ("phi", "φ(g) and optionally Φ(t)"),
        ("delta", "δ(𝒜) of a subset"),
        ("theorem4", "δ_{M,N}(a, b) with its bounds"),
        ("corollary", "δ_N(a) with its bounds"),
        ("metric", "exact φ identities and ρ metric axioms"),
    ):
        a = actions.add_parser(name, parents=[common], help=text)
        a.add_argument("--group", help="catalog group: z<n>, s<n> or d<n>")
        a.add_argument("--metric", choices=METRICS)
        a.add_argument("--table", help="JSON tables {mul, act, dist}")
        if name in ("verify", "delta"):
            a.add_argument("--subset", help="comma-separated element indices")
        if name == "verify":
            a.add_argument("--subset-size", type=int, default=4)
            a.add_argument("--samples", type=int, default=1000)
        if name == "phi":
            a.add_argument("--element", type=int, required=True)
            a.add_argument("--t", help="rational threshold, e.g. 3/2")
        if name in ("theorem4", "corollary"):
            a.add_argument("--a", type=int, required=True)
            a.add_argument("--n-max", type=int, required=True)
        if name == "theorem4":
            a.add_argument("--b", type=int, required=True)
            a.add_argument("--m-max", type=int, required=True)

    p = sub.add_parser("replay", parents=[common], help="re-run a manifest and compare payloads")
    p.add_argument("path", metavar="MANIFEST")
    return parser


def _parameters(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: value for key, value in vars(args).items() if key not in RUN_FLAGS and value is not None}


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, execute, print the payload; returns the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE

    configure_logging(getattr(args, "log_level", DEFAULT_LOG_LEVEL))
    orchestrator = ExperimentOrchestrator()

    if args.command == "replay":
        try:
            manifest = ExperimentManifest.model_validate(codec.read_json(args.path))
        except ValueError as exc:
            logger.error(f"invalid manifest {args.path}: {exc}")
            return EXIT_USAGE
        record = orchestrator.replay(manifest)
    else:
        record = orchestrator.execute(args.command, _parameters(args))

    stream = sys.stdout if record.manifest is not None or args.command == "replay" else sys.stderr
    stream.write(record.payload if record.payload.endswith("\n") else record.payload + "\n")

    if record.manifest is not None:
        if args.manifest:
            codec.write_json(args.manifest, record.manifest)
            logger.info(f"manifest written to {args.manifest}")
        if args.record:
            run_id = record_run(record.manifest, record.exit_code, record.payload)
            logger.info(f"recorded run #{run_id}")
    return record.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
