"""
Command line front end
Author: Saito SDK developers
Copyright 2024

    saito-sdk invariants E7
    saito-sdk potential E6 --threads 4
    saito-sdk verify E6 --against-fixtures
    saito-sdk fixtures check

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 internal
inconsistency.
"""
import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

from saito_sdk.checksum import verify_checksums
from saito_sdk.errors import SaitoError, UnknownGroupError
from saito_sdk.groups import CATALOG, group_spec
from saito_sdk.saito_message import FIXTURE_DIR, FixtureSet
from saito_sdk.saito_sdk import (
    DEFAULT_CACHE,
    EXIT_INCONSISTENT,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFICATION,
    SAITOSDK,
    SOLVERS,
    RunConfig,
    __version__,
)
from saito_sdk.saito import DEFAULT_SEED
from saito_sdk.utils import toRational

ENV_CACHE = "SAITO_CACHE_DIR"
ENV_THREADS = "SAITO_THREADS"

STAGES = ("metric", "eta", "flat", "potential", "verify")

_log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


def _rational(text: str):
    try:
        return toRational(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise argparse.ArgumentTypeError("not an exact rational: {!r}".format(text))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saito-sdk",
        description="Saito flat coordinates and Frobenius potentials of E6, E7, E8 in exact arithmetic",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("group", nargs="?", help="group name ({})".format(", ".join(CATALOG)))
    common.add_argument("--group", dest="group_flag", metavar="GROUP", help="group name, alternative to the positional")
    common.add_argument("--solver", choices=SOLVERS, default="modular", help="interpolation solver (default modular)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (env {})".format(ENV_THREADS))
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="sample grid seed")
    common.add_argument("--metric-scale", type=_rational, default=toRational(2), help="convention factor sigma (default 2)")
    common.add_argument("--cache", default=None, help="cache directory (env {})".format(ENV_CACHE))
    common.add_argument("--debug", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    inv = sub.add_parser("invariants", parents=[common], help="write the basic invariants")
    inv.add_argument("--degree", type=int, default=None, help="only this degree")

    for stage in STAGES[:-1]:
        sub.add_parser(stage, parents=[common], help="run the pipeline up to the {} stage".format(stage))

    ver = sub.add_parser("verify", parents=[common], help="eta constancy, Euler, WDVV and fixture checks")
    ver.add_argument("--against-fixtures", action="store_true", help="compare with the published tables")
    ver.add_argument("--fixture-dir", default=FIXTURE_DIR, help="directory of the fixture files")
    ver.add_argument("--symbolic-wdvv", action="store_true", help="WDVV as polynomial identities (rank <= 6)")
    ver.add_argument("--trials", type=int, default=50, help="WDVV evaluation points")

    fx = sub.add_parser("fixtures", help="check the golden fixture files")
    fx.add_argument("action", nargs="?", choices=["check"], default="check")
    fx.add_argument("--dir", default=FIXTURE_DIR, help="fixture directory")
    fx.add_argument("--debug", action="store_true", help="debug logging")
    return parser


def resolve_config(args: argparse.Namespace, environ: Optional[Dict[str, str]] = None) -> RunConfig:
    """Flag > environment > default."""
    environ = os.environ if environ is None else environ
    if args.group and args.group_flag and args.group.upper() != args.group_flag.upper():
        raise UsageError("group given twice: {} and {}".format(args.group, args.group_flag))
    group = args.group or args.group_flag
    if not group:
        raise UsageError("a group is required")
    threads = args.threads
    if threads is None:
        try:
            threads = int(environ.get(ENV_THREADS, "1"))
        except ValueError:
            raise UsageError("{} must be an integer".format(ENV_THREADS))
    cache = args.cache or environ.get(ENV_CACHE) or DEFAULT_CACHE
    try:
        return RunConfig(
            group=group_spec(group).name,
            solver=args.solver,
            threads=threads,
            seed=args.seed,
            metric_scale=args.metric_scale,
            cache_dir=cache,
            symbolic_wdvv=getattr(args, "symbolic_wdvv", False),
            trials=getattr(args, "trials", 50),
        )
    except ValueError as e:
        raise UsageError(str(e))


def check_fixtures(directory: str = FIXTURE_DIR) -> List[str]:
    """PASS/FAIL lines for the checksum file and every fixture file."""
    lines = []
    sums = os.path.join(directory, "SHA256SUMS")
    if os.path.exists(sums):
        bad = verify_checksums(sums)
        lines.append("FAIL checksums: {}".format(", ".join(bad)) if bad else "PASS checksums")
    else:
        lines.append("FAIL checksums: {} is missing".format(sums))
    for name in CATALOG:
        if not os.path.exists(os.path.join(directory, "{}.ini".format(name))):
            continue
        g = group_spec(name)
        try:
            errors = FixtureSet.load(g, directory).consistency_errors(g)
        except SaitoError as e:
            errors = [str(e)]
        lines.append("FAIL fixture {}: {}".format(name, "; ".join(errors)) if errors else "PASS fixture {}".format(name))
    return lines


def run(args: argparse.Namespace) -> int:
    if args.command == "fixtures":
        lines = check_fixtures(args.dir)
        print("\n".join(lines))
        return EXIT_OK if all(line.startswith("PASS") for line in lines) else EXIT_VERIFICATION

    config = resolve_config(args)
    sdk = SAITOSDK(config, debug=args.debug)
    if args.command == "invariants":
        ok = sdk.requestInvariants(args.degree)
    elif args.command == "metric":
        ok = sdk.requestMetric()
    elif args.command == "eta":
        ok = sdk.requestEta()
    elif args.command == "flat":
        ok = sdk.requestFlat()
    elif args.command == "potential":
        ok = sdk.requestPotential()
    else:
        ok = sdk.requestVerify(against_fixtures=args.against_fixtures, fixture_dir=args.fixture_dir)
        for report in sdk.getReports():
            print(report.format())
    if ok:
        print("{} {}: artifacts in {}".format(args.command, config.group, sdk.getCacheRoot()))
        return EXIT_OK
    err = sdk.lastError()
    print("error: {}".format(err), file=sys.stderr)
    return sdk.exitCode()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except (UsageError, UnknownGroupError) as e:
        print("{}: error: {}".format(parser.prog, e.args[0] if e.args else e), file=sys.stderr)
        return EXIT_USAGE
    except SaitoError as e:
        print("{}: internal inconsistency: {}".format(parser.prog, e), file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
