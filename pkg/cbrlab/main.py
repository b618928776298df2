# cbrlab/main.py
import argparse
import logging
import sys
from pathlib import Path

from cbrlab import lab_config
from cbrlab.errors import LabError, exit_code_for
from cbrlab.registry import registry
from cbrlab.scenario import (
    SEED_LIMIT,
    builtin_scenarios,
    cross_validate,
    parse_scenario,
    resolve_scenario_path,
    run_scenario,
)

# Configure logging
logger = logging.getLogger(__name__)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < SEED_LIMIT:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {text}")
    return value


def _threads(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"threads must be >= 1, got {text}")
    return value


def cmd_run(args) -> int:
    scenario = parse_scenario(resolve_scenario_path(args.scenario))
    bundle = run_scenario(scenario, seed=args.seed, threads=args.threads)
    out_dir = Path(args.out) if args.out else Path(lab_config.DEFAULT_OUT_DIR) / scenario.name
    bundle.write(out_dir)
    print(out_dir)
    return 0


def cmd_validate(args) -> int:
    scenario = parse_scenario(resolve_scenario_path(args.scenario))
    print(f"{scenario.name}: ok ({scenario.engine}, {len(scenario.plan())} point(s))")
    for key, value in scenario.defaults.items():
        print(f"  default {key} = {value!r}")
    return 0


def cmd_list_builtin(args) -> int:
    registry.load_engines()
    for entry in builtin_scenarios():
        print(f"{entry['name']:<26} {entry['engine']:<9} {entry['description'].splitlines()[0] if entry['description'] else ''}")
    return 0


def cmd_cross_validate(args) -> int:
    first = parse_scenario(resolve_scenario_path(args.first))
    second = parse_scenario(resolve_scenario_path(args.second))
    report = cross_validate(first, second, threads=args.threads)
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {'/'.join(report.engines)} {report.metric}={report.value:.6g} tolerance={report.tolerance:g}")
    return 0 if report.passed else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbrlab", description="CBR decoherence laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file or built-in scenario")
    run.add_argument("scenario", help="path to a YAML scenario or a built-in name")
    run.add_argument("--out", help=f"output directory (default {lab_config.DEFAULT_OUT_DIR}/<name>)")
    run.add_argument("--seed", type=_seed, default=None, help="override the scenario seed (unsigned 64-bit)")
    run.add_argument("--threads", type=_threads, default=lab_config.DEFAULT_THREADS)
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="check a scenario without running it")
    validate.add_argument("scenario")
    validate.set_defaults(func=cmd_validate)

    listing = sub.add_parser("list-builtin", help="list the shipped scenarios")
    listing.set_defaults(func=cmd_list_builtin)

    cross = sub.add_parser("cross-validate", help="compare two engines on matching scenarios")
    cross.add_argument("first")
    cross.add_argument("second")
    cross.add_argument("--threads", type=_threads, default=lab_config.DEFAULT_THREADS)
    cross.set_defaults(func=cmd_cross_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, lab_config.LOG_LEVEL, logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except LabError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        for note in getattr(e, "__notes__", []):
            print(f"  {note}", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
