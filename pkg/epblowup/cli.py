# python
"""
epblowup/cli.py
Command-line entry point: argparse subcommands, logging setup and exit codes.
"""
import argparse
import asyncio
import json
import logging
import pathlib
import sys
from typing import Any, Dict, List, Optional

from .env import env_default
from .errors import ConfigError
from .router import COMMANDS, Router
from .runlog import RunSession

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", type=pathlib.Path, help="run configuration file")
    src.add_argument("--scenario", help="named configuration under scenarios/")
    common.add_argument("--out", default=env_default("OUT"), help="output directory")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--tol", type=float, help="relative integration tolerance")
    common.add_argument("--horizon", type=float, help="fixed integration horizon")
    common.add_argument("--jobs", type=int, default=_int_or_none(env_default("JOBS")), help="worker processes")
    common.add_argument("--log-level", default=env_default("LOG_LEVEL", "WARNING"))

    parser = argparse.ArgumentParser(prog="epblowup", description="Blow-up detection for radial Euler-Poisson data")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _int_or_none(value: Optional[str]) -> Optional[int]:
    try:
        return int(value) if value is not None else None
    except ValueError:
        return None


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    out: Dict[str, Dict[str, Any]] = {"policy": {}, "output": {}}
    if args.tol is not None:
        out["policy"]["tol"] = args.tol
    if args.horizon is not None:
        out["policy"]["horizon"] = args.horizon
    if args.jobs is not None:
        out["policy"]["jobs"] = args.jobs
    if args.out:
        out["output"]["dir"] = args.out
    if args.format:
        out["output"]["format"] = args.format
    return out


async def run_command(args: argparse.Namespace, router: Optional[Router] = None) -> int:
    router = router or Router()
    try:
        config = router.resolve_config(args.config, args.scenario, overrides_from_args(args))
    except ConfigError as exc:
        print(f"epblowup: {exc}", file=sys.stderr)
        return exc.exit_code

    session = RunSession(
        args.command,
        events_file=str(config.output.path / "events.jsonl"),
        persist=config.output.events,
    )
    await session.log("config.loaded", "config", source=config.source)
    code, report = await router.dispatch(session, args.command, config)
    await session.close("ok" if code == 0 else "error", code)
    if code == 0:
        print(json.dumps(_headline(args.command, report), sort_keys=True, default=str))
    else:
        print(f"epblowup: {report.get('error')}", file=sys.stderr)
    return code


def _headline(command: str, report: Dict[str, Any]) -> Dict[str, Any]:
    keys = ("verdict", "agreement", "global", "offending_r0", "fit", "passed", "regime", "files")
    return {"command": command, **{k: report[k] for k in keys if k in report}}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return asyncio.run(run_command(args))


if __name__ == "__main__":
    sys.exit(main())
