# qwell/main.py
from dotenv import load_dotenv

load_dotenv()

import argparse
import json
import logging
import sys
from typing import List, Optional

import anyio

from qwell import __version__
from qwell.core.exceptions import QwellBaseException
from qwell.core.logger import setup_logging
from qwell.core.models import CommandInput, CommandOutput
from qwell.core.registry import CommandRegistry

logger = logging.getLogger("Qwell.Main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwell",
        description="Simultaneous bilinear control of particles in an infinite square well",
    )
    parser.add_argument("--version", action="version", version=f"qwell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, description in CommandRegistry.get_menu().items():
        cmd = sub.add_parser(name, help=description, description=description)
        cmd.add_argument("--config", help="Run config (JSON, or YAML)")
        cmd.add_argument("--out", help="Directory receiving the reports")
        cmd.add_argument("--seed", type=int, help="Seed for every random draw of the run")
        cmd.add_argument("--threads", type=int, help="Worker threads for scans")
        cmd.add_argument("--log-level", help="Overrides QWELL_LOG_LEVEL")
    return parser


def run_command(command: str, config_path: Optional[str] = None, overrides: Optional[dict] = None) -> CommandOutput:
    """Resolve the run config, dispatch it through the kernel and return the command output."""
    from qwell.core.config import RunConfigLoader
    from qwell.core.kernel import kernel

    try:
        params = RunConfigLoader().load(config_path, defaults={}, overrides=overrides or {})
    except QwellBaseException as e:
        logger.error(f"❌ {e.message}")
        return CommandOutput(status="error", message=e.message, exit_code=e.exit_code)
    packet = CommandInput(task=command, params=params, out_dir=(overrides or {}).get("out"))
    return anyio.run(kernel.dispatch, packet)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level)
    overrides = {"out": args.out, "seed": args.seed, "threads": args.threads}
    result = run_command(args.command, args.config, overrides)

    print(json.dumps({"status": result.status, "message": result.message, "files": result.files}, indent=2))
    if result.status != "success":
        logger.error(f"❌ {result.message}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
