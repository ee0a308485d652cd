"""Command-line entry point for the qsecure toolkit."""

import argparse
import logging
import logging.config
import sys
from typing import List, Optional

from dotenv import load_dotenv

from . import __version__
from .commands import analyze, crypto, demo, keygen, stego
from .config import get_config
from .services.error_handler import handle_cli_error

load_dotenv()
config = get_config()
logger = logging.getLogger(__name__)

COMMAND_MODULES = (keygen, stego, crypto, analyze, demo)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsecure",
        description="E91 key distribution, SHA-256 key derivation, AES-256 image encryption and LSB steganography",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=config.log_level,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper, help="Log level")
    parser.add_argument("--json-logs", action="store_true", default=None, help="Emit logs as JSON lines")
    parser.add_argument("--output-dir", default=config.output_dir, help="Directory for default output paths")

    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def configure_logging(level: str, json_logs: Optional[bool]) -> None:
    logging.config.dictConfig(config.get_log_config(level=level, json_logs=json_logs))


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the chosen subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.json_logs)
    logger.debug(f"Running '{args.command}' (environment: {config.environment})")

    try:
        return args.handler(args)
    except Exception as e:
        return handle_cli_error(e)


if __name__ == "__main__":
    sys.exit(main())
