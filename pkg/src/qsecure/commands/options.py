"""Argument helpers shared by the subcommands."""

import argparse
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import ValidationError

from ..config import get_config
from ..models.schemas import RunConfig
from ..services.error_handler import InvalidArgumentError
from ..services.sha256 import validate_bits

config = get_config()


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{value}' is not an integer")
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {number}")
    return number


def int_list(value: str) -> List[int]:
    try:
        numbers = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{value}' is not a comma-separated list of integers")
    if not numbers or any(n < 1 for n in numbers):
        raise argparse.ArgumentTypeError("expected positive integers such as 64,128,256")
    return numbers


def shape(value: str) -> Tuple[int, int, int]:
    """Parse WxHxC, e.g. 64x64x3."""
    parts = value.lower().split("x")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise argparse.ArgumentTypeError(f"'{value}' is not of the form WxHxC")
    width, height, channels = (int(p) for p in parts)
    if width < 1 or height < 1 or channels not in (1, 3):
        raise argparse.ArgumentTypeError("width and height must be positive and channels 1 or 3")
    return width, height, channels


def add_protocol_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("E91 protocol")
    group.add_argument("--singlets", type=positive_int, default=config.singlets, help="Number of singlets to distribute")
    group.add_argument("--seed", type=int, default=config.seed, help="Seed for basis choices and outcomes")
    group.add_argument("--depolarizing-p", type=float, default=config.depolarizing_p, help="Singlet weight p in [0, 1]")
    group.add_argument("--eve", action="store_true", help="Insert an intercept-resend eavesdropper")
    group.add_argument("--threshold", type=float, default=config.chsh_threshold, help="CHSH security threshold")
    group.add_argument("--force", action="store_true", help="Continue even when the CHSH check fails")


def add_key_arguments(parser: argparse.ArgumentParser, required: bool = True, *bits_aliases: str) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--key-file", type=Path, help="Text file of '0'/'1' key bits")
    group.add_argument("--key-bits", *bits_aliases, dest="key_bits", help="Key bits given inline")


def run_config_from_args(args: argparse.Namespace, **overrides) -> RunConfig:
    """Merge parsed flags into a validated RunConfig."""
    values = {
        "singlets": getattr(args, "singlets", config.singlets),
        "seed": getattr(args, "seed", config.seed),
        "depolarizing_p": getattr(args, "depolarizing_p", config.depolarizing_p),
        "eve": getattr(args, "eve", False),
        "chsh_threshold": getattr(args, "threshold", config.chsh_threshold),
        "lsb_k": getattr(args, "bits", config.lsb_bits),
        "iv_seed": getattr(args, "iv_seed", None),
        "force": getattr(args, "force", False),
    }
    values.update(overrides)
    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise InvalidArgumentError(f"Invalid configuration: {problems}") from e


def load_key_bits(key_file: Optional[Path], key_bits: Optional[str]) -> str:
    """Read key bits from a file or the command line; surrounding whitespace is ignored."""
    if key_file is not None:
        text = Path(key_file).read_text(encoding="ascii", errors="replace")
    elif key_bits is not None:
        text = key_bits
    else:
        raise InvalidArgumentError("A key is required: pass --key-file or --key-bits")
    return validate_bits("".join(text.split()))


def output_path(args: argparse.Namespace, default_name: str) -> Path:
    """Explicit --output, or default_name inside the global output directory."""
    if getattr(args, "output", None):
        return Path(args.output)
    return Path(args.output_dir) / default_name
