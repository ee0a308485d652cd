"""keygen and hash-key subcommands."""

import argparse
import json
import logging
from pathlib import Path

from ..services.e91 import key_generation_report, write_key_report_csv
from ..services.processing_pipeline import establish_key
from ..services.sha256 import derive_key
from .options import add_key_arguments, add_protocol_arguments, load_key_bits, output_path, run_config_from_args

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    keygen = subparsers.add_parser("keygen", help="Run E91 and write the sifted key")
    add_protocol_arguments(keygen)
    keygen.add_argument("--output", "-o", type=Path, help="Key file (default: <output-dir>/key.txt)")
    keygen.add_argument("--report", type=Path, help="Also write the key generation row as CSV")
    keygen.set_defaults(handler=cmd_keygen)

    hash_key = subparsers.add_parser("hash-key", help="Print the SHA-256 digest of a key")
    add_key_arguments(hash_key, True, "--bits")
    hash_key.set_defaults(handler=cmd_hash_key)


def cmd_keygen(args: argparse.Namespace) -> int:
    """Distribute singlets, check CHSH, write the key and print the report."""
    run_config = run_config_from_args(args)
    result, digest = establish_key(run_config)

    key_path = output_path(args, "key.txt")
    key_path.parent.mkdir(parents=True, exist_ok=True)
    key_path.write_text(result.sifted_key + "\n", encoding="ascii")

    row = key_generation_report(result)
    if args.report:
        write_key_report_csv([row], args.report)

    report = {
        "singlets": result.singlets,
        "key_bits": result.key_bits,
        "chsh": result.chsh_value,
        "threshold": result.threshold,
        "secure": result.secure,
        "qber": result.qber,
        "time_s": row.time_s,
        "rate_bps": row.rate_bps,
        "digest": digest.hex,
        "key_file": str(key_path),
    }
    print(json.dumps(report, indent=2))
    logger.info(f"Wrote {result.key_bits} key bits to {key_path}")
    return 0


def cmd_hash_key(args: argparse.Namespace) -> int:
    bits = load_key_bits(args.key_file, args.key_bits)
    print(derive_key(bits).hex)
    return 0
