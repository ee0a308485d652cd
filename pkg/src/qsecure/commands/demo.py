"""demo subcommand: the whole pipeline on one cover/secret pair."""

import argparse
import logging
from pathlib import Path

from ..config import get_config
from ..services import stego
from ..services.image_processor import generate_test_image, import_image
from ..services.processing_pipeline import ProcessingPipeline, manifest_json
from .options import add_protocol_arguments, run_config_from_args

logger = logging.getLogger(__name__)
config = get_config()

DEFAULT_COVER_SIZE = 128
DEFAULT_SECRET_SIZE = 64


def register(subparsers: argparse._SubParsersAction) -> None:
    demo = subparsers.add_parser("demo", help="Run keygen, embed, encrypt, decrypt and extract end to end")
    add_protocol_arguments(demo)
    demo.add_argument("--cover", type=Path, help="Cover image (default: generated blocks image)")
    demo.add_argument("--secret", type=Path, help="Secret image (default: generated grayscale gradient)")
    demo.add_argument("--bits", "-k", type=int, choices=stego.SUPPORTED_BITS, default=config.lsb_bits,
                      help="Low-order bits used per channel")
    demo.add_argument("--iv-seed", type=int, help="Seed for the IV (default: --seed)")
    demo.add_argument("--output", "-o", type=Path, help="Artifact directory (default: <output-dir>/demo)")
    demo.set_defaults(handler=cmd_demo)


def cmd_demo(args: argparse.Namespace) -> int:
    run_config = run_config_from_args(args, cover=args.cover, secret=args.secret)
    cover = (
        import_image(args.cover) if args.cover
        else generate_test_image(DEFAULT_COVER_SIZE, kind="blocks", seed=run_config.seed)
    )
    secret = (
        import_image(args.secret) if args.secret
        else generate_test_image(DEFAULT_SECRET_SIZE, kind="gradient", channels=1)
    )

    out = Path(args.output) if args.output else Path(args.output_dir) / "demo"
    result = ProcessingPipeline(run_config, out).run(cover, secret)
    for name, path in sorted(result.paths.items()):
        logger.info(f"Wrote {name} to {path}")
    stages = result.timings["stages"]
    logger.info("Stage timings: " + ", ".join(f"{name}={entry['total_s']:.3f}s" for name, entry in stages.items()))

    print(manifest_json(result.manifest), end="")
    return 0
