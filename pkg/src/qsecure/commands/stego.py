"""embed and extract subcommands."""

import argparse
import json
import logging
import math
from pathlib import Path

from ..config import get_config
from ..services import stego
from ..services.image_processor import Image, export_png, import_image, write_image
from ..services.metrics_service import psnr
from ..services.processing_pipeline import netpbm_suffix
from .options import output_path

logger = logging.getLogger(__name__)
config = get_config()


def save_image(img: Image, path: Path) -> Path:
    """Write netpbm, or a lossless PNG when the path asks for one."""
    if path.suffix.lower() == ".png":
        return export_png(img, path)
    return write_image(img, path)


def register(subparsers: argparse._SubParsersAction) -> None:
    embed = subparsers.add_parser("embed", help="Hide a secret image inside a cover image")
    embed.add_argument("--cover", type=Path, required=True, help="Cover image")
    embed.add_argument("--secret", type=Path, required=True, help="Secret image")
    embed.add_argument("--bits", "-k", type=int, choices=stego.SUPPORTED_BITS, default=config.lsb_bits,
                       help="Low-order bits used per channel")
    embed.add_argument("--output", "-o", type=Path, help="Stego image (default: <output-dir>/stego.ppm)")
    embed.set_defaults(handler=cmd_embed)

    extract = subparsers.add_parser("extract", help="Recover the secret image from a stego image")
    extract.add_argument("--input", "-i", type=Path, required=True, help="Stego image")
    extract.add_argument("--output", "-o", type=Path, help="Recovered secret (default: <output-dir>/secret.ppm)")
    extract.set_defaults(handler=cmd_extract)


def cmd_embed(args: argparse.Namespace) -> int:
    cover = import_image(args.cover)
    secret = import_image(args.secret)
    stego_image = stego.embed(cover, secret, args.bits)
    quality = psnr(cover, stego_image)

    path = save_image(stego_image, output_path(args, "stego" + netpbm_suffix(cover)))
    print(json.dumps({
        "output": str(path),
        "bits_per_channel": args.bits,
        "capacity_bytes": stego.capacity(cover, args.bits),
        "secret_bytes": len(secret.tobytes()),
        "psnr_db": None if math.isinf(quality) else quality,
    }, indent=2))
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    stego_image = import_image(args.input)
    header = stego.read_header(stego_image)
    secret = stego.extract(stego_image)

    path = save_image(secret, output_path(args, "secret" + netpbm_suffix(secret)))
    logger.info(
        f"Recovered {header.secret_width}x{header.secret_height}x{header.secret_channels} "
        f"secret at k={header.bits_per_channel_used}"
    )
    print(json.dumps({"output": str(path), "width": secret.width, "height": secret.height,
                      "channels": secret.channels, "bits_per_channel": header.bits_per_channel_used}, indent=2))
    return 0
