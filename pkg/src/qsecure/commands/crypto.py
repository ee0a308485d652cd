"""encrypt and decrypt subcommands.

The plaintext is the canonical netpbm encoding of the image, so a correct
decryption restores the file byte for byte.
"""

import argparse
import json
import logging
from pathlib import Path

from ..services.aes import ENVELOPE_EXTENSION, decrypt_payload, derive_iv, encrypt_payload, read_envelope, write_envelope
from ..services.error_handler import ImageFormatError
from ..services.image_processor import Image, encode_netpbm, import_image, parse_netpbm, write_image
from ..services.metrics_service import shannon_entropy
from ..services.sha256 import derive_key
from .options import add_key_arguments, load_key_bits, output_path, shape

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    encrypt = subparsers.add_parser("encrypt", help="Encrypt an image into a .qse envelope")
    encrypt.add_argument("--input", "-i", type=Path, required=True, help="Image to encrypt")
    add_key_arguments(encrypt)
    encrypt.add_argument("--iv-seed", type=int, help="Seed for a reproducible IV (default: OS randomness)")
    encrypt.add_argument("--output", "-o", type=Path, help=f"Envelope (default: <output-dir>/<name>{ENVELOPE_EXTENSION})")
    encrypt.set_defaults(handler=cmd_encrypt)

    decrypt = subparsers.add_parser("decrypt", help="Decrypt a .qse envelope back into an image")
    decrypt.add_argument("--input", "-i", type=Path, required=True, help="Envelope file")
    add_key_arguments(decrypt)
    decrypt.add_argument("--shape", type=shape, help="WxHxC used to render the output when it is not a valid image")
    decrypt.add_argument("--output", "-o", type=Path, help="Decrypted image (default: <output-dir>/decrypted.ppm)")
    decrypt.set_defaults(handler=cmd_decrypt)


def cmd_encrypt(args: argparse.Namespace) -> int:
    digest = derive_key(load_key_bits(args.key_file, args.key_bits))
    plaintext = encode_netpbm(import_image(args.input))
    envelope = encrypt_payload(plaintext, digest, derive_iv(args.iv_seed))

    path = write_envelope(envelope, output_path(args, Path(args.input).stem + ENVELOPE_EXTENSION))
    print(json.dumps({
        "output": str(path),
        "payload_len": envelope.payload_len,
        "ciphertext_entropy": shannon_entropy(envelope.ciphertext),
    }, indent=2))
    return 0


def cmd_decrypt(args: argparse.Namespace) -> int:
    """Decrypt; with the wrong key the garbage is still written out."""
    digest = derive_key(load_key_bits(args.key_file, args.key_bits))
    plaintext = decrypt_payload(read_envelope(args.input), digest)
    path = output_path(args, "decrypted.ppm")

    try:
        img = parse_netpbm(plaintext)
    except ImageFormatError:
        logger.warning("Decrypted payload is not a valid image; the key is probably wrong")
        if args.shape is None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(plaintext)
            print(json.dumps({"output": str(path), "valid_image": False, "bytes": len(plaintext)}, indent=2))
            return 0
        width, height, channels = args.shape
        needed = width * height * channels
        img = Image.from_bytes(plaintext.ljust(needed, b"\x00"), width, height, channels)
        write_image(img, path)
        print(json.dumps({"output": str(path), "valid_image": False, "bytes": len(plaintext)}, indent=2))
        return 0

    write_image(img, path)
    print(json.dumps({"output": str(path), "valid_image": True, "width": img.width,
                      "height": img.height, "channels": img.channels}, indent=2))
    return 0
