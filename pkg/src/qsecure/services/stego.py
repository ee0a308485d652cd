"""
LSB steganography.

A 12-byte header (magic "SG", secret width and height as 32-bit big-endian
integers, channel count, bits per channel) followed by the raw secret
samples is written MSB-first into the k low-order bits of the cover
samples, in row-major channel-interleaved order.
"""

import logging
import struct
from typing import Optional

import numpy as np
from pydantic import ValidationError

from ..models.schemas import StegoHeader
from .error_handler import (
    CapacityError,
    InvalidArgumentError,
    NotStegoImageError,
    create_capacity_error,
)
from .image_processor import Image

logger = logging.getLogger(__name__)

MAGIC = b"SG"
HEADER_FORMAT = ">2sIIBB"
HEADER_BYTES = struct.calcsize(HEADER_FORMAT)
SUPPORTED_BITS = (1, 2, 4)


def _check_bits(bits_per_channel: int) -> int:
    if bits_per_channel not in SUPPORTED_BITS:
        raise InvalidArgumentError(f"bits_per_channel must be one of {SUPPORTED_BITS}, got {bits_per_channel}")
    return bits_per_channel


def encode_header(header: StegoHeader) -> bytes:
    return struct.pack(
        HEADER_FORMAT,
        header.magic,
        header.secret_width,
        header.secret_height,
        header.secret_channels,
        header.bits_per_channel_used,
    )


def decode_header(data: bytes) -> Optional[StegoHeader]:
    """Parse header bytes; None when they do not form a valid header."""
    if len(data) < HEADER_BYTES:
        return None
    magic, width, height, channels, bits = struct.unpack(HEADER_FORMAT, data[:HEADER_BYTES])
    if magic != MAGIC:
        return None
    try:
        return StegoHeader(
            magic=magic,
            secret_width=width,
            secret_height=height,
            secret_channels=channels,
            bits_per_channel_used=bits,
        )
    except ValidationError:
        return None


def capacity(cover: Image, bits_per_channel: int) -> int:
    """Secret bytes the cover can carry after the header."""
    k = _check_bits(bits_per_channel)
    total = cover.width * cover.height * cover.channels * k // 8
    return max(total - HEADER_BYTES, 0)


def _bytes_to_chunks(data: bytes, k: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    weights = (1 << np.arange(k - 1, -1, -1)).astype(np.uint8)
    return (bits.reshape(-1, k) * weights).sum(axis=1).astype(np.uint8)


def _chunks_to_bytes(samples: np.ndarray, k: int) -> bytes:
    shifts = np.arange(k - 1, -1, -1, dtype=np.uint8)
    bits = (samples[:, np.newaxis] >> shifts) & 1
    return np.packbits(bits.reshape(-1).astype(np.uint8)).tobytes()


def _read_low_bits(flat: np.ndarray, offset_bytes: int, n_bytes: int, k: int) -> bytes:
    per_byte = 8 // k
    start = offset_bytes * per_byte
    stop = start + n_bytes * per_byte
    mask = np.uint8((1 << k) - 1)
    return _chunks_to_bytes(flat[start:stop] & mask, k)


def embed(cover: Image, secret: Image, bits_per_channel: int = 2) -> Image:
    """
    Hide secret in the k low-order bits of cover.

    Args:
        cover: Image that carries the payload; it is not modified
        secret: Image to hide
        bits_per_channel: Low-order bits replaced per sample (1, 2 or 4)

    Returns:
        New image of the cover's shape holding the header and secret samples

    Raises:
        InvalidArgumentError: If bits_per_channel is not supported
        CapacityError: If the secret does not fit after the 12-byte header
    """
    k = _check_bits(bits_per_channel)
    available = capacity(cover, k)
    payload = secret.tobytes()
    if len(payload) > available:
        raise CapacityError(create_capacity_error(len(payload), available, k))

    header = StegoHeader(
        secret_width=secret.width,
        secret_height=secret.height,
        secret_channels=secret.channels,
        bits_per_channel_used=k,
    )
    chunks = _bytes_to_chunks(encode_header(header) + payload, k)

    flat = cover.samples.reshape(-1).copy()
    keep = np.uint8(0xFF ^ ((1 << k) - 1))
    flat[: len(chunks)] = (flat[: len(chunks)] & keep) | chunks

    logger.debug(
        f"Embedded {secret.width}x{secret.height}x{secret.channels} secret "
        f"into {len(chunks)} of {flat.size} cover samples at k={k}"
    )
    return Image(flat.reshape(cover.shape))


def read_header(stego: Image) -> StegoHeader:
    """Find the embedding header, probing k = 1, 2, 4 in that order."""
    flat = stego.samples.reshape(-1)
    for k in SUPPORTED_BITS:
        if flat.size * k // 8 < HEADER_BYTES:
            continue
        header = decode_header(_read_low_bits(flat, 0, HEADER_BYTES, k))
        if header is None or header.bits_per_channel_used != k:
            continue
        needed = header.secret_width * header.secret_height * header.secret_channels
        if needed > capacity(stego, k):
            continue
        return header
    raise NotStegoImageError(
        "No valid embedding header found at 1, 2 or 4 bits per channel",
        samples=int(flat.size),
    )


def extract(stego: Image) -> Image:
    """
    Recover the embedded secret image byte-exact.

    Args:
        stego: Image produced by embed

    Returns:
        The secret image, with its width, height and channels taken from the header

    Raises:
        NotStegoImageError: If no valid header is found at 1, 2 or 4 bits per channel
    """
    header = read_header(stego)
    k = header.bits_per_channel_used
    n_bytes = header.secret_width * header.secret_height * header.secret_channels
    payload = _read_low_bits(stego.samples.reshape(-1), HEADER_BYTES, n_bytes, k)
    logger.debug(f"Extracted {n_bytes} secret bytes at k={k}")
    return Image.from_bytes(payload, header.secret_width, header.secret_height, header.secret_channels)
