"""
Raster I/O for test images and rendered outputs.

The canonical on-disk format is binary netpbm (P5 grayscale, P6 RGB,
maxval 255). Ordinary photos can be brought in and out through Pillow.
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Tuple

import numpy as np
from PIL import Image as PILImage

from .error_handler import ImageFormatError, InvalidArgumentError

logger = logging.getLogger(__name__)

MAXVAL = 255
FORMAT_FOR_CHANNELS = {1: "P5", 3: "P6"}
CHANNELS_FOR_FORMAT = {"P5": 1, "P6": 3}
TEST_IMAGE_KINDS = ("gradient", "noise", "blocks")

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


@dataclass(frozen=True, eq=False)
class Image:
    """Raster of 8-bit samples, shape (height, width, channels)."""
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.uint8)
        if samples.ndim == 2:
            samples = samples[:, :, np.newaxis]
        if samples.ndim != 3 or samples.shape[2] not in (1, 3):
            raise InvalidArgumentError(f"Image must be (height, width, 1|3), got shape {samples.shape}")
        if samples.shape[0] == 0 or samples.shape[1] == 0:
            raise InvalidArgumentError(f"Image must have at least one pixel, got shape {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int, channels: int) -> "Image":
        expected = width * height * channels
        if len(data) < expected:
            raise InvalidArgumentError(f"Need {expected} samples for {width}x{height}x{channels}, got {len(data)}")
        flat = np.frombuffer(data, dtype=np.uint8, count=expected)
        return cls(flat.reshape(height, width, channels))

    @property
    def height(self) -> int:
        return int(self.samples.shape[0])

    @property
    def width(self) -> int:
        return int(self.samples.shape[1])

    @property
    def channels(self) -> int:
        return int(self.samples.shape[2])

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.height, self.width, self.channels

    @property
    def size_label(self) -> str:
        return f"{self.width} x {self.height}"

    def tobytes(self) -> bytes:
        """Row-major, channel-interleaved samples."""
        return self.samples.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.samples, other.samples))

    __hash__ = None  # type: ignore[assignment]


def _read_token(data: bytes, offset: int, name: str) -> Tuple[bytes, int]:
    match = _TOKEN.match(data, offset)
    if not match:
        raise ImageFormatError(f"Truncated header: missing {name}")
    return match.group(1), match.end()


def parse_netpbm(data: bytes) -> Image:
    """Parse a binary P5/P6 file; comment lines in the header are skipped."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"Bad magic {magic!r}; only binary P5/P6 is supported")

    offset = 2
    values = []
    for name in ("width", "height", "maxval"):
        token, offset = _read_token(data, offset, name)
        if not token.isdigit():
            raise ImageFormatError(f"Header field {name} is not a number: {token!r}")
        values.append(int(token))
    width, height, maxval = values

    if maxval != MAXVAL:
        raise ImageFormatError(f"Unsupported maxval {maxval}; only 255 is supported")
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"Invalid dimensions {width}x{height}")
    if offset >= len(data) or not data[offset:offset + 1].isspace():
        raise ImageFormatError("Truncated header: missing whitespace before raster")
    offset += 1

    channels = CHANNELS_FOR_FORMAT[magic.decode("ascii")]
    expected = width * height * channels
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise ImageFormatError(f"Truncated payload: expected {expected} bytes, got {len(payload)}")
    return Image.from_bytes(payload, width, height, channels)


def encode_netpbm(img: Image, format: Optional[Literal["P5", "P6"]] = None) -> bytes:
    """Canonical header 'P6\\n<w> <h>\\n255\\n' followed by raw samples."""
    expected = FORMAT_FOR_CHANNELS[img.channels]
    format = format or expected
    if format != expected:
        raise InvalidArgumentError(f"{img.channels}-channel image cannot be written as {format}")
    header = f"{format}\n{img.width} {img.height}\n{MAXVAL}\n".encode("ascii")
    return header + img.tobytes()


def read_image(path: Path) -> Image:
    path = Path(path)
    img = parse_netpbm(path.read_bytes())
    logger.debug(f"Read {path} ({img.width}x{img.height}x{img.channels})")
    return img


def write_image(img: Image, path: Path, format: Optional[Literal["P5", "P6"]] = None) -> Path:
    path = Path(path)
    data = encode_netpbm(img, format)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.debug(f"Wrote {path} ({len(data)} bytes)")
    return path


def import_image(path: Path) -> Image:
    """Load any image Pillow understands; netpbm files take the exact path."""
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pgm", ".pnm"):
        return read_image(path)
    try:
        with PILImage.open(path) as opened:
            converted = opened.convert("L" if opened.mode in ("1", "L", "I", "I;16", "F") else "RGB")
            return Image(np.asarray(converted))
    except (OSError, ValueError) as e:
        raise ImageFormatError(f"Cannot decode {path}: {e}") from e


def export_png(img: Image, path: Path) -> Path:
    """Lossless PNG copy for viewing; netpbm remains the canonical output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    array = img.samples[:, :, 0] if img.channels == 1 else img.samples
    PILImage.fromarray(np.ascontiguousarray(array)).save(path, format="PNG")
    return path


def generate_test_image(size: int, kind: str = "gradient", seed: int = 0, channels: int = 3) -> Image:
    """Deterministic synthetic test image of size x size pixels."""
    if size <= 0:
        raise InvalidArgumentError(f"Image size must be positive, got {size}")
    if kind not in TEST_IMAGE_KINDS:
        raise InvalidArgumentError(f"Unknown test image kind '{kind}'; expected one of {TEST_IMAGE_KINDS}")
    if channels not in (1, 3):
        raise InvalidArgumentError("channels must be 1 or 3")

    y, x = np.mgrid[0:size, 0:size]
    if kind == "gradient":
        planes = [
            (x * 255) // max(size - 1, 1),
            (y * 255) // max(size - 1, 1),
            ((x + y) * 255) // max(2 * size - 2, 1),
        ]
    elif kind == "noise":
        rng = np.random.default_rng(seed)
        return Image(rng.integers(0, 256, size=(size, size, channels), dtype=np.uint8))
    else:
        rng = np.random.default_rng(seed)
        cell = max(size // 8, 1)
        palette = rng.integers(0, 256, size=(8, 3), dtype=np.uint8)
        index = ((y // cell) + (x // cell)) % 8
        planes = [palette[index, c] for c in range(3)]

    samples = np.stack(planes[:channels], axis=-1).astype(np.uint8)
    return Image(samples)
