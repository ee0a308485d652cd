"""
Image-encryption quality metrics.

Image-domain metrics compare an image with its "encrypted image": the
ciphertext bytes truncated to width x height x channels and viewed with
the original shape.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..models.schemas import MetricsReport, SensitivityReport, TimingRow
from ..utils.stage_timer import StageTimer
from .aes import AesKey, CipherEnvelope, as_key, decrypt_payload, derive_iv, encrypt_payload
from .error_handler import InvalidArgumentError
from .image_processor import Image, generate_test_image
from .sha256 import HashDigest, derive_key, validate_bits

logger = logging.getLogger(__name__)

# Sifted key used in the key-sensitivity experiment and as the analysis key.
REFERENCE_KEY_BITS = "000010010110011110101011111010111011101011111010111"

ENTROPY_COLUMNS = ["pixel_size", "entropy_bits"]
DIFFERENTIAL_COLUMNS = ["pixel_size", "npcr_percent", "uaci_percent", "npcr_r", "npcr_g", "npcr_b"]
TIMING_COLUMNS = ["pixel_size", "encrypt_s", "decrypt_s"]
HISTOGRAM_COLUMNS = ["channel", "bin", "count"]

BytesLike = Union[bytes, bytearray, np.ndarray]


def _as_uint8(data: BytesLike) -> np.ndarray:
    if isinstance(data, np.ndarray):
        return data.astype(np.uint8, copy=False).reshape(-1)
    return np.frombuffer(bytes(data), dtype=np.uint8)


def shannon_entropy(data: BytesLike) -> float:
    """-sum p log2 p over the 256-symbol empirical distribution."""
    samples = _as_uint8(data)
    if samples.size == 0:
        raise InvalidArgumentError("Entropy of an empty byte sequence is undefined")
    counts = np.bincount(samples, minlength=256)
    p = counts[counts > 0] / samples.size
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def _check_same_shape(img1: Image, img2: Image) -> None:
    if img1.shape != img2.shape:
        raise InvalidArgumentError(f"Image shapes differ: {img1.shape} vs {img2.shape}")


def npcr(img1: Image, img2: Image) -> float:
    """Percentage of pixel positions where any channel differs."""
    _check_same_shape(img1, img2)
    changed = np.any(img1.samples != img2.samples, axis=-1)
    return float(changed.mean() * 100.0)


def npcr_per_channel(img1: Image, img2: Image) -> List[float]:
    _check_same_shape(img1, img2)
    changed = img1.samples != img2.samples
    return [float(changed[:, :, c].mean() * 100.0) for c in range(img1.channels)]


def uaci(img1: Image, img2: Image) -> float:
    """Mean absolute sample difference normalized by 255, as a percentage."""
    _check_same_shape(img1, img2)
    diff = np.abs(img1.samples.astype(np.int16) - img2.samples.astype(np.int16))
    return float(diff.mean() / 255.0 * 100.0)


def mse(img1: Image, img2: Image) -> float:
    _check_same_shape(img1, img2)
    diff = img1.samples.astype(np.float64) - img2.samples.astype(np.float64)
    return float(np.mean(diff**2))


def psnr(img1: Image, img2: Image) -> float:
    """Peak signal-to-noise ratio in dB; infinite for identical images."""
    error = mse(img1, img2)
    if error == 0.0:
        return math.inf
    return float(10.0 * math.log10(255.0**2 / error))


@dataclass(frozen=True, eq=False)
class Histogram:
    """256-bin sample counts per channel."""
    counts: np.ndarray  # shape (channels, 256)

    @property
    def channels(self) -> int:
        return int(self.counts.shape[0])

    def to_frame(self) -> pd.DataFrame:
        channel, bin_ = np.divmod(np.arange(self.counts.size), 256)
        return pd.DataFrame(
            {"channel": channel, "bin": bin_, "count": self.counts.reshape(-1)},
            columns=HISTOGRAM_COLUMNS,
        )


def histogram(img: Image) -> Histogram:
    counts = np.stack(
        [np.bincount(img.samples[:, :, c].reshape(-1), minlength=256) for c in range(img.channels)]
    )
    return Histogram(counts.astype(np.int64))


def write_histogram_csv(hist: Histogram, path: Path) -> Path:
    """CSV with header channel,bin,count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    hist.to_frame().to_csv(path, index=False)
    return path


def render_histogram(hist: Histogram, panel_height: int = 100) -> Image:
    """Bar chart per channel, panels stacked vertically; black bars on white."""
    if panel_height < 1:
        raise InvalidArgumentError("panel_height must be positive")
    rows = np.arange(panel_height)[:, np.newaxis]
    panels = []
    for counts in hist.counts:
        peak = counts.max()
        bars = np.zeros(256, dtype=np.int64) if peak == 0 else np.ceil(counts * panel_height / peak).astype(np.int64)
        filled = rows >= panel_height - bars[np.newaxis, :]
        panels.append(np.where(filled, 0, 255).astype(np.uint8))
    return Image(np.vstack(panels))


def ciphertext_as_image(envelope: CipherEnvelope, like: Image) -> Image:
    """View the leading ciphertext bytes with the shape of the plaintext image."""
    return Image.from_bytes(envelope.ciphertext, like.width, like.height, like.channels)


def encrypt_image(img: Image, key: AesKey | HashDigest | bytes, iv: bytes) -> CipherEnvelope:
    return encrypt_payload(img.tobytes(), key, iv)


def _resolve_key(key: AesKey | HashDigest | bytes | None) -> AesKey | HashDigest | bytes:
    return derive_key(REFERENCE_KEY_BITS) if key is None else key


def image_metrics(
    img: Image,
    key: AesKey | HashDigest | bytes | None = None,
    iv: Optional[bytes] = None,
    timer: Optional[StageTimer] = None,
) -> MetricsReport:
    """
    Entropy, NPCR and UACI of one image against its encrypted image, with timings.

    Args:
        img: Plaintext image
        key: Cipher key (default: digest of the reference key)
        iv: IV for the encryption (default: derive_iv(0))
        timer: Timer that receives the encrypt and decrypt stages

    Returns:
        MetricsReport for the image's pixel size
    """
    key = as_key(_resolve_key(key))
    iv = derive_iv(0) if iv is None else iv
    timer = timer or StageTimer()

    with timer.stage("encrypt", pixel_size=img.size_label):
        envelope = encrypt_image(img, key, iv)
    with timer.stage("decrypt", pixel_size=img.size_label):
        restored = decrypt_payload(envelope, key)
    if restored != img.tobytes():
        raise RuntimeError("Decryption did not restore the plaintext image")

    encrypted = ciphertext_as_image(envelope, img)
    report = MetricsReport(
        pixel_size=img.size_label,
        entropy_bits=shannon_entropy(encrypted.samples),
        npcr_percent=npcr(img, encrypted),
        uaci_percent=uaci(img, encrypted),
        npcr_per_channel=npcr_per_channel(img, encrypted),
        encrypt_s=timer.elapsed("encrypt") or 0.0,
        decrypt_s=timer.elapsed("decrypt") or 0.0,
    )
    logger.info(
        f"{report.pixel_size}: entropy={report.entropy_bits:.4f} "
        f"NPCR={report.npcr_percent:.4f}% UACI={report.uaci_percent:.4f}%"
    )
    return report


def evaluate_sizes(
    pixel_sizes: Sequence[int],
    kind: str = "blocks",
    seed: int = 0,
    key: AesKey | HashDigest | bytes | None = None,
    iv: Optional[bytes] = None,
) -> List[MetricsReport]:
    """Run image_metrics on a generated test image at each size."""
    aes_key = as_key(_resolve_key(key))
    return [
        image_metrics(generate_test_image(size, kind=kind, seed=seed), aes_key, iv)
        for size in pixel_sizes
    ]


def entropy_table(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"pixel_size": r.pixel_size, "entropy_bits": r.entropy_bits} for r in reports],
        columns=ENTROPY_COLUMNS,
    )


def differential_table(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    rows = []
    for r in reports:
        per_channel = list(r.npcr_per_channel) + [None] * (3 - len(r.npcr_per_channel))
        rows.append(
            {
                "pixel_size": r.pixel_size,
                "npcr_percent": r.npcr_percent,
                "uaci_percent": r.uaci_percent,
                "npcr_r": per_channel[0],
                "npcr_g": per_channel[1],
                "npcr_b": per_channel[2],
            }
        )
    return pd.DataFrame(rows, columns=DIFFERENTIAL_COLUMNS)


def timing_table(rows: Sequence[TimingRow]) -> pd.DataFrame:
    """Rows per size followed by an Average row; empty input gives an empty table."""
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=TIMING_COLUMNS)
    if frame.empty:
        return frame
    average = pd.DataFrame(
        [{"pixel_size": "Average", "encrypt_s": frame["encrypt_s"].mean(), "decrypt_s": frame["decrypt_s"].mean()}],
        columns=TIMING_COLUMNS,
    )
    return pd.concat([frame, average], ignore_index=True)


def timing_report(
    pixel_sizes: Sequence[int],
    kind: str = "blocks",
    seed: int = 0,
    key: AesKey | HashDigest | bytes | None = None,
    iv: Optional[bytes] = None,
) -> pd.DataFrame:
    """Encrypt/decrypt wall-clock time per image size, plus the average."""
    reports = evaluate_sizes(pixel_sizes, kind=kind, seed=seed, key=key, iv=iv)
    return timing_table(timing_rows(reports))


def timing_rows(reports: Sequence[MetricsReport]) -> List[TimingRow]:
    return [TimingRow(pixel_size=r.pixel_size, encrypt_s=r.encrypt_s, decrypt_s=r.decrypt_s) for r in reports]


def flip_bit(bits: str, index: int) -> str:
    bits = validate_bits(bits)
    if not 0 <= index < len(bits):
        raise InvalidArgumentError(f"flip_index {index} is outside a {len(bits)}-bit key")
    return bits[:index] + ("1" if bits[index] == "0" else "0") + bits[index + 1:]


def key_sensitivity_experiment(
    image: Image,
    key_bits: str = REFERENCE_KEY_BITS,
    flip_index: int = 0,
    iv: Optional[bytes] = None,
) -> SensitivityReport:
    """
    Encrypt with H(K1), decrypt with H(K1) and with H(K2) where K2 flips one bit.

    Args:
        image: Plaintext image
        key_bits: Key K1 as a '0'/'1' string
        flip_index: Position of the bit flipped to form K2
        iv: IV for the encryption (default: derive_iv(0))

    Returns:
        SensitivityReport with both digests, NPCR of the wrong-key image and the
        share of differing bytes

    Raises:
        InvalidArgumentError: If key_bits is not a bit string or flip_index is out of range
    """
    key_bits = validate_bits(key_bits)
    flipped = flip_bit(key_bits, flip_index)
    iv = derive_iv(0) if iv is None else iv

    digest_k1 = derive_key(key_bits)
    digest_k2 = derive_key(flipped)

    envelope = encrypt_image(image, digest_k1, iv)
    plaintext = image.tobytes()
    restored = decrypt_payload(envelope, digest_k1)
    wrong = decrypt_payload(envelope, digest_k2)

    wrong_image = Image.from_bytes(wrong, image.width, image.height, image.channels)
    byte_diff = float(np.mean(_as_uint8(plaintext) != _as_uint8(wrong)) * 100.0)

    report = SensitivityReport(
        key_bits=key_bits,
        flipped_key_bits=flipped,
        flip_index=flip_index,
        digest_k1=digest_k1.hex,
        digest_k2=digest_k2.hex,
        npcr_percent=npcr(image, wrong_image),
        uaci_percent=uaci(image, wrong_image),
        byte_difference_percent=byte_diff,
        correct_key_restores=restored == plaintext,
    )
    logger.info(
        f"Key sensitivity: flipping bit {flip_index} gives NPCR={report.npcr_percent:.4f}% "
        f"against the plaintext"
    )
    return report
