"""Shared fixtures for qsecure tests."""

import numpy as np
import pytest

from src.qsecure.services.image_processor import Image, generate_test_image
from src.qsecure.services.sha256 import derive_key

# Sifted keys with their published digests under the ASCII bit-string encoding.
REFERENCE_K1 = "000010010110011110101011111010111011101011111010111"
REFERENCE_K2 = "100010010110011110101011111010111011101011111010111"
REFERENCE_K1_DIGEST = "8a49d097d696624218e1872935d9e3d2767bd9953d2e4a6b6946210966e5732c"
REFERENCE_K2_DIGEST = "200fa0c121fc9d2e2b7640445f05308ce671c68b29a1d2aae6311a392d468f5b"


@pytest.fixture
def rng():
    """Provide a seeded numpy generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def small_rgb_image():
    """2x2 RGB image with distinct samples."""
    return Image(np.arange(12, dtype=np.uint8).reshape(2, 2, 3))


@pytest.fixture
def cover_image():
    """64x64 RGB cover."""
    return generate_test_image(64, kind="blocks", seed=3)


@pytest.fixture
def secret_image():
    """16x16 grayscale secret."""
    return generate_test_image(16, kind="gradient", channels=1)


@pytest.fixture
def reference_digest():
    """Digest of the reference key K1."""
    return derive_key(REFERENCE_K1)


@pytest.fixture
def fixed_iv():
    return bytes(range(16))
