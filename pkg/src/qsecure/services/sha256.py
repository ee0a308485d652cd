"""SHA-256 from primitives, used to turn a sifted key into a 256-bit cipher key."""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

from .error_handler import InvalidArgumentError

logger = logging.getLogger(__name__)

MASK32 = 0xFFFFFFFF
BLOCK_BYTES = 64

# fmt: off
# Fractional parts of the square roots of the first 8 primes.
INITIAL_HASH = (
    0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A, 0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19,
)

# Fractional parts of the cube roots of the first 64 primes.
ROUND_CONSTANTS = (
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1, 0x923F82A4, 0xAB1C5ED5,
    0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3, 0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174,
    0xE49B69C1, 0xEFBE4786, 0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147, 0x06CA6351, 0x14292967,
    0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13, 0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85,
    0xA2BFE8A1, 0xA81A664B, 0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A, 0x5B9CCA4F, 0x682E6FF3,
    0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208, 0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
)
# fmt: on


@dataclass(frozen=True)
class MessageBlock:
    """One 512-bit block as sixteen big-endian 32-bit words."""
    words: Tuple[int, ...]

    def __post_init__(self):
        if len(self.words) != 16:
            raise InvalidArgumentError(f"A message block has 16 words, got {len(self.words)}")
        if any(not 0 <= word <= MASK32 for word in self.words):
            raise InvalidArgumentError("Message block words must be 32-bit unsigned")

    @classmethod
    def from_bytes(cls, chunk: bytes) -> "MessageBlock":
        if len(chunk) != BLOCK_BYTES:
            raise InvalidArgumentError(f"A message block is {BLOCK_BYTES} bytes, got {len(chunk)}")
        return cls(tuple(int.from_bytes(chunk[i:i + 4], "big") for i in range(0, BLOCK_BYTES, 4)))


@dataclass(frozen=True)
class HashDigest:
    """Final hash state H0..H7."""
    h: Tuple[int, ...]

    def __post_init__(self):
        if len(self.h) != 8:
            raise InvalidArgumentError("A SHA-256 digest has 8 words")

    @property
    def digest(self) -> bytes:
        return b"".join(word.to_bytes(4, "big") for word in self.h)

    @property
    def hex(self) -> str:
        return self.digest.hex()

    def __str__(self) -> str:
        return self.hex


def rotr(word: int, n: int) -> int:
    return ((word >> n) | (word << (32 - n))) & MASK32


def little_sigma0(word: int) -> int:
    return rotr(word, 7) ^ rotr(word, 18) ^ (word >> 3)


def little_sigma1(word: int) -> int:
    return rotr(word, 17) ^ rotr(word, 19) ^ (word >> 10)


def big_sigma0(word: int) -> int:
    return rotr(word, 2) ^ rotr(word, 13) ^ rotr(word, 22)


def big_sigma1(word: int) -> int:
    return rotr(word, 6) ^ rotr(word, 11) ^ rotr(word, 25)


def choice(x: int, y: int, z: int) -> int:
    return (x & y) ^ (~x & z & MASK32)


def majority(x: int, y: int, z: int) -> int:
    return (x & y) ^ (x & z) ^ (y & z)


def pad_message(message: bytes) -> bytes:
    """Append 0x80, zeros, and the 64-bit big-endian bit length."""
    bit_length = len(message) * 8
    if bit_length >= 2**64:
        raise InvalidArgumentError("Message too long for SHA-256")
    zeros = (55 - len(message)) % BLOCK_BYTES
    return message + b"\x80" + b"\x00" * zeros + bit_length.to_bytes(8, "big")


def iter_blocks(padded: bytes) -> Iterator[MessageBlock]:
    if len(padded) % BLOCK_BYTES:
        raise InvalidArgumentError("Padded message length must be a multiple of 64 bytes")
    for offset in range(0, len(padded), BLOCK_BYTES):
        yield MessageBlock.from_bytes(padded[offset:offset + BLOCK_BYTES])


def message_schedule(block: MessageBlock) -> List[int]:
    """Expand 16 block words into the 64-word schedule."""
    w = list(block.words)
    for t in range(16, 64):
        w.append((little_sigma1(w[t - 2]) + w[t - 7] + little_sigma0(w[t - 15]) + w[t - 16]) & MASK32)
    return w


def compress(state: Sequence[int], block: MessageBlock) -> Tuple[int, ...]:
    """Run the 64 rounds over one block and add the result into the state."""
    if len(state) != 8:
        raise InvalidArgumentError("Hash state has 8 words")
    w = message_schedule(block)
    a, b, c, d, e, f, g, h = state
    for t in range(64):
        t1 = (h + big_sigma1(e) + choice(e, f, g) + ROUND_CONSTANTS[t] + w[t]) & MASK32
        t2 = (big_sigma0(a) + majority(a, b, c)) & MASK32
        h, g, f = g, f, e
        e = (d + t1) & MASK32
        d, c, b = c, b, a
        a = (t1 + t2) & MASK32
    return tuple((x + y) & MASK32 for x, y in zip(state, (a, b, c, d, e, f, g, h)))


def sha256_digest(message: bytes) -> HashDigest:
    state: Tuple[int, ...] = INITIAL_HASH
    for block in iter_blocks(pad_message(bytes(message))):
        state = compress(state, block)
    return HashDigest(state)


def validate_bits(bits: str) -> str:
    bits = bits.strip()
    if not bits:
        raise InvalidArgumentError("Key bit string is empty")
    if set(bits) - {"0", "1"}:
        raise InvalidArgumentError("Key bit string may only contain '0' and '1'")
    return bits


def derive_key(e91_key_bits: str) -> HashDigest:
    """
    H = SHA-256 of the ASCII '0'/'1' rendering of the sifted key.

    Args:
        e91_key_bits: Sifted key as a '0'/'1' string; surrounding whitespace is ignored

    Returns:
        HashDigest whose 32 bytes serve as the AES-256 key

    Raises:
        InvalidArgumentError: If the string is empty or holds anything but '0' and '1'
    """
    bits = validate_bits(e91_key_bits)
    digest = sha256_digest(bits.encode("ascii"))
    logger.debug(f"Derived key digest from {len(bits)} key bits")
    return digest
