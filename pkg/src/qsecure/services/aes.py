"""
AES-256 block cipher, CBC mode and the cipher envelope.

The State is a 4x4 uint8 array in FIPS-197 orientation: byte i of a block
lands at row i % 4, column i // 4. Layer functions accept any array of
shape (..., 4, 4), so a batch of states is transformed in one call; CBC
decryption uses this to process all blocks at once. CBC encryption is
sequential and runs on a table-driven word implementation instead.
"""

import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .error_handler import EnvelopeFormatError, InvalidArgumentError
from .sha256 import HashDigest

logger = logging.getLogger(__name__)

BLOCK_BYTES = 16
KEY_BYTES = 32
NK = 8
NB = 4
NR = 14
ENVELOPE_MAGIC = b"QSE1"
ENVELOPE_HEADER = struct.Struct(">4s16sQ")
ENVELOPE_EXTENSION = ".qse"


### GF(2^8) arithmetic


def xtime(a: int) -> int:
    a <<= 1
    return (a ^ 0x11B) & 0xFF if a & 0x100 else a


def gf_mul(a: int, b: int) -> int:
    result = 0
    while b:
        if b & 1:
            result ^= a
        a = xtime(a)
        b >>= 1
    return result


def gf_inverse(a: int) -> int:
    """Multiplicative inverse in GF(2^8); 0 maps to 0."""
    if a == 0:
        return 0
    # a^254 = a^-1 since the multiplicative group has order 255.
    result, power, exponent = 1, a, 254
    while exponent:
        if exponent & 1:
            result = gf_mul(result, power)
        power = gf_mul(power, power)
        exponent >>= 1
    return result


def _affine(b: int) -> int:
    result = 0x63
    for shift in range(5):
        result ^= ((b << shift) | (b >> (8 - shift))) & 0xFF
    return result


def build_sbox() -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """S-box from inversion plus the affine map with c = 0x63, and its inverse."""
    sbox = tuple(_affine(gf_inverse(x)) for x in range(256))
    inverse = [0] * 256
    for x, y in enumerate(sbox):
        inverse[y] = x
    return sbox, tuple(inverse)


SBOX, INV_SBOX = build_sbox()
_SBOX_ARRAY = np.array(SBOX, dtype=np.uint8)
_INV_SBOX_ARRAY = np.array(INV_SBOX, dtype=np.uint8)
_MUL = {factor: np.array([gf_mul(x, factor) for x in range(256)], dtype=np.uint8) for factor in (2, 3, 9, 11, 13, 14)}

RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40)


### State layers


def block_to_state(block: bytes) -> np.ndarray:
    if len(block) != BLOCK_BYTES:
        raise InvalidArgumentError(f"A block is {BLOCK_BYTES} bytes, got {len(block)}")
    return np.frombuffer(bytes(block), dtype=np.uint8).reshape(4, 4).T.copy()


def state_to_block(state: np.ndarray) -> bytes:
    return state.T.tobytes()


def sub_bytes(state: np.ndarray) -> np.ndarray:
    return _SBOX_ARRAY[state]


def inv_sub_bytes(state: np.ndarray) -> np.ndarray:
    return _INV_SBOX_ARRAY[state]


def shift_rows(state: np.ndarray) -> np.ndarray:
    """Rotate row r left by r positions."""
    out = state.copy()
    for r in range(1, 4):
        out[..., r, :] = np.roll(state[..., r, :], -r, axis=-1)
    return out


def inv_shift_rows(state: np.ndarray) -> np.ndarray:
    out = state.copy()
    for r in range(1, 4):
        out[..., r, :] = np.roll(state[..., r, :], r, axis=-1)
    return out


def mix_columns(state: np.ndarray) -> np.ndarray:
    """Multiply each column by the circulant {02, 03, 01, 01}."""
    s0, s1, s2, s3 = (state[..., r, :] for r in range(4))
    m2, m3 = _MUL[2], _MUL[3]
    return np.stack(
        [
            m2[s0] ^ m3[s1] ^ s2 ^ s3,
            s0 ^ m2[s1] ^ m3[s2] ^ s3,
            s0 ^ s1 ^ m2[s2] ^ m3[s3],
            m3[s0] ^ s1 ^ s2 ^ m2[s3],
        ],
        axis=-2,
    )


def inv_mix_columns(state: np.ndarray) -> np.ndarray:
    """Multiply each column by the circulant {0e, 0b, 0d, 09}."""
    s0, s1, s2, s3 = (state[..., r, :] for r in range(4))
    m9, m11, m13, m14 = _MUL[9], _MUL[11], _MUL[13], _MUL[14]
    return np.stack(
        [
            m14[s0] ^ m11[s1] ^ m13[s2] ^ m9[s3],
            m9[s0] ^ m14[s1] ^ m11[s2] ^ m13[s3],
            m13[s0] ^ m9[s1] ^ m14[s2] ^ m11[s3],
            m11[s0] ^ m13[s1] ^ m9[s2] ^ m14[s3],
        ],
        axis=-2,
    )


def add_round_key(state: np.ndarray, round_key: np.ndarray) -> np.ndarray:
    return state ^ round_key


### Key schedule


def _sub_word(word: int) -> int:
    return (
        (SBOX[word >> 24] << 24)
        | (SBOX[(word >> 16) & 0xFF] << 16)
        | (SBOX[(word >> 8) & 0xFF] << 8)
        | SBOX[word & 0xFF]
    )


def _rot_word(word: int) -> int:
    return ((word << 8) | (word >> 24)) & 0xFFFFFFFF


def expand_key_words(key: bytes) -> Tuple[int, ...]:
    """The 60-word AES-256 key schedule."""
    if len(key) != KEY_BYTES:
        raise InvalidArgumentError(f"AES-256 needs a {KEY_BYTES}-byte key, got {len(key)} bytes")
    words = [int.from_bytes(key[4 * i:4 * i + 4], "big") for i in range(NK)]
    for i in range(NK, NB * (NR + 1)):
        temp = words[i - 1]
        if i % NK == 0:
            temp = _sub_word(_rot_word(temp)) ^ (RCON[i // NK - 1] << 24)
        elif i % NK == 4:
            temp = _sub_word(temp)
        words.append(words[i - NK] ^ temp)
    return tuple(words)


def key_expansion(key: bytes) -> Tuple[bytes, ...]:
    """Fifteen 16-byte round keys."""
    words = expand_key_words(key)
    return tuple(
        b"".join(word.to_bytes(4, "big") for word in words[4 * r:4 * r + 4])
        for r in range(NR + 1)
    )


@dataclass(frozen=True, eq=False)
class AesKey:
    """Expanded AES-256 key, immutable and shareable across threads."""
    key: bytes
    words: Tuple[int, ...] = field(init=False, repr=False)
    round_keys: Tuple[bytes, ...] = field(init=False, repr=False)
    round_key_states: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        key = bytes(self.key)
        words = expand_key_words(key)
        round_keys = key_expansion(key)
        states = np.stack([block_to_state(rk) for rk in round_keys])
        states.setflags(write=False)
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "round_keys", round_keys)
        object.__setattr__(self, "round_key_states", states)

    @classmethod
    def from_digest(cls, digest: HashDigest) -> "AesKey":
        return cls(digest.digest)


### Block cipher (layered, batched)


def encrypt_states(states: np.ndarray, key: AesKey) -> np.ndarray:
    rk = key.round_key_states
    state = add_round_key(states, rk[0])
    for r in range(1, NR):
        state = add_round_key(mix_columns(shift_rows(sub_bytes(state))), rk[r])
    return add_round_key(shift_rows(sub_bytes(state)), rk[NR])


def decrypt_states(states: np.ndarray, key: AesKey) -> np.ndarray:
    rk = key.round_key_states
    state = add_round_key(states, rk[NR])
    for r in range(NR - 1, 0, -1):
        state = inv_mix_columns(add_round_key(inv_sub_bytes(inv_shift_rows(state)), rk[r]))
    return add_round_key(inv_sub_bytes(inv_shift_rows(state)), rk[0])


def _blocks_to_states(data: bytes) -> np.ndarray:
    return np.frombuffer(data, dtype=np.uint8).reshape(-1, 4, 4).transpose(0, 2, 1)


def _states_to_blocks(states: np.ndarray) -> bytes:
    return np.ascontiguousarray(states.transpose(0, 2, 1)).tobytes()


def encrypt_block(block: bytes, key: AesKey) -> bytes:
    """Encrypt one block through the explicit layer sequence."""
    return state_to_block(encrypt_states(block_to_state(block), key))


def decrypt_block(block: bytes, key: AesKey) -> bytes:
    return state_to_block(decrypt_states(block_to_state(block), key))


### Block cipher (table-driven, for sequential CBC encryption)


def _build_encryption_tables() -> Tuple[Tuple[int, ...], ...]:
    te0 = []
    for x in range(256):
        s = SBOX[x]
        te0.append((gf_mul(s, 2) << 24) | (s << 16) | (s << 8) | gf_mul(s, 3))
    te1 = [((t >> 8) | (t << 24)) & 0xFFFFFFFF for t in te0]
    te2 = [((t >> 16) | (t << 16)) & 0xFFFFFFFF for t in te0]
    te3 = [((t >> 24) | (t << 8)) & 0xFFFFFFFF for t in te0]
    return tuple(te0), tuple(te1), tuple(te2), tuple(te3)


_TE0, _TE1, _TE2, _TE3 = _build_encryption_tables()


def _encrypt_words(s0: int, s1: int, s2: int, s3: int, rk: Sequence[int]) -> Tuple[int, int, int, int]:
    te0, te1, te2, te3, sbox = _TE0, _TE1, _TE2, _TE3, SBOX
    s0 ^= rk[0]
    s1 ^= rk[1]
    s2 ^= rk[2]
    s3 ^= rk[3]
    for r in range(4, 4 * NR, 4):
        t0 = te0[s0 >> 24] ^ te1[(s1 >> 16) & 0xFF] ^ te2[(s2 >> 8) & 0xFF] ^ te3[s3 & 0xFF] ^ rk[r]
        t1 = te0[s1 >> 24] ^ te1[(s2 >> 16) & 0xFF] ^ te2[(s3 >> 8) & 0xFF] ^ te3[s0 & 0xFF] ^ rk[r + 1]
        t2 = te0[s2 >> 24] ^ te1[(s3 >> 16) & 0xFF] ^ te2[(s0 >> 8) & 0xFF] ^ te3[s1 & 0xFF] ^ rk[r + 2]
        t3 = te0[s3 >> 24] ^ te1[(s0 >> 16) & 0xFF] ^ te2[(s1 >> 8) & 0xFF] ^ te3[s2 & 0xFF] ^ rk[r + 3]
        s0, s1, s2, s3 = t0, t1, t2, t3
    r = 4 * NR
    return (
        ((sbox[s0 >> 24] << 24) | (sbox[(s1 >> 16) & 0xFF] << 16) | (sbox[(s2 >> 8) & 0xFF] << 8) | sbox[s3 & 0xFF]) ^ rk[r],
        ((sbox[s1 >> 24] << 24) | (sbox[(s2 >> 16) & 0xFF] << 16) | (sbox[(s3 >> 8) & 0xFF] << 8) | sbox[s0 & 0xFF]) ^ rk[r + 1],
        ((sbox[s2 >> 24] << 24) | (sbox[(s3 >> 16) & 0xFF] << 16) | (sbox[(s0 >> 8) & 0xFF] << 8) | sbox[s1 & 0xFF]) ^ rk[r + 2],
        ((sbox[s3 >> 24] << 24) | (sbox[(s0 >> 16) & 0xFF] << 16) | (sbox[(s1 >> 8) & 0xFF] << 8) | sbox[s2 & 0xFF]) ^ rk[r + 3],
    )


def encrypt_block_fast(block: bytes, key: AesKey) -> bytes:
    """Table-driven equivalent of encrypt_block."""
    words = struct.unpack(">4I", block)
    return struct.pack(">4I", *_encrypt_words(*words, key.words))


### CBC mode and envelope


@dataclass(frozen=True)
class CipherEnvelope:
    """Magic, IV, true payload length and CBC ciphertext."""
    iv: bytes
    payload_len: int
    ciphertext: bytes
    magic: bytes = ENVELOPE_MAGIC

    def __post_init__(self):
        if self.magic != ENVELOPE_MAGIC:
            raise EnvelopeFormatError(f"Bad envelope magic {self.magic!r}")
        if len(self.iv) != BLOCK_BYTES:
            raise EnvelopeFormatError(f"IV must be {BLOCK_BYTES} bytes, got {len(self.iv)}")
        if self.payload_len < 0 or len(self.ciphertext) != padded_length(self.payload_len):
            raise EnvelopeFormatError(
                f"Ciphertext length {len(self.ciphertext)} does not match payload length {self.payload_len}"
            )

    def to_bytes(self) -> bytes:
        return ENVELOPE_HEADER.pack(self.magic, self.iv, self.payload_len) + self.ciphertext

    @classmethod
    def from_bytes(cls, data: bytes) -> "CipherEnvelope":
        if len(data) < ENVELOPE_HEADER.size:
            raise EnvelopeFormatError(f"Envelope truncated: {len(data)} bytes is shorter than the header")
        magic, iv, payload_len = ENVELOPE_HEADER.unpack_from(data)
        if magic != ENVELOPE_MAGIC:
            raise EnvelopeFormatError(f"Bad envelope magic {magic!r}")
        ciphertext = data[ENVELOPE_HEADER.size:]
        if len(ciphertext) != padded_length(payload_len):
            raise EnvelopeFormatError(
                f"Envelope truncated: expected {padded_length(payload_len)} ciphertext bytes, got {len(ciphertext)}"
            )
        return cls(iv=iv, payload_len=payload_len, ciphertext=ciphertext)


def padded_length(length: int) -> int:
    return -(-length // BLOCK_BYTES) * BLOCK_BYTES


def derive_iv(iv_seed: Optional[int] = None) -> bytes:
    """Deterministic IV from a seed, or OS randomness when no seed is given."""
    if iv_seed is None:
        return os.urandom(BLOCK_BYTES)
    return np.random.default_rng(iv_seed).bytes(BLOCK_BYTES)


def as_key(key: AesKey | HashDigest | bytes) -> AesKey:
    if isinstance(key, AesKey):
        return key
    if isinstance(key, HashDigest):
        return AesKey.from_digest(key)
    return AesKey(bytes(key))


def encrypt_payload(plaintext: bytes, key: AesKey | HashDigest | bytes, iv: bytes) -> CipherEnvelope:
    """
    CBC encryption with zero padding; the true length travels in the envelope.

    Args:
        plaintext: Bytes to encrypt, any length
        key: 32-byte key, a SHA-256 digest or a prepared AesKey
        iv: 16-byte initialization vector

    Returns:
        CipherEnvelope holding the IV, the plaintext length and the ciphertext

    Raises:
        InvalidArgumentError: If the IV or key has the wrong length
    """
    if len(iv) != BLOCK_BYTES:
        raise InvalidArgumentError(f"IV must be {BLOCK_BYTES} bytes, got {len(iv)}")
    aes_key = as_key(key)
    plaintext = bytes(plaintext)
    padded = plaintext + b"\x00" * (padded_length(len(plaintext)) - len(plaintext))

    words = struct.unpack(f">{len(padded) // 4}I", padded)
    c0, c1, c2, c3 = struct.unpack(">4I", iv)
    rk = aes_key.words
    out: List[int] = []
    for i in range(0, len(words), 4):
        c0, c1, c2, c3 = _encrypt_words(
            words[i] ^ c0, words[i + 1] ^ c1, words[i + 2] ^ c2, words[i + 3] ^ c3, rk
        )
        out.extend((c0, c1, c2, c3))

    ciphertext = struct.pack(f">{len(out)}I", *out)
    logger.debug(f"Encrypted {len(plaintext)} bytes into {len(ciphertext)} ciphertext bytes")
    return CipherEnvelope(iv=bytes(iv), payload_len=len(plaintext), ciphertext=ciphertext)


def decrypt_payload(envelope: CipherEnvelope | bytes, key: AesKey | HashDigest | bytes) -> bytes:
    """
    CBC decryption of all blocks at once; a wrong key yields garbage, not an error.

    Args:
        envelope: CipherEnvelope or its serialized bytes
        key: 32-byte key, a SHA-256 digest or a prepared AesKey

    Returns:
        Plaintext truncated to the length recorded in the envelope

    Raises:
        EnvelopeFormatError: If serialized bytes do not form a valid envelope
        InvalidArgumentError: If the key has the wrong length
    """
    if not isinstance(envelope, CipherEnvelope):
        envelope = CipherEnvelope.from_bytes(bytes(envelope))
    aes_key = as_key(key)
    if not envelope.ciphertext:
        return b""

    states = decrypt_states(_blocks_to_states(envelope.ciphertext), aes_key)
    previous = envelope.iv + envelope.ciphertext[:-BLOCK_BYTES]
    plain = np.frombuffer(_states_to_blocks(states), dtype=np.uint8) ^ np.frombuffer(previous, dtype=np.uint8)
    return plain.tobytes()[:envelope.payload_len]


def write_envelope(envelope: CipherEnvelope, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(envelope.to_bytes())
    return path


def read_envelope(path: Path) -> CipherEnvelope:
    return CipherEnvelope.from_bytes(Path(path).read_bytes())
