"""Tests for AES-256, CBC mode and the cipher envelope."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.qsecure.services.aes import (
    ENVELOPE_HEADER,
    INV_SBOX,
    SBOX,
    AesKey,
    CipherEnvelope,
    add_round_key,
    block_to_state,
    decrypt_block,
    decrypt_payload,
    derive_iv,
    encrypt_block,
    encrypt_block_fast,
    encrypt_payload,
    gf_mul,
    inv_mix_columns,
    inv_shift_rows,
    inv_sub_bytes,
    key_expansion,
    mix_columns,
    padded_length,
    read_envelope,
    shift_rows,
    state_to_block,
    sub_bytes,
    write_envelope,
)
from src.qsecure.services.error_handler import EnvelopeFormatError, InvalidArgumentError

FIPS_KEY = bytes(range(32))
FIPS_PLAINTEXT = bytes.fromhex("00112233445566778899aabbccddeeff")
FIPS_CIPHERTEXT = bytes.fromhex("8ea2b7ca516745bfeafc49904b496089")
EXPANSION_KEY = bytes.fromhex("603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4")


def state_of(hex_block: str) -> np.ndarray:
    return block_to_state(bytes.fromhex(hex_block))


class TestFieldArithmetic:
    """Test GF(2^8) helpers and the S-box."""

    def test_gf_mul_known_product(self):
        """Test a known GF(2^8) product."""
        assert gf_mul(0x57, 0x83) == 0xC1
        assert gf_mul(0x57, 0x13) == 0xFE

    def test_sbox_known_entries(self):
        """Test known S-box entries."""
        assert SBOX[0x00] == 0x63
        assert SBOX[0x53] == 0xED
        assert SBOX[0xFF] == 0x16

    def test_inverse_sbox(self):
        """Test that the inverse S-box inverts the S-box."""
        assert all(INV_SBOX[SBOX[x]] == x for x in range(256))


class TestLayers:
    """Test the round transformations against published intermediate states."""

    def test_state_orientation(self):
        """Test the column-major state layout."""
        state = block_to_state(bytes(range(16)))
        assert state[1, 0] == 1
        assert state[0, 1] == 4
        assert state_to_block(state) == bytes(range(16))

    def test_sub_bytes(self):
        """Test the SubBytes layer."""
        out = sub_bytes(state_of("00102030405060708090a0b0c0d0e0f0"))
        assert state_to_block(out).hex() == "63cab7040953d051cd60e0e7ba70e18c"

    def test_shift_rows(self):
        """Test the ShiftRows layer."""
        out = shift_rows(state_of("63cab7040953d051cd60e0e7ba70e18c"))
        assert state_to_block(out).hex() == "6353e08c0960e104cd70b751bacad0e7"

    def test_mix_columns(self):
        """Test the MixColumns layer."""
        out = mix_columns(state_of("6353e08c0960e104cd70b751bacad0e7"))
        assert state_to_block(out).hex() == "5f72641557f5bc92f7be3b291db9f91a"

    def test_mix_single_column(self):
        """Test MixColumns on a single published column."""
        state = np.zeros((4, 4), dtype=np.uint8)
        state[:, 0] = [0xDB, 0x13, 0x53, 0x45]
        assert mix_columns(state)[:, 0].tolist() == [0x8E, 0x4D, 0xA1, 0xBC]

    def test_add_round_key(self):
        """Test the AddRoundKey layer."""
        out = add_round_key(state_of("00112233445566778899aabbccddeeff"), block_to_state(FIPS_KEY[:16]))
        assert state_to_block(out).hex() == "00102030405060708090a0b0c0d0e0f0"

    def test_inverse_laws_on_random_states(self, rng):
        """Test that every layer inverse undoes its layer."""
        states = rng.integers(0, 256, size=(10_000, 4, 4), dtype=np.uint8)
        assert np.array_equal(inv_sub_bytes(sub_bytes(states)), states)
        assert np.array_equal(inv_shift_rows(shift_rows(states)), states)
        assert np.array_equal(inv_mix_columns(mix_columns(states)), states)
        key = rng.integers(0, 256, size=(4, 4), dtype=np.uint8)
        assert np.array_equal(add_round_key(add_round_key(states, key), key), states)

    def test_batched_matches_single(self, rng):
        """Test that batched states match single-state results."""
        states = rng.integers(0, 256, size=(8, 4, 4), dtype=np.uint8)
        batched = mix_columns(shift_rows(sub_bytes(states)))
        for i in range(8):
            assert np.array_equal(batched[i], mix_columns(shift_rows(sub_bytes(states[i]))))

    def test_block_to_state_rejects_wrong_size(self):
        """Test that a block of the wrong size is rejected."""
        with pytest.raises(InvalidArgumentError):
            block_to_state(b"short")


class TestKeyExpansion:
    """Test the AES-256 key schedule."""

    def test_fifteen_round_keys(self):
        """Test that AES-256 expands to fifteen round keys."""
        round_keys = key_expansion(EXPANSION_KEY)
        assert len(round_keys) == 15
        assert all(len(rk) == 16 for rk in round_keys)

    def test_first_round_keys_are_the_key(self):
        """Test that the first two round keys are the key itself."""
        round_keys = key_expansion(EXPANSION_KEY)
        assert round_keys[0] + round_keys[1] == EXPANSION_KEY

    def test_published_schedule_words(self):
        """Test published key schedule words."""
        round_keys = key_expansion(EXPANSION_KEY)
        assert round_keys[2].hex() == "9ba354118e6925afa51a8b5f2067fcde"
        assert round_keys[14].hex() == "fe4890d1e6188d0b046df344706c631e"

    @pytest.mark.parametrize("length", [0, 16, 24, 31, 33])
    def test_wrong_key_length(self, length):
        """Test that keys of the wrong length are rejected."""
        with pytest.raises(InvalidArgumentError):
            key_expansion(bytes(length))
        with pytest.raises(InvalidArgumentError):
            AesKey(bytes(length))


class TestBlockCipher:
    """Test single-block encryption."""

    @pytest.fixture
    def fips_key(self):
        return AesKey(FIPS_KEY)

    def test_known_answer(self, fips_key):
        """Test the published block vector."""
        assert encrypt_block(FIPS_PLAINTEXT, fips_key) == FIPS_CIPHERTEXT

    def test_known_answer_table_path(self, fips_key):
        """Test the published block vector on the table-driven path."""
        assert encrypt_block_fast(FIPS_PLAINTEXT, fips_key) == FIPS_CIPHERTEXT

    def test_decrypt_known_answer(self, fips_key):
        """Test decrypting the published block vector."""
        assert decrypt_block(FIPS_CIPHERTEXT, fips_key) == FIPS_PLAINTEXT

    @settings(max_examples=30, deadline=None)
    @given(st.binary(min_size=16, max_size=16), st.binary(min_size=32, max_size=32))
    def test_paths_agree_and_invert(self, block, key_bytes):
        """Test that both encryption paths agree and invert."""
        key = AesKey(key_bytes)
        ciphertext = encrypt_block(block, key)
        assert encrypt_block_fast(block, key) == ciphertext
        assert decrypt_block(ciphertext, key) == block

    def test_matches_independent_oracle(self, rng):
        """Test against an independent AES implementation."""
        aes = pytest.importorskip("Crypto.Cipher.AES")
        for _ in range(100):
            key_bytes = rng.bytes(32)
            block = rng.bytes(16)
            oracle = aes.new(key_bytes, aes.MODE_ECB).encrypt(block)
            assert encrypt_block(block, AesKey(key_bytes)) == oracle

    def test_from_digest(self, reference_digest):
        """Test building a key from a digest."""
        assert AesKey.from_digest(reference_digest).key == reference_digest.digest

    def test_decrypt_inverts_encrypt_on_many_blocks(self, rng):
        """Test that decryption inverts encryption over many blocks."""
        key = AesKey(rng.bytes(32))
        for _ in range(1000):
            block = rng.bytes(16)
            assert decrypt_block(encrypt_block_fast(block, key), key) == block

    def test_one_bit_plaintext_change_flips_half_the_bits(self, rng):
        """Test that a one-bit plaintext change flips about half the ciphertext bits."""
        key = AesKey(rng.bytes(32))
        trials = 1000
        flipped = 0
        for _ in range(trials):
            block = bytearray(rng.bytes(16))
            bit = int(rng.integers(128))
            before = encrypt_block_fast(bytes(block), key)
            block[bit // 8] ^= 0x80 >> (bit % 8)
            after = encrypt_block_fast(bytes(block), key)
            flipped += (int.from_bytes(before, "big") ^ int.from_bytes(after, "big")).bit_count()
        # Per-trial spread is sqrt(32) bits, so the mean sits well inside 2 bits of 64.
        assert flipped / trials == pytest.approx(64, abs=2)


class TestCbc:
    """Test CBC encryption with zero padding."""

    def test_round_trip(self, reference_digest, fixed_iv):
        """Test a CBC round trip."""
        plaintext = b"stego image bytes" * 10
        envelope = encrypt_payload(plaintext, reference_digest, fixed_iv)
        assert envelope.payload_len == len(plaintext)
        assert len(envelope.ciphertext) == padded_length(len(plaintext))
        assert decrypt_payload(envelope, reference_digest) == plaintext

    def test_empty_payload(self, reference_digest, fixed_iv):
        """Test an empty payload."""
        envelope = encrypt_payload(b"", reference_digest, fixed_iv)
        assert envelope.ciphertext == b""
        assert decrypt_payload(envelope, reference_digest) == b""

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=4096), st.integers(min_value=0, max_value=2**32 - 1))
    def test_round_trip_any_length(self, length, seed):
        """Test CBC round trips at any length."""
        rng = np.random.default_rng(seed)
        plaintext = rng.bytes(length)
        key = rng.bytes(32)
        iv = derive_iv(seed)
        assert decrypt_payload(encrypt_payload(plaintext, key, iv).to_bytes(), key) == plaintext

    def test_matches_oracle_cbc(self, rng):
        """Test CBC against an independent AES implementation."""
        aes = pytest.importorskip("Crypto.Cipher.AES")
        key = rng.bytes(32)
        iv = rng.bytes(16)
        plaintext = rng.bytes(100)
        padded = plaintext + b"\x00" * (padded_length(100) - 100)
        expected = aes.new(key, aes.MODE_CBC, iv=iv).encrypt(padded)
        assert encrypt_payload(plaintext, key, iv).ciphertext == expected

    def test_identical_blocks_encrypt_differently(self, reference_digest, fixed_iv):
        """Test that identical plaintext blocks encrypt differently."""
        ciphertext = encrypt_payload(b"\x00" * 64, reference_digest, fixed_iv).ciphertext
        blocks = {ciphertext[i:i + 16] for i in range(0, 64, 16)}
        assert len(blocks) == 4

    def test_wrong_key_gives_garbage_not_error(self, fixed_iv):
        """Test that a wrong key yields garbage rather than an error."""
        plaintext = bytes(range(256)) * 4
        envelope = encrypt_payload(plaintext, bytes(32), fixed_iv)
        wrong = decrypt_payload(envelope, bytes(31) + b"\x01")
        assert len(wrong) == len(plaintext)
        differing = sum(a != b for a, b in zip(wrong, plaintext))
        assert differing / len(plaintext) > 0.98

    def test_bad_iv_length(self, reference_digest):
        """Test that an IV of the wrong length is rejected."""
        with pytest.raises(InvalidArgumentError):
            encrypt_payload(b"data", reference_digest, b"short")


class TestEnvelope:
    """Test envelope framing."""

    def test_layout(self, reference_digest, fixed_iv):
        """Test the envelope byte layout."""
        envelope = encrypt_payload(b"hello", reference_digest, fixed_iv)
        data = envelope.to_bytes()
        assert data[:4] == b"QSE1"
        assert data[4:20] == fixed_iv
        assert int.from_bytes(data[20:28], "big") == 5
        assert len(data) == ENVELOPE_HEADER.size + 16

    def test_from_bytes_round_trip(self, reference_digest, fixed_iv):
        """Test parsing a serialized envelope."""
        envelope = encrypt_payload(b"payload" * 7, reference_digest, fixed_iv)
        assert CipherEnvelope.from_bytes(envelope.to_bytes()) == envelope

    def test_truncated_header(self):
        """Test that a truncated header is rejected."""
        with pytest.raises(EnvelopeFormatError, match="truncated"):
            CipherEnvelope.from_bytes(b"QSE1" + b"\x00" * 10)

    def test_truncated_ciphertext(self, reference_digest, fixed_iv):
        """Test that truncated ciphertext is rejected."""
        data = encrypt_payload(b"x" * 40, reference_digest, fixed_iv).to_bytes()
        with pytest.raises(EnvelopeFormatError, match="truncated"):
            CipherEnvelope.from_bytes(data[:-1])

    def test_bad_magic(self, reference_digest, fixed_iv):
        """Test that a bad magic is rejected."""
        data = encrypt_payload(b"x", reference_digest, fixed_iv).to_bytes()
        with pytest.raises(EnvelopeFormatError, match="magic"):
            decrypt_payload(b"XXXX" + data[4:], reference_digest)

    def test_file_round_trip(self, tmp_path, reference_digest, fixed_iv):
        """Test writing and reading an envelope file."""
        envelope = encrypt_payload(b"file payload", reference_digest, fixed_iv)
        path = write_envelope(envelope, tmp_path / "out" / "secret.qse")
        assert read_envelope(path) == envelope


class TestDeriveIv:
    """Test IV derivation."""

    def test_seeded_iv_is_deterministic(self):
        """Test that a seeded IV is deterministic."""
        assert derive_iv(42) == derive_iv(42)
        assert derive_iv(42) != derive_iv(43)
        assert len(derive_iv(42)) == 16

    def test_unseeded_iv_is_random(self):
        """Test that an unseeded IV is random."""
        assert len(derive_iv()) == 16
        assert derive_iv() != derive_iv()
