"""Tests for the keygen and hash-key commands."""

import hashlib

import pandas as pd
import pytest

from tests.conftest import REFERENCE_K1, REFERENCE_K1_DIGEST


class TestKeygen:
    """Test key generation from the command line."""

    def test_clean_channel(self, tmp_path, run_cli):
        """Test key generation over a clean channel."""
        code, report = run_cli("keygen", "--singlets", "2000", "--seed", "7")
        assert code == 0
        assert report["secure"] is True
        assert report["qber"] == 0.0
        bits = (tmp_path / "key.txt").read_text().strip()
        assert len(bits) == report["key_bits"]
        assert report["digest"] == hashlib.sha256(bits.encode("ascii")).hexdigest()

    def test_reference_example_is_secure(self, tmp_path, run_cli):
        """Test the documented 500-singlet run with seed 7."""
        code, report = run_cli("keygen", "--singlets", "500", "--seed", "7")
        assert code == 0
        assert report["secure"] is True
        assert report["key_bits"] == 110
        assert report["chsh"] == pytest.approx(-2.904, abs=1e-3)
        assert len((tmp_path / "key.txt").read_text().strip()) == 110

    def test_explicit_output_and_report(self, tmp_path, run_cli):
        """Test explicit key and report paths."""
        key_path = tmp_path / "keys" / "alice.txt"
        report_path = tmp_path / "rate.csv"
        code, _ = run_cli("keygen", "--singlets", "2000", "--output", key_path, "--report", report_path)
        assert code == 0
        assert key_path.exists()
        frame = pd.read_csv(report_path)
        assert frame["singlets"].tolist() == [2000]

    def test_eavesdropper_exits_3(self, tmp_path, run_cli, capsys):
        """Test that an eavesdropper exits 3."""
        code, _ = run_cli("keygen", "--singlets", "500", "--seed", "1", "--eve")
        assert code == 3
        assert not (tmp_path / "key.txt").exists()

    def test_force_writes_key(self, tmp_path, run_cli):
        """Test that --force writes the key anyway."""
        code, report = run_cli("keygen", "--singlets", "500", "--seed", "1", "--eve", "--force")
        assert code == 0
        assert report["secure"] is False
        assert (tmp_path / "key.txt").exists()

    def test_same_seed_same_key(self, tmp_path, run_cli):
        """Test that the same seed gives the same key."""
        run_cli("keygen", "--singlets", "2000", "--output", tmp_path / "a.txt")
        run_cli("keygen", "--singlets", "2000", "--output", tmp_path / "b.txt")
        assert (tmp_path / "a.txt").read_text() == (tmp_path / "b.txt").read_text()


class TestHashKey:
    """Test key hashing."""

    def test_inline_bits(self, run_cli):
        """Test hashing inline key bits."""
        code, out = run_cli("hash-key", "--bits", REFERENCE_K1)
        assert code == 0
        assert out.strip() == REFERENCE_K1_DIGEST

    def test_key_file(self, tmp_path, run_cli):
        """Test hashing a key file."""
        key_file = tmp_path / "key.txt"
        key_file.write_text(REFERENCE_K1 + "\n")
        code, out = run_cli("hash-key", "--key-file", key_file)
        assert code == 0
        assert out.strip() == REFERENCE_K1_DIGEST

    def test_invalid_bits(self, run_cli):
        """Test that invalid key bits are rejected."""
        code, _ = run_cli("hash-key", "--key-bits", "0121")
        assert code == 2
