"""Tests for the demo command."""

import json
from unittest.mock import patch

from src.qsecure.services.image_processor import read_image, write_image


class TestDemo:
    """Test the end-to-end demo."""

    def test_default_images(self, tmp_path, run_cli):
        """Test the demo with generated images."""
        code, manifest = run_cli("demo", "--singlets", "2000")
        assert code == 0
        assert manifest["secret_recovered"] is True
        assert manifest["secure"] is True
        demo_dir = tmp_path / "demo"
        assert read_image(demo_dir / "recovered.pgm").shape == (64, 64, 1)
        assert json.loads((demo_dir / "manifest.json").read_text()) == manifest

    def test_manifest_is_byte_identical_across_runs(self, tmp_path, run_cli):
        """Test that seeded demo runs write identical manifests."""
        run_cli("demo", "--singlets", "2000", "--seed", "7", "--output", tmp_path / "one")
        run_cli("demo", "--singlets", "2000", "--seed", "7", "--output", tmp_path / "two")
        first = (tmp_path / "one" / "manifest.json").read_bytes()
        second = (tmp_path / "two" / "manifest.json").read_bytes()
        assert first == second

    def test_user_images(self, tmp_path, run_cli, cover_file, secret_file, secret_image):
        """Test the demo with user-supplied images."""
        code, manifest = run_cli("demo", "--singlets", "2000", "--cover", cover_file, "--secret", secret_file,
                                 "--bits", "4", "--output", tmp_path / "mine")
        assert code == 0
        assert manifest["lsb_k"] == 4
        assert read_image(tmp_path / "mine" / "recovered.pgm") == secret_image

    def test_eavesdropper_aborts(self, tmp_path, run_cli):
        """Test that an eavesdropper aborts the demo."""
        code, _ = run_cli("demo", "--singlets", "500", "--seed", "1", "--eve")
        assert code == 3
        assert not (tmp_path / "demo" / "manifest.json").exists()

    def test_secret_too_large(self, tmp_path, run_cli, cover_image):
        """Test that an oversized secret exits 4."""
        cover = write_image(cover_image, tmp_path / "c.ppm")
        code, _ = run_cli("demo", "--singlets", "2000", "--cover", cover, "--secret", cover)
        assert code == 4

    def test_logs_artifact_paths_and_stage_timings(self, tmp_path, run_cli):
        """Test that every written artifact and the stage timings are logged."""
        with patch("src.qsecure.commands.demo.logger") as mock_logger:
            code, _ = run_cli("demo", "--singlets", "2000")
        assert code == 0
        messages = [call.args[0] for call in mock_logger.info.call_args_list]
        assert f"Wrote manifest to {tmp_path / 'demo' / 'manifest.json'}" in messages
        assert any(message.startswith("Wrote recovered to ") for message in messages)
        timing = [message for message in messages if message.startswith("Stage timings: ")]
        assert len(timing) == 1
        for stage in ("keygen", "embed", "encrypt", "decrypt", "extract"):
            assert f"{stage}=" in timing[0]
