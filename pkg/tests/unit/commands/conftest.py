"""Fixtures for driving the command line in-process."""

import json

import pytest

from src.qsecure.main import main
from src.qsecure.services.image_processor import write_image


@pytest.fixture
def run_cli(tmp_path, capsys):
    """Run main() with --output-dir pointed at tmp_path; return (exit code, parsed stdout)."""

    def _run(*args):
        code = main(["--output-dir", str(tmp_path), *[str(a) for a in args]])
        out = capsys.readouterr().out
        try:
            payload = json.loads(out) if out.strip().startswith(("{", "[")) else out
        except json.JSONDecodeError:
            payload = out
        return code, payload

    return _run


@pytest.fixture
def cover_file(tmp_path, cover_image):
    return write_image(cover_image, tmp_path / "cover.ppm")


@pytest.fixture
def secret_file(tmp_path, secret_image):
    return write_image(secret_image, tmp_path / "secret.pgm")
