"""End-to-end pipeline: key distribution, embedding, encryption and recovery."""

import hashlib
import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple

from ..config import get_config
from ..models.schemas import DemoManifest, ProtocolResult, RunConfig
from ..utils.stage_timer import StageTimer
from . import stego
from .aes import CipherEnvelope, decrypt_payload, derive_iv, encrypt_payload
from .e91 import run_protocol
from .error_handler import (
    InsecureChannelError,
    PipelineError,
    QSecureError,
    create_insecure_channel_error,
    create_stage_error,
)
from .image_processor import Image, encode_netpbm, parse_netpbm
from .sha256 import HashDigest, derive_key

logger = logging.getLogger(__name__)
config = get_config()

MANIFEST_NAME = "manifest.json"


def netpbm_suffix(img: Image) -> str:
    return ".pgm" if img.channels == 1 else ".ppm"


def establish_key(run_config: RunConfig) -> Tuple[ProtocolResult, HashDigest]:
    """
    Run E91 and derive the cipher key; refuse an insecure channel unless forced.

    Args:
        run_config: Singlet count, seed, channel flags, threshold and force setting

    Returns:
        Tuple of (protocol result, SHA-256 digest of the sifted key)

    Raises:
        InsecureChannelError: If the CHSH test fails without force, or sifting kept no bits
    """
    result = run_protocol(
        run_config.singlets,
        run_config.channel(),
        seed=run_config.seed,
        threshold=run_config.chsh_threshold,
    )
    if not result.secure:
        if not run_config.force:
            raise InsecureChannelError(
                create_insecure_channel_error(result.chsh_value, result.threshold, result.singlets)
            )
        logger.warning(f"Channel is insecure (CHSH={result.chsh_value}); continuing because of --force")
    if not result.sifted_key:
        raise InsecureChannelError(
            "Sifting produced no key bits",
            singlets=result.singlets,
        )
    return result, derive_key(result.sifted_key)


def artifact_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class DemoResult:
    """Manifest plus the paths of everything a demo run wrote."""
    manifest: DemoManifest
    paths: Dict[str, Path] = field(default_factory=dict)
    timings: Dict = field(default_factory=dict)


class ProcessingPipeline:
    """Runs keygen -> embed -> encrypt -> decrypt -> extract and records each artifact."""

    def __init__(self, run_config: RunConfig, output_dir: Optional[Path] = None):
        self.run_config = run_config
        self.output_dir = Path(output_dir or config.output_dir)
        self.timer = StageTimer()
        self.artifacts: Dict[str, bytes] = {}

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        """Time a stage and tag any failure with its name."""
        logger.info(f"Stage {name} started")
        try:
            with self.timer.stage(name):
                yield
        except QSecureError as e:
            if e.error_details.stage is None:
                e.error_details.stage = name
            logger.error(f"Stage {name} failed: {e}")
            raise
        except Exception as e:
            logger.error(f"Stage {name} failed: {e}")
            raise PipelineError(create_stage_error(name, e)) from e

    def _record(self, name: str, data: bytes) -> None:
        self.artifacts[name] = data

    def run(self, cover: Image, secret: Image) -> DemoResult:
        """
        Run the full pipeline on one cover/secret pair.

        Args:
            cover: Image that carries the secret
            secret: Image to hide and recover

        Returns:
            DemoResult with the manifest and written paths

        Raises:
            QSecureError: tagged with the failing stage name
        """
        rc = self.run_config
        # A seeded run stays reproducible even when no IV seed is given.
        iv_seed = rc.seed if rc.iv_seed is None else rc.iv_seed

        with self._stage("keygen"):
            result, digest = establish_key(rc)
            self._record("key", result.sifted_key.encode("ascii"))

        with self._stage("embed"):
            stego_image = stego.embed(cover, secret, rc.lsb_k)
            stego_bytes = encode_netpbm(stego_image)
            self._record("stego", stego_bytes)

        with self._stage("encrypt"):
            envelope = encrypt_payload(stego_bytes, digest, derive_iv(iv_seed))
            self._record("envelope", envelope.to_bytes())

        with self._stage("decrypt"):
            decrypted = decrypt_payload(CipherEnvelope.from_bytes(self.artifacts["envelope"]), digest)
            received = parse_netpbm(decrypted)
            self._record("decrypted", decrypted)

        with self._stage("extract"):
            recovered = stego.extract(received)
            self._record("recovered", encode_netpbm(recovered))

        recovered_ok = recovered == secret
        if not recovered_ok:
            raise PipelineError(
                create_stage_error("extract", RuntimeError("Recovered secret differs from the original"))
            )

        manifest = DemoManifest(
            singlets=rc.singlets,
            seed=rc.seed,
            iv_seed=iv_seed,
            lsb_k=rc.lsb_k,
            key_bits=result.key_bits,
            chsh_value=result.chsh_value,
            secure=result.secure,
            key_digest=digest.hex,
            artifacts={name: artifact_digest(data) for name, data in self.artifacts.items()},
            secret_recovered=recovered_ok,
        )
        paths = self._write(manifest, cover, secret)
        summary = self.timer.get_session_summary()
        logger.info(f"Demo finished in {summary['total_s']:.3f}s; artifacts in {self.output_dir}")
        return DemoResult(manifest=manifest, paths=paths, timings=summary)

    def _write(self, manifest: DemoManifest, cover: Image, secret: Image) -> Dict[str, Path]:
        out = self.output_dir
        out.mkdir(parents=True, exist_ok=True)
        names = {
            "key": "key.txt",
            "stego": "stego" + netpbm_suffix(cover),
            "envelope": "stego.qse",
            "decrypted": "decrypted" + netpbm_suffix(cover),
            "recovered": "recovered" + netpbm_suffix(secret),
        }
        paths: Dict[str, Path] = {}
        for name, filename in names.items():
            paths[name] = out / filename
            paths[name].write_bytes(self.artifacts[name])

        paths["manifest"] = out / MANIFEST_NAME
        paths["manifest"].write_text(manifest_json(manifest), encoding="utf-8")
        return paths


def manifest_json(manifest: DemoManifest) -> str:
    """Canonical JSON: sorted keys, no timings, trailing newline."""
    return json.dumps(manifest.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"
