"""Pydantic schemas for protocol runs, reports and CLI configuration."""

import math
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

BitString = str
BIT_PATTERN = r"^[01]*$"


class ChannelConfig(BaseModel):
    """Quantum channel between the singlet source and the two parties."""
    model_config = ConfigDict(frozen=True)

    depolarizing_p: float = Field(default=1.0, ge=0.0, le=1.0, description="Weight of the pure singlet in the isotropic state")
    eavesdropper: Literal["none", "intercept_resend"] = Field(default="none", description="Attacker model on Bob's arm")

    @property
    def eve_active(self) -> bool:
        return self.eavesdropper != "none"


class MeasurementRound(BaseModel):
    """Transcript of one measured singlet."""
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0, description="Round ordinal")
    alice_basis: int = Field(..., ge=1, le=3, description="Alice's basis index (a1..a3)")
    bob_basis: int = Field(..., ge=1, le=3, description="Bob's basis index (b1..b3)")
    alice_outcome: Literal[-1, 1] = Field(..., description="Alice's measurement outcome")
    bob_outcome: Literal[-1, 1] = Field(..., description="Bob's measurement outcome")


class ProtocolResult(BaseModel):
    """Outcome of one E91 run."""
    model_config = ConfigDict(frozen=True)

    singlets: int = Field(..., ge=1, description="Number of singlets distributed")
    seed: int = Field(..., description="Seed of the run")
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    rounds: List[MeasurementRound] = Field(default_factory=list, description="Full measurement transcript")
    sifted_key: BitString = Field(..., pattern=BIT_PATTERN, description="Alice's sifted key")
    bob_key: BitString = Field(..., pattern=BIT_PATTERN, description="Bob's sifted key")
    qber: Optional[float] = Field(None, ge=0.0, le=1.0, description="Fraction of disagreeing sifted bits")
    chsh_value: Optional[float] = Field(None, description="Estimated CHSH statistic, None when a cell is empty")
    threshold: float = Field(..., description="CHSH security threshold used")
    secure: bool = Field(..., description="Whether the CHSH check passed")
    elapsed: float = Field(..., ge=0.0, description="Wall-clock seconds for the run")
    key_rate: float = Field(..., ge=0.0, description="Sifted key bits per second")

    @model_validator(mode="after")
    def _keys_align(self) -> "ProtocolResult":
        if len(self.sifted_key) != len(self.bob_key):
            raise ValueError("Alice's and Bob's sifted keys must have equal length")
        return self

    @property
    def key_bits(self) -> int:
        return len(self.sifted_key)


class KeyReportRow(BaseModel):
    """One row of the key generation rate table."""
    singlets: int
    key_bits: int
    time_s: float
    rate_bps: float
    chsh: Optional[float] = None
    secure: bool


class MetricsReport(BaseModel):
    """Image-encryption quality metrics for one test image."""
    pixel_size: str = Field(..., description="Label such as '64 x 64'")
    entropy_bits: float = Field(..., ge=0.0, le=8.0)
    npcr_percent: float = Field(..., ge=0.0, le=100.0)
    uaci_percent: float = Field(..., ge=0.0, le=100.0)
    npcr_per_channel: List[float] = Field(default_factory=list)
    encrypt_s: float = Field(..., ge=0.0)
    decrypt_s: float = Field(..., ge=0.0)


class SensitivityReport(BaseModel):
    """Outcome of the single-bit key sensitivity experiment."""
    key_bits: BitString = Field(..., pattern=BIT_PATTERN)
    flipped_key_bits: BitString = Field(..., pattern=BIT_PATTERN)
    flip_index: int = Field(..., ge=0)
    digest_k1: str
    digest_k2: str
    npcr_percent: float = Field(..., ge=0.0, le=100.0)
    uaci_percent: float = Field(..., ge=0.0, le=100.0)
    byte_difference_percent: float = Field(..., ge=0.0, le=100.0)
    correct_key_restores: bool


class TimingRow(BaseModel):
    """Encryption and decryption wall-clock time for one image size."""
    pixel_size: str
    encrypt_s: float
    decrypt_s: float


class StegoHeader(BaseModel):
    """Header written ahead of the secret bitstream."""
    model_config = ConfigDict(frozen=True)

    magic: bytes = Field(default=b"SG")
    secret_width: int = Field(..., ge=1, lt=2**32)
    secret_height: int = Field(..., ge=1, lt=2**32)
    secret_channels: Literal[1, 3]
    bits_per_channel_used: Literal[1, 2, 4]


class RunConfig(BaseModel):
    """Merged CLI and environment configuration for one command."""
    singlets: int = Field(default=500, ge=1)
    seed: int = Field(default=7)
    depolarizing_p: float = Field(default=1.0, ge=0.0, le=1.0)
    eve: bool = False
    chsh_threshold: float = Field(default=2.5, gt=2.0, lt=2.0 * math.sqrt(2.0))
    lsb_k: Literal[1, 2, 4] = 2
    iv_seed: Optional[int] = None
    force: bool = False
    cover: Optional[Path] = None
    secret: Optional[Path] = None
    output: Optional[Path] = None

    def channel(self) -> ChannelConfig:
        return ChannelConfig(
            depolarizing_p=self.depolarizing_p,
            eavesdropper="intercept_resend" if self.eve else "none",
        )


class DemoManifest(BaseModel):
    """Digests of every intermediate artifact of a demo run."""
    singlets: int
    seed: int
    iv_seed: Optional[int]
    lsb_k: int
    key_bits: int
    chsh_value: Optional[float]
    secure: bool
    key_digest: str
    artifacts: dict[str, str] = Field(default_factory=dict, description="Artifact name -> SHA-256 of its bytes")
    secret_recovered: bool
