"""E91 protocol: random basis choice, sifting, CHSH estimation and eavesdropper detection."""

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import get_config
from ..models.schemas import ChannelConfig, KeyReportRow, MeasurementRound, ProtocolResult
from .error_handler import (
    InsufficientDataError,
    InvalidArgumentError,
    create_insufficient_data_error,
)
from .quantum_core import (
    BasisDirection,
    State,
    depolarize,
    expectation,
    joint_distribution,
    measure_qubit,
    prepare_singlet,
    sample_joint_outcome,
)

logger = logging.getLogger(__name__)
config = get_config()

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)

# Pairs whose observables coincide: (a2, b1) at pi/4 and (a3, b2) at pi/2.
KEY_PAIRS = frozenset({(2, 1), (3, 2)})
# CHSH cells with their signs in E = <a1b1> - <a1b3> + <a3b1> + <a3b3>.
CHSH_TERMS: Tuple[Tuple[Tuple[int, int], int], ...] = (
    ((1, 1), 1),
    ((1, 3), -1),
    ((3, 1), 1),
    ((3, 3), 1),
)
KEY_REPORT_COLUMNS = ["singlets", "key_bits", "time_s", "rate_bps", "chsh", "secure"]


@dataclass(frozen=True)
class BasisTable:
    """Measurement directions available to Alice and Bob."""
    alice: Tuple[BasisDirection, BasisDirection, BasisDirection]
    bob: Tuple[BasisDirection, BasisDirection, BasisDirection]

    @classmethod
    def standard(cls) -> "BasisTable":
        # b3 = 3pi/4 so that its observable is (X - Z)/sqrt(2).
        quarter = math.pi / 4
        return cls(
            alice=(BasisDirection(0.0), BasisDirection(quarter), BasisDirection(2 * quarter)),
            bob=(BasisDirection(quarter), BasisDirection(2 * quarter), BasisDirection(3 * quarter)),
        )

    def alice_basis(self, index: int) -> BasisDirection:
        return self.alice[index - 1]

    def bob_basis(self, index: int) -> BasisDirection:
        return self.bob[index - 1]


BASES = BasisTable.standard()
EVE_BASES = (BasisDirection(0.0), BasisDirection(math.pi / 2))


def source_state(channel: ChannelConfig) -> State:
    """State emitted by the source after the depolarizing channel."""
    singlet = prepare_singlet()
    if channel.depolarizing_p == 1.0:
        return singlet
    return depolarize(singlet, channel.depolarizing_p)


def intercept_resend_attack(state: State, eve_rng: np.random.Generator) -> State:
    """Eve measures Bob's qubit in Z or X and forwards the collapsed state."""
    eve_basis = EVE_BASES[int(eve_rng.integers(len(EVE_BASES)))]
    _, collapsed = measure_qubit(state, 1, eve_basis, eve_rng)
    return collapsed


def run_protocol(
    n_singlets: int,
    channel: Optional[ChannelConfig] = None,
    seed: int = 0,
    threshold: Optional[float] = None,
) -> ProtocolResult:
    """
    Run E91 over n_singlets pairs and return the populated result.

    Args:
        n_singlets: Number of singlet pairs emitted by the source
        channel: Depolarizing strength and eavesdropper setting (default: ideal channel)
        seed: Seed for the parties' random stream; Eve gets a spawned stream of her own
        threshold: Strict |CHSH| bound for a secure verdict (default: config.chsh_threshold)

    Returns:
        ProtocolResult with transcript, sifted keys, CHSH estimate, QBER and key rate

    Raises:
        InvalidArgumentError: If n_singlets is below 1 or the threshold is out of range
    """
    if n_singlets < 1:
        raise InvalidArgumentError(f"n_singlets must be at least 1, got {n_singlets}")
    channel = channel or ChannelConfig()
    threshold = config.chsh_threshold if threshold is None else threshold

    # Eve draws from her own stream so the parties' stream is unchanged by her presence.
    parties_seq, eve_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(parties_seq)
    eve_rng = np.random.default_rng(eve_seq)

    logger.info(
        f"Running E91 with {n_singlets} singlets (p={channel.depolarizing_p}, "
        f"eavesdropper={channel.eavesdropper}, seed={seed})"
    )
    start = time.perf_counter()

    source = source_state(channel)
    cached: Dict[Tuple[int, int], np.ndarray] = {}
    rounds: List[MeasurementRound] = []

    for index in range(n_singlets):
        alice_index = int(rng.integers(3)) + 1
        bob_index = int(rng.integers(3)) + 1
        basis_a = BASES.alice_basis(alice_index)
        basis_b = BASES.bob_basis(bob_index)

        if channel.eve_active:
            probabilities = joint_distribution(
                intercept_resend_attack(source, eve_rng), basis_a, basis_b
            )
        else:
            key = (alice_index, bob_index)
            if key not in cached:
                cached[key] = joint_distribution(source, basis_a, basis_b)
            probabilities = cached[key]

        outcome_a, outcome_b = sample_joint_outcome(probabilities, rng)
        rounds.append(
            MeasurementRound(
                index=index,
                alice_basis=alice_index,
                bob_basis=bob_index,
                alice_outcome=outcome_a,
                bob_outcome=outcome_b,
            )
        )

    alice_key, bob_key = sift(rounds)

    try:
        chsh_value: Optional[float] = chsh_statistic(rounds)
        secure = detect_eavesdropper(chsh_value, threshold)
    except InsufficientDataError as e:
        logger.warning(f"CHSH not estimable: {e}")
        chsh_value = None
        secure = False

    elapsed = time.perf_counter() - start
    key_rate = len(alice_key) / elapsed if alice_key and elapsed > 0 else 0.0

    logger.info(
        f"E91 finished: {len(alice_key)} key bits, CHSH={chsh_value}, "
        f"secure={secure}, {elapsed:.3f}s"
    )

    return ProtocolResult(
        singlets=n_singlets,
        seed=seed,
        channel=channel,
        rounds=rounds,
        sifted_key=alice_key,
        bob_key=bob_key,
        qber=quantum_bit_error_rate(alice_key, bob_key),
        chsh_value=chsh_value,
        threshold=threshold,
        secure=secure,
        elapsed=elapsed,
        key_rate=key_rate,
    )


def sift(rounds: Iterable[MeasurementRound]) -> Tuple[str, str]:
    """Keep rounds with matching observables.

    Alice maps +1 -> 0 and -1 -> 1; Bob uses the opposite convention, so
    the anti-correlated outcomes yield identical keys on a clean channel.
    """
    alice_bits: List[str] = []
    bob_bits: List[str] = []
    for measured in rounds:
        if (measured.alice_basis, measured.bob_basis) not in KEY_PAIRS:
            continue
        alice_bits.append("0" if measured.alice_outcome == 1 else "1")
        bob_bits.append("1" if measured.bob_outcome == 1 else "0")
    return "".join(alice_bits), "".join(bob_bits)


def quantum_bit_error_rate(alice_key: str, bob_key: str) -> Optional[float]:
    """Fraction of positions where the sifted keys disagree."""
    if len(alice_key) != len(bob_key):
        raise InvalidArgumentError("Keys must have equal length")
    if not alice_key:
        return None
    errors = sum(a != b for a, b in zip(alice_key, bob_key))
    return errors / len(alice_key)


def correlation_cells(rounds: Iterable[MeasurementRound]) -> Dict[Tuple[int, int], Tuple[int, int]]:
    """Per basis pair: (number of rounds, sum of outcome products)."""
    cells: Dict[Tuple[int, int], Tuple[int, int]] = {}
    for measured in rounds:
        pair = (measured.alice_basis, measured.bob_basis)
        count, total = cells.get(pair, (0, 0))
        cells[pair] = (count + 1, total + measured.alice_outcome * measured.bob_outcome)
    return cells


def chsh_statistic(rounds: Sequence[MeasurementRound]) -> float:
    """E = <a1b1> - <a1b3> + <a3b1> + <a3b3> from sample means."""
    cells = correlation_cells(rounds)
    missing = [pair for pair, _ in CHSH_TERMS if pair not in cells]
    if missing:
        raise InsufficientDataError(create_insufficient_data_error(missing, len(rounds)))

    value = 0.0
    for pair, sign in CHSH_TERMS:
        count, total = cells[pair]
        value += sign * total / count
    return value


def exact_chsh(state: State) -> float:
    """CHSH combination of exact Born-rule expectations."""
    return sum(
        sign * expectation(state, BASES.alice_basis(a), BASES.bob_basis(b))
        for (a, b), sign in CHSH_TERMS
    )


def detect_eavesdropper(chsh_value: float, threshold: Optional[float] = None) -> bool:
    """Return True (secure) when |E| strictly exceeds the threshold."""
    threshold = config.chsh_threshold if threshold is None else threshold
    if not CLASSICAL_BOUND < threshold < TSIRELSON_BOUND:
        raise InvalidArgumentError(
            f"CHSH threshold {threshold} must lie strictly between 2 and 2*sqrt(2)"
        )
    return abs(chsh_value) > threshold


def key_generation_report(result: ProtocolResult) -> KeyReportRow:
    """Key generation rate row: (singlets, key length, time, rate)."""
    key_bits = result.key_bits
    rate = key_bits / result.elapsed if key_bits and result.elapsed > 0 else 0.0
    return KeyReportRow(
        singlets=result.singlets,
        key_bits=key_bits,
        time_s=result.elapsed,
        rate_bps=rate,
        chsh=result.chsh_value,
        secure=result.secure,
    )


def key_rate_table(
    singlet_counts: Sequence[int],
    channel: Optional[ChannelConfig] = None,
    seed: int = 0,
    threshold: Optional[float] = None,
) -> pd.DataFrame:
    """Run the protocol once per singlet count and tabulate the report rows."""
    rows = [
        key_generation_report(run_protocol(count, channel, seed=seed, threshold=threshold))
        for count in singlet_counts
    ]
    return key_report_frame(rows)


def key_report_frame(rows: Sequence[KeyReportRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=KEY_REPORT_COLUMNS)


def write_key_report_csv(rows: Sequence[KeyReportRow], path: Path) -> Path:
    """Write rows with header singlets,key_bits,time_s,rate_bps,chsh,secure."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    key_report_frame(rows).to_csv(path, index=False)
    return path


def sifting_fraction() -> float:
    """Expected fraction of rounds that yield key bits under uniform basis choice."""
    return len(KEY_PAIRS) / 9


def analytic_chsh(p: float) -> float:
    """CHSH value of the isotropic singlet state with weight p."""
    return exact_chsh(depolarize(prepare_singlet(), p))
