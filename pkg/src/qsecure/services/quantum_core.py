"""
Two-qubit simulator for entanglement-based key distribution.

Basis order is |00>, |01>, |10>, |11> with qubit 0 (Alice) as the most
significant bit. Measurements are projective along a direction in the
X-Z plane: observable = cos(angle) * Z + sin(angle) * X.

Outcome tables are indexed (+1,+1), (+1,-1), (-1,+1), (-1,-1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np

from ..config import get_config
from .error_handler import InvalidArgumentError

logger = logging.getLogger(__name__)
config = get_config()

TOLERANCE = config.exact_tolerance
TWO_PI = 2.0 * math.pi

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_SQRT2_INV = 1 / math.sqrt(2)

OUTCOME_PAIRS: Tuple[Tuple[int, int], ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Pure state of the entangled pair."""
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape != (4,):
            raise InvalidArgumentError("A two-qubit state needs exactly 4 amplitudes")
        norm = float(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm - 1.0) > TOLERANCE:
            raise InvalidArgumentError(f"State is not normalized (norm {norm!r})")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def basis(cls, label: str) -> "TwoQubitState":
        """Computational basis state from a label such as '01'."""
        if label not in ("00", "01", "10", "11"):
            raise InvalidArgumentError(f"Unknown basis label '{label}'")
        amplitudes = np.zeros(4, dtype=complex)
        amplitudes[int(label, 2)] = 1.0
        return cls(amplitudes)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state of the entangled pair."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (4, 4):
            raise InvalidArgumentError("A two-qubit density matrix must be 4x4")
        if not np.allclose(entries, entries.conj().T, rtol=0.0, atol=TOLERANCE):
            raise InvalidArgumentError("Density matrix is not Hermitian")
        trace = complex(np.trace(entries))
        if abs(trace - 1.0) > TOLERANCE:
            raise InvalidArgumentError(f"Density matrix trace is {trace.real!r}, expected 1")
        if float(np.min(np.linalg.eigvalsh(entries))) < config.eigenvalue_floor:
            raise InvalidArgumentError("Density matrix has a negative eigenvalue")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def purity(self) -> float:
        """Tr(rho^2); 1 for pure states, 1/4 for the maximally mixed state."""
        return float(np.real(np.trace(self.entries @ self.entries)))


State = Union[TwoQubitState, DensityMatrix]


@dataclass(frozen=True)
class BasisDirection:
    """Measurement direction in the X-Z plane."""
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise InvalidArgumentError("Basis angle must be finite")
        object.__setattr__(self, "angle", self.angle % TWO_PI)

    @property
    def observable(self) -> np.ndarray:
        return math.cos(self.angle) * PAULI_Z + math.sin(self.angle) * PAULI_X

    def projectors(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenprojectors for outcomes +1 and -1."""
        return _projectors(self.angle)


@lru_cache(maxsize=64)
def _projectors(angle: float) -> Tuple[np.ndarray, np.ndarray]:
    observable = math.cos(angle) * PAULI_Z + math.sin(angle) * PAULI_X
    plus = (I2 + observable) / 2
    minus = (I2 - observable) / 2
    plus.setflags(write=False)
    minus.setflags(write=False)
    return plus, minus


@dataclass(frozen=True, eq=False)
class Gate:
    """Unitary gate acting on one or two qubits."""
    name: str
    unitary: np.ndarray = field(repr=False)

    def __post_init__(self):
        unitary = np.array(self.unitary, dtype=complex)
        if unitary.shape not in ((2, 2), (4, 4)):
            raise InvalidArgumentError(f"Gate {self.name} must be 2x2 or 4x4")
        identity = np.eye(unitary.shape[0])
        if not np.allclose(unitary.conj().T @ unitary, identity, rtol=0.0, atol=TOLERANCE):
            raise InvalidArgumentError(f"Gate {self.name} is not unitary")
        unitary.setflags(write=False)
        object.__setattr__(self, "unitary", unitary)

    @property
    def num_qubits(self) -> int:
        return 1 if self.unitary.shape == (2, 2) else 2

    def inverse(self) -> "Gate":
        name = self.name[:-1] if self.name.endswith("†") else f"{self.name}†"
        return Gate(name, self.unitary.conj().T)

    @classmethod
    def x(cls) -> "Gate":
        return cls("X", PAULI_X)

    @classmethod
    def h(cls) -> "Gate":
        return cls("H", np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV)

    @classmethod
    def s(cls) -> "Gate":
        return cls("S", np.array([[1, 0], [0, 1j]], dtype=complex))

    @classmethod
    def t(cls) -> "Gate":
        return cls("T", np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex))

    @classmethod
    def ry(cls, theta: float) -> "Gate":
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return cls(f"RY({theta:g})", np.array([[c, -s], [s, c]], dtype=complex))

    @classmethod
    def cnot(cls) -> "Gate":
        # Control is the first target, flip acts on the second.
        return cls(
            "CNOT",
            np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
        )


def _full_operator(gate: Gate, targets: Sequence[int]) -> np.ndarray:
    targets = tuple(targets)
    if any(t not in (0, 1) for t in targets):
        raise InvalidArgumentError(f"Invalid target index in {targets}; qubits are 0 and 1")

    if gate.num_qubits == 1:
        if len(targets) != 1:
            raise InvalidArgumentError(f"Gate {gate.name} needs exactly one target")
        return np.kron(gate.unitary, I2) if targets[0] == 0 else np.kron(I2, gate.unitary)

    if len(targets) != 2 or targets[0] == targets[1]:
        raise InvalidArgumentError(f"Gate {gate.name} needs two distinct targets")
    if targets == (0, 1):
        return gate.unitary
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    return swap @ gate.unitary @ swap


def apply_gate(state: TwoQubitState, gate: Gate, targets: Sequence[int]) -> TwoQubitState:
    """Apply a gate: |psi'> = U |psi>."""
    operator = _full_operator(gate, targets)
    return TwoQubitState(operator @ state.amplitudes)


def prepare_singlet() -> TwoQubitState:
    """Prepare (|01> - |10>)/sqrt(2).

    Circuit: X on both qubits (|00> -> |11>), H on qubit 0, CNOT 0 -> 1.
    """
    state = TwoQubitState.basis("00")
    state = apply_gate(state, Gate.x(), (0,))
    state = apply_gate(state, Gate.x(), (1,))
    state = apply_gate(state, Gate.h(), (0,))
    return apply_gate(state, Gate.cnot(), (0, 1))


def density_matrix(state: State) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    return DensityMatrix(state.projector())


def depolarize(pure: TwoQubitState, p: float) -> DensityMatrix:
    """Isotropic state p|psi><psi| + (1 - p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"Depolarizing weight p={p} must lie in [0, 1]")
    return DensityMatrix(p * pure.projector() + (1.0 - p) * np.eye(4, dtype=complex) / 4)


def _expect(state: State, operator: np.ndarray) -> float:
    if isinstance(state, TwoQubitState):
        psi = state.amplitudes
        return float(np.real(psi.conj() @ operator @ psi))
    return float(np.real(np.trace(state.entries @ operator)))


def joint_distribution(state: State, basis_a: BasisDirection, basis_b: BasisDirection) -> np.ndarray:
    """Born-rule probabilities of the four outcome pairs."""
    projectors_a = basis_a.projectors()
    projectors_b = basis_b.projectors()
    probabilities = np.array(
        [_expect(state, np.kron(pa, pb)) for pa in projectors_a for pb in projectors_b]
    )
    # Round-off below this level is numerical zero.
    probabilities[probabilities < 1e-15] = 0.0
    return probabilities / probabilities.sum()


def expectation(state: State, basis_a: BasisDirection, basis_b: BasisDirection) -> float:
    """Exact correlation <ab> of the two +/-1 outcomes."""
    probabilities = joint_distribution(state, basis_a, basis_b)
    return float(sum(a * b * p for (a, b), p in zip(OUTCOME_PAIRS, probabilities)))


def sample_joint_outcome(probabilities: np.ndarray, rng: np.random.Generator) -> Tuple[int, int]:
    """Draw one outcome pair from a joint distribution (one uniform draw)."""
    cumulative = np.cumsum(probabilities)
    index = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return OUTCOME_PAIRS[min(index, 3)]


def measure_pair(
    state: State,
    basis_a: BasisDirection,
    basis_b: BasisDirection,
    rng: np.random.Generator,
) -> Tuple[int, int]:
    """Measure Alice's qubit along basis_a and Bob's along basis_b."""
    return sample_joint_outcome(joint_distribution(state, basis_a, basis_b), rng)


def measure_qubit(
    state: State,
    qubit: int,
    basis: BasisDirection,
    rng: np.random.Generator,
) -> Tuple[int, State]:
    """Measure a single qubit and return the outcome with the collapsed state."""
    if qubit not in (0, 1):
        raise InvalidArgumentError(f"Invalid qubit index {qubit}")

    plus, minus = basis.projectors()
    operators = [np.kron(p, I2) if qubit == 0 else np.kron(I2, p) for p in (plus, minus)]
    p_plus = min(max(_expect(state, operators[0]), 0.0), 1.0)
    outcome = 1 if rng.random() < p_plus else -1
    operator = operators[0] if outcome == 1 else operators[1]
    weight = p_plus if outcome == 1 else 1.0 - p_plus

    if isinstance(state, TwoQubitState):
        collapsed = operator @ state.amplitudes
        return outcome, TwoQubitState(collapsed / np.linalg.norm(collapsed))

    collapsed = operator @ state.entries @ operator / weight
    # Renormalize trace drift from the division.
    collapsed = (collapsed + collapsed.conj().T) / 2
    return outcome, DensityMatrix(collapsed / np.trace(collapsed).real)
