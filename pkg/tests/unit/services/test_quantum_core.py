"""Tests for the two-qubit simulator."""

import math
from collections import Counter

import numpy as np
import pytest

from src.qsecure.services.error_handler import InvalidArgumentError
from src.qsecure.services.quantum_core import (
    OUTCOME_PAIRS,
    BasisDirection,
    DensityMatrix,
    Gate,
    TwoQubitState,
    apply_gate,
    density_matrix,
    depolarize,
    expectation,
    joint_distribution,
    measure_pair,
    measure_qubit,
    prepare_singlet,
    sample_joint_outcome,
)

SQRT2_INV = 1 / math.sqrt(2)


class TestTwoQubitState:
    """Test state construction and validation."""

    def test_basis_state(self):
        """Test building a computational basis state."""
        state = TwoQubitState.basis("10")
        assert np.allclose(state.amplitudes, [0, 0, 1, 0])

    def test_unknown_basis_label_rejected(self):
        """Test that unknown basis labels are rejected."""
        with pytest.raises(InvalidArgumentError):
            TwoQubitState.basis("2")

    def test_unnormalized_state_rejected(self):
        """Test that unnormalized states are rejected."""
        with pytest.raises(InvalidArgumentError, match="not normalized"):
            TwoQubitState(np.array([1, 1, 0, 0], dtype=complex))

    def test_wrong_dimension_rejected(self):
        """Test that states of the wrong dimension are rejected."""
        with pytest.raises(InvalidArgumentError):
            TwoQubitState(np.array([1, 0], dtype=complex))

    def test_amplitudes_are_read_only(self):
        """Test that amplitudes are read-only."""
        state = TwoQubitState.basis("00")
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0


class TestDensityMatrix:
    """Test mixed-state validation."""

    def test_non_hermitian_rejected(self):
        """Test that non-Hermitian matrices are rejected."""
        entries = np.eye(4, dtype=complex) / 4
        entries[0, 1] = 0.1
        with pytest.raises(InvalidArgumentError, match="Hermitian"):
            DensityMatrix(entries)

    def test_trace_must_be_one(self):
        """Test that the trace must be one."""
        with pytest.raises(InvalidArgumentError, match="trace"):
            DensityMatrix(np.eye(4, dtype=complex) / 2)

    def test_negative_eigenvalue_rejected(self):
        """Test that negative eigenvalues are rejected."""
        entries = np.diag([0.7, 0.5, -0.1, -0.1]).astype(complex)
        with pytest.raises(InvalidArgumentError, match="negative eigenvalue"):
            DensityMatrix(entries)

    def test_purity_of_pure_and_mixed_states(self):
        """Test purity of pure and mixed states."""
        assert density_matrix(prepare_singlet()).purity == pytest.approx(1.0)
        assert depolarize(prepare_singlet(), 0.0).purity == pytest.approx(0.25)


class TestGates:
    """Test gate construction and application."""

    def test_non_unitary_rejected(self):
        """Test that non-unitary gates are rejected."""
        with pytest.raises(InvalidArgumentError, match="not unitary"):
            Gate("bad", np.array([[1, 1], [0, 1]]))

    def test_wrong_shape_rejected(self):
        """Test that gates of the wrong shape are rejected."""
        with pytest.raises(InvalidArgumentError):
            Gate("bad", np.eye(3))

    def test_hadamard_is_self_inverse(self):
        """Test that the Hadamard gate is its own inverse."""
        h = Gate.h()
        assert np.allclose(h.inverse().unitary, h.unitary)
        assert h.inverse().name == "H†"
        assert h.inverse().inverse().name == "H"

    def test_t_inverse_undoes_t(self):
        """Test that T dagger undoes T."""
        state = apply_gate(TwoQubitState.basis("00"), Gate.h(), (0,))
        state = apply_gate(state, Gate.t(), (0,))
        state = apply_gate(state, Gate.t().inverse(), (0,))
        expected = apply_gate(TwoQubitState.basis("00"), Gate.h(), (0,))
        assert np.allclose(state.amplitudes, expected.amplitudes)

    def test_x_on_each_qubit(self):
        """Test X applied to each qubit."""
        assert np.allclose(apply_gate(TwoQubitState.basis("00"), Gate.x(), (0,)).amplitudes, [0, 0, 1, 0])
        assert np.allclose(apply_gate(TwoQubitState.basis("00"), Gate.x(), (1,)).amplitudes, [0, 1, 0, 0])

    def test_cnot_with_reversed_targets(self):
        """Test CNOT with control and target swapped."""
        # Control qubit 1, target qubit 0: |01> -> |11>
        state = apply_gate(TwoQubitState.basis("01"), Gate.cnot(), (1, 0))
        assert np.allclose(state.amplitudes, [0, 0, 0, 1])

    def test_ry_rotation(self):
        """Test a Y rotation."""
        state = apply_gate(TwoQubitState.basis("00"), Gate.ry(math.pi), (0,))
        assert np.allclose(np.abs(state.amplitudes), [0, 0, 1, 0])

    @pytest.mark.parametrize("targets", [(2,), (0, 1), ()])
    def test_invalid_single_qubit_targets(self, targets):
        """Test invalid single-qubit targets."""
        with pytest.raises(InvalidArgumentError):
            apply_gate(TwoQubitState.basis("00"), Gate.x(), targets)

    @pytest.mark.parametrize("targets", [(0, 0), (0,), (1, 2)])
    def test_invalid_two_qubit_targets(self, targets):
        """Test invalid two-qubit targets."""
        with pytest.raises(InvalidArgumentError):
            apply_gate(TwoQubitState.basis("00"), Gate.cnot(), targets)


class TestSinglet:
    """Test singlet preparation and its correlations."""

    def test_singlet_amplitudes(self):
        """Test the singlet amplitudes."""
        assert np.allclose(prepare_singlet().amplitudes, [0, SQRT2_INV, -SQRT2_INV, 0], atol=1e-12)

    @pytest.mark.parametrize("angle", [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, 1.234])
    def test_equal_bases_are_anticorrelated(self, angle):
        """Test that equal bases are anticorrelated."""
        basis = BasisDirection(angle)
        probabilities = joint_distribution(prepare_singlet(), basis, basis)
        assert probabilities[0] == 0.0
        assert probabilities[3] == 0.0
        assert probabilities[1] == pytest.approx(0.5)
        assert probabilities[2] == pytest.approx(0.5)

    def test_expectation_is_minus_cosine(self):
        """Test that the correlation is minus the cosine of the angle."""
        a, b = BasisDirection(0.3), BasisDirection(1.1)
        assert expectation(prepare_singlet(), a, b) == pytest.approx(-math.cos(0.3 - 1.1), abs=1e-12)

    def test_distribution_is_normalized(self):
        """Test that the outcome distribution is normalized."""
        probabilities = joint_distribution(prepare_singlet(), BasisDirection(0.0), BasisDirection(math.pi / 4))
        assert probabilities.sum() == pytest.approx(1.0)
        assert (probabilities >= 0).all()

    def test_basis_angle_wraps(self):
        """Test that basis angles wrap."""
        assert BasisDirection(2 * math.pi + 0.5).angle == pytest.approx(0.5)

    def test_non_finite_angle_rejected(self):
        """Test that non-finite angles are rejected."""
        with pytest.raises(InvalidArgumentError):
            BasisDirection(math.nan)


class TestDepolarize:
    """Test the isotropic channel."""

    def test_p_zero_is_maximally_mixed(self):
        """Test that p=0 gives the maximally mixed state."""
        rho = depolarize(prepare_singlet(), 0.0)
        assert np.allclose(rho.entries, np.eye(4) / 4)

    def test_p_one_is_pure_singlet(self):
        """Test that p=1 leaves the singlet pure."""
        rho = depolarize(prepare_singlet(), 1.0)
        assert np.allclose(rho.entries, prepare_singlet().projector())

    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_p_out_of_range(self, p):
        """Test that p outside [0, 1] is rejected."""
        with pytest.raises(InvalidArgumentError):
            depolarize(prepare_singlet(), p)

    def test_maximally_mixed_distribution_is_uniform(self):
        """Test that the maximally mixed distribution is uniform."""
        rho = depolarize(prepare_singlet(), 0.0)
        probabilities = joint_distribution(rho, BasisDirection(0.0), BasisDirection(0.7))
        assert np.allclose(probabilities, 0.25)

    @pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_correlation_scales_with_p(self, p):
        """Test that the correlation scales with p."""
        a, b = BasisDirection(0.0), BasisDirection(math.pi / 4)
        rho = depolarize(prepare_singlet(), p)
        assert expectation(rho, a, b) == pytest.approx(-p * math.cos(math.pi / 4), abs=1e-12)


class TestMeasurement:
    """Test sampling and projective measurement."""

    def test_sample_from_degenerate_distribution(self, rng):
        """Test sampling from a degenerate distribution."""
        for _ in range(50):
            assert sample_joint_outcome(np.array([0.0, 0.0, 1.0, 0.0]), rng) == (-1, 1)

    def test_sample_uses_outcome_order(self, rng):
        """Test that sampling follows the outcome order."""
        outcomes = {sample_joint_outcome(np.array([0.25, 0.25, 0.25, 0.25]), rng) for _ in range(200)}
        assert outcomes == set(OUTCOME_PAIRS)

    def test_measure_pair_is_deterministic_for_seed(self):
        """Test that a seed fixes pair measurements."""
        basis = BasisDirection(math.pi / 4)
        first = [measure_pair(prepare_singlet(), basis, basis, np.random.default_rng(5)) for _ in range(3)]
        second = [measure_pair(prepare_singlet(), basis, basis, np.random.default_rng(5)) for _ in range(3)]
        assert first == second

    def test_measure_pair_same_basis_never_agrees(self, rng):
        """Test that pair outcomes always disagree in equal bases."""
        basis = BasisDirection(math.pi / 2)
        for _ in range(500):
            a, b = measure_pair(prepare_singlet(), basis, basis, rng)
            assert a == -b

    def test_sampled_frequencies_match_born_rule(self, rng):
        """Test that 10^5 draws stay within 3 sigma of each outcome probability."""
        probabilities = joint_distribution(prepare_singlet(), BasisDirection(0.0), BasisDirection(math.pi / 4))
        n = 100_000
        counts = Counter(sample_joint_outcome(probabilities, rng) for _ in range(n))
        for pair, p in zip(OUTCOME_PAIRS, probabilities):
            assert abs(counts[pair] / n - p) <= 3 * math.sqrt(p * (1 - p) / n)

    def test_measure_qubit_collapses_pure_state(self, rng):
        """Test measuring one qubit of a pure state."""
        outcome, collapsed = measure_qubit(prepare_singlet(), 1, BasisDirection(0.0), rng)
        assert outcome in (1, -1)
        assert isinstance(collapsed, TwoQubitState)
        # Bob's Z outcome fixes Alice's Z outcome to the opposite value.
        z = BasisDirection(0.0)
        probabilities = joint_distribution(collapsed, z, z)
        expected_index = OUTCOME_PAIRS.index((-outcome, outcome))
        assert probabilities[expected_index] == pytest.approx(1.0)

    def test_measure_qubit_on_mixed_state(self, rng):
        """Test measuring one qubit of a mixed state."""
        outcome, collapsed = measure_qubit(depolarize(prepare_singlet(), 0.5), 0, BasisDirection(0.0), rng)
        assert outcome in (1, -1)
        assert isinstance(collapsed, DensityMatrix)
        assert np.trace(collapsed.entries).real == pytest.approx(1.0)

    def test_measure_qubit_invalid_index(self, rng):
        """Test that an invalid qubit index is rejected."""
        with pytest.raises(InvalidArgumentError):
            measure_qubit(prepare_singlet(), 2, BasisDirection(0.0), rng)


class TestSingletInvariance:
    """Test properties that follow from the singlet's rotational symmetry."""

    @pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
    def test_same_rotation_on_both_qubits_keeps_anticorrelation(self, theta):
        """Test that a common rotation keeps the singlet anticorrelated."""
        state = apply_gate(prepare_singlet(), Gate.ry(theta), (0,))
        state = apply_gate(state, Gate.ry(theta), (1,))
        z = BasisDirection(0.0)
        probabilities = joint_distribution(state, z, z)
        assert probabilities[0] == pytest.approx(0.0, abs=1e-12)
        assert probabilities[3] == pytest.approx(0.0, abs=1e-12)

    def test_x_twice_is_identity(self):
        """Test that applying X twice is the identity."""
        state = apply_gate(apply_gate(TwoQubitState.basis("01"), Gate.x(), (0,)), Gate.x(), (0,))
        assert np.allclose(state.amplitudes, TwoQubitState.basis("01").amplitudes)

    def test_hadamard_creates_superposition(self):
        """Test that Hadamard creates an equal superposition."""
        state = apply_gate(TwoQubitState.basis("00"), Gate.h(), (0,))
        assert np.allclose(state.amplitudes, [SQRT2_INV, 0, SQRT2_INV, 0])

    def test_opposed_bases_give_positive_correlation(self):
        """Test that opposed bases give positive correlation."""
        a, b = BasisDirection(0.0), BasisDirection(3 * math.pi / 4)
        assert expectation(prepare_singlet(), a, b) == pytest.approx(SQRT2_INV, abs=1e-12)

    def test_half_depolarized_table_is_linear_mix(self):
        """Test the half-depolarized outcome table."""
        a, b = BasisDirection(0.0), BasisDirection(math.pi / 4)
        pure = joint_distribution(prepare_singlet(), a, b)
        mixed = joint_distribution(depolarize(prepare_singlet(), 0.5), a, b)
        assert np.allclose(mixed, 0.5 * pure + 0.5 * 0.25)
