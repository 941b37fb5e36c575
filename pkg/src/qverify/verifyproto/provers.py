"""Prover strategies for delegated energy verification.

A prover exposes ``open_round(table, qubit, other_ops, rng)`` and returns
a session carrying the announced image ``y`` plus two reveal methods.  The
round kind is only disclosed through which reveal method gets called,
mirroring the message order of the interaction: the prover commits and
announces the image before learning whether it is being tested.
"""

from __future__ import annotations

import numpy as np

from ..qsim import QuantumState, QubitBasis
from .protocol import commit, commit_measure_image, sample_bits


class HonestSession:
    """State of one honest round after the image announcement."""

    def __init__(self, image, residual, qubit, preimage_qubit, other_ops, rng):
        self.image = image
        self._residual = residual
        self._qubit = qubit
        self._preimage = preimage_qubit
        self._other_ops = tuple(other_ops)
        self._rng = rng

    def reveal_test(self) -> tuple[int, int]:
        """Open the committed registers in Z."""
        return sample_bits(
            self._residual, [(self._qubit, "z"), (self._preimage, "z")], self._rng
        )

    def reveal_measurement(self) -> tuple[tuple[int, int], tuple[int, ...]]:
        """X outcomes of the committed registers plus direct outcomes.

        Everything is drawn in a single joint Born sample so correlations
        between the delegated qubit and the directly measured ones are
        exact.
        """
        ops = [(self._qubit, "x"), (self._preimage, "x")] + list(self._other_ops)
        bits = sample_bits(self._residual, ops, self._rng)
        return (bits[0], bits[1]), tuple(bits[2:])


class HonestProver:
    """Runs the delegation instructions faithfully on a fixed pure state."""

    def __init__(self, state: QuantumState):
        state.validate()
        self.state = state

    def open_round(self, table, qubit, other_ops, rng) -> HonestSession:
        committed = commit(self.state, qubit, table)
        y, residual = commit_measure_image(committed, rng)
        return HonestSession(
            y, residual, qubit, committed.preimage_qubit, other_ops, rng
        )


class MixedStateProver:
    """Commits a fresh uniformly random computational basis state per round.

    This is the classical ensemble realizing the maximally mixed state:
    every marginal the verifier ever sees matches a prover holding I/2^n.
    """

    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits

    def open_round(self, table, qubit, other_ops, rng) -> HonestSession:
        vec = np.zeros(1 << self.num_qubits, dtype=complex)
        vec[int(rng.integers(vec.size))] = 1.0
        state = QuantumState(vec, QubitBasis(self.num_qubits))
        return HonestProver(state).open_round(table, qubit, other_ops, rng)


class _BasisGuessSession(HonestSession):
    def reveal_measurement(self) -> tuple[tuple[int, int], tuple[int, ...]]:
        # measures the committed registers in Z anyway, then invents the
        # X outcomes it was asked for
        ops = [(self._qubit, "z"), (self._preimage, "z")] + list(self._other_ops)
        bits = sample_bits(self._residual, ops, self._rng)
        fabricated = (int(self._rng.integers(2)), int(self._rng.integers(2)))
        return fabricated, tuple(bits[2:])


class BasisGuessProver:
    """Cheater that prepares and tests honestly but fabricates X data.

    In measurement rounds it measures the committed registers in Z and
    reports uniformly random (u, v).  Decoding of one-to-one keys ignores
    (u, v), so Z-delegated statistics survive; X-delegated outcomes
    collapse to coin flips.
    """

    def __init__(self, state: QuantumState):
        state.validate()
        self.state = state

    def open_round(self, table, qubit, other_ops, rng) -> _BasisGuessSession:
        committed = commit(self.state, qubit, table)
        y, residual = commit_measure_image(committed, rng)
        return _BasisGuessSession(
            y, residual, qubit, committed.preimage_qubit, other_ops, rng
        )


class WrongTableProver:
    """Cheater that commits with a corrupted copy of the announced table.

    Every image bit is flipped, so honestly opened test rounds can never
    satisfy the verifier's consistency check.
    """

    def __init__(self, state: QuantumState):
        state.validate()
        self.state = state

    def open_round(self, table, qubit, other_ops, rng) -> HonestSession:
        corrupted = tuple(int(t) ^ 1 for t in table)
        committed = commit(self.state, qubit, corrupted)
        y, residual = commit_measure_image(committed, rng)
        return HonestSession(
            y, residual, qubit, committed.preimage_qubit, other_ops, rng
        )
