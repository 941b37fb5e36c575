"""Classically verified delegation of X/Z measurements and energy tests."""

from .clock import (
    MINIMAL_CIRCUIT,
    ClockInstance,
    build_clock_instance,
    build_clock_state,
    circuit_states,
    clock_qubits,
    minimal_clock_instance,
    pauli_expansion,
)
from .energy import (
    HamiltonianInstance,
    VerificationResult,
    document_to_instance,
    instance_to_document,
    load_instance_text,
    parse_instance_document,
    serialize_instance,
    verify_energy,
)
from .functions import (
    KIND_FOR_BASIS,
    ONE_TO_ONE,
    TWO_TO_ONE,
    TrapdoorKey,
    enumerate_functions,
    keygen,
)
from .protocol import (
    MEASUREMENT_ROUND,
    TEST_ROUND,
    CommittedState,
    DelegationSummary,
    ProtocolTranscript,
    commit,
    commit_measure_image,
    decode,
    decoded_distribution,
    delegate_rounds,
    key_decoded_distribution,
    run_round,
    sample_bits,
    transcript_with_decoded,
)
from .provers import (
    BasisGuessProver,
    HonestProver,
    MixedStateProver,
    WrongTableProver,
)

__all__ = [
    "MINIMAL_CIRCUIT",
    "ClockInstance",
    "build_clock_instance",
    "build_clock_state",
    "circuit_states",
    "clock_qubits",
    "minimal_clock_instance",
    "pauli_expansion",
    "HamiltonianInstance",
    "VerificationResult",
    "document_to_instance",
    "instance_to_document",
    "load_instance_text",
    "parse_instance_document",
    "serialize_instance",
    "verify_energy",
    "KIND_FOR_BASIS",
    "ONE_TO_ONE",
    "TWO_TO_ONE",
    "TrapdoorKey",
    "enumerate_functions",
    "keygen",
    "MEASUREMENT_ROUND",
    "TEST_ROUND",
    "CommittedState",
    "DelegationSummary",
    "ProtocolTranscript",
    "commit",
    "commit_measure_image",
    "decode",
    "decoded_distribution",
    "delegate_rounds",
    "key_decoded_distribution",
    "run_round",
    "sample_bits",
    "transcript_with_decoded",
    "BasisGuessProver",
    "HonestProver",
    "MixedStateProver",
    "WrongTableProver",
]
