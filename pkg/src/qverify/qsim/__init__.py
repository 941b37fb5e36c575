"""Quantum simulation core: fermionic lattice sectors, qubit registers, solvers."""

from .fermion import (
    SPIN_UP,
    SPIN_DOWN,
    LatticeSpec,
    FermionTerm,
    FermionBasis,
    mode_index,
    hopping_terms,
    current_terms,
    number_terms,
    doublon_terms,
    hubbard_terms,
    assemble_operator,
    apply_terms,
)
from .qubit import (
    QubitBasis,
    PauliTerm,
    PAULI_1Q,
    pauli_term_matrix,
    assemble_pauli_operator,
    apply_single_qubit_gate,
    apply_local_unitaries,
    reduced_density,
    index_to_bitstring,
    bitstring_to_index,
)
from .state import (
    QuantumState,
    ghz_state,
    zero_state,
    plus_state,
    theta_state,
    random_pure_state,
    random_density_state,
    parse_state_spec,
)
from .solve import (
    SampleStats,
    ground_state,
    thermal_state,
    time_evolve,
    expectation,
    observable_variance,
    sample_bitstrings,
    sample_observable,
)

__all__ = [
    "SPIN_UP",
    "SPIN_DOWN",
    "LatticeSpec",
    "FermionTerm",
    "FermionBasis",
    "mode_index",
    "hopping_terms",
    "current_terms",
    "number_terms",
    "doublon_terms",
    "hubbard_terms",
    "assemble_operator",
    "apply_terms",
    "QubitBasis",
    "PauliTerm",
    "PAULI_1Q",
    "pauli_term_matrix",
    "assemble_pauli_operator",
    "apply_single_qubit_gate",
    "apply_local_unitaries",
    "reduced_density",
    "index_to_bitstring",
    "bitstring_to_index",
    "QuantumState",
    "ghz_state",
    "zero_state",
    "plus_state",
    "theta_state",
    "random_pure_state",
    "random_density_state",
    "parse_state_spec",
    "SampleStats",
    "ground_state",
    "thermal_state",
    "time_evolve",
    "expectation",
    "observable_variance",
    "sample_bitstrings",
    "sample_observable",
]
