"""Tools for verifying simulated quantum devices.

Subpackages:

- ``qsim``: fermionic lattice sectors, qubit registers, states, solvers.
- ``hamlearn``: Hamiltonian reconstruction from stationary-state constraints.
- ``randmeas``: randomized-measurement fidelity estimation between devices.
- ``repostore``: a file-based repository for measurement datasets.
- ``verifyproto``: a toy commitment-based delegated-measurement protocol.
"""

__version__ = "0.1.0"
