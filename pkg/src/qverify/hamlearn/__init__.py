"""Hamiltonian reconstruction from stationary-state constraint equations."""

from .opbasis import BasisElement, OperatorBasis, build_operator_basis
from .constraints import (
    ConstraintOp,
    ConstraintSet,
    enumerate_candidates,
    build_constraints,
)
from .kmatrix import KMatrix, KRowEngine, KSampler, k_matrix_exact, k_matrix_sampled
from .reconstruct import LearnResult, reconstruct, parameter_distance
from .curves import CurvePoint, learning_curve

__all__ = [
    "BasisElement",
    "OperatorBasis",
    "build_operator_basis",
    "ConstraintOp",
    "ConstraintSet",
    "enumerate_candidates",
    "build_constraints",
    "KMatrix",
    "KRowEngine",
    "KSampler",
    "k_matrix_exact",
    "k_matrix_sampled",
    "LearnResult",
    "reconstruct",
    "parameter_distance",
    "CurvePoint",
    "learning_curve",
]
