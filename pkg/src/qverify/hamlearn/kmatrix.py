"""Constraint matrix K_nm = <-i [A_n, S_m]> on a (near-)stationary state.

For Hermitian A and S the identity <-i[A,S]> = 2 Im <A S> turns every entry
into one inner product: with phi_m = S_m|psi> cached, a whole row costs one
operator application (chi_n = A_n|psi>) plus a matrix-vector product.
Mixed states use the dense analogue 2 Im Tr[A (S rho)].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

from ..qsim.fermion import FermionBasis, apply_terms, assemble_operator
from ..qsim.solve import DENSE_CUTOFF
from ..qsim.state import QuantumState
from ..rng import make_rng, rng_provenance
from .opbasis import OperatorBasis

if TYPE_CHECKING:  # avoid a circular import; constraints.py uses KRowEngine
    from .constraints import ConstraintOp, ConstraintSet


@dataclass
class KMatrix:
    values: np.ndarray  # (n_constraints, M) real
    constraint_labels: list[str]
    basis_labels: list[str]
    mode: str  # "exact" | "born" | "surrogate"
    shots_per_entry: int | None
    provenance: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


class KRowEngine:
    """Exact K rows for one state, memoized by constraint label."""

    def __init__(self, state: QuantumState, op_basis: OperatorBasis):
        if not isinstance(state.basis, FermionBasis):
            raise TypeError("hamlearn operates on fermionic sector states")
        self.state = state
        self.op_basis = op_basis
        self.fbasis: FermionBasis = state.basis
        self._rows: dict[str, np.ndarray] = {}
        if state.is_pure:
            psi = state.data
            cols = [apply_terms(self.fbasis, list(e.terms), psi) for e in op_basis.elements]
            # Hubbard basis elements are real, so phi stays real for real psi
            self._phi = np.stack(cols, axis=1)
            self._s_rho = None
        else:
            rho = state.data
            self._phi = None
            self._s_rho = [
                assemble_operator(self.fbasis, list(e.terms)) @ rho
                for e in op_basis.elements
            ]

    def chi(self, cop: ConstraintOp) -> np.ndarray:
        """A_n |psi> (pure states only)."""
        return apply_terms(self.fbasis, list(cop.terms), self.state.data)

    def row(self, cop: ConstraintOp) -> np.ndarray:
        cached = self._rows.get(cop.label)
        if cached is not None:
            return cached
        if self.state.is_pure:
            chi = self.chi(cop)
            row = 2.0 * np.imag(chi.conj() @ self._phi)
        else:
            a = assemble_operator(self.fbasis, list(cop.terms)).toarray()
            row = np.array(
                [2.0 * np.imag(np.einsum("xy,yx->", a, sr)) for sr in self._s_rho]
            )
        row = np.ascontiguousarray(row, dtype=float)
        self._rows[cop.label] = row
        return row

    def matrix(self, constraints: ConstraintSet) -> KMatrix:
        rows = np.stack([self.row(op) for op in constraints.ops])
        return KMatrix(
            values=rows,
            constraint_labels=[op.label for op in constraints.ops],
            basis_labels=self.op_basis.labels(),
            mode="exact",
            shots_per_entry=None,
            provenance={"state_pure": self.state.is_pure},
        )


def k_matrix_exact(
    state: QuantumState,
    op_basis: OperatorBasis,
    constraints: ConstraintSet,
    engine: KRowEngine | None = None,
) -> KMatrix:
    """Exact-expectation K for the selected constraints."""
    eng = engine if engine is not None else KRowEngine(state, op_basis)
    return eng.matrix(constraints)


class KSampler:
    """Shot-noise models for K: per-entry Born sampling or a Gaussian surrogate.

    Entry (n, m) draws from its own derived stream, so results do not depend
    on evaluation order.  Spectral data (Born) and exact means/variances
    (surrogate) are precomputed once and reused across sample() calls.
    """

    def __init__(
        self,
        state: QuantumState,
        op_basis: OperatorBasis,
        constraints: ConstraintSet,
        method: str = "auto",
    ):
        self.state = state
        self.op_basis = op_basis
        self.constraints = constraints
        dim = state.dim
        if method == "auto":
            method = "born" if dim <= DENSE_CUTOFF else "surrogate"
        if method == "born" and dim > DENSE_CUTOFF:
            raise ValueError(
                f"born sampling needs dense-feasible dimension (got {dim})"
            )
        self.method = method
        self.engine = KRowEngine(state, op_basis)
        self.n_rows = len(constraints.ops)
        self.n_cols = op_basis.m
        if method == "born":
            self._spectral = self._precompute_spectral()
        else:
            self._means, self._vars = self._precompute_surrogate()

    def _observable(self, n: int, m: int):
        fb = self.engine.fbasis
        a = assemble_operator(fb, list(self.constraints.ops[n].terms)).toarray()
        s = self._dense_s(m)
        o = -1j * (a @ s - s @ a)
        return (o + o.conj().T) / 2  # clean numerical Hermiticity

    def _dense_s(self, m: int) -> np.ndarray:
        if not hasattr(self, "_s_cache"):
            self._s_cache: dict[int, np.ndarray] = {}
        if m not in self._s_cache:
            self._s_cache[m] = assemble_operator(
                self.engine.fbasis, list(self.op_basis.elements[m].terms)
            ).toarray()
        return self._s_cache[m]

    def _precompute_spectral(self):
        out = []
        psi_pure = self.state.is_pure
        for n in range(self.n_rows):
            row = []
            for m in range(self.n_cols):
                w, v = scipy.linalg.eigh(self._observable(n, m))
                if psi_pure:
                    probs = np.abs(v.conj().T @ self.state.data) ** 2
                else:
                    probs = np.real(
                        np.einsum("ij,jk,ki->i", v.conj().T, self.state.data, v)
                    )
                probs = np.clip(probs, 0.0, None)
                probs /= probs.sum()
                row.append((w, probs))
            out.append(row)
        return out

    def _precompute_surrogate(self):
        fb = self.engine.fbasis
        means = np.zeros((self.n_rows, self.n_cols))
        variances = np.zeros((self.n_rows, self.n_cols))
        if not self.state.is_pure:
            raise ValueError("gaussian surrogate implemented for pure states")
        for n, cop in enumerate(self.constraints.ops):
            chi = self.engine.chi(cop)
            row = self.engine.row(cop)
            for m, elem in enumerate(self.op_basis.elements):
                phi = self.engine._phi[:, m]
                # O|psi> = -i (A phi_m - S chi_n); <O^2> = ||O psi||^2
                w = -1j * (
                    apply_terms(fb, list(cop.terms), phi)
                    - apply_terms(fb, list(elem.terms), chi)
                )
                second = float(np.real(np.vdot(w, w)))
                means[n, m] = row[m]
                variances[n, m] = max(second - row[m] ** 2, 0.0)
        return means, variances

    def sample(self, shots_per_entry: int, seed: int | None) -> KMatrix:
        if shots_per_entry < 1:
            raise ValueError("shots_per_entry must be positive")
        vals = np.zeros((self.n_rows, self.n_cols))
        for n in range(self.n_rows):
            for m in range(self.n_cols):
                # shots in the derivation path: different budgets draw
                # independently even under the same seed
                rng = make_rng(seed, "kentry", shots_per_entry, n, m)
                if self.method == "born":
                    w, probs = self._spectral[n][m]
                    counts = rng.multinomial(shots_per_entry, probs)
                    vals[n, m] = float(counts @ w) / shots_per_entry
                else:
                    sd = float(np.sqrt(self._vars[n, m] / shots_per_entry))
                    vals[n, m] = self._means[n, m] + rng.normal(0.0, sd)
        return KMatrix(
            values=vals,
            constraint_labels=[op.label for op in self.constraints.ops],
            basis_labels=self.op_basis.labels(),
            mode=self.method,
            shots_per_entry=shots_per_entry,
            provenance={
                "rng": rng_provenance(seed, "kentry"),
                "per_entry_streams": True,
            },
        )


def k_matrix_sampled(
    state: QuantumState,
    op_basis: OperatorBasis,
    constraints: ConstraintSet,
    shots_per_entry: int,
    seed: int | None,
    method: str = "auto",
) -> KMatrix:
    """Shot-sampled K (convenience wrapper over KSampler)."""
    return KSampler(state, op_basis, constraints, method=method).sample(
        shots_per_entry, seed
    )
