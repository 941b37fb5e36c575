"""Energy-threshold verification over delegated X/Z measurements.

The verifier holds a Hamiltonian whose Pauli factors all lie in {I, X, Z}
and two thresholds a < b.  Each round it importance-samples one term,
delegates the term's first non-identity qubit through the commitment
machinery (one-to-one key for a Z factor, two-to-one for an X factor) and
has the prover measure the remaining support directly.  Test rounds audit
the commitment instead of producing data; a single failed audit rejects
immediately.  The importance-weighted estimator is compared against the
threshold midpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from ..qsim import PauliTerm, QuantumState, assemble_pauli_operator
from ..repostore.format import (
    FORMAT_VERSION,
    MalformedDatasetError,
    canonical_json,
    document_digest,
)
from ..rng import make_rng
from .functions import keygen
from .protocol import (
    MEASUREMENT_ROUND,
    TEST_ROUND,
    ProtocolTranscript,
    decode,
)

_XZ_LETTERS = frozenset("IXZ")


@dataclass(frozen=True)
class HamiltonianInstance:
    """XZ Hamiltonian with yes/no energy thresholds.

    Every Pauli factor must lie in {I, X, Z} so each term is measurable
    with X- and Z-basis settings alone; coefficients must be real and the
    thresholds satisfy a < b.
    """

    num_qubits: int
    terms: tuple[PauliTerm, ...]
    threshold_yes: float
    threshold_no: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.n != self.num_qubits:
                raise ValueError(
                    f"term {t.factors!r} does not act on {self.num_qubits} qubits"
                )
            if not set(t.factors) <= _XZ_LETTERS:
                raise ValueError(f"term {t.factors!r} has factors outside I/X/Z")
            if abs(complex(t.coeff).imag) > 0.0:
                raise ValueError(f"term {t.factors!r} has a non-real coefficient")
        if not self.threshold_yes < self.threshold_no:
            raise ValueError(
                f"thresholds must satisfy a < b, got "
                f"({self.threshold_yes}, {self.threshold_no})"
            )

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.threshold_yes + self.threshold_no)

    def matrix(self) -> np.ndarray:
        return assemble_pauli_operator(self.num_qubits, self.terms)

    def exact_expectation(self, state: QuantumState) -> float:
        rho = state.as_density()
        return float(np.real(np.trace(self.matrix() @ rho)))


@dataclass(frozen=True)
class VerificationResult:
    """Outcome of one verification run."""

    accepted: bool
    estimate: float
    std_error: float
    midpoint: float
    n_rounds: int
    n_test_rounds: int
    n_measurement_rounds: int
    n_test_failures: int
    test_pass_rate: float
    failure: ProtocolTranscript | None
    commit_qubits: int


def _jackknife_se(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        return float("nan")
    total = values.sum()
    loo = (total - values) / (n - 1)
    center = loo.mean()
    return float(np.sqrt((n - 1) / n * np.sum((loo - center) ** 2)))


def verify_energy(
    instance: HamiltonianInstance,
    prover,
    n_rounds: int,
    test_fraction: float = 0.5,
    seed: int = 0,
    transcript_sink=None,
) -> VerificationResult:
    """Run the full interactive verification against a prover object.

    The prover must expose ``open_round(table, qubit, other_ops, rng)``
    returning a session with an ``image`` attribute and ``reveal_test`` /
    ``reveal_measurement`` methods.  Rounds are independent; each derives
    its own verifier and prover streams from ``seed``, so a fixed seed
    reproduces the transcript exactly.

    ``transcript_sink``, if given, is called with one plain dict per round
    as it completes, for streaming transcript logs.

    Accepts iff no test round fails and the estimate over measurement
    rounds lands strictly below the threshold midpoint.  The first test
    failure rejects immediately, carrying the offending transcript; a
    measurement round announcing an image with no preimage rejects the
    same way, since the held inversion data exposes it outright.
    """
    if not 0.0 <= test_fraction <= 1.0:
        raise ValueError(f"test fraction {test_fraction} outside [0, 1]")
    sampled = [t for t in instance.terms if t.factors.strip("I")]
    if not sampled:
        raise ValueError("instance has no non-identity terms to sample")
    offset = sum(float(np.real(t.coeff)) for t in instance.terms if not t.factors.strip("I"))
    coeffs = np.array([float(np.real(t.coeff)) for t in sampled])
    weights = np.abs(coeffs)
    probs = weights / weights.sum()
    one_norm = float(weights.sum())

    values: list[float] = []
    n_test = 0
    failure: ProtocolTranscript | None = None
    for r in range(n_rounds):
        vrng = make_rng(seed, "verifier", r)
        prng = make_rng(seed, "prover", r)
        j = int(vrng.choice(len(sampled), p=probs))
        term = sampled[j]
        support = [
            (q, "x" if term.factors[q] == "X" else "z") for q in term.support()
        ]
        (dq, dbasis), others = support[0], support[1:]
        key = keygen(dbasis, rng=vrng)
        session = prover.open_round(tuple(key.table), dq, tuple(others), prng)
        y = int(session.image)
        if vrng.random() < test_fraction:
            n_test += 1
            b, x = session.reveal_test()
            ok = key.table[2 * b + x] == y
            if transcript_sink is not None:
                transcript_sink(
                    {
                        "round": r,
                        "type": TEST_ROUND,
                        "term": term.factors,
                        "qubit": dq,
                        "basis": dbasis,
                        "key": key.label,
                        "image": y,
                        "preimage": [int(b), int(x)],
                        "verdict": bool(ok),
                    }
                )
            if not ok:
                failure = ProtocolTranscript(
                    TEST_ROUND, key.label, y, (b, x), False, None, seed
                )
                break
        else:
            (u, v), direct = session.reveal_measurement()
            transcript = ProtocolTranscript(
                MEASUREMENT_ROUND, key.label, y, (int(u), int(v)), None, None, seed
            )
            if not key.in_image(y):
                # the verifier holds the inversion data, so an announced
                # image with no preimage is cheating evidence on its own
                failure = replace(transcript, verdict=False)
                if transcript_sink is not None:
                    transcript_sink(
                        {
                            "round": r,
                            "type": MEASUREMENT_ROUND,
                            "term": term.factors,
                            "qubit": dq,
                            "basis": dbasis,
                            "key": key.label,
                            "image": y,
                            "equation": [int(u), int(v)],
                            "verdict": False,
                        }
                    )
                break
            outcome = decode(transcript, key)
            parity = outcome ^ (sum(int(d) for d in direct) & 1)
            sign = 1.0 if coeffs[j] > 0 else -1.0
            values.append(one_norm * sign * (1.0 - 2.0 * parity))
            if transcript_sink is not None:
                transcript_sink(
                    {
                        "round": r,
                        "type": MEASUREMENT_ROUND,
                        "term": term.factors,
                        "qubit": dq,
                        "basis": dbasis,
                        "key": key.label,
                        "image": y,
                        "equation": [int(u), int(v)],
                        "direct": [int(d) for d in direct],
                        "decoded": int(outcome),
                        "value": float(values[-1]),
                    }
                )

    varr = np.array(values)
    n_meas = varr.size
    estimate = offset + float(varr.mean()) if n_meas else float("nan")
    se = _jackknife_se(varr)
    n_fail = 1 if failure is not None and failure.round_type == TEST_ROUND else 0
    aborted_meas = 1 if failure is not None and failure.round_type == MEASUREMENT_ROUND else 0
    accepted = failure is None and n_meas > 0 and estimate < instance.midpoint
    pass_rate = (n_test - n_fail) / n_test if n_test else float("nan")
    return VerificationResult(
        accepted=accepted,
        estimate=estimate,
        std_error=se,
        midpoint=instance.midpoint,
        n_rounds=n_rounds if failure is None else n_test + n_meas + aborted_meas,
        n_test_rounds=n_test,
        n_measurement_rounds=int(n_meas),
        n_test_failures=n_fail,
        test_pass_rate=pass_rate,
        failure=failure,
        commit_qubits=instance.num_qubits + 3,
    )


# ---------------------------------------------------------------------------
# instance (de)serialization, following the package-wide canonical JSON rules


def instance_to_document(instance: HamiltonianInstance) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "record_kind": "hamiltonian-instance",
        "num_qubits": instance.num_qubits,
        "terms": [
            {"coeff": float(np.real(t.coeff)), "factors": t.factors}
            for t in instance.terms
        ],
        "threshold_yes": float(instance.threshold_yes),
        "threshold_no": float(instance.threshold_no),
    }
    doc["digest"] = document_digest(doc)
    return doc


def serialize_instance(instance: HamiltonianInstance) -> str:
    return canonical_json(instance_to_document(instance)) + "\n"


def parse_instance_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDatasetError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDatasetError("instance document must be an object")
    for field in ("format_version", "record_kind", "num_qubits", "terms",
                  "threshold_yes", "threshold_no", "digest"):
        if field not in doc:
            raise MalformedDatasetError(f"missing field {field!r}")
    if doc["format_version"] != FORMAT_VERSION:
        raise MalformedDatasetError(
            f"unsupported format version {doc['format_version']!r}"
        )
    if doc["record_kind"] != "hamiltonian-instance":
        raise MalformedDatasetError(f"unexpected record kind {doc['record_kind']!r}")
    expected = document_digest(doc)
    if doc["digest"] != expected:
        raise MalformedDatasetError(
            f"digest mismatch: stored {doc['digest']}, computed {expected}"
        )
    return doc


def document_to_instance(doc: dict) -> HamiltonianInstance:
    terms = tuple(
        PauliTerm(complex(t["coeff"]), str(t["factors"])) for t in doc["terms"]
    )
    return HamiltonianInstance(
        num_qubits=int(doc["num_qubits"]),
        terms=terms,
        threshold_yes=float(doc["threshold_yes"]),
        threshold_no=float(doc["threshold_no"]),
    )


def load_instance_text(text: str) -> HamiltonianInstance:
    return document_to_instance(parse_instance_document(text))
