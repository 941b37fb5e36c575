"""Unified command-line front end: subcommand dispatch, config loading,
seed management, and paired human/machine report emission.

Every run writes machine-readable data (canonical JSON, CSV with a
``# config:`` header line, JSON-lines transcripts) next to a human summary
on stdout.  Data files are byte-identical across reruns of the same
configuration and seed; wall-clock timestamps live only in the
``*.meta.json`` sidecar written beside each report.

Exit codes
----------
=====  ==============  ==========================================
code   category        meaning
=====  ==============  ==========================================
0      ok              run completed (verdicts/results are data)
1      internal-error  unexpected exception
2      usage           bad flags or subcommand (argparse)
3      invalid-input   malformed value, file content, or id
4      io-error        missing/unreadable/unwritable file
5      check-failed    a reproduce figure missed its tolerance
=====  ==============  ==========================================

Failures print one JSON object to stderr: ``{"error": {"category", "message"}}``.

Seeds: one global ``--seed`` per invocation.  Every stochastic subtask
draws an independent integer from ``make_rng(seed, "cli", <labels...>)``
(see ``_split``), so subtasks can be reordered or parallelized without
perturbing each other.

Config files: ``qverify --config FILE [extra args...]`` loads a JSON
object ``{"command": [...], "arguments": [...], "parameters": {...}}``
and expands it to the equivalent argv; extra args are appended after the
expansion, so explicit flags override file values.

Repository root: ``--root`` flag if given, else the ``QVERIFY_REPO``
environment variable, else ``./qverify-repo``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .hamlearn import (
    KRowEngine,
    build_constraints,
    build_operator_basis,
    k_matrix_exact,
    k_matrix_sampled,
    learning_curve,
    parameter_distance,
    reconstruct,
)
from .hamlearn.curves import fit_loglog_slope
from .ioutil import atomic_write_text
from .qsim import (
    FermionBasis,
    LatticeSpec,
    QuantumState,
    QubitBasis,
    assemble_operator,
    ghz_state,
    ground_state,
    hubbard_terms,
    parse_state_spec,
    reduced_density,
    theta_state,
)
from .randmeas import (
    collect,
    estimate_fmax,
    exact_mode_overlap,
    sample_settings,
    scaling_probe,
)
from .repostore import (
    RepoFormatError,
    Repository,
    canonical_json,
    dataset_to_document,
    document_digest,
    fidelity_to_dict,
    load_dataset_text,
    serialize_dataset,
)
from .rng import GENERATOR_ID, make_rng
from .verifyproto import (
    BasisGuessProver,
    HonestProver,
    MEASUREMENT_ROUND,
    MixedStateProver,
    TEST_ROUND,
    commit,
    decoded_distribution,
    delegate_rounds,
    keygen,
    load_instance_text,
    run_round,
    transcript_with_decoded,
    verify_energy,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_IO = 4
EXIT_CHECK = 5

ERROR_CATEGORIES = {
    EXIT_INTERNAL: "internal-error",
    EXIT_USAGE: "usage",
    EXIT_INVALID: "invalid-input",
    EXIT_IO: "io-error",
    EXIT_CHECK: "check-failed",
}

REPO_ENV_VAR = "QVERIFY_REPO"
DEFAULT_REPO_ROOT = "qverify-repo"

_EPILOG = """\
exit codes:
  0 ok | 1 internal-error | 2 usage | 3 invalid-input | 4 io-error | 5 check-failed

state specs: ghz:N | zero:N | plus:N | theta:V | random:N | amps:a0,a1,...
repository root: --root flag, else $QVERIFY_REPO, else ./qverify-repo
config file:  qverify --config FILE [overrides...]   (JSON: command/arguments/parameters)
"""


class CheckFailed(Exception):
    """A reproduce run completed but missed a stated tolerance."""


@dataclass(frozen=True)
class RunConfig:
    """Echoed verbatim into the header of every output file."""

    command: str
    parameters: dict
    seed: int | None
    out_dir: str

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "out": self.out_dir,
            "generator": GENERATOR_ID,
        }


# --------------------------------------------------------------------------
# small parsers and emission helpers


def _split(seed: int, *labels) -> int:
    """Deterministic per-subtask integer seed derived from the global one."""
    return int(make_rng(seed, "cli", *labels).integers(0, 2**63))


def _parse_lattice(text: str) -> tuple[int, int]:
    parts = text.lower().replace("×", "x").split("x")
    if len(parts) != 2:
        raise ValueError(f"lattice {text!r} is not of the form RxC")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"lattice {text!r} is not of the form RxC") from None
    if rows < 1 or cols < 1:
        raise ValueError(f"lattice {text!r} must have positive extent")
    return rows, cols


def _parse_subsystem(text: str | None) -> tuple[int, ...] | None:
    if text is None or text.strip().lower() in ("", "full"):
        return None
    try:
        return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok != "")
    except ValueError:
        raise ValueError(f"subsystem {text!r} must be comma-separated qubit indices") from None


def _parse_shots(text: str) -> int | None:
    if text.strip().lower() == "exact":
        return None
    try:
        shots = int(text)
    except ValueError:
        raise ValueError(f"shots {text!r} must be an integer or 'exact'") from None
    if shots < 1:
        raise ValueError("shots must be positive")
    return shots


def _state_arg(spec: str, seed: int, *labels) -> QuantumState:
    """Parse a --state value; a bare comma list is shorthand for amps:..."""
    if ":" not in spec:
        spec = "amps:" + spec
    return parse_state_spec(spec, rng=make_rng(seed, "cli", *labels, "state"))


def _subsystem_label(sub: tuple[int, ...] | None) -> str:
    return "full" if sub is None else " ".join(str(q) for q in sub)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _csv_text(cfg: RunConfig, columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# config: {canonical_json(cfg.as_dict())}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _emit(
    cfg: RunConfig,
    stem: str,
    argv: list[str],
    *,
    body: dict | None = None,
    columns: list[str] | None = None,
    rows: list[list] | None = None,
    jsonl: list[dict] | None = None,
) -> list[Path]:
    """Write the paired machine reports (atomic) plus a timestamp sidecar."""
    out = Path(cfg.out_dir)
    paths: list[Path] = []
    if body is not None:
        payload = {"config": cfg.as_dict(), **body}
        paths.append(out / f"{stem}.json")
        atomic_write_text(paths[-1], canonical_json(payload) + "\n")
    if columns is not None:
        paths.append(out / f"{stem}.csv")
        atomic_write_text(paths[-1], _csv_text(cfg, columns, rows or []))
    if jsonl is not None:
        lines = [canonical_json({"config": cfg.as_dict()})]
        lines += [canonical_json(rec) for rec in jsonl]
        paths.append(out / f"{stem}.jsonl")
        atomic_write_text(paths[-1], "\n".join(lines) + "\n")
    meta = {
        "config": cfg.as_dict(),
        "created_unix": time.time(),
        "argv": list(argv),
    }
    meta_path = out / f"{stem}.meta.json"
    atomic_write_text(meta_path, json.dumps(meta, sort_keys=True) + "\n")
    for p in paths:
        print(f"wrote {p}")
    return paths


def _hubbard_ground_state(lattice: str, j: float, u: float, nup: int, ndown: int):
    rows, cols = _parse_lattice(lattice)
    lat = LatticeSpec(rows, cols, j=j, u=u, nup=nup, ndown=ndown)
    basis = FermionBasis(lat)
    ham = assemble_operator(basis, hubbard_terms(lat))
    energy, state = ground_state(ham, basis)
    return lat, energy, state


def _solution_distance(result, c_true: np.ndarray) -> float:
    """Distance from the true couplings to what the reconstruction recovered.

    Some states are stationary under a whole span of coupling vectors (the
    two-site dimer is: the spin-antisymmetric hopping annihilates its ground
    state), and the reconstruction then reports that span via its candidate
    vectors.  The meaningful error is the distance from the normalized truth
    to the recovered solution span; for a unique solution this reduces to the
    usual sign-gauged vector distance.
    """
    if not result.degenerate:
        return parameter_distance(c_true, result.coefficients)
    c_hat = np.asarray(c_true, dtype=float)
    c_hat = c_hat / np.linalg.norm(c_hat)
    span = np.stack(result.candidates, axis=1)
    q, _ = np.linalg.qr(span)
    return float(np.linalg.norm(c_hat - q @ (q.T @ c_hat)))


# --------------------------------------------------------------------------
# hamlearn


def _cmd_hamlearn_run(args, argv) -> int:
    shots = _parse_shots(args.shots)
    lat, energy, state = _hubbard_ground_state(args.lattice, args.j, args.u, args.nup, args.ndown)
    op_basis = build_operator_basis(lat)
    n_constraints = args.constraints if args.constraints > 0 else op_basis.m
    cfg = RunConfig(
        "hamlearn run",
        {
            "lattice": args.lattice,
            "j": args.j,
            "u": args.u,
            "nup": args.nup,
            "ndown": args.ndown,
            "constraints": n_constraints,
            "shots": "exact" if shots is None else shots,
        },
        args.seed,
        args.out,
    )
    constraints = build_constraints(
        state, op_basis, n_constraints, shuffle_seed=_split(args.seed, "hamlearn", "constraints")
    )
    if shots is None:
        km = k_matrix_exact(state, op_basis, constraints)
    else:
        km = k_matrix_sampled(
            state, op_basis, constraints, shots, seed=_split(args.seed, "hamlearn", "shots")
        )
    result = reconstruct(km)
    c_true = op_basis.coefficient_vector()
    distance = _solution_distance(result, c_true)
    smallest = float(result.singular_values[-1])
    rows = [[n_constraints, distance, distance, distance, result.gap, smallest]]
    body = {
        "ground_energy": float(energy),
        "n_constraints": n_constraints,
        "shots": "exact" if shots is None else shots,
        "distance": distance,
        "gap": float(result.gap),
        "smallest_singular_value": smallest,
        "labels": list(op_basis.labels()),
        "coefficients": [float(c) for c in result.coefficients],
        "true_coefficients": [float(c) for c in c_true],
        "degenerate": bool(result.degenerate),
    }
    _emit(
        cfg,
        "hamlearn_run",
        argv,
        body=body,
        columns=["control", "median_distance", "q25", "q75", "gap", "smallest_singular_value"],
        rows=rows,
    )
    mode = "exact" if shots is None else f"{shots} shots/entry"
    print(
        f"{args.lattice} lattice (J={args.j}, U={args.u}): ground energy {energy:.9f}; "
        f"{op_basis.m} couplings from {n_constraints} constraints ({mode})"
    )
    target = "recovered solution span" if result.degenerate else "recovered couplings"
    print(f"distance from true couplings to {target}: {distance:.3e}; spectrum gap {result.gap:.3e}")
    return EXIT_OK


# --------------------------------------------------------------------------
# randmeas


def _cmd_randmeas_collect(args, argv) -> int:
    state = _state_arg(args.state, args.seed, "randmeas")
    settings_seed = (
        args.settings_seed
        if args.settings_seed is not None
        else _split(args.seed, "randmeas", "settings")
    )
    cfg = RunConfig(
        "randmeas collect",
        {
            "state": args.state,
            "nu": args.nu,
            "nm": args.nm,
            "ensemble": args.ensemble,
            "device_id": args.device_id,
            "settings_seed": settings_seed,
        },
        args.seed,
        args.out,
    )
    settings = sample_settings(state.num_qubits, args.nu, seed=settings_seed, ensemble=args.ensemble)
    ds = collect(
        state,
        settings,
        args.nm,
        seed=_split(args.seed, "randmeas", "shots"),
        device_id=args.device_id,
        state_label=args.state,
    )
    digest = document_digest(dataset_to_document(ds))
    ds_path = Path(args.out) / f"dataset-{args.device_id}.json"
    atomic_write_text(ds_path, serialize_dataset(ds))
    print(f"wrote {ds_path}")
    body = {
        "dataset": str(ds_path),
        "digest": digest,
        "device_id": args.device_id,
        "num_qubits": state.num_qubits,
        "ensemble": args.ensemble,
        "n_settings": args.nu,
        "shots_per_setting": args.nm,
    }
    _emit(
        cfg,
        "randmeas_collect",
        argv,
        body=body,
        columns=["digest", "device_id", "ensemble", "num_qubits", "n_settings", "shots_per_setting"],
        rows=[[digest, args.device_id, args.ensemble, state.num_qubits, args.nu, args.nm]],
    )
    print(
        f"collected {args.nu} x {args.nm} randomized measurements ({args.ensemble}) "
        f"of {args.state} on {state.num_qubits} qubits: dataset {digest}"
    )
    return EXIT_OK


_FIDELITY_COLUMNS = [
    "subsystem",
    "fmax",
    "se_fmax",
    "overlap",
    "se_overlap",
    "purity_1",
    "se_purity_1",
    "purity_2",
    "se_purity_2",
    "n_settings",
    "unreliable",
]


def _fidelity_row(est: dict) -> list:
    sub = est.get("subsystem")
    return [
        _subsystem_label(tuple(sub) if sub is not None else None),
        est["fmax"],
        est["se_fmax"],
        est["overlap"],
        est["se_overlap"],
        est["purity_1"],
        est["se_purity_1"],
        est["purity_2"],
        est["se_purity_2"],
        est["n_settings"],
        bool(est["unreliable"]),
    ]


def _cmd_randmeas_compare(args, argv) -> int:
    sub = _parse_subsystem(args.subsystem)
    cfg = RunConfig(
        "randmeas compare",
        {"file_1": args.file_1, "file_2": args.file_2, "subsystem": _subsystem_label(sub)},
        None,
        args.out,
    )
    ds1, digest1 = load_dataset_text(Path(args.file_1).read_text(encoding="utf-8"))
    ds2, digest2 = load_dataset_text(Path(args.file_2).read_text(encoding="utf-8"))
    est = fidelity_to_dict(estimate_fmax(ds1, ds2, sub))
    body = {"digest_1": digest1, "digest_2": digest2, "estimate": est}
    _emit(
        cfg,
        "randmeas_compare",
        argv,
        body=body,
        columns=_FIDELITY_COLUMNS,
        rows=[_fidelity_row(est)],
    )
    a, b = est["devices"]
    print(
        f"Fmax({a}, {b}) = {est['fmax']:.6f} +/- {est['se_fmax']:.6f} "
        f"[{_subsystem_label(sub)}] from {est['n_settings']} shared settings"
    )
    return EXIT_OK


def _cmd_randmeas_exact(args, argv) -> int:
    state1 = _state_arg(args.state, args.seed, "randmeas", "1")
    state2 = _state_arg(args.state2, args.seed, "randmeas", "2") if args.state2 else state1
    sub = _parse_subsystem(args.subsystem)
    cfg = RunConfig(
        "randmeas exact",
        {
            "state": args.state,
            "state2": args.state2 or args.state,
            "ensemble": args.ensemble,
            "subsystem": _subsystem_label(sub),
            "nu": args.nu,
        },
        args.seed,
        args.out,
    )
    est = exact_mode_overlap(
        state1,
        state2,
        ensemble=args.ensemble,
        subsystem=sub,
        n_settings=args.nu,
        seed=_split(args.seed, "randmeas", "settings") if args.nu else None,
    )
    se = None if est.std_error is None else float(est.std_error)
    body = {
        "value": float(est.value),
        "std_error": se,
        "n_settings": est.n_settings,
    }
    _emit(
        cfg,
        "randmeas_exact",
        argv,
        body=body,
        columns=["subsystem", "value", "std_error", "n_settings"],
        rows=[[_subsystem_label(sub), float(est.value), se, est.n_settings]],
    )
    detail = "ensemble-exact" if se is None else f"std error {se:.3e}, {est.n_settings} settings"
    print(f"exact mode overlap [{_subsystem_label(sub)}] = {est.value:.12f} ({detail})")
    return EXIT_OK


def _cmd_randmeas_scaling(args, argv) -> int:
    n_list = [int(tok) for tok in args.n_list.replace(" ", "").split(",") if tok]
    cfg = RunConfig(
        "randmeas scaling",
        {
            "n_list": n_list,
            "target": args.target,
            "nm": args.nm,
            "ensemble": args.ensemble,
            "repetitions": args.repetitions,
        },
        args.seed,
        args.out,
    )
    result = scaling_probe(
        n_list,
        error_target=args.target,
        ensemble=args.ensemble,
        seeds=tuple(range(args.repetitions)),
        n_m=args.nm,
        seed=_split(args.seed, "randmeas", "scaling"),
    )
    rows = [[p.num_qubits, p.n_u, p.n_m, p.budget, p.median_error] for p in result.points]
    body = {
        "exponent": float(result.exponent),
        "error_target": float(result.error_target),
        "ensemble": result.ensemble,
        "points": [asdict(p) for p in result.points],
    }
    _emit(
        cfg,
        "randmeas_scaling",
        argv,
        body=body,
        columns=["num_qubits", "n_u", "n_m", "budget", "median_error"],
        rows=rows,
    )
    print(
        f"measurement budget for error {args.target} grows as 2^({result.exponent:.2f} n) "
        f"over n = {n_list} ({args.ensemble} ensemble)"
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# repo


def _repo_root(args) -> Path:
    if args.root:
        return Path(args.root)
    env = os.environ.get(REPO_ENV_VAR)
    return Path(env) if env else Path(DEFAULT_REPO_ROOT)


def _cmd_repo_ingest(args, argv) -> int:
    root = _repo_root(args)
    cfg = RunConfig("repo ingest", {"file": args.file, "root": str(root)}, None, args.out)
    ds_id = Repository(root).ingest(args.file)
    _emit(
        cfg,
        "repo_ingest",
        argv,
        body={"id": ds_id, "file": args.file, "root": str(root)},
        columns=["id", "file"],
        rows=[[ds_id, args.file]],
    )
    print(f"ingested {args.file} into {root} as {ds_id}")
    return EXIT_OK


def _cmd_repo_list(args, argv) -> int:
    root = _repo_root(args)
    cfg = RunConfig("repo list", {"root": str(root)}, None, args.out)
    entries = Repository(root).list_datasets()
    columns = ["id", "device_id", "state_label", "ensemble", "num_qubits", "n_settings", "shots_per_setting"]
    rows = [[e[c] for c in columns] for e in entries]
    _emit(cfg, "repo_list", argv, body={"root": str(root), "datasets": entries}, columns=columns, rows=rows)
    print(f"{len(entries)} dataset(s) in {root}")
    for e in entries:
        print(
            f"  {e['id']}  {e['device_id']:<12} {e['state_label']:<12} "
            f"{e['ensemble']:<9} n={e['num_qubits']} NU={e['n_settings']} NM={e['shots_per_setting']}"
        )
    return EXIT_OK


def _cmd_repo_compare(args, argv) -> int:
    root = _repo_root(args)
    subs = [_parse_subsystem(s) for s in args.subsystem] if args.subsystem else None
    cfg = RunConfig(
        "repo compare",
        {
            "id_1": args.id_1,
            "id_2": args.id_2,
            "root": str(root),
            "subsystems": [
                _subsystem_label(s) for s in (subs if subs is not None else [None])
            ],
        },
        None,
        args.out,
    )
    report = Repository(root).compare(args.id_1, args.id_2, subsystems=subs)
    rows = [_fidelity_row(est) for est in report["estimates"]]
    _emit(cfg, "repo_compare", argv, body=report, columns=_FIDELITY_COLUMNS, rows=rows)
    for est in report["estimates"]:
        sub = est.get("subsystem")
        label = _subsystem_label(tuple(sub) if sub is not None else None)
        print(
            f"Fmax[{label}]({est['devices'][0]}, {est['devices'][1]}) = "
            f"{est['fmax']:.6f} +/- {est['se_fmax']:.6f}"
        )
    return EXIT_OK


def _cmd_repo_matrix(args, argv) -> int:
    root = _repo_root(args)
    sub = _parse_subsystem(args.subsystem)
    cfg = RunConfig(
        "repo matrix",
        {"ids": list(args.ids), "root": str(root), "subsystem": _subsystem_label(sub)},
        None,
        args.out,
    )
    report = Repository(root).compare_matrix(list(args.ids), subsystem=sub)
    columns = ["id"] + list(report["ids"])
    rows = [
        [ds_id] + [report["matrix"][i][j] for j in range(len(report["ids"]))]
        for i, ds_id in enumerate(report["ids"])
    ]
    _emit(cfg, "repo_matrix", argv, body=report, columns=columns, rows=rows)
    print(f"{len(report['ids'])} x {len(report['ids'])} Fmax matrix [{_subsystem_label(sub)}]")
    for ds_id, row in zip(report["ids"], report["matrix"]):
        print("  " + ds_id + "  " + "  ".join(f"{v:.4f}" for v in row))
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def _instance_ground_state(instance) -> QuantumState:
    _, vectors = np.linalg.eigh(instance.matrix())
    return QuantumState(vectors[:, 0], QubitBasis(instance.num_qubits))


def _cmd_verify_run(args, argv) -> int:
    if not 0.0 <= args.test_fraction <= 1.0:
        raise ValueError(f"test fraction {args.test_fraction} outside [0, 1]")
    instance = load_instance_text(Path(args.instance).read_text(encoding="utf-8"))
    cfg = RunConfig(
        "verify run",
        {
            "instance": args.instance,
            "rounds": args.rounds,
            "test_fraction": args.test_fraction,
            "prover": args.prover,
            "state": args.state,
        },
        args.seed,
        args.out,
    )
    if args.prover == "mixed":
        prover = MixedStateProver(instance.num_qubits)
    else:
        if args.state:
            state = _state_arg(args.state, args.seed, "verify")
            if state.num_qubits != instance.num_qubits:
                raise ValueError(
                    f"state has {state.num_qubits} qubits, instance needs {instance.num_qubits}"
                )
        else:
            state = _instance_ground_state(instance)
        prover = HonestProver(state) if args.prover == "honest" else BasisGuessProver(state)
    transcripts: list[dict] = []
    result = verify_energy(
        instance,
        prover,
        args.rounds,
        test_fraction=args.test_fraction,
        seed=_split(args.seed, "verify", "run"),
        transcript_sink=transcripts.append,
    )
    rd = asdict(result)
    rd["estimate"] = None if np.isnan(result.estimate) else float(result.estimate)
    rd["std_error"] = None if np.isnan(result.std_error) else float(result.std_error)
    rd["test_pass_rate"] = None if np.isnan(result.test_pass_rate) else float(result.test_pass_rate)
    if result.failure is not None:
        rd["failure"] = {
            "round_type": result.failure.round_type,
            "key": result.failure.key_label,
            "image": int(result.failure.image),
            "outcomes": [int(o) for o in result.failure.outcomes],
        }
    body = {"verdict": "accept" if result.accepted else "reject", "result": rd}
    _emit(
        cfg,
        "verify_run",
        argv,
        body=body,
        columns=[
            "accepted",
            "estimate",
            "std_error",
            "midpoint",
            "n_rounds",
            "n_test_rounds",
            "n_measurement_rounds",
            "n_test_failures",
        ],
        rows=[
            [
                result.accepted,
                result.estimate,
                result.std_error,
                result.midpoint,
                result.n_rounds,
                result.n_test_rounds,
                result.n_measurement_rounds,
                result.n_test_failures,
            ]
        ],
        jsonl=transcripts,
    )
    verdict = "ACCEPT" if result.accepted else "REJECT"
    est = "nan" if np.isnan(result.estimate) else f"{result.estimate:.6f}"
    se = "nan" if np.isnan(result.std_error) else f"{result.std_error:.6f}"
    print(
        f"{verdict} ({args.prover} prover, {instance.num_qubits}+3 qubit commitments): "
        f"estimate {est} +/- {se} vs midpoint {result.midpoint:.6f}"
    )
    print(
        f"{result.n_test_rounds} test rounds ({result.n_test_failures} failures), "
        f"{result.n_measurement_rounds} measurement rounds"
    )
    return EXIT_OK


def _cmd_verify_delegate(args, argv) -> int:
    if not 0.0 <= args.test_fraction <= 1.0:
        raise ValueError(f"test fraction {args.test_fraction} outside [0, 1]")
    basis = args.basis.lower()
    state = _state_arg(args.state, args.seed, "delegate")
    if not 0 <= args.qubit < state.num_qubits:
        raise ValueError(f"qubit {args.qubit} outside the {state.num_qubits}-qubit state")
    cfg = RunConfig(
        "verify delegate",
        {
            "state": args.state,
            "basis": basis,
            "rounds": args.rounds,
            "qubit": args.qubit,
            "test_fraction": args.test_fraction,
        },
        args.seed,
        args.out,
    )
    records: list[dict] = []
    decoded_counts = {0: 0, 1: 0}
    n_test = n_pass = 0
    for r in range(args.rounds):
        rng = make_rng(args.seed, "cli", "delegate", r)
        key = keygen(basis, rng=rng)
        committed = commit(state, args.qubit, key.table)
        kind = TEST_ROUND if rng.random() < args.test_fraction else MEASUREMENT_ROUND
        transcript = run_round(kind, key, committed, rng=rng)
        if kind == MEASUREMENT_ROUND:
            transcript = transcript_with_decoded(transcript, key)
            decoded_counts[transcript.decoded] += 1
        else:
            n_test += 1
            n_pass += int(bool(transcript.verdict))
        records.append(
            {
                "round": r,
                "type": transcript.round_type,
                "basis": basis,
                "key": transcript.key_label,
                "image": transcript.image,
                "outcomes": list(transcript.outcomes),
                "verdict": transcript.verdict,
                "decoded": transcript.decoded,
            }
        )
    n_meas = args.rounds - n_test
    born = tv = None
    if args.qubit == 0:
        dist = decoded_distribution(state, basis)
        born = [float(dist[0]), float(dist[1])]
        if n_meas:
            freq = np.array([decoded_counts[0], decoded_counts[1]]) / n_meas
            tv = float(0.5 * np.abs(freq - dist).sum())
    body = {
        "basis": basis,
        "qubit": args.qubit,
        "rounds": args.rounds,
        "n_test_rounds": n_test,
        "n_test_passed": n_pass,
        "n_measurement_rounds": n_meas,
        "decoded_counts": {"0": decoded_counts[0], "1": decoded_counts[1]},
        "born": born,
        "tv_distance": tv,
    }
    _emit(
        cfg,
        "verify_delegate",
        argv,
        body=body,
        columns=[
            "basis",
            "rounds",
            "n_test_rounds",
            "n_test_passed",
            "decoded_0",
            "decoded_1",
            "born_0",
            "born_1",
            "tv_distance",
        ],
        rows=[
            [
                basis,
                args.rounds,
                n_test,
                n_pass,
                decoded_counts[0],
                decoded_counts[1],
                "" if born is None else born[0],
                "" if born is None else born[1],
                "" if tv is None else tv,
            ]
        ],
        jsonl=records,
    )
    print(
        f"delegated {n_meas} {basis.upper()}-basis measurement rounds and {n_test} test rounds "
        f"({n_pass} passed) on qubit {args.qubit}"
    )
    print(f"decoded counts: 0 -> {decoded_counts[0]}, 1 -> {decoded_counts[1]}")
    if tv is not None:
        print(f"TV distance to exact decoded statistics: {tv:.4f}")
    return EXIT_OK


# --------------------------------------------------------------------------
# reproduce


def _check(name: str, value: float, requirement: str, passed: bool) -> dict:
    return {"name": name, "value": value, "requirement": requirement, "pass": bool(passed)}


def _curve_rows(points) -> list[list]:
    return [
        [p.control, p.median_distance, p.q25, p.q75, p.gap, p.smallest_singular_value]
        for p in points
    ]


def _curve_dicts(points) -> list[dict]:
    return [
        {
            "control": p.control,
            "median_distance": p.median_distance,
            "q25": p.q25,
            "q75": p.q75,
            "gap": p.gap,
            "smallest_singular_value": p.smallest_singular_value,
            "n_seeds": p.n_seeds,
        }
        for p in points
    ]


_CURVE_COLUMNS = ["control", "median_distance", "q25", "q75", "gap", "smallest_singular_value"]


def _fig1b(seed: int):
    """Shot scaling on the 2x2 plaquette: median error ~ shots^(-1/2).

    Half filling keeps the recovered coupling vector unique; the two-site
    dimer's solution span is degenerate and would flatten the curve.
    """
    lat, _, state = _hubbard_ground_state("2x2", 1.0, 8.0, 2, 2)
    op_basis = build_operator_basis(lat)
    constraints = build_constraints(
        state, op_basis, 24, shuffle_seed=_split(seed, "fig1b", "constraints")
    )
    grid = [100, 316, 1000, 3162, 10000]
    reps = [_split(seed, "fig1b", "rep", i) for i in range(20)]
    points = learning_curve(state, op_basis, shot_grid=grid, constraints=constraints, seeds=reps)
    slope = fit_loglog_slope(points)
    checks = [
        _check("loglog-slope", float(slope), "|slope - (-0.5)| <= 0.15", abs(slope + 0.5) <= 0.15)
    ]
    body = {"shot_grid": grid, "slope": float(slope), "points": _curve_dicts(points)}
    human = [f"median-distance vs shots log-log slope: {slope:.3f} (want -0.5 +/- 0.15)"]
    return _CURVE_COLUMNS, _curve_rows(points), body, checks, human


def _fig1c(seed: int):
    """Constraint-count curve on the 2x3 lattice: monotone, exact endpoint."""
    lat, _, state = _hubbard_ground_state("2x3", 1.0, 4.0, 3, 3)
    op_basis = build_operator_basis(lat)
    engine = KRowEngine(state, op_basis)
    grid = [5, 16, 17, 18, 20]
    seeds = [_split(seed, "fig1c", "sel", i) for i in range(300)]
    points = learning_curve(state, op_basis, constraint_grid=grid, seeds=seeds, engine=engine)
    medians = [p.median_distance for p in points]
    monotone = all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(medians, medians[1:]))
    checks = [
        _check("median-monotone", float(medians[0] - medians[-1]), "median non-increasing in N_C", monotone),
        _check("endpoint-exact", float(medians[-1]), "median at N_C = M below 1e-6", medians[-1] < 1e-6),
    ]
    body = {"constraint_grid": grid, "points": _curve_dicts(points)}
    human = [
        "median reconstruction distance by constraint count: "
        + ", ".join(f"{n}:{m:.2e}" for n, m in zip(grid, medians))
    ]
    return _CURVE_COLUMNS, _curve_rows(points), body, checks, human


def _fig2c(seed: int):
    """Cross-device fidelities for two simulated GHZ(6) devices."""
    n, n_u, n_m = 6, 500, 512
    state = ghz_state(n)
    settings = sample_settings(n, n_u, seed=_split(seed, "fig2c", "settings"), ensemble="clifford")
    datasets = [
        collect(
            state,
            settings,
            n_m,
            seed=_split(seed, "fig2c", dev),
            device_id=dev,
            state_label=f"ghz:{n}",
        )
        for dev in ("device-a", "device-b")
    ]
    columns = ["subsystem", "n_a", "fmax", "se_fmax", "exact", "deviation"]
    rows, estimates, checks = [], [], []
    for k in range(1, n + 1):
        sub = None if k == n else tuple(range(k))
        est = estimate_fmax(datasets[0], datasets[1], sub)
        # both devices prepare the same state, so rho_a == rho_b here
        rho_a = reduced_density(state.data, n, tuple(range(k)))
        rho_b = rho_a
        overlap = float(np.real(np.trace(rho_a @ rho_b)))
        purities = (
            float(np.real(np.trace(rho_a @ rho_a))),
            float(np.real(np.trace(rho_b @ rho_b))),
        )
        exact = overlap / max(purities)
        dev = float(est.fmax - exact)
        label = _subsystem_label(sub)
        rows.append([label, k, float(est.fmax), float(est.se_fmax), exact, dev])
        estimates.append({**fidelity_to_dict(est), "exact": exact})
        checks.append(
            _check(
                f"subsystem-{k}-within-5-sigma",
                dev,
                "|Fmax - exact| <= 5 se",
                abs(dev) <= 5 * est.se_fmax,
            )
        )
    full_dev = rows[-1][5]
    checks.append(
        _check("full-system-absolute", full_dev, "|Fmax - 1| < 0.05", abs(full_dev) < 0.05)
    )
    body = {"n_u": n_u, "n_m": n_m, "num_qubits": n, "estimates": estimates}
    human = [
        f"GHZ({n}) devices a vs b, NU={n_u}, NM={n_m}: full-system Fmax = "
        f"{rows[-1][2]:.4f} +/- {rows[-1][3]:.4f} (exact 1)"
    ]
    return columns, rows, body, checks, human


def _fig3(seed: int):
    """Delegation mechanics sweep: decoded statistics against Born statistics."""
    thetas = np.linspace(0.0, np.pi, 17)
    n_rounds, n_test = 100000, 20000
    columns = ["basis", "theta", "decoded_freq_0", "born_0", "tv_distance"]
    rows, tvs = [], []
    for basis in ("z", "x"):
        for i, theta in enumerate(thetas):
            state = theta_state(float(theta))
            summary = delegate_rounds(
                state, basis, n_rounds, seed=_split(seed, "fig3", basis, i)
            )
            freq = np.array([summary.decoded_counts[0], summary.decoded_counts[1]]) / n_rounds
            born = decoded_distribution(state, basis)
            tv = float(0.5 * np.abs(freq - born).sum())
            tvs.append(tv)
            rows.append([basis, float(theta), float(freq[0]), float(born[0]), tv])
    failures = 0
    for basis in ("z", "x"):
        summary = delegate_rounds(
            theta_state(0.8), basis, n_test, seed=_split(seed, "fig3", basis, "test"), round_type="test"
        )
        failures += summary.n_fail
    max_tv = max(tvs)
    checks = [
        _check("max-tv-distance", max_tv, "TV <= 0.02 at 1e5 rounds", max_tv <= 0.02),
        _check("test-round-failures", float(failures), "0 failures in honest test rounds", failures == 0),
    ]
    body = {
        "rounds_per_point": n_rounds,
        "test_rounds_per_basis": n_test,
        "max_tv_distance": max_tv,
        "test_failures": failures,
    }
    human = [
        f"max TV(decoded, Born) over {{z, x}} x 17 theta values: {max_tv:.4f} "
        f"({n_rounds} rounds each); {failures} test-round failures"
    ]
    return columns, rows, body, checks, human


_FIGURES = {
    "fig1b": _fig1b,
    "fig1c": _fig1c,
    "fig2c-style": _fig2c,
    "fig3-demo": _fig3,
}


def _cmd_reproduce(args, argv) -> int:
    cfg = RunConfig("reproduce", {"figure": args.figure}, args.seed, args.out)
    columns, rows, body, checks, human = _FIGURES[args.figure](args.seed)
    all_pass = all(c["pass"] for c in checks)
    body = {**body, "checks": checks, "pass": all_pass}
    stem = "reproduce_" + args.figure.replace("-", "_")
    _emit(cfg, stem, argv, body=body, columns=columns, rows=rows)
    for line in human:
        print(line)
    for c in checks:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"  [{status}] {c['name']}: {c['value']:.6g} ({c['requirement']})")
    print(("PASS" if all_pass else "FAIL") + f": {args.figure}")
    if not all_pass:
        raise CheckFailed(f"{args.figure}: {sum(not c['pass'] for c in checks)} check(s) failed")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser, config expansion, dispatch


def _add_common(parser: argparse.ArgumentParser, seed: bool = True) -> None:
    if seed:
        parser.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    parser.add_argument(
        "--out", default="qverify-out", metavar="DIR", help="output directory (default qverify-out)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qverify",
        description="Reproducible experiments: coupling reconstruction, randomized "
        "measurements, a content-addressed dataset repository, and delegated "
        "measurement verification.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="<command>")

    ham = sub.add_parser("hamlearn", help="reconstruct couplings from a stationary state")
    hsub = ham.add_subparsers(dest="subcommand", required=True, metavar="<subcommand>")
    hrun = hsub.add_parser("run", help="one reconstruction on a Hubbard ground state")
    hrun.add_argument("--lattice", default="1x2", metavar="RxC", help="lattice extent (default 1x2)")
    hrun.add_argument("--j", type=float, default=1.0, help="hopping amplitude (default 1)")
    hrun.add_argument("--u", type=float, default=8.0, help="on-site interaction (default 8)")
    hrun.add_argument("--nup", type=int, default=1, help="spin-up particles (default 1)")
    hrun.add_argument("--ndown", type=int, default=1, help="spin-down particles (default 1)")
    hrun.add_argument(
        "--constraints", type=int, default=0, help="constraint count (default: operator-basis size)"
    )
    hrun.add_argument("--shots", default="exact", help="'exact' or shots per matrix entry")
    _add_common(hrun)
    hrun.set_defaults(handler=_cmd_hamlearn_run)

    rand = sub.add_parser("randmeas", help="randomized-measurement collection and estimation")
    rsub = rand.add_subparsers(dest="subcommand", required=True, metavar="<subcommand>")
    rcol = rsub.add_parser("collect", help="simulate one device's randomized measurements")
    rcol.add_argument("--state", required=True, help="state spec (ghz:N, theta:V, amps:..., ...)")
    rcol.add_argument("--nu", type=int, default=100, help="number of settings (default 100)")
    rcol.add_argument("--nm", type=int, default=128, help="shots per setting (default 128)")
    rcol.add_argument("--ensemble", choices=["clifford", "haar"], default="clifford")
    rcol.add_argument("--device-id", default="device", help="device label (default 'device')")
    rcol.add_argument(
        "--settings-seed",
        type=int,
        default=None,
        help="seed for the shared settings; give the same value on every device "
        "whose datasets should be comparable (default: derived from --seed)",
    )
    _add_common(rcol)
    rcol.set_defaults(handler=_cmd_randmeas_collect)
    rcmp = rsub.add_parser("compare", help="cross-device fidelity from two dataset files")
    rcmp.add_argument("file_1", help="first dataset file")
    rcmp.add_argument("file_2", help="second dataset file")
    rcmp.add_argument("--subsystem", default=None, help="comma-separated qubits (default full)")
    _add_common(rcmp, seed=False)
    rcmp.set_defaults(handler=_cmd_randmeas_compare)
    rext = rsub.add_parser("exact", help="ensemble-exact mode overlap between two states")
    rext.add_argument("--state", required=True, help="first state spec")
    rext.add_argument("--state2", default=None, help="second state spec (default: same)")
    rext.add_argument("--subsystem", default=None, help="comma-separated qubits (default full)")
    rext.add_argument("--ensemble", choices=["clifford", "haar"], default="clifford")
    rext.add_argument("--nu", type=int, default=None, help="sampled settings (default: exact average)")
    _add_common(rext)
    rext.set_defaults(handler=_cmd_randmeas_exact)
    rsca = rsub.add_parser("scaling", help="measurement budget vs system size")
    rsca.add_argument("--n-list", default="2,3,4", help="qubit counts (default 2,3,4)")
    rsca.add_argument("--target", type=float, default=0.2, help="error target (default 0.2)")
    rsca.add_argument("--nm", type=int, default=64, help="shots per setting (default 64)")
    rsca.add_argument("--ensemble", choices=["clifford", "haar"], default="clifford")
    rsca.add_argument("--repetitions", type=int, default=5, help="seeds per point (default 5)")
    _add_common(rsca)
    rsca.set_defaults(handler=_cmd_randmeas_scaling)

    repo = sub.add_parser("repo", help="content-addressed measurement dataset repository")
    psub = repo.add_subparsers(dest="subcommand", required=True, metavar="<subcommand>")

    def _repo_leaf(name: str, help_text: str) -> argparse.ArgumentParser:
        leaf = psub.add_parser(name, help=help_text)
        leaf.add_argument("--root", default=None, help=f"repository root (default ${REPO_ENV_VAR})")
        return leaf

    ping = _repo_leaf("ingest", "register a dataset file under its digest")
    ping.add_argument("file", help="dataset file to ingest")
    _add_common(ping, seed=False)
    ping.set_defaults(handler=_cmd_repo_ingest)
    plist = _repo_leaf("list", "list registered datasets")
    _add_common(plist, seed=False)
    plist.set_defaults(handler=_cmd_repo_list)
    pcmp = _repo_leaf("compare", "cross-device fidelity between two registered datasets")
    pcmp.add_argument("id_1", help="first dataset id")
    pcmp.add_argument("id_2", help="second dataset id")
    pcmp.add_argument(
        "--subsystem",
        action="append",
        default=None,
        help="comma-separated qubits; repeatable (default full)",
    )
    _add_common(pcmp, seed=False)
    pcmp.set_defaults(handler=_cmd_repo_compare)
    pmat = _repo_leaf("matrix", "pairwise fidelity matrix over registered datasets")
    pmat.add_argument("ids", nargs="+", help="dataset ids")
    pmat.add_argument("--subsystem", default=None, help="comma-separated qubits (default full)")
    _add_common(pmat, seed=False)
    pmat.set_defaults(handler=_cmd_repo_matrix)

    ver = sub.add_parser("verify", help="delegated-measurement energy verification")
    vsub = ver.add_subparsers(dest="subcommand", required=True, metavar="<subcommand>")
    vrun = vsub.add_parser("run", help="full verification protocol against a prover")
    vrun.add_argument("--instance", required=True, help="serialized instance file")
    vrun.add_argument("--rounds", type=int, default=200, help="protocol rounds (default 200)")
    vrun.add_argument(
        "--test-fraction", type=float, default=0.5, help="test-round probability (default 0.5)"
    )
    vrun.add_argument(
        "--prover",
        choices=["honest", "mixed", "basis-guess"],
        default="honest",
        help="prover strategy (default honest)",
    )
    vrun.add_argument(
        "--state", default=None, help="prover state override (default: instance ground state)"
    )
    _add_common(vrun)
    vrun.set_defaults(handler=_cmd_verify_run)
    vdel = vsub.add_parser("delegate", help="raw commit/measure rounds on one state")
    vdel.add_argument("--state", required=True, help="state spec or bare amplitude list")
    vdel.add_argument("--basis", choices=["x", "z"], required=True, help="delegated basis")
    vdel.add_argument("--rounds", type=int, default=100, help="rounds (default 100)")
    vdel.add_argument("--qubit", type=int, default=0, help="delegated qubit (default 0)")
    vdel.add_argument(
        "--test-fraction", type=float, default=0.25, help="test-round probability (default 0.25)"
    )
    _add_common(vdel)
    vdel.set_defaults(handler=_cmd_verify_delegate)

    rep = sub.add_parser("reproduce", help="pinned desk-scale figure reproductions")
    rep.add_argument("figure", choices=sorted(_FIGURES), help="which figure variant to run")
    _add_common(rep)
    rep.set_defaults(handler=_cmd_reproduce)

    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Expand a leading ``--config FILE`` into the equivalent argv."""
    if not argv or argv[0] != "--config":
        return argv
    if len(argv) < 2:
        raise ValueError("--config needs a file argument")
    raw = json.loads(Path(argv[1]).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or "command" not in raw:
        raise ValueError("config file must be a JSON object with a 'command' list")
    expanded = [str(tok) for tok in raw["command"]]
    expanded += [str(tok) for tok in raw.get("arguments", [])]
    for key, value in raw.get("parameters", {}).items():
        flag = "--" + str(key).replace("_", "-")
        values = value if isinstance(value, list) else [value]
        for v in values:
            expanded += [flag, str(v)]
    return expanded + argv[2:]


def _report_error(code: int, message: str) -> None:
    category = ERROR_CATEGORIES.get(code, "internal-error")
    print(canonical_json({"error": {"category": category, "message": message}}), file=sys.stderr)


def dispatch(argv: list[str]) -> int:
    """Parse and run one invocation, mapping failures to documented exit codes."""
    argv = list(argv)
    try:
        argv = _expand_config(argv)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _report_error(EXIT_INVALID, f"config file: {exc}")
        return EXIT_INVALID
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return code
    try:
        return args.handler(args, argv)
    except CheckFailed as exc:
        _report_error(EXIT_CHECK, str(exc))
        return EXIT_CHECK
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError, PermissionError) as exc:
        _report_error(EXIT_IO, str(exc))
        return EXIT_IO
    except (RepoFormatError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _report_error(EXIT_INVALID, str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _report_error(EXIT_IO, str(exc))
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - defensive
        _report_error(EXIT_INTERNAL, f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
