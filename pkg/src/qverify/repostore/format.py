"""Bit-exact dataset file format.

Canonical form: JSON with object keys sorted lexicographically, separators
"," and ":" with no whitespace, strings escaped with ASCII-only stdlib rules,
and floats printed via %.17g (17 significant digits round-trips IEEE doubles)
with a ".0" suffix forced onto integral values so types survive re-parsing.
The integrity digest is 64-bit FNV-1a over the UTF-8 bytes of the canonical
text of the document with the "digest" key removed, rendered as 16 lowercase
hex digits.  UTF-8 text pins the byte order of the stream on every platform.
"""

from __future__ import annotations

import json
import math

import numpy as np

from ..randmeas.dataset import RandMeasDataset
from ..randmeas.settings import MeasurementSetting

FORMAT_VERSION = 1

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211


class RepoFormatError(ValueError):
    """Base class for dataset file format errors."""


class MalformedDatasetError(RepoFormatError):
    pass


class DigestMismatchError(RepoFormatError):
    pass


class UnsupportedVersionError(RepoFormatError):
    pass


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _format_float(v: float) -> str:
    if not math.isfinite(v):
        raise MalformedDatasetError(f"non-finite float {v!r} not representable")
    s = format(v, ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def canonical_json(obj) -> str:
    """Serialize to the canonical text form (see module docstring)."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        for k in obj:
            if not isinstance(k, str):
                raise MalformedDatasetError(f"non-string key {k!r}")
        inner = ",".join(
            f"{json.dumps(k, ensure_ascii=True)}:{canonical_json(obj[k])}"
            for k in sorted(obj)
        )
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise MalformedDatasetError(f"unserializable value of type {type(obj).__name__}")


def document_digest(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "digest"}
    return format(fnv1a64(canonical_json(body).encode("utf-8")), "016x")


def _matrix_to_pairs(m: np.ndarray) -> list[list[float]]:
    return [[float(e.real), float(e.imag)] for e in np.asarray(m).ravel()]


def _pairs_to_matrix(pairs) -> np.ndarray:
    if len(pairs) != 4:
        raise MalformedDatasetError("explicit setting needs 4 [re, im] entries")
    vals = []
    for p in pairs:
        if not isinstance(p, list) or len(p) != 2:
            raise MalformedDatasetError("matrix entries must be [re, im] pairs")
        vals.append(float(p[0]) + 1j * float(p[1]))
    return np.array(vals, dtype=complex).reshape(2, 2)


def dataset_ensemble(ds: RandMeasDataset) -> str:
    if all(s.clifford_indices is not None for s in ds.settings):
        return "clifford"
    if all(s.matrices is not None for s in ds.settings):
        return "haar"
    raise MalformedDatasetError("settings mix Clifford indices and explicit matrices")


def dataset_to_document(ds: RandMeasDataset) -> dict:
    ds.validate()
    ensemble = dataset_ensemble(ds)
    if ensemble == "clifford":
        settings = [list(s.clifford_indices) for s in ds.settings]
    else:
        settings = [[_matrix_to_pairs(m) for m in s.matrices] for s in ds.settings]
    counts = [sorted((bits, int(n)) for bits, n in c.items()) for c in ds.counts]
    doc = {
        "format_version": FORMAT_VERSION,
        "device_id": ds.device_id,
        "state_label": ds.state_label,
        "num_qubits": ds.num_qubits,
        "ensemble": ensemble,
        "settings": settings,
        "counts": [[list(pair) for pair in c] for c in counts],
        "shots_per_setting": ds.shots_per_setting,
        "provenance": dict(ds.provenance),
    }
    doc["digest"] = document_digest(doc)
    return doc


def serialize_dataset(ds: RandMeasDataset) -> str:
    return canonical_json(dataset_to_document(ds)) + "\n"


_REQUIRED_KEYS = (
    "format_version",
    "device_id",
    "state_label",
    "num_qubits",
    "ensemble",
    "settings",
    "counts",
    "shots_per_setting",
    "provenance",
    "digest",
)


def validate_document(doc: dict) -> None:
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise MalformedDatasetError(f"missing key {key!r}")
    if doc["format_version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"format_version {doc['format_version']!r} unsupported (expected {FORMAT_VERSION})"
        )
    if doc["ensemble"] not in ("clifford", "haar"):
        raise MalformedDatasetError(f"unknown ensemble tag {doc['ensemble']!r}")
    n = doc["num_qubits"]
    if not isinstance(n, int) or n < 1:
        raise MalformedDatasetError(f"bad num_qubits {n!r}")
    if len(doc["settings"]) != len(doc["counts"]):
        raise MalformedDatasetError(
            f"{len(doc['settings'])} settings but {len(doc['counts'])} counts blocks"
        )
    shots = doc["shots_per_setting"]
    for u, block in enumerate(doc["counts"]):
        total = 0
        seen = set()
        for entry in block:
            if len(entry) != 2:
                raise MalformedDatasetError(f"setting {u}: counts entry {entry!r}")
            bits, cnt = entry
            if len(bits) != n or set(bits) - {"0", "1"}:
                raise MalformedDatasetError(f"setting {u}: malformed bitstring {bits!r}")
            if bits in seen:
                raise MalformedDatasetError(f"setting {u}: duplicate bitstring {bits!r}")
            seen.add(bits)
            if not isinstance(cnt, int) or cnt < 0:
                raise MalformedDatasetError(f"setting {u}: bad count {cnt!r}")
            total += cnt
        if total != shots:
            raise MalformedDatasetError(
                f"setting {u}: counts sum {total} != shots_per_setting {shots}"
            )
    want = document_digest(doc)
    if doc["digest"] != want:
        raise DigestMismatchError(f"digest {doc['digest']!r} != computed {want!r}")


def parse_dataset_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDatasetError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDatasetError("top level must be an object")
    validate_document(doc)
    return doc


def document_to_dataset(doc: dict) -> RandMeasDataset:
    n = doc["num_qubits"]
    settings = []
    for u, spec in enumerate(doc["settings"]):
        if doc["ensemble"] == "clifford":
            try:
                setting = MeasurementSetting(u, clifford_indices=tuple(int(i) for i in spec))
            except ValueError as exc:
                raise MalformedDatasetError(f"setting {u}: {exc}") from None
        else:
            try:
                setting = MeasurementSetting(
                    u, matrices=tuple(_pairs_to_matrix(q) for q in spec)
                )
            except ValueError as exc:
                raise MalformedDatasetError(f"setting {u}: {exc}") from None
        if setting.num_qubits != n:
            raise MalformedDatasetError(f"setting {u}: width {setting.num_qubits} != {n}")
        settings.append(setting)
    counts = [{bits: int(cnt) for bits, cnt in block} for block in doc["counts"]]
    ds = RandMeasDataset(
        device_id=doc["device_id"],
        state_label=doc["state_label"],
        num_qubits=n,
        settings=settings,
        counts=counts,
        shots_per_setting=doc["shots_per_setting"],
        provenance=dict(doc["provenance"]),
    )
    ds.validate()
    return ds


def load_dataset_text(text: str) -> tuple[RandMeasDataset, str]:
    """Parse + validate; returns the dataset and its digest."""
    doc = parse_dataset_document(text)
    return document_to_dataset(doc), doc["digest"]
