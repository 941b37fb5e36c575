"""File-based dataset repository: ingest, index, pairwise comparison.

Layout under the root directory:
  index.json           canonical map id -> summary (rewritten atomically)
  log.jsonl            append-only canonical records of ingests/comparisons
  datasets/<id>.json   canonical dataset files, id = content digest
  datasets/<id>.meta.json   ingestion timestamps (kept out of canonical data)

Single-writer discipline: mutations take an advisory lock; readers never
lock, which is safe because every write is atomic.
"""

from __future__ import annotations

import fcntl
import json
import math
import time
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

from ..ioutil import append_line, atomic_write_text
from ..randmeas.dataset import RandMeasDataset
from ..randmeas.estimators import FidelityEstimate, estimate_fmax
from .format import (
    MalformedDatasetError,
    canonical_json,
    dataset_ensemble,
    document_to_dataset,
    parse_dataset_document,
)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, tuple):
        return list(value)
    return value


def fidelity_to_dict(est: FidelityEstimate) -> dict:
    return {k: _json_safe(v) for k, v in asdict(est).items()}


class Repository:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.datasets_dir = self.root / "datasets"
        self.index_path = self.root / "index.json"
        self.log_path = self.root / "log.jsonl"
        self.datasets_dir.mkdir(parents=True, exist_ok=True)
        if not self.index_path.exists():
            atomic_write_text(self.index_path, canonical_json({"datasets": {}}) + "\n")

    @contextmanager
    def _locked(self):
        with open(self.root / ".lock", "a+") as fh:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh.fileno(), fcntl.LOCK_UN)

    def _read_index(self) -> dict:
        return json.loads(self.index_path.read_text(encoding="utf-8"))

    def _write_index(self, index: dict) -> None:
        atomic_write_text(self.index_path, canonical_json(index) + "\n")

    def _log(self, record: dict) -> None:
        append_line(self.log_path, canonical_json(record))

    @staticmethod
    def _summary(doc: dict) -> dict:
        return {
            "device_id": doc["device_id"],
            "state_label": doc["state_label"],
            "num_qubits": doc["num_qubits"],
            "ensemble": doc["ensemble"],
            "n_settings": len(doc["settings"]),
            "shots_per_setting": doc["shots_per_setting"],
        }

    def ingest(self, path: Path | str) -> str:
        """Validate and store a dataset file; the id is its content digest."""
        text = Path(path).read_text(encoding="utf-8")
        doc = parse_dataset_document(text)
        document_to_dataset(doc)  # full invariant check, not just schema
        ds_id = doc["digest"]
        with self._locked():
            index = self._read_index()
            duplicate = ds_id in index["datasets"]
            if not duplicate:
                atomic_write_text(
                    self.datasets_dir / f"{ds_id}.json", canonical_json(doc) + "\n"
                )
                atomic_write_text(
                    self.datasets_dir / f"{ds_id}.meta.json",
                    canonical_json(
                        {
                            "ingested_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                            "source": str(path),
                        }
                    )
                    + "\n",
                )
                index["datasets"][ds_id] = self._summary(doc)
                self._write_index(index)
            self._log({"op": "ingest", "id": ds_id, "duplicate": duplicate})
        return ds_id

    def ingest_dataset(self, ds: RandMeasDataset) -> str:
        """Serialize in place and ingest without an external file."""
        from .format import serialize_dataset

        tmp = self.root / ".staging.json"
        atomic_write_text(tmp, serialize_dataset(ds))
        try:
            return self.ingest(tmp)
        finally:
            tmp.unlink(missing_ok=True)

    def list_datasets(self) -> list[dict]:
        index = self._read_index()
        return [
            {"id": ds_id, **summary}
            for ds_id, summary in sorted(index["datasets"].items())
        ]

    def _dataset_path(self, ds_id: str) -> Path:
        path = self.datasets_dir / f"{ds_id}.json"
        if not path.exists():
            raise KeyError(f"unknown dataset id {ds_id!r}")
        return path

    def load(self, ds_id: str) -> tuple[RandMeasDataset, dict]:
        """Re-parse and revalidate the stored file (digest check included)."""
        doc = parse_dataset_document(self._dataset_path(ds_id).read_text(encoding="utf-8"))
        if doc["digest"] != ds_id:
            raise MalformedDatasetError(
                f"stored file digest {doc['digest']!r} does not match id {ds_id!r}"
            )
        return document_to_dataset(doc), doc

    def compare(
        self,
        id_1: str,
        id_2: str,
        subsystems: list[tuple[int, ...] | None] | None = None,
    ) -> dict:
        """F_max per requested subsystem (None entry = full system)."""
        ds1, doc1 = self.load(id_1)
        if id_2 == id_1:
            ds2, doc2 = ds1, doc1  # same object so overlap routes to purity
        else:
            ds2, doc2 = self.load(id_2)
        if doc1["ensemble"] != doc2["ensemble"]:
            raise MalformedDatasetError(
                f"ensemble mismatch: {doc1['ensemble']} vs {doc2['ensemble']}"
            )
        estimates = [
            {"subsystem": _json_safe(sub), **fidelity_to_dict(estimate_fmax(ds1, ds2, sub))}
            for sub in (subsystems if subsystems is not None else [None])
        ]
        report = {
            "id_1": id_1,
            "id_2": id_2,
            "digest_1": doc1["digest"],
            "digest_2": doc2["digest"],
            "estimates": estimates,
        }
        with self._locked():
            self._log({"op": "compare", **report})
        return report

    def compare_matrix(
        self, ids: list[str], subsystem: tuple[int, ...] | None = None
    ) -> dict:
        """Symmetric F_max matrix; failed pairs leave explicit null gaps."""
        n = len(ids)
        matrix: list[list[float | None]] = [[None] * n for _ in range(n)]
        errors: dict[str, str] = {}
        for i in range(n):
            for j in range(i, n):
                try:
                    ds_i, doc_i = self.load(ids[i])
                    if j == i:
                        est = estimate_fmax(ds_i, ds_i, subsystem)
                    else:
                        ds_j, doc_j = self.load(ids[j])
                        if doc_i["ensemble"] != doc_j["ensemble"]:
                            raise MalformedDatasetError("ensemble mismatch")
                        est = estimate_fmax(ds_i, ds_j, subsystem)
                    matrix[i][j] = matrix[j][i] = est.fmax
                except (ValueError, KeyError) as exc:
                    errors[f"{ids[i]},{ids[j]}"] = str(exc)
        report = {
            "ids": list(ids),
            "subsystem": _json_safe(subsystem),
            "matrix": matrix,
            "errors": errors,
        }
        with self._locked():
            self._log({"op": "compare_matrix", "ids": list(ids), "subsystem": _json_safe(subsystem)})
        return report

    def rebuild_index(self) -> dict:
        """Replay the append-only log into a fresh index (for auditing)."""
        rebuilt: dict = {"datasets": {}}
        if not self.log_path.exists():
            return rebuilt
        for line in self.log_path.read_text(encoding="utf-8").splitlines():
            record = json.loads(line)
            if record.get("op") == "ingest" and not record.get("duplicate"):
                doc = parse_dataset_document(
                    (self.datasets_dir / f"{record['id']}.json").read_text(encoding="utf-8")
                )
                rebuilt["datasets"][record["id"]] = self._summary(doc)
        return rebuilt
