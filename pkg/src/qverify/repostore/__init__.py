"""Central dataset repository: bit-exact files, digests, pairwise comparison."""

from .format import (
    FORMAT_VERSION,
    DigestMismatchError,
    MalformedDatasetError,
    RepoFormatError,
    UnsupportedVersionError,
    canonical_json,
    dataset_ensemble,
    dataset_to_document,
    document_digest,
    document_to_dataset,
    fnv1a64,
    load_dataset_text,
    parse_dataset_document,
    serialize_dataset,
)
from .repository import Repository, fidelity_to_dict

__all__ = [
    "FORMAT_VERSION",
    "DigestMismatchError",
    "MalformedDatasetError",
    "RepoFormatError",
    "Repository",
    "UnsupportedVersionError",
    "canonical_json",
    "dataset_ensemble",
    "dataset_to_document",
    "document_digest",
    "document_to_dataset",
    "fidelity_to_dict",
    "fnv1a64",
    "load_dataset_text",
    "parse_dataset_document",
    "serialize_dataset",
]
