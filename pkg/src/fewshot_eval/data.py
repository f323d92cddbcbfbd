"""Embedding data model, on-disk formats, and synthetic fixtures.

Datasets are immutable after construction; loading and generation are
single-threaded, reads may be shared across threads.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

BINARY_MAGIC = b"FSEB"
BINARY_VERSION = 1

_HEADER_STRUCT = struct.Struct("<4sHIQ")  # magic, version, dim, record count
_RECORD_FIXED_STRUCT = struct.Struct("<QQI")  # record_id, group_id, class_label


class DatasetError(ValueError):
    """Base class for dataset validation and format errors."""


class MalformedHeaderError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class NonFiniteValueError(DatasetError):
    pass


class DuplicateRecordIdError(DatasetError):
    pass


class GroupClassConflictError(DatasetError):
    """A group_id maps to more than one class_label."""


@dataclass(frozen=True)
class EmbeddingRecord:
    """One embedded sample.

    All augmented copies of a single source image share one group_id;
    ungrouped sources use group_id == record_id.
    """

    record_id: int
    group_id: int
    class_label: int
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.record_id == other.record_id
            and self.group_id == other.group_id
            and self.class_label == other.class_label
            and np.array_equal(self.vector, other.vector)
        )


class EmbeddingDataset:
    """A validated collection of embedding records with fixed dimensionality.

    ``class_index`` maps each class_label to the sorted list of group_ids
    belonging to it; it is exactly the partition induced by the records.
    """

    def __init__(self, dim: int, records: list[EmbeddingRecord]):
        if dim < 1:
            raise DatasetError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.records = list(records)
        self._validate()
        self.class_index = self._build_class_index()
        self._by_group: dict[int, list[EmbeddingRecord]] = {}
        for rec in self.records:
            self._by_group.setdefault(rec.group_id, []).append(rec)
        for members in self._by_group.values():
            members.sort(key=lambda r: r.record_id)

    def _validate(self):
        seen_ids: set[int] = set()
        group_class: dict[int, int] = {}
        for row, rec in enumerate(self.records):
            if rec.vector.shape != (self.dim,):
                raise DimensionMismatchError(
                    f"record {rec.record_id} (row {row}): vector length "
                    f"{rec.vector.shape[0] if rec.vector.ndim == 1 else rec.vector.shape}"
                    f" != dim {self.dim}"
                )
            if not np.all(np.isfinite(rec.vector)):
                raise NonFiniteValueError(
                    f"record {rec.record_id} (row {row}): non-finite vector entry"
                )
            if rec.record_id in seen_ids:
                raise DuplicateRecordIdError(f"duplicate record_id {rec.record_id}")
            seen_ids.add(rec.record_id)
            prev = group_class.setdefault(rec.group_id, rec.class_label)
            if prev != rec.class_label:
                raise GroupClassConflictError(
                    f"group_id {rec.group_id} spans classes {prev} and {rec.class_label}"
                )

    def _build_class_index(self) -> dict[int, list[int]]:
        index: dict[int, set[int]] = {}
        for rec in self.records:
            index.setdefault(rec.class_label, set()).add(rec.group_id)
        return {label: sorted(groups) for label, groups in sorted(index.items())}

    @property
    def class_labels(self) -> list[int]:
        return list(self.class_index.keys())

    def group_records(self, group_id: int) -> list[EmbeddingRecord]:
        """Records of one group, sorted by record_id (first is canonical)."""
        return list(self._by_group[group_id])

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingDataset):
            return NotImplemented
        return self.dim == other.dim and self.records == other.records


@dataclass(frozen=True)
class SyntheticSpec:
    """Isotropic Gaussian class blobs around pseudo-random unit directions.

    One group per (class, group slot). With records_per_group > 1 each group
    holds that many copies of its base point, each perturbed by
    within_group_sigma; this mimics augmented copies of one source image.
    """

    n_classes: int
    dim: int
    groups_per_class: int
    class_center_norm: float
    noise_sigma: float
    seed: int
    records_per_group: int = 1
    within_group_sigma: float = 0.0

    def __post_init__(self):
        if self.n_classes < 2:
            raise DatasetError("n_classes must be >= 2")
        if self.groups_per_class < 1:
            raise DatasetError("groups_per_class must be >= 1")
        if self.noise_sigma <= 0:
            raise DatasetError("noise_sigma must be > 0")
        if self.records_per_group < 1:
            raise DatasetError("records_per_group must be >= 1")
        if self.within_group_sigma < 0:
            raise DatasetError("within_group_sigma must be >= 0")


def generate_synthetic(spec: SyntheticSpec) -> EmbeddingDataset:
    """Deterministic synthetic dataset: a pure function of the spec."""
    rng = np.random.default_rng(spec.seed)
    # Class centers: deterministic pseudo-random unit directions, not
    # axis-aligned, scaled to class_center_norm.
    directions = rng.standard_normal((spec.n_classes, spec.dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    centers = spec.class_center_norm * directions / norms

    records = []
    record_id = 0
    group_id = 0
    for c in range(spec.n_classes):
        for _ in range(spec.groups_per_class):
            base = centers[c] + spec.noise_sigma * rng.standard_normal(spec.dim)
            for _ in range(spec.records_per_group):
                vec = base
                if spec.within_group_sigma > 0:
                    vec = base + spec.within_group_sigma * rng.standard_normal(spec.dim)
                records.append(
                    EmbeddingRecord(
                        record_id=record_id,
                        group_id=group_id,
                        class_label=c,
                        vector=vec,
                    )
                )
                record_id += 1
            group_id += 1
    return EmbeddingDataset(dim=spec.dim, records=records)


def synthetic_centers(spec: SyntheticSpec) -> np.ndarray:
    """The exact class centers generate_synthetic(spec) draws around."""
    rng = np.random.default_rng(spec.seed)
    directions = rng.standard_normal((spec.n_classes, spec.dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return spec.class_center_norm * directions / norms


# ---------------------------------------------------------------------------
# On-disk formats.
#
# Binary (little-endian), the canonical interchange format:
#   magic "FSEB" | version u16 = 1 | dim u32 | record count u64
#   then per record: record_id u64 | group_id u64 | class_label u32 | dim x f64
#
# CSV, for human-inspectable fixtures:
#   header  record_id,group_id,class_label,v0,...,v{dim-1}
#   floats printed with 17 significant digits (round-trip safe).
# ---------------------------------------------------------------------------


def save_dataset(dataset: EmbeddingDataset, path, format: str = "binary") -> None:
    if format == "binary":
        _save_binary(dataset, path)
    elif format == "csv":
        _save_csv(dataset, path)
    else:
        raise ValueError(f"unknown format {format!r}")


def load_dataset(path, format: str = "binary") -> EmbeddingDataset:
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown format {format!r}")


def _save_binary(dataset: EmbeddingDataset, path) -> None:
    buf = io.BytesIO()
    buf.write(
        _HEADER_STRUCT.pack(BINARY_MAGIC, BINARY_VERSION, dataset.dim, len(dataset.records))
    )
    for rec in dataset.records:
        buf.write(_RECORD_FIXED_STRUCT.pack(rec.record_id, rec.group_id, rec.class_label))
        buf.write(rec.vector.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def _load_binary(path) -> EmbeddingDataset:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER_STRUCT.size:
        raise MalformedHeaderError("file too short for header")
    magic, version, dim, count = _HEADER_STRUCT.unpack_from(data, 0)
    if magic != BINARY_MAGIC:
        raise MalformedHeaderError(f"bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise MalformedHeaderError(f"unsupported format version {version}")
    rec_size = _RECORD_FIXED_STRUCT.size + 8 * dim
    expected = _HEADER_STRUCT.size + count * rec_size
    if len(data) != expected:
        raise MalformedHeaderError(
            f"file size {len(data)} != expected {expected} for {count} records of dim {dim}"
        )
    records = []
    offset = _HEADER_STRUCT.size
    for _ in range(count):
        record_id, group_id, class_label = _RECORD_FIXED_STRUCT.unpack_from(data, offset)
        offset += _RECORD_FIXED_STRUCT.size
        vec = np.frombuffer(data, dtype="<f8", count=dim, offset=offset).copy()
        offset += 8 * dim
        records.append(EmbeddingRecord(record_id, group_id, class_label, vec))
    return EmbeddingDataset(dim=dim, records=records)


def _save_csv(dataset: EmbeddingDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["record_id", "group_id", "class_label"]
            + [f"v{i}" for i in range(dataset.dim)]
        )
        for rec in dataset.records:
            writer.writerow(
                [rec.record_id, rec.group_id, rec.class_label]
                + [f"{v:.17g}" for v in rec.vector]
            )


def _load_csv(path) -> EmbeddingDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeaderError("empty file") from None
        if header[:3] != ["record_id", "group_id", "class_label"]:
            raise MalformedHeaderError(f"bad header {header[:3]}")
        dim = len(header) - 3
        if dim < 1 or header[3:] != [f"v{i}" for i in range(dim)]:
            raise MalformedHeaderError("bad vector column names")
        records = []
        for row_num, row in enumerate(reader, start=1):
            if len(row) != 3 + dim:
                raise DimensionMismatchError(
                    f"row {row_num}: {len(row) - 3} vector entries, expected {dim}"
                )
            try:
                record_id, group_id, class_label = (int(x) for x in row[:3])
                vec = np.array([float(x) for x in row[3:]], dtype=np.float64)
            except ValueError as exc:
                raise MalformedHeaderError(f"row {row_num}: unparsable value: {exc}") from None
            records.append(EmbeddingRecord(record_id, group_id, class_label, vec))
    return EmbeddingDataset(dim=dim, records=records)
