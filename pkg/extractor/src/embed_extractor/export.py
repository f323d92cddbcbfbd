"""Embedding extraction and export in the engine's binary interchange
format.

Format (little-endian): magic "FSEB", version u16 = 1, dim u32, record
count u64; per record: record_id u64, group_id u64, class_label u32,
dim x f64. All copies of one source image share a group_id, so the
evaluation engine can keep augmented support material out of query sets.
"""

from __future__ import annotations

import struct

import numpy as np
import torch
from torch import nn

from .augment import AugmentSpec, augmented_copies, eval_transform
from .datasets import LabeledImage

_HEADER = struct.Struct("<4sHIQ")
_RECORD_FIXED = struct.Struct("<QQI")


def write_fseb(path, dim: int, records) -> None:
    """records: iterable of (record_id, group_id, class_label, vector)."""
    rows = list(records)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"FSEB", 1, dim, len(rows)))
        for record_id, group_id, class_label, vector in rows:
            vec = np.asarray(vector, dtype="<f8")
            if vec.shape != (dim,):
                raise ValueError(f"record {record_id}: vector shape {vec.shape} != ({dim},)")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"record {record_id}: non-finite embedding")
            fh.write(_RECORD_FIXED.pack(record_id, group_id, class_label))
            fh.write(vec.tobytes())


def extract_and_export(
    backbone: nn.Module,
    images: list[LabeledImage],
    output_path,
    augment: AugmentSpec | None = None,
    seed: int = 0,
    batch_size: int = 32,
) -> int:
    """Embeds every image (plus augmented copies when requested) and writes
    the binary file; group_id is the source image index. Returns the record
    count. Deterministic for a fixed backbone and seed."""
    dim = None
    records = []
    record_id = 0
    backbone.eval()
    tensors: list[torch.Tensor] = []
    meta: list[tuple[int, int]] = []  # (group_id, class_label)
    for group_id, img in enumerate(images):
        pil = img.load()
        if augment is None:
            copies = [eval_transform()(pil)]
        else:
            copies = augmented_copies(pil, augment, seed=seed + group_id)
        for t in copies:
            tensors.append(t)
            meta.append((group_id, img.class_label))

    with torch.no_grad():
        for start in range(0, len(tensors), batch_size):
            batch = torch.stack(tensors[start : start + batch_size])
            emb = backbone(batch).numpy().astype(np.float64)
            dim = emb.shape[1]
            for row, (group_id, class_label) in zip(emb, meta[start : start + batch_size]):
                records.append((record_id, group_id, class_label, row))
                record_id += 1

    write_fseb(output_path, dim, records)
    return record_id
