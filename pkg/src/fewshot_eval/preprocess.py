"""Per-episode embedding preprocessing: L2 normalization onto the unit
hypersphere, applied to support and query alike before any base learner
is fitted."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import EmbeddingRecord, NonFiniteValueError
from .sampler import Episode


@dataclass(frozen=True)
class PreprocessConfig:
    l2_normalize: bool = False
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


def l2_normalize(vector, epsilon: float = 1e-12) -> np.ndarray:
    """vector / max(||vector||, epsilon). Zero vectors pass through."""
    vec = np.asarray(vector, dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        raise NonFiniteValueError("cannot normalize non-finite vector")
    norm = np.linalg.norm(vec)
    return vec / max(norm, epsilon)


def apply_preprocess(episode: Episode, config: PreprocessConfig) -> Episode:
    if not config.l2_normalize:
        return episode

    def norm_rec(rec: EmbeddingRecord) -> EmbeddingRecord:
        return EmbeddingRecord(
            record_id=rec.record_id,
            group_id=rec.group_id,
            class_label=rec.class_label,
            vector=l2_normalize(rec.vector, config.epsilon),
        )

    return Episode(
        support=tuple(norm_rec(r) for r in episode.support),
        query=tuple(norm_rec(r) for r in episode.query),
        class_map=dict(episode.class_map),
    )
