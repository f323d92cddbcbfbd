"""Reproducible N-way K-shot episode sampling, leakage-safe under
augmentation groups.

Sampling is group-level first: for each chosen class, k_shot + q_query
groups are drawn without replacement, so augmented copies of one source
image can never straddle support and query. Query groups contribute only
their canonical record (lowest record_id); support groups contribute either
the canonical record or, with aug_expand, every member record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import EmbeddingDataset, EmbeddingRecord


class SamplerError(ValueError):
    pass


class InsufficientGroupsError(SamplerError):
    """A sampled class has fewer than k_shot + q_query groups."""


@dataclass(frozen=True)
class EpisodeConfig:
    n_way: int = 2
    k_shot: int = 1
    q_query: int = 15  # conventional default, not dictated by anything
    aug_expand: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_way < 2:
            raise SamplerError("n_way must be >= 2")
        if self.k_shot < 1:
            raise SamplerError("k_shot must be >= 1")
        if self.q_query < 1:
            raise SamplerError("q_query must be >= 1")


@dataclass(frozen=True)
class Episode:
    """One N-way K-shot task with disjoint support and query group sets."""

    support: tuple[EmbeddingRecord, ...]
    query: tuple[EmbeddingRecord, ...]
    class_map: dict[int, int]  # original class_label -> episode-local index

    def local_label(self, record: EmbeddingRecord) -> int:
        return self.class_map[record.class_label]


def _episode_rng(seed: int, episode_index: int) -> np.random.Generator:
    # Counter-style stream: Philox keyed by (seed, episode_index) makes
    # episode i reproducible without generating episodes 0..i-1.
    return np.random.Generator(np.random.Philox(key=[seed, episode_index]))


def sample_episode(
    dataset: EmbeddingDataset, config: EpisodeConfig, episode_index: int
) -> Episode:
    """Pure function of (dataset, config, episode_index)."""
    # Classes ordered by their smallest group_id: deterministic, independent
    # of map iteration order, and invariant under class relabeling (so a
    # label bijection redraws exactly the same groups).
    class_labels = sorted(dataset.class_index, key=lambda c: dataset.class_index[c][0])
    if config.n_way > len(class_labels):
        raise SamplerError(
            f"n_way {config.n_way} exceeds class count {len(class_labels)}"
        )
    rng = _episode_rng(config.seed, episode_index)

    # Fisher-Yates prefix over the ordered class list.
    indices = list(range(len(class_labels)))
    for i in range(config.n_way):
        j = i + int(rng.integers(len(indices) - i))
        indices[i], indices[j] = indices[j], indices[i]
    chosen = [class_labels[i] for i in indices[: config.n_way]]

    need = config.k_shot + config.q_query
    support: list[EmbeddingRecord] = []
    query: list[EmbeddingRecord] = []
    class_map: dict[int, int] = {}
    for local, label in enumerate(chosen):
        class_map[label] = local
        groups = dataset.class_index[label]  # sorted group_ids
        if len(groups) < need:
            raise InsufficientGroupsError(
                f"class {label} has {len(groups)} groups, "
                f"needs k_shot + q_query = {need}"
            )
        picked = rng.choice(len(groups), size=need, replace=False)
        support_groups = [groups[i] for i in picked[: config.k_shot]]
        query_groups = [groups[i] for i in picked[config.k_shot :]]
        for gid in support_groups:
            members = dataset.group_records(gid)
            if config.aug_expand:
                support.extend(members)
            else:
                support.append(members[0])
        for gid in query_groups:
            query.append(dataset.group_records(gid)[0])

    return Episode(support=tuple(support), query=tuple(query), class_map=class_map)


def sample_episodes(
    dataset: EmbeddingDataset, config: EpisodeConfig, count: int
) -> list[Episode]:
    return [sample_episode(dataset, config, i) for i in range(count)]


def episode_manifest(episodes: list[Episode]) -> str:
    """JSON manifest of episode composition, for audits."""
    entries = []
    for i, ep in enumerate(episodes):
        entries.append(
            {
                "episode_index": i,
                "class_map": {str(k): v for k, v in ep.class_map.items()},
                "support_record_ids": [r.record_id for r in ep.support],
                "query_record_ids": [r.record_id for r in ep.query],
            }
        )
    return json.dumps(entries, indent=2, sort_keys=True)
