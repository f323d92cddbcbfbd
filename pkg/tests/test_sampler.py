import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fewshot_eval.data import EmbeddingDataset, EmbeddingRecord, SyntheticSpec, generate_synthetic
from fewshot_eval.sampler import (
    EpisodeConfig,
    InsufficientGroupsError,
    SamplerError,
    episode_manifest,
    sample_episode,
    sample_episodes,
)


def pool(n_classes=3, groups=10, dim=4, seed=0, records_per_group=1, wgs=0.0):
    return generate_synthetic(
        SyntheticSpec(
            n_classes=n_classes, dim=dim, groups_per_class=groups,
            class_center_norm=2.0, noise_sigma=0.5, seed=seed,
            records_per_group=records_per_group, within_group_sigma=wgs,
        )
    )


def test_shapes_and_disjointness():
    ds = pool()
    ep = sample_episode(ds, EpisodeConfig(n_way=2, k_shot=1, q_query=5, seed=1), 0)
    assert len(ep.support) == 2  # singleton groups
    assert len(ep.query) == 10
    sup_groups = {r.group_id for r in ep.support}
    qry_groups = {r.group_id for r in ep.query}
    assert not sup_groups & qry_groups
    assert sorted(ep.class_map.values()) == [0, 1]


def test_determinism():
    ds = pool()
    cfg = EpisodeConfig(n_way=2, k_shot=2, q_query=3, seed=9)
    assert sample_episode(ds, cfg, 5) == sample_episode(ds, cfg, 5)


def test_insufficient_groups_names_class():
    ds = pool(groups=10)
    cfg = EpisodeConfig(n_way=3, k_shot=6, q_query=5, seed=0)
    with pytest.raises(InsufficientGroupsError, match="class"):
        sample_episode(ds, cfg, 0)


def test_n_way_exceeds_classes():
    ds = pool(n_classes=3)
    with pytest.raises(SamplerError):
        sample_episode(ds, EpisodeConfig(n_way=4, k_shot=1, q_query=1, seed=0), 0)


def test_aug_expand_uses_whole_group():
    # Each group holds the original plus 5 augmented copies.
    ds = pool(records_per_group=6, wgs=0.1)
    cfg = EpisodeConfig(n_way=2, k_shot=1, q_query=3, aug_expand=True, seed=4)
    ep = sample_episode(ds, cfg, 0)
    assert len(ep.support) == 12  # 6 records per class per shot
    # Query never includes augmented copies: one canonical record per group.
    assert len(ep.query) == 6
    assert len({r.group_id for r in ep.query}) == 6
    for r in ep.query:
        assert r.record_id == min(m.record_id for m in ds.group_records(r.group_id))


def test_query_uses_canonical_record_without_aug_expand_too():
    ds = pool(records_per_group=3, wgs=0.1)
    ep = sample_episode(ds, EpisodeConfig(n_way=2, k_shot=1, q_query=4, seed=2), 1)
    for r in ep.support + ep.query:
        assert r.record_id == min(m.record_id for m in ds.group_records(r.group_id))


def test_batch_prefix_property():
    ds = pool()
    cfg = EpisodeConfig(n_way=2, k_shot=1, q_query=2, seed=3)
    long = sample_episodes(ds, cfg, 40)
    short = sample_episodes(ds, cfg, 10)
    assert long[:10] == short
    assert sample_episodes(ds, cfg, 0) == []


def test_episodes_vary_across_indices():
    ds = pool(groups=30)
    cfg = EpisodeConfig(n_way=2, k_shot=1, q_query=5, seed=3)
    eps = sample_episodes(ds, cfg, 30)
    supports = {tuple(r.record_id for r in ep.support) for ep in eps}
    assert len(supports) > 20


def test_class_permutation_equivariance():
    ds = pool(n_classes=4, groups=8)
    bijection = {0: 2, 1: 0, 2: 3, 3: 1}
    relabeled = EmbeddingDataset(
        dim=ds.dim,
        records=[
            EmbeddingRecord(r.record_id, r.group_id, bijection[r.class_label], r.vector)
            for r in ds.records
        ],
    )
    cfg = EpisodeConfig(n_way=2, k_shot=2, q_query=3, seed=7)
    for idx in range(10):
        a = sample_episode(ds, cfg, idx)
        b = sample_episode(relabeled, cfg, idx)
        assert [r.record_id for r in a.support] == [r.record_id for r in b.support]
        assert [r.record_id for r in a.query] == [r.record_id for r in b.query]
        assert {bijection[k]: v for k, v in a.class_map.items()} == b.class_map


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 2**31),
    st.integers(0, 50),
    st.integers(1, 3),
    st.integers(1, 4),
)
def test_invariants_property(seed, episode_index, k_shot, q_query):
    ds = pool(n_classes=4, groups=8, seed=1)
    cfg = EpisodeConfig(n_way=3, k_shot=k_shot, q_query=q_query, seed=seed)
    ep = sample_episode(ds, cfg, episode_index)
    sup_groups = {r.group_id for r in ep.support}
    qry_groups = {r.group_id for r in ep.query}
    assert not sup_groups & qry_groups
    for label, local in ep.class_map.items():
        sup_c = [r for r in ep.support if r.class_label == label]
        qry_c = [r for r in ep.query if r.class_label == label]
        assert len({r.group_id for r in sup_c}) == k_shot
        assert len(qry_c) == q_query


def test_manifest_shape():
    ds = pool()
    cfg = EpisodeConfig(n_way=2, k_shot=1, q_query=2, seed=0)
    manifest = json.loads(episode_manifest(sample_episodes(ds, cfg, 3)))
    assert [m["episode_index"] for m in manifest] == [0, 1, 2]
    assert all(len(m["support_record_ids"]) == 2 for m in manifest)
    assert all(len(m["query_record_ids"]) == 4 for m in manifest)
