"""Episodic baseline trainer: prototypes from support embeddings, squared
Euclidean distances to queries, negative log-softmax over the negated
distances back-propagated into the backbone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .augment import eval_transform
from .backbones import BackboneSpec, build_backbone
from .datasets import LabeledImage


@dataclass(frozen=True)
class ProtonetSpec:
    n_way: int = 2
    k_shot: int = 5
    q_query: int = 5
    episodes: int = 100
    learning_rate: float = 1e-3
    betas: tuple = (0.9, 0.95)
    seed: int = 0


def compute_prototypes(embeddings: torch.Tensor, labels: torch.Tensor, n_way: int) -> torch.Tensor:
    """Per-class mean of support embeddings; row c is the class-c prototype."""
    return torch.stack([embeddings[labels == c].mean(dim=0) for c in range(n_way)])


def episode_loss(support_emb, support_y, query_emb, query_y, n_way):
    protos = compute_prototypes(support_emb, support_y, n_way)
    dists = torch.cdist(query_emb, protos)
    return nn.functional.cross_entropy(-dists, query_y), dists


def train_protonet_baseline(
    images: list[LabeledImage],
    backbone_spec: BackboneSpec = BackboneSpec(),
    spec: ProtonetSpec = ProtonetSpec(),
    checkpoint_path=None,
    log=print,
) -> nn.Module:
    torch.manual_seed(spec.seed)
    rng = np.random.default_rng(spec.seed)
    by_class: dict[int, list[LabeledImage]] = {}
    for img in images:
        by_class.setdefault(img.class_label, []).append(img)
    labels = sorted(by_class)
    need = spec.k_shot + spec.q_query
    for c in labels:
        if len(by_class[c]) < need:
            raise ValueError(f"class {c} has {len(by_class[c])} images, needs {need}")

    backbone = build_backbone(backbone_spec)
    optimizer = torch.optim.Adam(backbone.parameters(), lr=spec.learning_rate, betas=spec.betas)
    transform = eval_transform()

    backbone.train()
    for episode in range(spec.episodes):
        chosen = rng.choice(len(labels), size=spec.n_way, replace=False)
        sup, qry, sup_y, qry_y = [], [], [], []
        for local, ci in enumerate(chosen):
            pool = by_class[labels[ci]]
            picks = rng.choice(len(pool), size=need, replace=False)
            for j in picks[: spec.k_shot]:
                sup.append(transform(pool[j].load()))
                sup_y.append(local)
            for j in picks[spec.k_shot :]:
                qry.append(transform(pool[j].load()))
                qry_y.append(local)
        optimizer.zero_grad()
        sup_emb = backbone(torch.stack(sup))
        qry_emb = backbone(torch.stack(qry))
        loss, dists = episode_loss(
            sup_emb, torch.tensor(sup_y), qry_emb, torch.tensor(qry_y), spec.n_way
        )
        loss.backward()
        optimizer.step()
        if (episode + 1) % 20 == 0 or episode == 0:
            acc = (dists.argmin(dim=1) == torch.tensor(qry_y)).float().mean().item()
            log(f"episode {episode + 1}/{spec.episodes}: loss {loss.item():.4f}, acc {acc:.3f}")

    if checkpoint_path is not None:
        torch.save(
            {"backbone_kind": backbone_spec.kind, "state_dict": backbone.state_dict()},
            checkpoint_path,
        )
    backbone.eval()
    return backbone


def load_protonet_checkpoint(path) -> nn.Module:
    ckpt = torch.load(path, map_location="cpu", weights_only=True)
    backbone = build_backbone(BackboneSpec(ckpt["backbone_kind"]))
    backbone.load_state_dict(ckpt["state_dict"])
    backbone.eval()
    return backbone
