"""Supervised backbone pretraining on a merged meta-training dataset.

The merged set is treated as one plain classification problem: an N-neuron
head on top of the backbone, cross-entropy loss, Adam with moment decay
rates (0.9, 0.95) and no weight decay. The head is dropped after training
and the bare backbone becomes the embedding function.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn
from torch.utils.data import DataLoader, Dataset

from .augment import eval_transform, train_transform
from .backbones import BackboneSpec, ClassifierHead, build_backbone
from .datasets import LabeledImage, class_count


@dataclass(frozen=True)
class TrainSpec:
    learning_rate: float = 1e-3
    betas: tuple = (0.9, 0.95)
    batch_size: int = 32
    epochs: int = 90  # 90 for ISIC, 40 for Derm7pt
    seed: int = 0
    augment: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size, epochs must be positive")


class _ImageDataset(Dataset):
    def __init__(self, images: list[LabeledImage], transform):
        self.images = images
        self.transform = transform

    def __len__(self):
        return len(self.images)

    def __getitem__(self, idx):
        img = self.images[idx]
        return self.transform(img.load()), img.class_label


def pretrain_backbone(
    merged: list[LabeledImage],
    backbone_spec: BackboneSpec = BackboneSpec(),
    train_spec: TrainSpec = TrainSpec(),
    checkpoint_path=None,
    log=print,
) -> nn.Module:
    """Returns the trained embedding function (head removed)."""
    if not merged:
        raise ValueError("empty merged dataset")
    torch.manual_seed(train_spec.seed)
    n_classes = class_count(merged)
    backbone = build_backbone(backbone_spec)
    model = ClassifierHead(backbone, backbone_spec.dim, n_classes)

    transform = train_transform() if train_spec.augment else eval_transform()
    loader = DataLoader(
        _ImageDataset(merged, transform),
        batch_size=train_spec.batch_size,
        shuffle=True,
        generator=torch.Generator().manual_seed(train_spec.seed),
    )
    optimizer = torch.optim.Adam(
        model.parameters(), lr=train_spec.learning_rate, betas=train_spec.betas
    )
    loss_fn = nn.CrossEntropyLoss()

    model.train()
    for epoch in range(train_spec.epochs):
        total, correct, loss_sum = 0, 0, 0.0
        for batch, labels in loader:
            optimizer.zero_grad()
            logits = model(batch)
            loss = loss_fn(logits, labels)
            loss.backward()
            optimizer.step()
            loss_sum += loss.item() * len(labels)
            correct += (logits.argmax(dim=1) == labels).sum().item()
            total += len(labels)
        log(
            f"epoch {epoch + 1}/{train_spec.epochs}: "
            f"loss {loss_sum / total:.4f}, acc {correct / total:.3f}"
        )

    if checkpoint_path is not None:
        torch.save(
            {
                "backbone_kind": backbone_spec.kind,
                "n_classes": n_classes,
                "state_dict": model.state_dict(),
            },
            checkpoint_path,
        )
    backbone.eval()
    return backbone


def load_backbone_checkpoint(path) -> nn.Module:
    ckpt = torch.load(path, map_location="cpu", weights_only=True)
    spec = BackboneSpec(ckpt["backbone_kind"])
    model = ClassifierHead(build_backbone(spec), spec.dim, ckpt["n_classes"])
    model.load_state_dict(ckpt["state_dict"])
    model.backbone.eval()
    return model.backbone


def training_accuracy(head_model: nn.Module, images, batch_size=32):
    loader = DataLoader(_ImageDataset(images, eval_transform()), batch_size=batch_size)
    correct, total = 0, 0
    head_model.eval()
    with torch.no_grad():
        for batch, labels in loader:
            correct += (head_model(batch).argmax(dim=1) == labels).sum().item()
            total += len(labels)
    return correct / total
