"""Embedding backbones: a 6-layer Conv64 CNN and torchvision ResNets.

Each backbone maps a 224x224 RGB batch to a fixed-width embedding:
64 for conv64, 1000 for resnet18 (taken at the ImageNet-width logit
layer; a 512-wide pooled-feature tap is available), 2048 for resnet50.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

INPUT_SIZE = 224

EMBED_DIMS = {"conv64": 64, "resnet18": 1000, "resnet18-pooled": 512, "resnet50": 2048}


@dataclass(frozen=True)
class BackboneSpec:
    kind: str = "conv64"

    def __post_init__(self):
        if self.kind not in EMBED_DIMS:
            raise ValueError(f"unknown backbone {self.kind!r}")

    @property
    def dim(self) -> int:
        return EMBED_DIMS[self.kind]


class Conv64(nn.Module):
    """Six conv blocks of 64 3x3 filters, each followed by batch norm,
    ReLU, and 2x2 max pooling; global average pool to a 64-vector."""

    def __init__(self):
        super().__init__()
        blocks = []
        in_ch = 3
        for _ in range(6):
            blocks += [
                nn.Conv2d(in_ch, 64, kernel_size=3, padding=1),
                nn.BatchNorm2d(64),
                nn.ReLU(inplace=True),
                nn.MaxPool2d(2),
            ]
            in_ch = 64
        self.features = nn.Sequential(*blocks)
        self.pool = nn.AdaptiveAvgPool2d(1)

    def forward(self, x):
        return self.pool(self.features(x)).flatten(1)


class _ResNetEmbedding(nn.Module):
    def __init__(self, kind: str):
        super().__init__()
        from torchvision import models

        if kind == "resnet18":
            # Full 1000-way ImageNet head output, matching the declared
            # embedding width of 1000.
            self.net = models.resnet18(weights=None)
            self.tap_logits = True
        elif kind == "resnet18-pooled":
            self.net = models.resnet18(weights=None)
            self.net.fc = nn.Identity()
            self.tap_logits = False
        elif kind == "resnet50":
            self.net = models.resnet50(weights=None)
            self.net.fc = nn.Identity()
            self.tap_logits = False
        else:
            raise ValueError(kind)

    def forward(self, x):
        return self.net(x)


def build_backbone(spec: BackboneSpec) -> nn.Module:
    if spec.kind == "conv64":
        return Conv64()
    return _ResNetEmbedding(spec.kind)


class ClassifierHead(nn.Module):
    """Backbone plus an N-neuron fully-connected layer for supervised
    pretraining; the head is dropped for embedding extraction."""

    def __init__(self, backbone: nn.Module, dim: int, n_classes: int):
        super().__init__()
        self.backbone = backbone
        self.head = nn.Linear(dim, n_classes)

    def forward(self, x):
        return self.head(self.backbone(x))


@torch.no_grad()
def embed_batch(backbone: nn.Module, images: torch.Tensor) -> torch.Tensor:
    backbone.eval()
    return backbone(images)
