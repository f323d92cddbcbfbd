"""Augmentation pipelines.

Meta-training uses random crop, color jitter, and horizontal flip.
Meta-test support expansion adds vertical flip and rotations up to
10 degrees, producing a fixed number of extra copies per image (5 by
default, so each support image yields 6 records in one group).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torchvision import transforms

from .backbones import INPUT_SIZE

_NORMALIZE = transforms.Normalize(mean=[0.5, 0.5, 0.5], std=[0.5, 0.5, 0.5])


@dataclass(frozen=True)
class AugmentSpec:
    factor: int = 5  # augmented copies per support image
    crop_scale: tuple = (0.7, 1.0)
    jitter: float = 0.3
    max_rotation_deg: float = 10.0

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError("factor must be >= 1")


def eval_transform():
    return transforms.Compose(
        [
            transforms.Resize((INPUT_SIZE, INPUT_SIZE)),
            transforms.ToTensor(),
            _NORMALIZE,
        ]
    )


def train_transform(crop_scale=(0.7, 1.0), jitter=0.3):
    return transforms.Compose(
        [
            transforms.RandomResizedCrop(INPUT_SIZE, scale=crop_scale),
            transforms.ColorJitter(brightness=jitter, contrast=jitter, saturation=jitter),
            transforms.RandomHorizontalFlip(),
            transforms.ToTensor(),
            _NORMALIZE,
        ]
    )


def support_transform(spec: AugmentSpec):
    return transforms.Compose(
        [
            transforms.RandomResizedCrop(INPUT_SIZE, scale=spec.crop_scale),
            transforms.ColorJitter(
                brightness=spec.jitter, contrast=spec.jitter, saturation=spec.jitter
            ),
            transforms.RandomHorizontalFlip(),
            transforms.RandomVerticalFlip(),
            transforms.RandomRotation(spec.max_rotation_deg),
            transforms.ToTensor(),
            _NORMALIZE,
        ]
    )


def augmented_copies(image, spec: AugmentSpec, seed: int) -> list[torch.Tensor]:
    """The original (eval transform) plus spec.factor augmented tensors,
    deterministic for a given seed."""
    torch.manual_seed(seed)
    tf = support_transform(spec)
    return [eval_transform()(image)] + [tf(image) for _ in range(spec.factor)]
