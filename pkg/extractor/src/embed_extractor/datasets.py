"""Labeled image sets: merged-episode construction, split manifests, and a
toy generated shape set for CPU-scale end-to-end tests.

An image set is a list of LabeledImage entries. Images are identified by a
stable string id; merging episode train sets deduplicates on that id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw


@dataclass(frozen=True)
class LabeledImage:
    image_id: str
    class_label: int
    path: str | None = None  # on-disk source, exclusive with array
    array: np.ndarray | None = None  # H x W x 3 uint8, in-memory source

    def load(self) -> Image.Image:
        if self.array is not None:
            return Image.fromarray(self.array)
        return Image.open(self.path).convert("RGB")


def build_merged_dataset(episode_train_sets: list[list[LabeledImage]]) -> list[LabeledImage]:
    """Union of all episode train sets, deduplicated by image identity.
    The label space is the union of base classes."""
    if not episode_train_sets:
        raise ValueError("no episode train sets to merge")
    merged: dict[str, LabeledImage] = {}
    for train_set in episode_train_sets:
        for img in train_set:
            prev = merged.setdefault(img.image_id, img)
            if prev.class_label != img.class_label:
                raise ValueError(
                    f"image {img.image_id} labeled both {prev.class_label} "
                    f"and {img.class_label}"
                )
    return list(merged.values())


def class_count(images: list[LabeledImage]) -> int:
    return len({img.class_label for img in images})


# ---------------------------------------------------------------------------
# Split manifests: declarative class-to-split assignments checked into the
# repo, the contract against split drift.
# ---------------------------------------------------------------------------


def load_manifest(path) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    for key in ("dataset", "classes"):
        if key not in manifest:
            raise ValueError(f"manifest missing {key!r}")
    for entry in manifest["classes"]:
        if entry["split"] not in ("train", "test"):
            raise ValueError(f"bad split {entry['split']!r} for {entry['abbr']}")
    return manifest


def manifest_split(manifest: dict, split: str) -> list[str]:
    return [c["abbr"] for c in manifest["classes"] if c["split"] == split]


def images_from_folder(root, manifest: dict, split: str) -> list[LabeledImage]:
    """Images under root/<class_abbr>/*.{jpg,png} for one manifest split,
    with contiguous labels in manifest order."""
    abbrs = manifest_split(manifest, split)
    images = []
    for label, abbr in enumerate(abbrs):
        class_dir = Path(root) / abbr
        if not class_dir.is_dir():
            raise FileNotFoundError(f"missing class directory {class_dir}")
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() in (".jpg", ".jpeg", ".png"):
                images.append(
                    LabeledImage(image_id=f"{abbr}/{path.name}", class_label=label, path=str(path))
                )
    return images


# ---------------------------------------------------------------------------
# Toy shape images: two easily separable classes (filled disks vs squares)
# rendered at 224x224, for desk-scale training runs.
# ---------------------------------------------------------------------------


def generate_shape_images(
    n_per_class: int, seed: int = 0, size: int = 224, n_classes: int = 2
) -> list[LabeledImage]:
    rng = np.random.default_rng(seed)
    shapes = ("disk", "square", "triangle")[:n_classes]
    # Each class gets its own hue band as well as its own shape, so the
    # signal survives aggressive pooling.
    hues = ((220, 60, 60), (60, 60, 220), (60, 220, 60))
    images = []
    for label, shape in enumerate(shapes):
        for i in range(n_per_class):
            img = Image.new("RGB", (size, size), tuple(int(v) for v in rng.integers(0, 60, 3)))
            draw = ImageDraw.Draw(img)
            cx, cy = rng.integers(size // 4, 3 * size // 4, 2)
            r = int(rng.integers(size // 8, size // 4))
            color = tuple(
                int(np.clip(base + rng.integers(-40, 40), 0, 255)) for base in hues[label]
            )
            if shape == "disk":
                draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=color)
            elif shape == "square":
                draw.rectangle([cx - r, cy - r, cx + r, cy + r], fill=color)
            else:
                draw.polygon([(cx, cy - r), (cx - r, cy + r), (cx + r, cy + r)], fill=color)
            images.append(
                LabeledImage(
                    image_id=f"{shape}_{i:04d}",
                    class_label=label,
                    array=np.asarray(img, dtype=np.uint8),
                )
            )
    return images
