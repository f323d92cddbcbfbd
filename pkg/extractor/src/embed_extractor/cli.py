"""CLI verbs: pretrain, protonet-train, extract. Each takes a JSON config
file; see configs/ for examples."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from .augment import AugmentSpec
from .backbones import BackboneSpec
from .datasets import generate_shape_images, images_from_folder, load_manifest
from .export import extract_and_export
from .pretrain import TrainSpec, load_backbone_checkpoint, pretrain_backbone
from .protonet import ProtonetSpec, load_protonet_checkpoint, train_protonet_baseline


def _load_images(cfg: dict, split: str):
    source = cfg["data"]
    if source.get("kind") == "shapes":
        return generate_shape_images(
            n_per_class=source.get("n_per_class", 100),
            seed=source.get("seed", 0),
            n_classes=source.get("n_classes", 2),
        )
    manifest = load_manifest(source["manifest"])
    return images_from_folder(source["root"], manifest, split)


def cmd_pretrain(cfg: dict) -> int:
    images = _load_images(cfg, "train")
    train = cfg.get("train", {})
    pretrain_backbone(
        images,
        backbone_spec=BackboneSpec(cfg.get("backbone", "conv64")),
        train_spec=TrainSpec(
            learning_rate=train.get("learning_rate", 1e-3),
            betas=tuple(train.get("betas", (0.9, 0.95))),
            batch_size=train.get("batch_size", 32),
            epochs=train.get("epochs", 90),
            seed=train.get("seed", 0),
            augment=train.get("augment", True),
        ),
        checkpoint_path=cfg["checkpoint"],
    )
    print(f"checkpoint written to {cfg['checkpoint']}")
    return 0


def cmd_protonet_train(cfg: dict) -> int:
    images = _load_images(cfg, "train")
    ep = cfg.get("episodes", {})
    train_protonet_baseline(
        images,
        backbone_spec=BackboneSpec(cfg.get("backbone", "conv64")),
        spec=ProtonetSpec(
            n_way=ep.get("n_way", 2),
            k_shot=ep.get("k_shot", 5),
            q_query=ep.get("q_query", 5),
            episodes=ep.get("count", 100),
            learning_rate=ep.get("learning_rate", 1e-3),
            seed=ep.get("seed", 0),
        ),
        checkpoint_path=cfg["checkpoint"],
    )
    print(f"checkpoint written to {cfg['checkpoint']}")
    return 0


def cmd_extract(cfg: dict) -> int:
    if cfg.get("checkpoint_kind", "pretrain") == "protonet":
        backbone = load_protonet_checkpoint(cfg["checkpoint"])
    else:
        backbone = load_backbone_checkpoint(cfg["checkpoint"])
    images = _load_images(cfg, cfg.get("split", "test"))
    aug_cfg = cfg.get("augment")
    augment = None if aug_cfg is None else AugmentSpec(factor=aug_cfg.get("factor", 5))
    count = extract_and_export(
        backbone,
        images,
        cfg["output"],
        augment=augment,
        seed=cfg.get("seed", 0),
    )
    print(f"wrote {count} records to {cfg['output']}")
    return 0


COMMANDS = {
    "pretrain": cmd_pretrain,
    "protonet-train": cmd_protonet_train,
    "extract": cmd_extract,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="embed-extractor")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="JSON config file")
    args = parser.parse_args(argv)
    cfg = json.loads(Path(args.config).read_text())
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    raise SystemExit(main())
