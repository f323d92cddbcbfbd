import numpy as np
import torch

from embed_extractor.backbones import BackboneSpec
from embed_extractor.datasets import generate_shape_images
from embed_extractor.export import extract_and_export
from embed_extractor.protonet import ProtonetSpec, train_protonet_baseline

from fewshot_eval.runner import ExperimentConfig, run_experiment
from fewshot_eval.sampler import EpisodeConfig


def test_protonet_learns_above_chance(tmp_path):
    train_images = generate_shape_images(20, seed=2)
    test_images = generate_shape_images(15, seed=55)
    backbone = train_protonet_baseline(
        train_images,
        BackboneSpec("conv64"),
        ProtonetSpec(n_way=2, k_shot=3, q_query=3, episodes=25, seed=0),
        log=lambda msg: None,
    )
    out = tmp_path / "protonet.fseb"
    extract_and_export(backbone, test_images, out)
    cfg = ExperimentConfig(
        dataset_path=str(out),
        episode=EpisodeConfig(n_way=2, k_shot=5, q_query=8, seed=1),
        episodes=50,
        classifier="prototype",
    )
    acc = run_experiment(cfg)["aggregates"]["accuracy"]["mean"]
    assert acc > 0.6  # clearly above the 0.5 chance level


def test_insufficient_images_per_class_rejected():
    images = generate_shape_images(2, seed=0)
    import pytest

    with pytest.raises(ValueError):
        train_protonet_baseline(
            images, BackboneSpec("conv64"), ProtonetSpec(k_shot=3, q_query=3, episodes=1)
        )
