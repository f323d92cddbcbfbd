"""Episodic few-shot evaluation engine for labeled embedding vectors."""

__version__ = "0.1.0"

from .data import (  # noqa: F401
    EmbeddingDataset,
    EmbeddingRecord,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from .sampler import Episode, EpisodeConfig, sample_episode, sample_episodes  # noqa: F401
from .preprocess import PreprocessConfig, apply_preprocess, l2_normalize  # noqa: F401
from .classifiers import (  # noqa: F401
    KnnConfig,
    SolverConfig,
    TreeConfig,
    fit_classifier,
    predict_scores,
)
from .metrics import aggregate, macro_accuracy, macro_auroc  # noqa: F401
from .runner import ExperimentConfig, run_experiment, run_grid  # noqa: F401
