"""Macro-averaged accuracy and one-vs-rest macro AUROC, with aggregation
across episodes.

AUROC uses the rank-sum formulation with midranks for ties, so a tied
(positive, negative) pair counts one half. Both one-vs-rest columns are
computed and averaged even in the 2-way case: they coincide for
complementary-rank scores but not in general (tree and knn scores).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeResult:
    episode_index: int
    macro_accuracy: float
    macro_auroc: float
    per_class_accuracy: tuple[float, ...]
    n_correct: int
    n_total: int


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std_dev: float
    ci95_halfwidth: float
    episodes: int


def macro_accuracy(predictions, truth, n_way: int) -> tuple[float, np.ndarray]:
    """Unweighted mean of per-class recall."""
    pred = np.asarray(predictions)
    y = np.asarray(truth)
    if pred.shape != y.shape:
        raise MetricsError("predictions and truth length mismatch")
    per_class = np.empty(n_way)
    for c in range(n_way):
        mask = y == c
        if not mask.any():
            raise MetricsError(f"class {c} absent from truth")
        per_class[c] = np.mean(pred[mask] == c)
    return float(per_class.mean()), per_class


def binary_auroc(scores, positives) -> float:
    """Rank-sum AUROC with midranks: P(score_pos > score_neg) + 0.5 P(tie)."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positives, dtype=bool)
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("AUROC needs at least one positive and one negative")
    ranks = rankdata(s, method="average")
    rank_sum = ranks[pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def macro_auroc(scores, truth, n_way: int) -> float:
    """Mean over classes c of binary AUROC of score column c against the
    one-vs-rest indicator truth == c."""
    S = np.asarray(scores, dtype=np.float64)
    y = np.asarray(truth)
    if S.shape != (len(y), n_way):
        raise MetricsError(f"score matrix shape {S.shape} != ({len(y)}, {n_way})")
    aucs = [binary_auroc(S[:, c], y == c) for c in range(n_way)]
    return float(np.mean(aucs))


def score_episode(
    episode_index: int, scores, truth, n_way: int
) -> EpisodeResult:
    pred = np.argmax(np.asarray(scores), axis=1)
    acc, per_class = macro_accuracy(pred, truth, n_way)
    auroc = macro_auroc(scores, truth, n_way)
    return EpisodeResult(
        episode_index=episode_index,
        macro_accuracy=acc,
        macro_auroc=auroc,
        per_class_accuracy=tuple(float(v) for v in per_class),
        n_correct=int(np.sum(pred == np.asarray(truth))),
        n_total=len(pred),
    )


def _aggregate_values(values: np.ndarray) -> Aggregate:
    n = len(values)
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if n > 1 else 0.0
    return Aggregate(
        mean=mean,
        std_dev=std,
        ci95_halfwidth=1.96 * std / np.sqrt(n),
        episodes=n,
    )


def aggregate(results: list[EpisodeResult]) -> tuple[Aggregate, Aggregate]:
    """(accuracy aggregate, AUROC aggregate) with (n-1)-denominator std."""
    if not results:
        raise MetricsError("cannot aggregate an empty result list")
    accs = np.array([r.macro_accuracy for r in results])
    aucs = np.array([r.macro_auroc for r in results])
    return _aggregate_values(accs), _aggregate_values(aucs)
