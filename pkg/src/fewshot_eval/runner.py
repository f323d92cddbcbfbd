"""Experiment orchestration: config parsing, the episode loop, report
emission.

Config files are flat ``key = value`` documents ('#' starts a comment).
Values are parsed as JSON scalars where possible, bare strings otherwise.
In grid files a value may be a comma-separated list; the grid is the
cartesian product over all listed keys. Reports echo the full resolved
config (defaults included) so a run is auditable from its output alone.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .classifiers import (
    CLASSIFIER_KINDS,
    ClassifierError,
    KnnConfig,
    SolverConfig,
    TreeConfig,
    fit_classifier,
    predict_scores,
)
from .data import EmbeddingDataset, SyntheticSpec, generate_synthetic, load_dataset
from .metrics import EpisodeResult, aggregate, score_episode
from .preprocess import PreprocessConfig, apply_preprocess
from .sampler import EpisodeConfig, sample_episode

REPORT_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    """A module error wrapped with the failing episode index."""


@dataclass(frozen=True)
class ExperimentConfig:
    # Exactly one data source: a dataset file or a synthetic spec.
    dataset_path: str | None = None
    dataset_format: str = "binary"
    synthetic: SyntheticSpec | None = None
    episode: EpisodeConfig = EpisodeConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    classifier: str = "prototype"
    solver: SolverConfig = SolverConfig()
    tree: TreeConfig = TreeConfig()
    knn: KnnConfig = KnnConfig()
    episodes: int = 600
    output: str | None = None
    report_format: str = "json"

    def __post_init__(self):
        if (self.dataset_path is None) == (self.synthetic is None):
            raise ConfigError("exactly one of dataset_path and synthetic required")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.classifier not in CLASSIFIER_KINDS:
            raise ConfigError(f"unknown classifier {self.classifier!r}")
        if self.report_format not in ("json", "csv"):
            raise ConfigError(f"unknown report format {self.report_format!r}")


def resolve_dataset(config: ExperimentConfig) -> EmbeddingDataset:
    if config.synthetic is not None:
        return generate_synthetic(config.synthetic)
    return load_dataset(config.dataset_path, config.dataset_format)


def _episode_arrays(episode):
    sup_X = np.stack([r.vector for r in episode.support])
    sup_y = np.array([episode.local_label(r) for r in episode.support])
    sup_ids = np.array([r.record_id for r in episode.support])
    qry_X = np.stack([r.vector for r in episode.query])
    qry_y = np.array([episode.local_label(r) for r in episode.query])
    return sup_X, sup_y, sup_ids, qry_X, qry_y


def run_episode(dataset, config: ExperimentConfig, index: int) -> EpisodeResult:
    episode = sample_episode(dataset, config.episode, index)
    episode = apply_preprocess(episode, config.preprocess)
    sup_X, sup_y, sup_ids, qry_X, qry_y = _episode_arrays(episode)
    model = fit_classifier(
        config.classifier,
        sup_X,
        sup_y,
        sup_ids,
        config.episode.n_way,
        solver=config.solver,
        tree=config.tree,
        knn=config.knn,
    )
    scores = predict_scores(model, qry_X)
    return score_episode(index, scores, qry_y, config.episode.n_way)


def run_experiment(config: ExperimentConfig, dataset: EmbeddingDataset | None = None) -> dict:
    """Episode loop: sample -> preprocess -> fit -> score -> metrics.

    Returns the report as a JSON-ready dict. Deterministic given the config
    (the wall_clock_seconds field aside).
    """
    start = time.monotonic()
    if dataset is None:
        dataset = resolve_dataset(config)
    results = []
    for i in range(config.episodes):
        try:
            results.append(run_episode(dataset, config, i))
        except (ValueError, ClassifierError) as exc:
            raise ExperimentError(f"episode {i}: {exc}") from exc
    acc_agg, auc_agg = aggregate(results)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "engine_version": __version__,
        "config": config_to_flat(config),
        "auroc_definition": "per-episode-averaged",
        "episodes": [
            {
                "episode_index": r.episode_index,
                "macro_accuracy": r.macro_accuracy,
                "macro_auroc": r.macro_auroc,
                "per_class_accuracy": list(r.per_class_accuracy),
                "n_correct": r.n_correct,
                "n_total": r.n_total,
            }
            for r in results
        ],
        "aggregates": {
            "accuracy": _agg_dict(acc_agg),
            "auroc": _agg_dict(auc_agg),
        },
        "wall_clock_seconds": time.monotonic() - start,
    }


def _agg_dict(agg):
    return {
        "mean": agg.mean,
        "std_dev": agg.std_dev,
        "ci95_halfwidth": agg.ci95_halfwidth,
        "episodes": agg.episodes,
    }


def run_grid(configs: list[ExperimentConfig]) -> list[dict]:
    """Independent runs in stable input order. Datasets are cached across
    configs sharing a source, so grids over one pool stay cheap."""
    cache: dict = {}
    reports = []
    for cfg in configs:
        key = (cfg.dataset_path, cfg.dataset_format, cfg.synthetic)
        if key not in cache:
            cache[key] = resolve_dataset(cfg)
        reports.append(run_experiment(cfg, dataset=cache[key]))
    return reports


def serialize_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def report_csv_rows(reports: list[dict]) -> list[dict]:
    """Flattened aggregate table: one row per config, (k-shot x metric)
    columns, mirroring the ablation-grid layout."""
    groups: dict[tuple, dict] = {}
    shots = sorted({r["config"]["episode.k_shot"] for r in reports})
    for rep in reports:
        cfg = rep["config"]
        key = tuple(
            (k, json.dumps(v)) for k, v in sorted(cfg.items()) if k != "episode.k_shot"
        )
        row = groups.setdefault(
            key,
            {
                "classifier": cfg["classifier"],
                "l2_normalize": cfg["preprocess.l2_normalize"],
                "aug_expand": cfg["episode.aug_expand"],
            },
        )
        k = cfg["episode.k_shot"]
        row[f"acc_{k}shot"] = rep["aggregates"]["accuracy"]["mean"]
        row[f"auroc_{k}shot"] = rep["aggregates"]["auroc"]["mean"]
    cols = ["classifier", "l2_normalize", "aug_expand"]
    for k in shots:
        cols += [f"acc_{k}shot", f"auroc_{k}shot"]
    return [{c: row.get(c, "") for c in cols} for row in groups.values()]


def report_csv(reports: list[dict]) -> str:
    rows = report_csv_rows(reports)
    if not rows:
        return ""
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Flat key=value config documents
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "dataset.path": None,
    "dataset.format": "binary",
    "synthetic.n_classes": None,
    "synthetic.dim": 16,
    "synthetic.groups_per_class": 20,
    "synthetic.class_center_norm": 1.0,
    "synthetic.noise_sigma": 0.1,
    "synthetic.seed": 0,
    "synthetic.records_per_group": 1,
    "synthetic.within_group_sigma": 0.0,
    "episode.n_way": 2,
    "episode.k_shot": 1,
    "episode.q_query": 15,
    "episode.aug_expand": False,
    "episode.seed": 0,
    "preprocess.l2_normalize": False,
    "preprocess.epsilon": 1e-12,
    "classifier": "prototype",
    "solver.l2_strength": -1.0,
    "solver.max_iters": 500,
    "solver.tolerance": 1e-8,
    "solver.learning_rate": 1.0,
    "tree.max_depth": None,
    "tree.min_split": 2,
    "knn.k": 1,
    "episodes": 600,
    "output": None,
    "report_format": "json",
}


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config_text(text: str) -> dict:
    """Flat key = value lines; '#' comments; later keys override earlier."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = parse_value(value)
    return out


def config_from_flat(flat: dict) -> ExperimentConfig:
    unknown = set(flat) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kv = dict(_DEFAULTS)
    kv.update(flat)

    synthetic = None
    if kv["synthetic.n_classes"] is not None:
        synthetic = SyntheticSpec(
            n_classes=int(kv["synthetic.n_classes"]),
            dim=int(kv["synthetic.dim"]),
            groups_per_class=int(kv["synthetic.groups_per_class"]),
            class_center_norm=float(kv["synthetic.class_center_norm"]),
            noise_sigma=float(kv["synthetic.noise_sigma"]),
            seed=int(kv["synthetic.seed"]),
            records_per_group=int(kv["synthetic.records_per_group"]),
            within_group_sigma=float(kv["synthetic.within_group_sigma"]),
        )
    return ExperimentConfig(
        dataset_path=kv["dataset.path"],
        dataset_format=kv["dataset.format"],
        synthetic=synthetic,
        episode=EpisodeConfig(
            n_way=int(kv["episode.n_way"]),
            k_shot=int(kv["episode.k_shot"]),
            q_query=int(kv["episode.q_query"]),
            aug_expand=bool(kv["episode.aug_expand"]),
            seed=int(kv["episode.seed"]),
        ),
        preprocess=PreprocessConfig(
            l2_normalize=bool(kv["preprocess.l2_normalize"]),
            epsilon=float(kv["preprocess.epsilon"]),
        ),
        classifier=kv["classifier"],
        solver=SolverConfig(
            l2_strength=float(kv["solver.l2_strength"]),
            max_iters=int(kv["solver.max_iters"]),
            tolerance=float(kv["solver.tolerance"]),
            learning_rate=float(kv["solver.learning_rate"]),
        ),
        tree=TreeConfig(
            max_depth=None if kv["tree.max_depth"] is None else int(kv["tree.max_depth"]),
            min_split=int(kv["tree.min_split"]),
        ),
        knn=KnnConfig(k=int(kv["knn.k"])),
        episodes=int(kv["episodes"]),
        output=kv["output"],
        report_format=kv["report_format"],
    )


def config_to_flat(config: ExperimentConfig) -> dict:
    """Full resolved config, defaults included (the report's config echo)."""
    syn = config.synthetic
    return {
        "dataset.path": config.dataset_path,
        "dataset.format": config.dataset_format,
        "synthetic.n_classes": None if syn is None else syn.n_classes,
        "synthetic.dim": None if syn is None else syn.dim,
        "synthetic.groups_per_class": None if syn is None else syn.groups_per_class,
        "synthetic.class_center_norm": None if syn is None else syn.class_center_norm,
        "synthetic.noise_sigma": None if syn is None else syn.noise_sigma,
        "synthetic.seed": None if syn is None else syn.seed,
        "synthetic.records_per_group": None if syn is None else syn.records_per_group,
        "synthetic.within_group_sigma": None if syn is None else syn.within_group_sigma,
        "episode.n_way": config.episode.n_way,
        "episode.k_shot": config.episode.k_shot,
        "episode.q_query": config.episode.q_query,
        "episode.aug_expand": config.episode.aug_expand,
        "episode.seed": config.episode.seed,
        "preprocess.l2_normalize": config.preprocess.l2_normalize,
        "preprocess.epsilon": config.preprocess.epsilon,
        "classifier": config.classifier,
        "solver.l2_strength": config.solver.l2_strength,
        "solver.max_iters": config.solver.max_iters,
        "solver.tolerance": config.solver.tolerance,
        "solver.learning_rate": config.solver.learning_rate,
        "tree.max_depth": config.tree.max_depth,
        "tree.min_split": config.tree.min_split,
        "knn.k": config.knn.k,
        "episodes": config.episodes,
        "output": config.output,
        "report_format": config.report_format,
    }


def expand_grid(flat: dict) -> list[dict]:
    """Cartesian product over keys whose value is a comma-separated list."""
    fixed = {}
    varied = []
    for key, value in flat.items():
        if isinstance(value, str) and "," in value:
            varied.append((key, [parse_value(v) for v in value.split(",")]))
        elif isinstance(value, list):
            varied.append((key, value))
        else:
            fixed[key] = value
    if not varied:
        return [dict(fixed)]
    keys = [k for k, _ in varied]
    combos = itertools.product(*(vals for _, vals in varied))
    out = []
    for combo in combos:
        d = dict(fixed)
        d.update(zip(keys, combo))
        out.append(d)
    return out
