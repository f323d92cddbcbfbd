"""Command-line entry point.

Verbs:
  run      one experiment from a flat key=value config file
  grid     ablation grid file (comma-separated values -> cartesian product)
  gen      write a synthetic dataset to disk
  inspect  dump a dataset summary or an episode manifest
"""

from __future__ import annotations

import argparse
import sys

from .data import SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .runner import (
    config_from_flat,
    expand_grid,
    parse_config_text,
    parse_value,
    report_csv,
    run_experiment,
    run_grid,
    serialize_report,
)
from .sampler import EpisodeConfig, episode_manifest, sample_episodes


def _load_flat(path: str, overrides: list[str]) -> dict:
    with open(path) as fh:
        flat = parse_config_text(fh.read())
    for item in overrides:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        flat[key.strip()] = parse_value(value)
    return flat


def cmd_run(args) -> int:
    flat = _load_flat(args.config, args.set)
    config = config_from_flat(flat)
    report = run_experiment(config)
    text = serialize_report(report)
    output = args.output or config.output
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    agg = report["aggregates"]
    print(
        f"{config.classifier}: acc {agg['accuracy']['mean']:.4f} "
        f"± {agg['accuracy']['ci95_halfwidth']:.4f}, "
        f"auroc {agg['auroc']['mean']:.4f} "
        f"± {agg['auroc']['ci95_halfwidth']:.4f}",
        file=sys.stderr,
    )
    return 0


def cmd_grid(args) -> int:
    flat = _load_flat(args.config, args.set)
    configs = [config_from_flat(f) for f in expand_grid(flat)]
    reports = run_grid(configs)
    table = report_csv(reports)
    if args.table:
        with open(args.table, "w") as fh:
            fh.write(table)
    else:
        print(table, end="")
    if args.reports:
        import json

        with open(args.reports, "w") as fh:
            json.dump(reports, fh, indent=2, sort_keys=True)
    return 0


def cmd_gen(args) -> int:
    spec = SyntheticSpec(
        n_classes=args.n_classes,
        dim=args.dim,
        groups_per_class=args.groups_per_class,
        class_center_norm=args.center_norm,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        records_per_group=args.records_per_group,
        within_group_sigma=args.within_group_sigma,
    )
    dataset = generate_synthetic(spec)
    save_dataset(dataset, args.output, args.format)
    print(f"wrote {len(dataset)} records (dim {dataset.dim}) to {args.output}")
    return 0


def cmd_inspect(args) -> int:
    dataset = load_dataset(args.dataset, args.format)
    if args.episodes:
        config = EpisodeConfig(
            n_way=args.n_way,
            k_shot=args.k_shot,
            q_query=args.q_query,
            aug_expand=args.aug_expand,
            seed=args.seed,
        )
        print(episode_manifest(sample_episodes(dataset, config, args.episodes)))
        return 0
    print(f"records: {len(dataset)}")
    print(f"dim: {dataset.dim}")
    print(f"classes: {len(dataset.class_index)}")
    for label, groups in dataset.class_index.items():
        n_records = sum(len(dataset.group_records(g)) for g in groups)
        print(f"  class {label}: {len(groups)} groups, {n_records} records")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fewshot-eval")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("config", help="flat key=value config file")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_run.add_argument("--output", help="report path (overrides config)")
    p_run.set_defaults(func=cmd_run)

    p_grid = sub.add_parser("grid", help="run an ablation grid")
    p_grid.add_argument("config", help="grid file (values may be comma lists)")
    p_grid.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_grid.add_argument("--table", help="write the aggregate CSV table here")
    p_grid.add_argument("--reports", help="write all JSON reports here")
    p_grid.set_defaults(func=cmd_grid)

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset")
    p_gen.add_argument("output")
    p_gen.add_argument("--format", choices=["binary", "csv"], default="binary")
    p_gen.add_argument("--n-classes", type=int, default=5)
    p_gen.add_argument("--dim", type=int, default=16)
    p_gen.add_argument("--groups-per-class", type=int, default=20)
    p_gen.add_argument("--center-norm", type=float, default=1.0)
    p_gen.add_argument("--noise-sigma", type=float, default=0.1)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--records-per-group", type=int, default=1)
    p_gen.add_argument("--within-group-sigma", type=float, default=0.0)
    p_gen.set_defaults(func=cmd_gen)

    p_ins = sub.add_parser("inspect", help="dataset summary or episode manifest")
    p_ins.add_argument("dataset")
    p_ins.add_argument("--format", choices=["binary", "csv"], default="binary")
    p_ins.add_argument("--episodes", type=int, default=0, help="emit a manifest instead")
    p_ins.add_argument("--n-way", type=int, default=2)
    p_ins.add_argument("--k-shot", type=int, default=1)
    p_ins.add_argument("--q-query", type=int, default=15)
    p_ins.add_argument("--aug-expand", action="store_true")
    p_ins.add_argument("--seed", type=int, default=0)
    p_ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
