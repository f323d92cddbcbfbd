#!/usr/bin/env python3
"""Run the classifier x L2-Norm x Aug x K ablation grid on a synthetic pool
and print the aggregate table.

Usage: python scripts/run_ablation.py [--episodes N] [--config FILE]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fewshot_eval.runner import (
    config_from_flat,
    expand_grid,
    parse_config_text,
    report_csv,
    run_grid,
)

DEFAULT_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "ablation_grid.cfg"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default=str(DEFAULT_CONFIG))
    parser.add_argument("--episodes", type=int, help="override episode count")
    parser.add_argument("--out", help="also write the table to this CSV file")
    args = parser.parse_args()

    flat = parse_config_text(Path(args.config).read_text())
    if args.episodes:
        flat["episodes"] = args.episodes
    configs = [config_from_flat(f) for f in expand_grid(flat)]
    print(f"running {len(configs)} experiments...", file=sys.stderr)
    table = report_csv(run_grid(configs))
    print(table, end="")
    if args.out:
        Path(args.out).write_text(table)


if __name__ == "__main__":
    main()
