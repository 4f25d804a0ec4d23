#!/usr/bin/env python3

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse
import logging
from pathlib import Path

from app.core.config import settings
from app.services.bench import check_error_ordering, run_experiment
from app.services.config_service import load_experiment_config
from app.utils.csv_io import write_csv

CONFIG_DIR = Path(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))) / "configs"

# (better, worse, metric) pairs reported per model type
ORDERINGS = {
    "linear_msd": [("GMG-QM", "GMG-POD", "e_x_red"), ("GMG-POD", "SP1", "e_x_red")],
    "nonlinear_msd": [("GMG-QM", "GMG-POD", "e_x_red"), ("GMG-POD", "SP2", "e_y")],
}


def run_one(config_path: Path, out_root: Path, jobs: int) -> bool:
    """Run one reference config, write its tables and report the error orderings."""
    config = load_experiment_config(config_path)
    print(f"🔬 Running {config_path.name} ({config.model.type}, {len(config.rom.methods)} methods)...")

    result = run_experiment(config, jobs=jobs)
    out = out_root / config_path.stem
    write_csv(*result.error_table(), out / "errors.csv")
    write_csv(*result.energy_table(list(config.rom.methods)), out / "energy.csv")

    ok = True
    for row in result.rows:
        if row.failed:
            print(f"   ⚠️  {row.method} r={row.r} failed: {row.failure}")
    for better, worse, metric in ORDERINGS.get(config.model.type, []):
        if better not in config.rom.methods or worse not in config.rom.methods:
            continue
        violations = check_error_ordering(result.rows, better, worse, metric=metric)
        if violations:
            ok = False
            print(f"   ❌ {better} <= {worse} on {metric} violated:")
            for v in violations:
                print(f"      {v}")
        else:
            print(f"   ✅ {better} <= {worse} on {metric}")

    fom_max = float(result.energy["fom"].max())
    print(f"   max full-order energy balance error: {fom_max:.3e}")
    for method in config.rom.methods:
        series = result.energy.get(method)
        if series is not None:
            print(f"   max {method} (r={result.energy_r}) energy balance error: {float(series.max()):.3e}")
    return ok


def main():
    parser = argparse.ArgumentParser(description='Run the shipped reference experiments and check error orderings')
    parser.add_argument('--configs', nargs='*', default=None, help='Config files (default: all in configs/)')
    parser.add_argument('--out', default=settings.DEFAULT_OUTPUT_DIR, help='Output root directory')
    parser.add_argument('--jobs', type=int, default=settings.DEFAULT_JOBS, help='Parallel sweep cells')
    args = parser.parse_args()

    logging.basicConfig(level=settings.LOG_LEVEL, format=settings.LOG_FORMAT)
    paths = [Path(p) for p in args.configs] if args.configs else sorted(CONFIG_DIR.glob("*.json"))
    if not paths:
        print("❌ No config files found")
        return 1

    results = [run_one(p, Path(args.out), args.jobs) for p in paths]
    if all(results):
        print("✅ All orderings hold")
        return 0
    print("❌ Some orderings were violated")
    return 1


if __name__ == '__main__':
    sys.exit(main())
