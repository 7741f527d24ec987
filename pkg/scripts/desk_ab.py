"""Desk-scale A/B: 50 nodes, 10 seeds, both protocols, then a per-protocol digest.

    python scripts/desk_ab.py --out results/desk --jobs 4
"""

import argparse
import csv
from pathlib import Path

from aomrlm.experiment import run_experiment
from aomrlm.scenario import Scenario

DESK = Path(__file__).resolve().parent.parent / "scenarios" / "desk.json"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", type=Path, default=DESK)
    parser.add_argument("--out", type=Path, default=Path("results/desk"))
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    run_experiment(Scenario.load(args.scenario), args.out, jobs=args.jobs)
    with open(args.out / "aggregate.csv") as f:
        rows = list(csv.DictReader(f))
    for r in rows:
        print(f"{r['protocol']:>8} n={r['nodes']}: lifetime {float(r['lifetime_s_mean']):.1f} s "
              f"({r['censored_runs']}/{r['runs']} censored), energy {float(r['mean_energy_J_mean']):.4f} J, "
              f"delay {float(r['mean_delay_s_mean']) * 1e3:.2f} ms, delivery {float(r['delivery_ratio_mean']):.3f}")


if __name__ == "__main__":
    main()
