"""Lifetime A/B with batteries small enough that nodes actually die inside the run.

Under the default 10-60 J draw nobody exhausts in 300 s, so lifetime is censored
at the run end for both protocols. Shrinking the initial energy makes the
lifetime metric informative.

    python scripts/stressed_lifetime.py --low 0.1 --high 0.6 --seeds 10 --jobs 4
"""

import argparse
import statistics
from concurrent.futures import ProcessPoolExecutor

from aomrlm.protocol import AOMDV, AOMR_LM
from aomrlm.scenario import Scenario
from aomrlm.simulation import simulate


def one(args):
    scenario, seed, protocol = args
    return seed, protocol, simulate(scenario, scenario.node_counts[0], seed, protocol).summary


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=50)
    parser.add_argument("--low", type=float, default=0.1)
    parser.add_argument("--high", type=float, default=0.6)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--duration", type=float, default=300.0)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    scenario = Scenario(node_count=args.nodes, energy_init=[args.low, args.high],
                        duration=args.duration, seeds=args.seeds).validate()
    work = [(scenario, s, p) for s in scenario.seed_list for p in (AOMR_LM, AOMDV)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(one, work))
    else:
        results = [one(w) for w in work]
    by = {(s, p): summ for s, p, summ in results}

    print(f"{'seed':>4}  {'aomr-lm':>9}  {'aomdv':>9}  (lifetime s, * = censored)")
    wins = 0
    for s in scenario.seed_list:
        a, b = by[(s, AOMR_LM)], by[(s, AOMDV)]
        wins += a.lifetime >= b.lifetime
        mark = lambda x: f"{x.lifetime:8.1f}{'*' if x.censored else ' '}"
        print(f"{s:>4}  {mark(a)}  {mark(b)}")
    for name, getter in (("energy J", lambda x: x.mean_energy), ("delivery", lambda x: x.delivery_ratio)):
        print(f"mean {name}: aomr-lm {statistics.fmean(getter(by[(s, AOMR_LM)]) for s in scenario.seed_list):.4f}"
              f"  aomdv {statistics.fmean(getter(by[(s, AOMDV)]) for s in scenario.seed_list):.4f}")
    print(f"aomr-lm lifetime >= aomdv in {wins}/{len(scenario.seed_list)} seeds")


if __name__ == "__main__":
    main()
