"""Headline optimum and its avg drop for a range of packet buffer sizes K."""

import argparse
from dataclasses import replace

from voipcac.config import default_scenario
from voipcac.optimizer import conventional_baseline, optimize


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, nargs="+", default=[8, 9, 10, 11, 12, 15, 20])
    ap.add_argument("--rho", type=float, nargs=3, default=[0.45, 0.5, 0.8])
    args = ap.parse_args()

    base = default_scenario(*args.rho)
    print("K,t_gin,t_gout,avg_drop,fallback_used,baseline_t_gin,baseline_t_gout,baseline_avg_drop")
    for K in args.K:
        sc = replace(base, capacity=replace(base.capacity, queue_capacity=K))
        res = optimize(sc)
        ev = res.optimal_evaluation
        b = conventional_baseline(sc)
        print(f"{K},{ev.thresholds.t_gin},{ev.thresholds.t_gout},{ev.avg_drop:.6g},"
              f"{str(res.fallback_used).lower()},{b.thresholds.t_gin},{b.thresholds.t_gout},{b.avg_drop:.6g}")


if __name__ == "__main__":
    main()
