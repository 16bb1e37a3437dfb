"""Blocking and avg drop along one threshold with the other held at its optimum.

Defaults reproduce the two slices through (15, 11) at (0.45, 0.5, 0.8):
t_gin varied with t_gout = 11 and t_gout varied with t_gin = 15.
"""

import argparse
from pathlib import Path

from voipcac.config import default_scenario
from voipcac.packet import DropCache
from voipcac.sweep import SweepSpec, run_sweep, sweep_columns, to_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, nargs=3, default=[0.45, 0.5, 0.8])
    ap.add_argument("--t-gin", type=int, default=15)
    ap.add_argument("--t-gout", type=int, default=11)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    sc = default_scenario(*args.rho)
    args.out.mkdir(parents=True, exist_ok=True)
    cache = DropCache()
    slices = {
        "t_gin": (tuple(range(args.t_gout, sc.N + 1)), args.t_gout),
        "t_gout": (tuple(range(0, args.t_gin + 1)), args.t_gin),
    }
    for param, (values, fixed) in slices.items():
        spec = SweepSpec(param, values, sc, fixed_threshold=fixed)
        path = args.out / f"slice_{param}.csv"
        path.write_text(to_csv(run_sweep(spec, drop_cache=cache), sweep_columns(spec)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
