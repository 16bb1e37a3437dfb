"""Optimal thresholds, blocking and avg drop while one traffic intensity varies.

Writes one CSV per swept class, with both conventional baselines alongside the
proposed optimum:

    python3 scripts/sweep_intensity.py --param rho_e --out results/
    python3 scripts/sweep_intensity.py --param rho_gout --base 0.3 0.5 0.8
"""

import argparse
from pathlib import Path

from voipcac.config import default_scenario
from voipcac.packet import DropCache
from voipcac.sweep import SweepSpec, run_sweep, sweep_columns, to_csv

BASES = {"rho_e": (0.45, 0.5, 0.8), "rho_gin": (0.45, 0.5, 0.8), "rho_gout": (0.3, 0.5, 0.8)}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--param", choices=sorted(BASES), default="rho_e")
    ap.add_argument("--base", type=float, nargs=3, metavar=("RHO_E", "RHO_GIN", "RHO_GOUT"),
                    help="intensities of the classes held fixed")
    ap.add_argument("--values", type=float, nargs="+", default=[round(0.05 * k, 2) for k in range(1, 21)])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    base = default_scenario(*(args.base or BASES[args.param]))
    args.out.mkdir(parents=True, exist_ok=True)
    cache = DropCache()
    for baseline in ("no-drop-constraint", "fixed-open"):
        spec = SweepSpec(args.param, tuple(args.values), base, baseline=baseline)
        rows = run_sweep(spec, jobs=args.jobs, drop_cache=cache)
        path = args.out / f"sweep_{args.param}_{baseline}.csv"
        path.write_text(to_csv(rows, sweep_columns(spec)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
