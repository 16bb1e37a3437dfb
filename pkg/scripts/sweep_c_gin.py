"""Optimal thresholds under several general-in blocking bounds.

For each C_gin, sweeps rho_e at (rho_e, 0.5, 0.8) and rho_gin at
(0.45, rho_gin, 0.8); one CSV per (bound, swept class).
"""

import argparse
from dataclasses import replace
from pathlib import Path

from voipcac.config import default_scenario
from voipcac.packet import DropCache
from voipcac.sweep import SweepSpec, run_sweep, sweep_columns, to_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bounds", type=float, nargs="+", default=[0.3, 0.5, 0.8])
    ap.add_argument("--values", type=float, nargs="+", default=[round(0.05 * k, 2) for k in range(1, 21)])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    cache = DropCache()
    base = default_scenario(0.45, 0.5, 0.8)
    for bound in args.bounds:
        sc = replace(base, qos=replace(base.qos, blocking_bound_gin=bound))
        for param in ("rho_e", "rho_gin"):
            spec = SweepSpec(param, tuple(args.values), sc)
            rows = run_sweep(spec, jobs=args.jobs, drop_cache=cache)
            path = args.out / f"c_gin_{bound:g}_{param}.csv"
            path.write_text(to_csv(rows, sweep_columns(spec)))
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
