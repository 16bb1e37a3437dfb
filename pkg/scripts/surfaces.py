"""Avg drop over every threshold pair at low, medium and high emergency load."""

import argparse
from pathlib import Path

from voipcac.config import default_scenario
from voipcac.packet import DropCache
from voipcac.sweep import SURFACE_COLUMNS, emit_threshold_surface, to_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho-e", type=float, nargs="+", default=[0.05, 0.45, 0.95])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    cache = DropCache()
    for rho_e in args.rho_e:
        rows = emit_threshold_surface(default_scenario(rho_e, 0.5, 0.8), cache, jobs=args.jobs)
        path = args.out / f"surface_rho_e_{rho_e:g}.csv"
        path.write_text(to_csv(rows, SURFACE_COLUMNS))
        below = sum(r["below_drop_bound"] for r in rows)
        print(f"wrote {path}: {below}/{len(rows)} pairs below the drop bound")


if __name__ == "__main__":
    main()
