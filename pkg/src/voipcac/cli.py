"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .calllevel import ThresholdPair, build_generator, format_generator, solve_call_level
from .config import ConfigError, default_scenario, dumps_scenario, load_scenario, traffic_intensities
from .markov import SteadyStateError
from .optimizer import average_drop, baseline_from_evaluations, evaluate_all, result_from_evaluations
from .packet import DropCache, MmppFitError, combination_mmpp, drop_probability_for_combination
from .simulator import SimulationConfig, compare_to_theory, run_simulation
from .sweep import (
    EVALUATION_COLUMNS,
    SURFACE_COLUMNS,
    SweepSpec,
    emit_threshold_surface,
    run_sweep,
    sweep_columns,
    to_csv,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _scenario(args):
    return load_scenario(args.scenario) if args.scenario else default_scenario()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def parse_values(text: str) -> list[float]:
    """``a,b,c`` or an inclusive range ``start:stop:step``."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("range step must be > 0")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_validate(args) -> int:
    sc = _scenario(args)
    doc = json.loads(dumps_scenario(sc))
    doc["derived"] = {
        "traffic_intensities": list(traffic_intensities(sc)),
        "packet_service_rate": sc.packet_service_rate,
    }
    _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_solve_call(args) -> int:
    sc = _scenario(args)
    t = ThresholdPair(args.tgin, args.tgout)
    sol = solve_call_level(sc, t, formula=args.blocking_formula)
    if args.dump_generator:
        Path(args.dump_generator).write_text(format_generator(build_generator(sol.space, sc, t)))
    cache = DropCache()
    avg = average_drop(sol.distribution, sol.space, cache.table(sol.space.states, sc))
    doc = {
        "thresholds": {"t_gin": t.t_gin, "t_gout": t.t_gout},
        "blocking_formula": args.blocking_formula,
        "n_states": len(sol.space),
        "residual": sol.distribution.residual,
        "L_b_e": sol.blocking.L_b_e,
        "L_b_gin": sol.blocking.L_b_gin,
        "L_b_gout": sol.blocking.L_b_gout,
        "avg_drop": avg,
        "occupancy_distribution": sol.distribution.occupancy_marginal().tolist(),
    }
    _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_packet_drop(args) -> int:
    sc = _scenario(args)
    n_a = (args.ne, args.ngin, args.ngout)
    mmpp = combination_mmpp(n_a, sc)
    doc = {
        "n_a": list(n_a),
        "L_d": drop_probability_for_combination(n_a, sc),
        "phase_labels": [list(p) for p in mmpp.phase_labels] if mmpp else [],
        "phase_classes": list(mmpp.classes) if mmpp else [],
        "phase_rates": mmpp.arrival_rates.tolist() if mmpp else [],
    }
    _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    sc = _scenario(args)
    evaluations = evaluate_all(sc, DropCache(), args.blocking_formula, jobs=args.jobs)
    result = result_from_evaluations(evaluations)
    doc = result.to_dict()
    if args.baseline:
        base = baseline_from_evaluations(evaluations, sc, args.baseline)
        doc["baseline"] = {
            "mode": args.baseline,
            "fallback_used": base.fallback_used,
            **base.optimal_evaluation.to_dict(),
        }
    if args.csv:
        Path(args.csv).write_text(to_csv([e.to_dict() for e in evaluations], EVALUATION_COLUMNS))
    if args.format == "csv":
        _emit(to_csv([e.to_dict() for e in evaluations], EVALUATION_COLUMNS), args.out)
    else:
        _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_surface(args) -> int:
    sc = _scenario(args)
    rows = emit_threshold_surface(sc, formula=args.blocking_formula, jobs=args.jobs)
    if args.format == "json":
        _emit(_json(rows), args.out)
    else:
        _emit(to_csv(rows, SURFACE_COLUMNS), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    spec = SweepSpec(
        swept_parameter=args.param,
        values=tuple(parse_values(args.values)),
        base_scenario=sc,
        outputs=tuple(args.outputs.split(",")) if args.outputs else (),
        baseline=args.baseline,
        formula=args.blocking_formula,
        fixed_threshold=args.fixed_threshold,
    )
    rows = run_sweep(spec, jobs=args.jobs)
    cols = sweep_columns(spec)
    if args.format == "json":
        _emit(_json([{c: r.get(c) for c in cols} for r in rows]), args.out)
    else:
        _emit(to_csv(rows, cols), args.out)
    return EXIT_OK


def _sim_config(args, sc) -> SimulationConfig:
    return SimulationConfig(
        scenario=sc,
        thresholds=ThresholdPair(args.tgin, args.tgout),
        arrivals=None if args.horizon else args.arrivals,
        horizon=args.horizon,
        warmup=args.warmup,
        seed=args.seed,
        replications=args.reps,
    )


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    report = run_simulation(_sim_config(args, sc))
    if args.csv:
        rows = [
            {"replication": r, **{f"L_b_{c}": report.classes[c].per_replication[r] for c in ("e", "gin", "gout")}}
            for r in range(args.reps)
        ]
        Path(args.csv).write_text(to_csv(rows, ("replication", "L_b_e", "L_b_gin", "L_b_gout")))
    _emit(_json(report.to_dict()), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = _scenario(args)
    sim = _sim_config(args, sc)
    report = run_simulation(sim)
    theory_t = ThresholdPair(
        args.theory_tgin if args.theory_tgin is not None else args.tgin,
        args.theory_tgout if args.theory_tgout is not None else args.tgout,
    )
    theory = solve_call_level(sc, theory_t, formula=args.blocking_formula).blocking
    cmp = compare_to_theory(report, theory)
    doc = {
        "simulated_thresholds": {"t_gin": args.tgin, "t_gout": args.tgout},
        "theory_thresholds": {"t_gin": theory_t.t_gin, "t_gout": theory_t.t_gout},
        "classes": {k: vars(v) for k, v in cmp.items()},
        "all_covered": all(v.covered for v in cmp.values()),
    }
    _emit(_json(doc), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON (default: built-in defaults)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--blocking-formula", choices=("indicator", "level-sum"), default="indicator")
    common.add_argument("--baseline", choices=("no-drop-constraint", "fixed-open"), default=None)

    p = argparse.ArgumentParser(prog="voipcac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check a scenario file")

    s = sub.add_parser("solve-call", parents=[common], help="solve the call level for one threshold pair")
    s.add_argument("--tgin", type=int, required=True)
    s.add_argument("--tgout", type=int, required=True)
    s.add_argument("--dump-generator", metavar="PATH", help="write the generator as 'row col rate' lines")

    s = sub.add_parser("packet-drop", parents=[common], help="drop probability of one session combination")
    s.add_argument("--ne", type=int, required=True)
    s.add_argument("--ngin", type=int, required=True)
    s.add_argument("--ngout", type=int, required=True)

    s = sub.add_parser("optimize", parents=[common], help="full threshold search")
    s.add_argument("--csv", metavar="PATH", help="also write one row per evaluated threshold pair")

    sub.add_parser("surface", parents=[common], help="avg drop over all threshold pairs")

    s = sub.add_parser("sweep", parents=[common], help="optimize over a range of one parameter")
    s.add_argument("--param", required=True,
                   choices=("rho_e", "rho_gin", "rho_gout", "C_gin", "t_gin", "t_gout", "K"))
    s.add_argument("--values", required=True, help="comma list or start:stop:step")
    s.add_argument("--fixed-threshold", type=int, help="other threshold when sweeping t_gin/t_gout")
    s.add_argument("--outputs", help="comma list of columns to keep")

    for name in ("simulate", "compare"):
        s = sub.add_parser(name, parents=[common], help="call-level discrete-event simulation"
                           if name == "simulate" else "simulation against theory")
        s.add_argument("--tgin", type=int, required=True)
        s.add_argument("--tgout", type=int, required=True)
        s.add_argument("--arrivals", type=int, default=1_000_000)
        s.add_argument("--horizon", type=float, default=None, help="simulated seconds (overrides --arrivals)")
        s.add_argument("--warmup", type=float, default=0.1)
        s.add_argument("--reps", type=int, default=10)
        if name == "simulate":
            s.add_argument("--csv", metavar="PATH", help="per-replication estimates")
        else:
            s.add_argument("--theory-tgin", type=int, default=None)
            s.add_argument("--theory-tgout", type=int, default=None)
    return p


COMMANDS = {
    "validate": cmd_validate,
    "solve-call": cmd_solve_call,
    "packet-drop": cmd_packet_drop,
    "optimize": cmd_optimize,
    "surface": cmd_surface,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SteadyStateError, MmppFitError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
