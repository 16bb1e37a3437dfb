"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS / WARN / FAIL line; the lines are printed as
they happen and again in the pytest terminal summary.  Run on its own with
``python3 tests/test_acceptance.py``.
"""

import contextlib
import itertools
import json
import subprocess
import sys
import time

import numpy as np
import pytest

import conftest
from conftest import erlang_b, mm1k_loss, single_class
from voipcac.calllevel import ThresholdPair, enumerate_states, envelope_states, solve_call_level
from voipcac.config import CapacityParams, default_scenario
from voipcac.optimizer import evaluate_all, optimize
from voipcac.packet import SuperposedMmpp, fit_two_phase_mmpp, solve_mmpp_m1k, source_stats
from voipcac.simulator import SimulationConfig, compare_to_theory, run_simulation
from voipcac.sweep import SweepSpec, run_sweep

RHO_E_SWEEP = tuple(round(0.05 * k, 2) for k in range(1, 21))
RHO_GOUT_SWEEP = RHO_E_SWEEP
DROP_BOUND = 0.0025
CONVENTIONAL_DROP_FLOOR = 0.0035


def _record(line: str) -> None:
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)


class _Outcome:
    def __init__(self):
        self.warnings: list[str] = []
        # work done in fixtures is timed there and reported here
        self.elapsed: float | None = None

    def warn(self, message: str) -> None:
        self.warnings.append(message)


@contextlib.contextmanager
def criterion(number: int, title: str, budget: float | None = None):
    """Record PASS/WARN/FAIL for the enclosed checks."""
    outcome = _Outcome()
    start = time.perf_counter()
    try:
        yield outcome
        if outcome.elapsed is None:
            outcome.elapsed = time.perf_counter() - start
        if budget is not None:
            assert outcome.elapsed < budget, f"took {outcome.elapsed:.1f} s, budget {budget:.0f} s"
    except AssertionError as exc:
        _record(f"FAIL  criterion {number}: {title} ({exc})")
        raise
    status = "WARN" if outcome.warnings else "PASS"
    detail = "; ".join(outcome.warnings + [f"{outcome.elapsed:.1f} s"])
    _record(f"{status}  criterion {number}: {title} ({detail})")


def test_criterion_1_erlang_b():
    with criterion(1, "single class with t=(N,N) equals Erlang B to 1e-8", budget=10):
        worst = 0.0
        for N in range(1, 21):
            for a in (0.5, 1.0, 5.0, 20.0):
                got = solve_call_level(single_class(N, a), ThresholdPair(N, N)).blocking.L_b_e
                worst = max(worst, abs(got - erlang_b(N, a)))
        assert worst <= 1e-8, f"max error {worst:.2e}"


def test_criterion_2_mm1k():
    with criterion(2, "equal-rate MMPP queue equals M/M/1/K loss to 1e-9", budget=5):
        mu = 1.0
        Q = np.array([[-0.7, 0.7], [0.3, -0.3]])
        worst = 0.0
        for K in (1, 2, 5, 10, 50):
            for rho in (0.5, 1.0, 2.0):
                mm = SuperposedMmpp(Q, np.full(2, rho * mu), ((0,), (1,)))
                got = solve_mmpp_m1k(mm, mu, K).drop_probability
                worst = max(worst, abs(got - mm1k_loss(rho, K)))
        assert worst <= 1e-9, f"max error {worst:.2e}"


def test_criterion_3_fitting_identities():
    with criterion(3, "source statistics and mean-rate preservation of the fit"):
        s = source_stats(default_scenario().packet)
        # interarrival = T + Bernoulli(alpha*T) * Exp(beta); moments by hand
        alpha, beta, T = 1 / 0.352, 1 / 0.650, 0.016
        p = alpha * T
        mean = T + p / beta
        var = 2 * p / beta**2 - (p / beta) ** 2
        m3 = 6 * p / beta**3 - 3 * (p / beta) * (2 * p / beta**2) + 2 * (p / beta) ** 3
        hand = (1 / mean, var / mean**2, m3 / var**1.5)
        for got, ref, quoted in zip((s.lambda_p, s.c2a, s.sk), hand, (21.96, 18.10, 9.84)):
            assert abs(got - ref) <= 0.01 * ref
            assert abs(got - quoted) <= 0.01 * quoted
        for n in range(1, 21):
            m = fit_two_phase_mmpp(s, n)
            assert abs(m.mean_rate - n * s.lambda_p) <= 1e-6 * n * s.lambda_p, n
        lam1 = fit_two_phase_mmpp(s, 1).lambda1
        assert abs(lam1) < 1e-9, f"lambda1(n=1) = {lam1}"


@pytest.fixture(scope="module")
def headline_result(drop_cache):
    start = time.perf_counter()
    res = optimize(default_scenario(0.45, 0.5, 0.8), drop_cache)
    return res, time.perf_counter() - start


def test_criterion_4_headline(headline_result):
    with criterion(4, "optimum (15, 11) at (0.45, 0.5, 0.8) with avg_drop <= 0.0025", budget=300) as out:
        res, out.elapsed = headline_result
        assert not res.fallback_used, "no feasible threshold pair"
        t = res.optimal
        off = max(abs(t.t_gin - 15), abs(t.t_gout - 11))
        assert off <= 1, f"optimum {t.t_gin, t.t_gout} is more than 1 away from (15, 11)"
        assert res.optimal_evaluation.avg_drop <= DROP_BOUND
        if off == 1:
            out.warn(f"optimum ({t.t_gin}, {t.t_gout}) is within +-1 of (15, 11); "
                         f"avg_drop={res.optimal_evaluation.avg_drop:.6f}")


@pytest.fixture(scope="module")
def rho_e_rows(drop_cache):
    spec = SweepSpec("rho_e", RHO_E_SWEEP, default_scenario(0.45, 0.5, 0.8), baseline="no-drop-constraint")
    fixed = SweepSpec("rho_e", RHO_E_SWEEP, default_scenario(0.45, 0.5, 0.8), baseline="fixed-open")
    start = time.perf_counter()
    rows = run_sweep(spec, drop_cache=drop_cache), run_sweep(fixed, drop_cache=drop_cache)
    return rows, time.perf_counter() - start


@pytest.fixture(scope="module")
def rho_gout_rows(drop_cache):
    spec = SweepSpec("rho_gout", RHO_GOUT_SWEEP, default_scenario(0.3, 0.5, 0.8))
    start = time.perf_counter()
    rows = run_sweep(spec, drop_cache=drop_cache)
    return rows, time.perf_counter() - start


def test_criterion_5_trends(rho_e_rows, rho_gout_rows):
    with criterion(5, "rho_e sweep drop/blocking trends and rho_gout optima") as out:
        (rows, fixed_rows), t_e = rho_e_rows
        rho_gout_rows, t_gout = rho_gout_rows
        out.elapsed = t_e + t_gout
        assert all(r["error"] == "" for r in rows + fixed_rows + rho_gout_rows)
        for r, f in zip(rows, fixed_rows):
            v = r["value"]
            if not r["fallback_used"]:
                assert r["avg_drop"] <= DROP_BOUND, f"proposed avg_drop {r['avg_drop']:.5f} at rho_e={v}"
            # conventional method re-optimized without the drop constraint
            if not r["baseline_fallback_used"]:
                assert r["baseline_avg_drop"] >= CONVENTIONAL_DROP_FLOOR, f"baseline avg_drop at rho_e={v}"
                assert r["L_b_e"] < r["baseline_L_b_e"], f"L_b_e not below baseline at rho_e={v}"
            # conventional method with every session admitted up to N
            assert f["baseline_avg_drop"] >= CONVENTIONAL_DROP_FLOOR, f"fixed-open avg_drop at rho_e={v}"
            assert f["L_b_e"] < f["baseline_L_b_e"], f"L_b_e not below fixed-open at rho_e={v}"
        assert not any(r["fallback_used"] for r in rho_gout_rows), "rho_gout sweep fell back"
        # neither method admits general calls once both fall back; report it
        both = [r["value"] for r in rows if r["fallback_used"] and r["baseline_fallback_used"]]
        if both:
            out.warn(f"re-optimized baseline also has no feasible pair at rho_e in "
                         f"{both[0]}..{both[-1]}; trend checked there against fixed-open only")


@pytest.fixture(scope="module")
def concordance():
    t = ThresholdPair(15, 11)
    out = []
    start = time.perf_counter()
    for rho_e in (0.45, 0.75, 1.0):
        sc = default_scenario(rho_e, 0.5, 0.8)
        theory = solve_call_level(sc, t).blocking
        rep = run_simulation(SimulationConfig(sc, t, arrivals=1_000_000, replications=10, seed=42))
        out.append((rho_e, compare_to_theory(rep, theory)))
    return out, time.perf_counter() - start


def test_criterion_6_simulation(concordance):
    with criterion(6, "simulation brackets theory at rho_e in {0.45, 0.75, 1.0}, t=(15, 11)", budget=120) as out:
        results, out.elapsed = concordance
        for rho_e, cmp in results:
            for name, c in cmp.items():
                assert c.covered, f"{name} at rho_e={rho_e}: |err|={c.abs_error:.2e} > {c.half_width:.2e}"
                assert c.rel_error < 0.05, f"{name} at rho_e={rho_e}: rel err {c.rel_error:.3f}"


def test_criterion_7_structure(drop_cache):
    with criterion(7, "state-space closure, blocking and drop monotonicity, solver accuracy"):
        for N in range(0, 7):
            for g in range(N + 1):
                for o in range(g + 1):
                    t = ThresholdPair(g, o)
                    assert enumerate_states(N, t).states == envelope_states(N, t).states, (N, g, o)
        base = default_scenario()
        from dataclasses import replace
        sc10 = replace(base, capacity=CapacityParams(max_sessions=10)).with_intensities(0.45, 0.5, 0.8)
        for g in range(11):
            for o in range(g + 1):
                sol = solve_call_level(sc10, ThresholdPair(g, o))
                b = sol.blocking
                assert b.L_b_e <= b.L_b_gin <= b.L_b_gout, (g, o)
                pi = sol.distribution.probabilities
                assert pi.min() >= 0 and abs(pi.sum() - 1) <= 1e-9
                assert sol.distribution.residual <= 1e-10
        for g in range(21):
            for o in range(g + 1):
                d = solve_call_level(base, ThresholdPair(g, o)).distribution
                assert d.probabilities.min() >= 0 and abs(d.probabilities.sum() - 1) <= 1e-9
                assert d.residual <= 1e-10
        for n in itertools.product(range(21), repeat=3):
            if sum(n) >= 20:
                continue
            here = drop_cache.get(n, base)
            for c in range(3):
                up = list(n)
                up[c] += 1
                assert drop_cache.get(up, base) >= here, (n, c)


def _cli(*args: str) -> bytes:
    return subprocess.run([sys.executable, "-m", "voipcac", *args], check=True, capture_output=True).stdout


def test_criterion_8_determinism():
    with criterion(8, "optimize and simulate --seed 42 are byte-identical across runs"):
        assert _cli("optimize") == _cli("optimize")
        sim = ("simulate", "--tgin", "15", "--tgout", "11", "--seed", "42")
        first = _cli(*sim)
        assert first == _cli(*sim)
        assert json.loads(first)["seed"] == 42


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
