import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from voipcac.calllevel import (
    CallState,
    ThresholdPair,
    blocking_probabilities,
    build_generator,
    enumerate_states,
    envelope_states,
    format_generator,
    solve_call_level,
    solve_steady_state,
)
from voipcac.config import CapacityParams, ScenarioConfig, SessionTrafficParams, default_scenario
from voipcac.markov import SteadyStateError, solve_ctmc

from conftest import erlang_b, single_class


def small_scenario(N, lam=(0.02, 0.03, 0.04), mu=(0.01, 0.012, 0.015)):
    return ScenarioConfig(traffic=SessionTrafficParams(*lam, *mu), capacity=CapacityParams(max_sessions=N))


def dense_stationary(G):
    """Null vector of G^T by least squares with the normalization appended."""
    A = np.vstack([G.toarray().T, np.ones(G.shape[0])])
    b = np.zeros(G.shape[0] + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


class TestThresholdPair:
    def test_order_enforced(self):
        with pytest.raises(ValueError):
            ThresholdPair(2, 3)

    def test_negative(self):
        with pytest.raises(ValueError):
            ThresholdPair(1, -1)

    def test_exceeds_N(self):
        with pytest.raises(ValueError, match="exceeds"):
            enumerate_states(3, ThresholdPair(4, 0))

    def test_limits(self):
        assert ThresholdPair(15, 11).limits(20) == (20, 15, 11)


class TestStateSpace:
    def test_full_thresholds_count(self):
        # all triples with sum <= 3
        assert len(enumerate_states(3, ThresholdPair(3, 3))) == 20

    def test_reserved_count(self):
        assert len(enumerate_states(3, ThresholdPair(2, 1))) == 14

    def test_zero_thresholds_emergency_only(self):
        space = enumerate_states(5, ThresholdPair(0, 0))
        assert space.states == tuple(CallState(e, 0, 0) for e in range(6))

    def test_lexicographic_index(self):
        space = enumerate_states(4, ThresholdPair(3, 2))
        assert list(space.states) == sorted(space.states)
        assert all(space.index[s] == i for i, s in enumerate(space.states))

    @pytest.mark.parametrize("N", range(0, 7))
    def test_bfs_matches_envelope(self, N):
        for g in range(N + 1):
            for o in range(g + 1):
                t = ThresholdPair(g, o)
                assert enumerate_states(N, t).states == envelope_states(N, t).states

    def test_brute_force_closure(self):
        # every triple satisfying the admission rule at each step is reachable
        N, t = 6, ThresholdPair(4, 2)
        allowed = set()
        for s in itertools.product(range(N + 1), repeat=3):
            if sum(s) <= N and s[2] <= t.t_gout and s[1] + s[2] <= t.t_gin:
                allowed.add(CallState(*s))
        assert set(enumerate_states(N, t).states) == allowed


class TestGenerator:
    def test_rows_sum_to_zero(self):
        sc = small_scenario(5)
        t = ThresholdPair(4, 2)
        G = build_generator(enumerate_states(5, t), sc, t)
        assert np.abs(np.asarray(G.sum(axis=1))).max() < 1e-15

    def test_offdiagonal_nonnegative(self):
        sc = small_scenario(5)
        t = ThresholdPair(3, 1)
        G = build_generator(enumerate_states(5, t), sc, t).tocoo()
        off = G.row != G.col
        assert (G.data[off] > 0).all()

    def test_transition_rates(self):
        sc = small_scenario(3)
        t = ThresholdPair(2, 1)
        space = enumerate_states(3, t)
        G = build_generator(space, sc, t).toarray()
        i = space.index[CallState(1, 1, 0)]
        assert G[i, space.index[CallState(2, 1, 0)]] == 0.02
        assert G[i, space.index[CallState(0, 1, 0)]] == 0.01
        assert G[i, space.index[CallState(1, 0, 0)]] == 0.012
        # total 2 is the general-in limit and above the general-out one
        assert G[i, space.index[CallState(1, 2, 0)]] == 0
        assert G[i, space.index[CallState(1, 1, 1)]] == 0

    def test_mismatched_space(self):
        sc = small_scenario(3)
        space = enumerate_states(3, ThresholdPair(2, 1))
        with pytest.raises(ValueError):
            build_generator(space, sc, ThresholdPair(3, 1))

    def test_format_generator(self):
        G = sp.csr_matrix(np.array([[-0.5, 0.5], [0.25, -0.25]]))
        assert format_generator(G) == "0 0 -0.5\n0 1 0.5\n1 0 0.25\n1 1 -0.25\n"


class TestSteadyState:
    @pytest.mark.parametrize("t", [(3, 3), (2, 1), (1, 0), (0, 0)])
    def test_matches_dense_oracle(self, t):
        sc = small_scenario(3)
        t = ThresholdPair(*t)
        space = enumerate_states(3, t)
        G = build_generator(space, sc, t)
        dist = solve_steady_state(G, space)
        np.testing.assert_allclose(dist.probabilities, dense_stationary(G), atol=1e-12)

    def test_direct_and_iterative_agree(self, headline):
        t = ThresholdPair(15, 11)
        G = build_generator(enumerate_states(20, t), headline, t)
        a, _ = solve_ctmc(G, method="direct")
        b, _ = solve_ctmc(G, method="iterative", tol=1e-15)
        np.testing.assert_allclose(a, b, atol=1e-11)

    def test_normalized_and_balanced(self, headline):
        dist = solve_call_level(headline, ThresholdPair(15, 11)).distribution
        assert dist.probabilities.min() >= 0
        assert abs(dist.probabilities.sum() - 1) < 1e-9
        assert dist.residual <= 1e-10

    def test_aggregate_occupancy_is_erlang(self):
        # equal holding rates and no reservation: N_now is a truncated Poisson
        lam = (0.02, 0.03, 0.05)
        sc = small_scenario(6, lam, (0.01, 0.01, 0.01))
        sol = solve_call_level(sc, ThresholdPair(6, 6))
        a = sum(lam) / 0.01
        w = np.array([a**k / math.factorial(k) for k in range(7)])
        np.testing.assert_allclose(sol.distribution.occupancy_marginal(), w / w.sum(), atol=1e-12)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve_ctmc(sp.csr_matrix(np.array([[-1.0, 1.0], [1.0, -1.0]])), method="magic")

    def test_reducible_chain_raises(self):
        # two absorbing blocks make the balance system singular
        G = sp.csr_matrix(np.zeros((3, 3)))
        with pytest.raises(SteadyStateError):
            solve_ctmc(G)

    def test_iterative_budget_exhausted(self):
        rng = np.random.default_rng(3)
        Q = rng.uniform(0.1, 1.0, (12, 12))
        np.fill_diagonal(Q, 0.0)
        G = sp.csr_matrix(Q - np.diag(Q.sum(axis=1)))
        with pytest.raises(SteadyStateError) as info:
            solve_ctmc(G, method="iterative", max_iter=1, tol=1e-30)
        assert info.value.residual >= 0


class TestBlocking:
    @pytest.mark.parametrize("N", [1, 2, 5, 10, 20])
    @pytest.mark.parametrize("a", [0.5, 1.0, 5.0, 20.0])
    def test_erlang_b(self, N, a):
        sol = solve_call_level(single_class(N, a), ThresholdPair(N, N))
        assert sol.blocking.L_b_e == pytest.approx(erlang_b(N, a), abs=1e-8)

    def test_n2_load1(self):
        sol = solve_call_level(single_class(2, 1.0), ThresholdPair(2, 2))
        assert sol.blocking.L_b_e == pytest.approx(0.2, abs=1e-12)

    def test_zero_thresholds_block_general(self, headline):
        b = solve_call_level(headline, ThresholdPair(0, 0)).blocking
        assert b.L_b_gin == 1.0 and b.L_b_gout == 1.0

    def test_headline_values(self, headline):
        # frozen from the analytical solver; the simulator reproduces them independently
        b = solve_call_level(headline, ThresholdPair(15, 11)).blocking
        assert b.L_b_e == pytest.approx(0.007483618255, rel=1e-8)
        assert b.L_b_gin == pytest.approx(0.4978596524, rel=1e-8)
        assert b.L_b_gout == pytest.approx(0.9742925846, rel=1e-8)

    def test_level_sum_double_counts_coincident_limits(self):
        sc = small_scenario(4)
        t = ThresholdPair(4, 4)
        sol = solve_call_level(sc, t, formula="level-sum")
        assert sol.blocking.L_b_gin == pytest.approx(2 * sol.blocking.L_b_e)

    def test_level_sum_matches_indicator_when_limits_are_top_levels(self):
        # with t=(N, N-1) every blocking set is a single occupancy level except gout's
        sc = small_scenario(4)
        ind = solve_call_level(sc, ThresholdPair(4, 3)).blocking
        lit = solve_call_level(sc, ThresholdPair(4, 3), formula="level-sum").blocking
        assert lit.L_b_e == pytest.approx(ind.L_b_e)

    def test_unknown_formula(self):
        sc = small_scenario(2)
        t = ThresholdPair(1, 1)
        sol = solve_call_level(sc, t)
        with pytest.raises(ValueError):
            blocking_probabilities(sol.distribution, sol.space, t, 2, formula="other")

    def test_monotone_over_grid(self, headline):
        sc = type(headline)(traffic=headline.traffic, capacity=CapacityParams(max_sessions=10))
        for g in range(11):
            for o in range(g + 1):
                b = solve_call_level(sc, ThresholdPair(g, o)).blocking
                assert b.L_b_e <= b.L_b_gin + 1e-15 <= b.L_b_gout + 2e-15


@settings(max_examples=40, deadline=None)
@given(
    N=st.integers(1, 8),
    data=st.data(),
    lam=st.tuples(*[st.floats(0.001, 0.2)] * 3),
    mu=st.tuples(*[st.floats(0.005, 0.05)] * 3),
)
def test_blocking_ordered_and_valid(N, data, lam, mu):
    g = data.draw(st.integers(0, N))
    o = data.draw(st.integers(0, g))
    sol = solve_call_level(small_scenario(N, lam, mu), ThresholdPair(g, o))
    b = sol.blocking.as_tuple()
    assert all(0 <= x <= 1 for x in b)
    assert b[0] <= b[1] + 1e-12 and b[1] <= b[2] + 1e-12
    assert abs(sol.distribution.probabilities.sum() - 1) < 1e-9


@settings(max_examples=25, deadline=None)
@given(N=st.integers(2, 8), data=st.data())
def test_class_relabel_symmetry(N, data):
    # with equal thresholds, swapping the two general classes swaps their blocking
    g = data.draw(st.integers(0, N))
    lam = (0.03, 0.05, 0.02)
    a = solve_call_level(small_scenario(N, lam, (0.01,) * 3), ThresholdPair(g, g)).blocking
    b = solve_call_level(small_scenario(N, (lam[0], lam[2], lam[1]), (0.01,) * 3), ThresholdPair(g, g)).blocking
    assert a.L_b_gin == pytest.approx(b.L_b_gout, abs=1e-12)
    assert a.L_b_e == pytest.approx(b.L_b_e, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(N=st.integers(2, 8), data=st.data())
def test_raising_t_gout_cannot_hurt_gout(N, data):
    g = data.draw(st.integers(1, N))
    o = data.draw(st.integers(0, g - 1))
    sc = small_scenario(N)
    lo = solve_call_level(sc, ThresholdPair(g, o)).blocking.L_b_gout
    hi = solve_call_level(sc, ThresholdPair(g, o + 1)).blocking.L_b_gout
    assert hi <= lo + 1e-12
