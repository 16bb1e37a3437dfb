"""Call-level CTMC: threshold-controlled M1M2M3/M1M2M3/S/S loss system.

States are occupancy triples ``(n_e, n_gin, n_gout)``.  An arriving session
of class c is admitted iff the current total N_now is strictly below its
limit: N for emergency, t_gin for general-in and t_gout for general-out.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .config import ScenarioConfig
from .markov import SteadyStateError, solve_ctmc

__all__ = [
    "BlockingProbabilities",
    "CallLevelSolution",
    "CallState",
    "StateSpace",
    "SteadyStateDistribution",
    "SteadyStateError",
    "ThresholdPair",
    "blocking_probabilities",
    "build_generator",
    "enumerate_states",
    "envelope_states",
    "format_generator",
    "solve_call_level",
    "solve_steady_state",
]


class CallState(NamedTuple):
    n_e: int
    n_gin: int
    n_gout: int

    @property
    def total(self) -> int:
        return self.n_e + self.n_gin + self.n_gout


@dataclass(frozen=True, order=True)
class ThresholdPair:
    t_gin: int
    t_gout: int

    def __post_init__(self) -> None:
        if not (0 <= self.t_gout <= self.t_gin):
            raise ValueError(
                f"thresholds must satisfy 0 <= t_gout <= t_gin (got t_gin={self.t_gin}, "
                f"t_gout={self.t_gout})"
            )

    def check(self, N: int) -> None:
        if self.t_gin > N:
            raise ValueError(f"t_gin={self.t_gin} exceeds N={N}")

    def limits(self, N: int) -> tuple[int, int, int]:
        """Admission limit on N_now for (emergency, general-in, general-out)."""
        return (N, self.t_gin, self.t_gout)


@dataclass(frozen=True)
class StateSpace:
    N: int
    thresholds: ThresholdPair
    states: tuple[CallState, ...]
    index: dict

    def __len__(self) -> int:
        return len(self.states)

    def totals(self) -> np.ndarray:
        return np.fromiter((s.total for s in self.states), dtype=int, count=len(self.states))

    def as_array(self) -> np.ndarray:
        return np.array(self.states, dtype=int).reshape(-1, 3)


@dataclass(frozen=True)
class SteadyStateDistribution:
    space: StateSpace
    probabilities: np.ndarray
    residual: float

    def __getitem__(self, state: Sequence[int]) -> float:
        return float(self.probabilities[self.space.index[CallState(*state)]])

    def occupancy_marginal(self) -> np.ndarray:
        """Distribution of N_now over 0..N."""
        return np.bincount(self.space.totals(), weights=self.probabilities, minlength=self.space.N + 1)


@dataclass(frozen=True)
class BlockingProbabilities:
    L_b_e: float
    L_b_gin: float
    L_b_gout: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.L_b_e, self.L_b_gin, self.L_b_gout)


def _moves(state: CallState, N: int, t: ThresholdPair):
    """Yield (target, class, kind) for every enabled transition out of state."""
    total = state.total
    for c, limit in enumerate(t.limits(N)):
        if total < limit:
            up = list(state)
            up[c] += 1
            yield CallState(*up), c, "arrival"
        if state[c] > 0:
            down = list(state)
            down[c] -= 1
            yield CallState(*down), c, "departure"


def _make_space(N: int, t: ThresholdPair, states: Iterable[CallState]) -> StateSpace:
    ordered = tuple(sorted(states))
    return StateSpace(N=N, thresholds=t, states=ordered, index={s: i for i, s in enumerate(ordered)})


def enumerate_states(N: int, t: ThresholdPair) -> StateSpace:
    """Reachable states from the empty system, indexed lexicographically."""
    t.check(N)
    start = CallState(0, 0, 0)
    seen = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for nxt, _, _ in _moves(s, N, t):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return _make_space(N, t, seen)


def envelope_states(N: int, t: ThresholdPair) -> StateSpace:
    """Closed-form state set: sum <= N, n_gout <= t_gout, n_gin + n_gout <= t_gin."""
    t.check(N)
    states = [
        CallState(e, i, o)
        for o in range(t.t_gout + 1)
        for i in range(t.t_gin - o + 1)
        for e in range(N - i - o + 1)
    ]
    return _make_space(N, t, states)


def build_generator(space: StateSpace, config: ScenarioConfig, t: ThresholdPair) -> sp.csr_matrix:
    """Infinitesimal generator over ``space`` (rows sum to zero)."""
    if space.N != config.N or space.thresholds != t:
        raise ValueError(
            f"state space was built for N={space.N}, t={space.thresholds}; "
            f"got N={config.N}, t={t}"
        )
    lam = config.traffic.arrival_rates
    mu = config.traffic.departure_rates
    rows, cols, vals = [], [], []
    for i, s in enumerate(space.states):
        for nxt, c, kind in _moves(s, space.N, t):
            rate = lam[c] if kind == "arrival" else s[c] * mu[c]
            if rate == 0.0:
                continue
            j = space.index.get(nxt)
            if j is None:
                raise ValueError(f"transition {s} -> {nxt} leaves the state space")
            rows.append(i)
            cols.append(j)
            vals.append(rate)
    n = len(space)
    G = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    G = G - sp.diags(np.asarray(G.sum(axis=1)).ravel())
    return G.tocsr()


def solve_steady_state(generator: sp.spmatrix, space: StateSpace, method: str = "auto") -> SteadyStateDistribution:
    if generator.shape != (len(space), len(space)):
        raise ValueError("generator does not match the state space")
    pi, residual = solve_ctmc(generator, method=method)
    return SteadyStateDistribution(space=space, probabilities=pi, residual=residual)


def blocking_probabilities(dist: SteadyStateDistribution, space: StateSpace, t: ThresholdPair,
                           N: int, formula: str = "indicator") -> BlockingProbabilities:
    """Per-class blocking probabilities by PASTA.

    ``indicator`` sums pi over {N_now >= limit}.  ``level-sum`` only counts
    states whose total equals N, t_gin or t_gout, accumulating from the
    emergency level down, and counts a level twice when two limits coincide.
    """
    pi = dist.probabilities
    totals = space.totals()
    if formula == "indicator":
        # clip the last-ulp overshoot of a sum over (nearly) every state
        vals = [min(float(pi[totals >= limit].sum()), 1.0) for limit in t.limits(N)]
        return BlockingProbabilities(*vals)
    if formula == "level-sum":
        def level(total: int) -> float:
            acc = 0.0
            for n_gin in range(t.t_gin + 1):
                for n_gout in range(t.t_gout + 1):
                    j = space.index.get(CallState(total - n_gin - n_gout, n_gin, n_gout))
                    if j is not None:
                        acc += pi[j]
            return acc
        L_e = level(N)
        L_gin = L_e + level(t.t_gin)
        L_gout = L_gin + level(t.t_gout)
        return BlockingProbabilities(float(L_e), float(L_gin), float(L_gout))
    raise ValueError(f"unknown blocking formula {formula!r}")


@dataclass(frozen=True)
class CallLevelSolution:
    space: StateSpace
    distribution: SteadyStateDistribution
    blocking: BlockingProbabilities


def solve_call_level(config: ScenarioConfig, t: ThresholdPair, formula: str = "indicator",
                     method: str = "auto") -> CallLevelSolution:
    space = enumerate_states(config.N, t)
    G = build_generator(space, config, t)
    dist = solve_steady_state(G, space, method=method)
    return CallLevelSolution(space, dist, blocking_probabilities(dist, space, t, config.N, formula))


def format_generator(G: sp.spmatrix) -> str:
    """Coordinate text dump, one ``row col rate`` line per nonzero."""
    coo = sp.coo_matrix(G)
    order = np.lexsort((coo.col, coo.row))
    return "".join(
        f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.10g}\n" for k in order
    )
