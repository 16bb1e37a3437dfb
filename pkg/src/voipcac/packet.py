"""Packet level: on-off voice sources, two-phase MMPP fitting, MMPP/M/1/K.

Each class with ``n`` active sessions is approximated by a two-phase MMPP
matched to the first three moments of the superposed on-off sources.  The
per-class MMPPs are combined with Kronecker sums and fed to a single server
with exponential service and room for ``K`` packets.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from functools import reduce
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .config import CLASSES, ScenarioConfig, VoicePacketParams
from .markov import solve_ctmc

NEGATIVE_RATE_TOL = 1e-9


class MmppFitError(ValueError):
    """The moment-matching fit produced an infeasible MMPP."""


@dataclass(frozen=True)
class SingleSourceStats:
    lambda_p: float
    c2a: float
    sk: float


@dataclass(frozen=True)
class TwoPhaseMmpp:
    """Phase 0 is dense, phase 1 sparse; q0 is the dense->sparse rate."""

    q0: float
    q1: float
    lambda0: float
    lambda1: float
    label: str = ""

    def generator(self) -> np.ndarray:
        return np.array([[-self.q0, self.q0], [self.q1, -self.q1]])

    def rates(self) -> np.ndarray:
        return np.array([self.lambda0, self.lambda1])

    @property
    def mean_rate(self) -> float:
        return (self.q1 * self.lambda0 + self.q0 * self.lambda1) / (self.q0 + self.q1)


@dataclass(frozen=True)
class SuperposedMmpp:
    phase_generator: np.ndarray
    arrival_rates: np.ndarray
    phase_labels: tuple[tuple[int, ...], ...]
    classes: tuple[str, ...] = ()

    @property
    def n_phases(self) -> int:
        return len(self.arrival_rates)

    def stationary_phase(self) -> np.ndarray:
        if self.n_phases == 1:
            return np.ones(1)
        pi, _ = solve_ctmc(sp.csr_matrix(self.phase_generator))
        return pi

    @property
    def mean_rate(self) -> float:
        return float(self.stationary_phase() @ self.arrival_rates)


@dataclass(frozen=True)
class PacketQueueSolution:
    """``steady_state[m, p]`` is P(m packets in system, phase p)."""

    steady_state: np.ndarray
    drop_probability: float
    residual: float


def on_off_statistics(alpha: float, beta: float, T: float) -> SingleSourceStats:
    """Rate, squared coefficient of variation and skewness of one on-off source.

    ``alpha``/``beta`` are the talkspurt/silence end rates, ``T`` the packet
    spacing during a talkspurt.
    """
    aT = alpha * T
    if not (0.0 < aT < 2.0):
        raise ValueError(f"alpha*T must lie in (0, 2) (got {aT!r})")
    s = alpha + beta
    lambda_p = beta / (T * s)
    c2a = (1.0 - (1.0 - aT) ** 2) / (T**2 * s**2)
    sk = 2.0 * aT * (aT**2 - 3.0 * aT + 3.0) / (aT * (2.0 - aT)) ** 1.5
    return SingleSourceStats(lambda_p, c2a, sk)


def source_stats(packet: VoicePacketParams) -> SingleSourceStats:
    return on_off_statistics(packet.talkspurt_rate, packet.silent_rate, packet.packet_interval)


def fit_coefficients(stats: SingleSourceStats) -> tuple[float, float, float]:
    """The (D, E, F) constants shared by every session count."""
    lp, c2, sk = stats.lambda_p, stats.c2a, stats.sk
    c3 = c2**1.5
    denom = 2.0 * sk * c3 - 3.0 * c2**2 - 1.0
    if denom == 0.0 or c2 == 1.0:
        raise MmppFitError(f"degenerate moments (c2a={c2!r}, sk={sk!r}) give infinite D or F")
    D = 3.0 * lp * (c2 - 1.0) / denom
    F = D * (3.0 * c2**2 - sk * c3 - 3.0 * c2 + 2.0) / (3.0 * (c2 - 1.0))
    if F == 0.0:
        raise MmppFitError("F = 0 makes E infinite")
    E = D * (c2 - 1.0) / F**2
    return D, E, F


def fit_two_phase_mmpp(stats: SingleSourceStats, n: int, label: str = "") -> TwoPhaseMmpp:
    """Two-phase MMPP for ``n`` superposed sources of one class."""
    if n < 1:
        raise ValueError(f"session count must be >= 1 (got {n})")
    D, E, F = fit_coefficients(stats)
    disc = 1.0 + n * stats.lambda_p * E
    if not (disc > 0.0 and math.isfinite(disc)):
        raise MmppFitError(f"discriminant 1 + n*lambda_p*E = {disc!r} is not positive")
    root = math.sqrt(disc)
    q0 = D * (1.0 + 1.0 / root)
    q1 = D * (1.0 - 1.0 / root)
    centre = n * stats.lambda_p + F
    lambda0 = centre + F * root
    lambda1 = centre - F * root
    if not (q0 > 0.0):
        raise MmppFitError(f"q0 = {q0!r} is not positive")
    if not (q1 > 0.0):
        raise MmppFitError(f"q1 = {q1!r} is not positive")
    for name, value in (("lambda0", lambda0), ("lambda1", lambda1)):
        if value < -NEGATIVE_RATE_TOL:
            raise MmppFitError(f"{name} = {value!r} is negative")
    lambda0, lambda1 = max(lambda0, 0.0), max(lambda1, 0.0)
    if lambda0 < lambda1:
        raise MmppFitError(f"dense rate lambda0={lambda0!r} below sparse rate lambda1={lambda1!r}")
    return TwoPhaseMmpp(q0, q1, lambda0, lambda1, label)


def kron_sum(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A ⊕ B = A ⊗ I + I ⊗ B."""
    return np.kron(A, np.eye(B.shape[0])) + np.kron(np.eye(A.shape[0]), B)


def superpose(components: Sequence[TwoPhaseMmpp]) -> SuperposedMmpp:
    """Superposition of independent MMPPs; the first component varies slowest."""
    if not 1 <= len(components) <= 3:
        raise ValueError(f"expected 1 to 3 components, got {len(components)}")
    Q = reduce(kron_sum, (c.generator() for c in components))
    Lam = reduce(kron_sum, (np.diag(c.rates()) for c in components))
    labels = tuple(itertools.product((0, 1), repeat=len(components)))
    return SuperposedMmpp(
        phase_generator=Q,
        arrival_rates=np.diag(Lam).copy(),
        phase_labels=labels,
        classes=tuple(c.label for c in components),
    )


def mmpp_queue_generator(mmpp: SuperposedMmpp, mu_packet: float, K: int) -> sp.csr_matrix:
    """Generator over (m, phase), index m * n_phases + phase, 0 <= m <= K."""
    P = mmpp.n_phases
    levels = K + 1
    Q = sp.csr_matrix(mmpp.phase_generator)
    up = sp.diags(np.ones(K), 1, shape=(levels, levels))
    down = sp.diags(np.ones(K), -1, shape=(levels, levels))
    G = (
        sp.kron(sp.identity(levels), Q)
        + sp.kron(up, sp.diags(mmpp.arrival_rates))
        + sp.kron(down, mu_packet * sp.identity(P))
    ).tocsr()
    G.setdiag(0.0)
    G.eliminate_zeros()
    G = G - sp.diags(np.asarray(G.sum(axis=1)).ravel())
    return G.tocsr()


def solve_mmpp_m1k(mmpp: SuperposedMmpp, mu_packet: float, K: int) -> PacketQueueSolution:
    """Stationary queue and the arrival-weighted probability of finding it full."""
    if K < 1:
        raise ValueError(f"queue capacity must be >= 1 (got {K})")
    if not mu_packet > 0:
        raise ValueError(f"packet service rate must be > 0 (got {mu_packet})")
    G = mmpp_queue_generator(mmpp, mu_packet, K)
    pi, residual = solve_ctmc(G, method="direct")
    joint = pi.reshape(K + 1, mmpp.n_phases)
    lam = mmpp.arrival_rates
    offered = float(lam @ joint.sum(axis=0))
    drop = float(lam @ joint[K]) / offered if offered > 0.0 else 0.0
    return PacketQueueSolution(steady_state=joint, drop_probability=min(max(drop, 0.0), 1.0),
                               residual=residual)


def combination_mmpp(n_a: Sequence[int], config: ScenarioConfig) -> SuperposedMmpp | None:
    """Superposed MMPP of the active classes in ``n_a``; None if no sessions."""
    stats = source_stats(config.packet)
    parts = [fit_two_phase_mmpp(stats, int(n), label) for label, n in zip(CLASSES, n_a) if n > 0]
    return superpose(parts) if parts else None


def drop_probability_for_combination(n_a: Sequence[int], config: ScenarioConfig) -> float:
    """Packet dropping probability with ``n_a`` sessions in progress."""
    if any(n < 0 for n in n_a):
        raise ValueError(f"negative session count in {tuple(n_a)}")
    if sum(n_a) > config.N:
        raise ValueError(f"{tuple(n_a)} exceeds N={config.N}")
    mmpp = combination_mmpp(n_a, config)
    if mmpp is None:
        return 0.0
    return solve_mmpp_m1k(mmpp, config.packet_service_rate, config.K).drop_probability


class DropCache:
    """Memo of drop probabilities keyed by the packet-relevant config and n_a.

    Thresholds and session traffic do not enter the key, so one cache serves a
    whole threshold search and any sweep over traffic intensities.
    """

    def __init__(self) -> None:
        self._values: dict = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(n_a: Sequence[int], config: ScenarioConfig):
        return (config.packet, config.capacity, tuple(int(n) for n in n_a))

    def get(self, n_a: Sequence[int], config: ScenarioConfig) -> float:
        key = self._key(n_a, config)
        value = self._values.get(key)
        if value is None:
            value = drop_probability_for_combination(n_a, config)
            with self._lock:
                value = self._values.setdefault(key, value)
        return value

    def table(self, states: Sequence[Sequence[int]], config: ScenarioConfig) -> np.ndarray:
        return np.array([self.get(s, config) for s in states])

    def snapshot(self) -> Mapping:
        with self._lock:
            return dict(self._values)

    def __len__(self) -> int:
        return len(self._values)
