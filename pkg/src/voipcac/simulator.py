"""Event-driven simulation of the call-level admission system.

Each class owns an independent PCG64 stream derived from the seed with
``numpy.random.SeedSequence``: replication r uses ``SeedSequence(seed)
.spawn(replications)[r].spawn(3)[c]`` for class c.  A class stream yields
interarrival times and holding times in fixed-size chunks, so the output is
a deterministic function of the configuration.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit
from scipy import stats

from .calllevel import BlockingProbabilities, ThresholdPair
from .config import CLASSES, ScenarioConfig

CHUNK = 65_536


@dataclass(frozen=True)
class SimulationConfig:
    scenario: ScenarioConfig
    thresholds: ThresholdPair
    arrivals: int | None = 1_000_000
    horizon: float | None = None
    warmup: float = 0.1
    seed: int = 0
    replications: int = 10

    def __post_init__(self) -> None:
        if (self.arrivals is None) == (self.horizon is None):
            raise ValueError("give exactly one of arrivals (count) or horizon (seconds)")
        if self.arrivals is not None and self.arrivals <= 0:
            raise ValueError("arrival budget must be > 0")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if not 0.0 <= self.warmup <= 0.5:
            raise ValueError("warmup must lie in [0, 0.5]")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.thresholds.check(self.scenario.N)


@dataclass(frozen=True)
class ClassEstimate:
    offered: int
    blocked: int
    estimate: float
    half_width: float
    per_replication: tuple[float, ...]


@dataclass(frozen=True)
class SimulationReport:
    config: SimulationConfig = field(repr=False)
    classes: dict
    mean_occupancy: float
    observed_time: float
    envelope_violations: int
    no_offered: tuple[str, ...] = ()

    @property
    def blocking(self) -> BlockingProbabilities:
        return BlockingProbabilities(*(self.classes[c].estimate for c in CLASSES))

    def to_dict(self) -> dict:
        out = {
            "thresholds": asdict(self.config.thresholds),
            "seed": self.config.seed,
            "replications": self.config.replications,
            "arrivals": self.config.arrivals,
            "horizon": self.config.horizon,
            "warmup": self.config.warmup,
            "mean_occupancy": self.mean_occupancy,
            "observed_time": self.observed_time,
            "envelope_violations": self.envelope_violations,
            "no_offered": list(self.no_offered),
        }
        for c in CLASSES:
            e = self.classes[c]
            out[f"L_b_{c}"] = {
                "offered": e.offered,
                "blocked": e.blocked,
                "estimate": e.estimate,
                "half_width_95": e.half_width,
                "per_replication": list(e.per_replication),
            }
        return out


@njit(cache=True)
def _kernel(limits, inter, hold, ptr, next_arr, dep, dep_cls, occ, clock,
            counters, stop_count, warm_count, stop_time, warm_time, obs):
    """Advance one replication until it ends or a class runs out of draws.

    counters = [arrivals_seen, offered x3, blocked x3, violations];
    obs = [area under N_now, observed time].  Returns -1 when finished,
    otherwise the class whose draw buffer must be refilled.
    """
    n_slots = dep.shape[0]
    t = clock[0]
    while True:
        # earliest departure
        k_dep = -1
        t_dep = np.inf
        for k in range(n_slots):
            if dep[k] < t_dep:
                t_dep = dep[k]
                k_dep = k
        c_arr = 0
        t_arr = next_arr[0]
        for c in range(1, 3):
            if next_arr[c] < t_arr:
                t_arr = next_arr[c]
                c_arr = c
        t_next = t_dep if t_dep < t_arr else t_arr
        if stop_time > 0.0 and t_next > stop_time:
            t_next = stop_time
        n_now = occ[0] + occ[1] + occ[2]
        # time-average accumulation after warmup
        lo = t if t > warm_time else warm_time
        if t_next > lo and (stop_count <= 0 or counters[0] >= warm_count):
            obs[0] += n_now * (t_next - lo)
            obs[1] += t_next - lo
        t = t_next
        if stop_time > 0.0 and t >= stop_time:
            clock[0] = t
            return -1
        if t_dep < t_arr:
            occ[dep_cls[k_dep]] -= 1
            dep[k_dep] = np.inf
            dep_cls[k_dep] = -1
            continue
        c = c_arr
        if ptr[c] >= inter.shape[1]:
            clock[0] = t
            return c
        counters[0] += 1
        counting = counters[0] > warm_count if stop_count > 0 else t >= warm_time
        if counting:
            counters[1 + c] += 1
        if n_now < limits[c]:
            for k in range(n_slots):
                if dep_cls[k] < 0:
                    dep[k] = t + hold[c, ptr[c]]
                    dep_cls[k] = c
                    break
            occ[c] += 1
            if (occ[0] + occ[1] + occ[2] > limits[0] or occ[2] > limits[2]
                    or occ[1] + occ[2] > limits[1]):
                counters[7] += 1
        elif counting:
            counters[4 + c] += 1
        next_arr[c] = t + inter[c, ptr[c]]
        ptr[c] += 1
        if stop_count > 0 and counters[0] >= stop_count:
            clock[0] = t
            return -1


def _replication(sim: SimulationConfig, seq: np.random.SeedSequence):
    sc = sim.scenario
    lam = np.array(sc.traffic.arrival_rates, dtype=float)
    mu = np.array(sc.traffic.departure_rates, dtype=float)
    gens = [np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(3)]
    inter = np.full((3, CHUNK), np.inf)
    hold = np.full((3, CHUNK), np.inf)

    def refill(c: int) -> None:
        if lam[c] > 0:
            inter[c] = gens[c].exponential(1.0 / lam[c], CHUNK)
            hold[c] = gens[c].exponential(1.0 / mu[c], CHUNK)

    next_arr = np.full(3, np.inf)
    for c in range(3):
        refill(c)
        if lam[c] > 0:
            next_arr[c] = inter[c, 0]
    ptr = np.where(lam > 0, 1, 0).astype(np.int64)
    N = sc.N
    limits = np.array(sim.thresholds.limits(N), dtype=np.int64)
    dep = np.full(N, np.inf)
    dep_cls = np.full(N, -1, dtype=np.int64)
    occ = np.zeros(3, dtype=np.int64)
    clock = np.zeros(1)
    counters = np.zeros(8, dtype=np.int64)
    obs = np.zeros(2)
    if sim.arrivals is not None:
        stop_count, warm_count = int(sim.arrivals), int(math.floor(sim.warmup * sim.arrivals))
        stop_time, warm_time = 0.0, 0.0
    else:
        stop_count, warm_count = 0, 0
        stop_time, warm_time = float(sim.horizon), float(sim.warmup * sim.horizon)
    if not lam.any():
        # nothing ever happens; the system stays empty
        return counters, (0.0, float(stop_time - warm_time))
    while True:
        code = _kernel(limits, inter, hold, ptr, next_arr, dep, dep_cls, occ, clock,
                       counters, stop_count, warm_count, stop_time, warm_time, obs)
        if code < 0:
            break
        refill(code)
        ptr[code] = 0
    return counters, (float(obs[0]), float(obs[1]))


def run_simulation(sim: SimulationConfig) -> SimulationReport:
    seqs = np.random.SeedSequence(sim.seed).spawn(sim.replications)
    offered = np.zeros((sim.replications, 3), dtype=np.int64)
    blocked = np.zeros((sim.replications, 3), dtype=np.int64)
    area = time = 0.0
    violations = 0
    for r, seq in enumerate(seqs):
        counters, (a, tt) = _replication(sim, seq)
        offered[r] = counters[1:4]
        blocked[r] = counters[4:7]
        violations += int(counters[7])
        area += a
        time += tt
    per_rep = np.divide(blocked, offered, out=np.zeros((sim.replications, 3)), where=offered > 0)
    R = sim.replications
    q = stats.t.ppf(0.975, R - 1) if R > 1 else float("nan")
    classes = {}
    for c, name in enumerate(CLASSES):
        vals = per_rep[:, c]
        half = float(q * vals.std(ddof=1) / math.sqrt(R)) if R > 1 else float("nan")
        classes[name] = ClassEstimate(
            offered=int(offered[:, c].sum()),
            blocked=int(blocked[:, c].sum()),
            estimate=float(vals.mean()),
            half_width=half,
            per_replication=tuple(float(v) for v in vals),
        )
    no_offered = tuple(name for c, name in enumerate(CLASSES) if offered[:, c].sum() == 0)
    return SimulationReport(
        config=sim,
        classes=classes,
        mean_occupancy=area / time if time > 0 else 0.0,
        observed_time=time,
        envelope_violations=violations,
        no_offered=no_offered,
    )


@dataclass(frozen=True)
class ClassComparison:
    simulated: float
    theory: float
    abs_error: float
    rel_error: float
    half_width: float
    covered: bool


def compare_to_theory(report: SimulationReport, analytical: BlockingProbabilities,
                      scenario: ScenarioConfig | None = None,
                      thresholds: ThresholdPair | None = None) -> dict:
    """Per-class errors and whether the 95% interval covers the theory value."""
    if scenario is not None and scenario != report.config.scenario:
        raise ValueError("analytical values were computed for a different scenario")
    if thresholds is not None and thresholds != report.config.thresholds:
        raise ValueError(
            f"analytical thresholds {thresholds} differ from simulated {report.config.thresholds}"
        )
    out = {}
    for name, theory in zip(CLASSES, analytical.as_tuple()):
        est = report.classes[name]
        err = abs(est.estimate - theory)
        rel = err / abs(theory) if theory != 0 else (0.0 if err == 0 else math.inf)
        hw = est.half_width if math.isfinite(est.half_width) else 0.0
        out[name] = ClassComparison(est.estimate, theory, err, rel, est.half_width, err <= hw)
    return out
