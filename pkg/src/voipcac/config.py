"""Scenario parameters for the three-class emergency CAC model.

A scenario bundles the voice-packet statistics, the per-class session
traffic, the capacity of the control server and the QoS bounds.  Every
dataclass validates itself on construction and is frozen afterwards, so a
loaded scenario can be handed to worker processes as-is.

The JSON layout mirrors the dataclasses::

    {
      "packet":   {"talkspurt_mean": 0.352, "silent_mean": 0.650,
                   "packet_interval": 0.016, "packet_size": 1744},
      "traffic":  {"rho_e": 0.45, "rho_gin": 0.5, "rho_gout": 0.8,
                   "departure_rate": 0.01},
      "capacity": {"max_sessions": 20, "queue_capacity": 10,
                   "bandwidth": 1.25e6},
      "qos":      {"blocking_bound_e": 0.15, "blocking_bound_gin": 0.5,
                   "drop_bound": 0.0025}
    }

Traffic may be given as arrival rates (``arrival_rate_<class>``) or as
intensities (``rho_<class>``), in which case ``lambda = rho * N * mu``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

CLASSES = ("e", "gin", "gout")

DEFAULT_QUEUE_CAPACITY = 10


class ConfigError(ValueError):
    """Base class for scenario loading problems."""


class ScenarioParseError(ConfigError):
    """The scenario file is not valid JSON or has the wrong layout."""


class ScenarioValidationError(ConfigError):
    """A scenario value violates one of the model invariants."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ScenarioValidationError(message)


def _positive(name: str, value: float) -> None:
    _require(math.isfinite(value) and value > 0, f"{name} must be > 0 (got {value!r})")


@dataclass(frozen=True)
class VoicePacketParams:
    """On-off voice source: exponential talkspurts/silences, periodic packets."""

    talkspurt_mean: float = 0.352
    silent_mean: float = 0.650
    packet_interval: float = 0.016
    packet_size: float = 1744.0

    def __post_init__(self) -> None:
        for name in ("talkspurt_mean", "silent_mean", "packet_interval", "packet_size"):
            _positive(name, getattr(self, name))
        alpha_t = self.packet_interval / self.talkspurt_mean
        _require(
            0.0 < alpha_t < 2.0,
            f"talkspurt rate * packet_interval must lie in (0, 2) (got {alpha_t!r})",
        )

    @property
    def talkspurt_rate(self) -> float:
        return 1.0 / self.talkspurt_mean

    @property
    def silent_rate(self) -> float:
        return 1.0 / self.silent_mean


@dataclass(frozen=True)
class SessionTrafficParams:
    arrival_rate_e: float
    arrival_rate_gin: float
    arrival_rate_gout: float
    departure_rate_e: float = 0.01
    departure_rate_gin: float = 0.01
    departure_rate_gout: float = 0.01

    def __post_init__(self) -> None:
        for c in CLASSES:
            lam = getattr(self, f"arrival_rate_{c}")
            _require(
                math.isfinite(lam) and lam >= 0,
                f"arrival_rate_{c} must be >= 0 (got {lam!r})",
            )
            _positive(f"departure_rate_{c}", getattr(self, f"departure_rate_{c}"))

    @property
    def arrival_rates(self) -> tuple[float, float, float]:
        return (self.arrival_rate_e, self.arrival_rate_gin, self.arrival_rate_gout)

    @property
    def departure_rates(self) -> tuple[float, float, float]:
        return (self.departure_rate_e, self.departure_rate_gin, self.departure_rate_gout)


@dataclass(frozen=True)
class CapacityParams:
    max_sessions: int = 20
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    bandwidth: float = 1.25e6

    def __post_init__(self) -> None:
        _require(
            isinstance(self.max_sessions, int) and self.max_sessions >= 1,
            f"max_sessions must be an integer >= 1 (got {self.max_sessions!r})",
        )
        _require(
            isinstance(self.queue_capacity, int) and self.queue_capacity >= 1,
            f"queue_capacity must be an integer >= 1 (got {self.queue_capacity!r})",
        )
        _positive("bandwidth", self.bandwidth)


@dataclass(frozen=True)
class QosBounds:
    blocking_bound_e: float = 0.15
    blocking_bound_gin: float = 0.5
    drop_bound: float = 0.0025
    # bound general-in blocking by C_e instead of C_gin
    strict_paper_objective: bool = False

    def __post_init__(self) -> None:
        for name in ("blocking_bound_e", "blocking_bound_gin", "drop_bound"):
            v = getattr(self, name)
            _require(0.0 <= v <= 1.0, f"{name} must lie in [0, 1] (got {v!r})")
        _require(
            self.blocking_bound_e <= self.blocking_bound_gin,
            "C_e <= C_gin violated "
            f"(blocking_bound_e={self.blocking_bound_e}, "
            f"blocking_bound_gin={self.blocking_bound_gin})",
        )

    @property
    def gin_bound(self) -> float:
        """Bound actually applied to the general-in blocking probability."""
        return self.blocking_bound_e if self.strict_paper_objective else self.blocking_bound_gin


@dataclass(frozen=True)
class ScenarioConfig:
    traffic: SessionTrafficParams
    packet: VoicePacketParams = field(default_factory=VoicePacketParams)
    capacity: CapacityParams = field(default_factory=CapacityParams)
    qos: QosBounds = field(default_factory=QosBounds)

    @property
    def N(self) -> int:
        return self.capacity.max_sessions

    @property
    def K(self) -> int:
        return self.capacity.queue_capacity

    @property
    def packet_service_rate(self) -> float:
        """mu_packet = B / z, in packets per second."""
        return self.capacity.bandwidth / self.packet.packet_size

    def with_intensities(self, rho_e=None, rho_gin=None, rho_gout=None) -> "ScenarioConfig":
        """Copy with some classes' arrival rates reset from traffic intensities."""
        t = self.traffic
        changes = {}
        for c, rho in zip(CLASSES, (rho_e, rho_gin, rho_gout)):
            if rho is not None:
                mu = getattr(t, f"departure_rate_{c}")
                changes[f"arrival_rate_{c}"] = float(rho) * self.N * mu
        return replace(self, traffic=replace(t, **changes))

    def to_dict(self) -> dict[str, Any]:
        return {
            "packet": asdict(self.packet),
            "traffic": asdict(self.traffic),
            "capacity": asdict(self.capacity),
            "qos": asdict(self.qos),
        }


def traffic_intensities(config: ScenarioConfig) -> tuple[float, float, float]:
    """Per-class traffic intensity rho_c = lambda_c / (N * mu_c)."""
    N = config.N
    return tuple(
        lam / (N * mu)
        for lam, mu in zip(config.traffic.arrival_rates, config.traffic.departure_rates)
    )


def _section(data: Mapping[str, Any], key: str) -> dict[str, Any]:
    value = data.get(key, {})
    if not isinstance(value, Mapping):
        raise ScenarioParseError(f"section {key!r} must be a JSON object")
    return dict(value)


def _build(cls, values: dict[str, Any], section: str):
    try:
        return cls(**values)
    except TypeError as exc:
        raise ScenarioParseError(f"bad keys in section {section!r}: {exc}") from None


def _traffic_from_dict(values: dict[str, Any], N: int) -> SessionTrafficParams:
    shared_mu = values.pop("departure_rate", None)
    kwargs: dict[str, Any] = {}
    for c in CLASSES:
        mu = values.pop(f"departure_rate_{c}", shared_mu)
        if mu is None:
            mu = 0.01
        kwargs[f"departure_rate_{c}"] = float(mu)
        lam = values.pop(f"arrival_rate_{c}", None)
        rho = values.pop(f"rho_{c}", None)
        if lam is not None and rho is not None:
            raise ScenarioValidationError(f"give either arrival_rate_{c} or rho_{c}, not both")
        if lam is None and rho is None:
            raise ScenarioParseError(f"traffic needs arrival_rate_{c} or rho_{c}")
        kwargs[f"arrival_rate_{c}"] = float(lam) if lam is not None else float(rho) * N * float(mu)
    if values:
        raise ScenarioParseError(f"unknown traffic keys: {sorted(values)}")
    return SessionTrafficParams(**kwargs)


def scenario_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    if not isinstance(data, Mapping):
        raise ScenarioParseError("scenario must be a JSON object")
    unknown = set(data) - {"packet", "traffic", "capacity", "qos"}
    if unknown:
        raise ScenarioParseError(f"unknown top-level keys: {sorted(unknown)}")
    if "traffic" not in data:
        raise ScenarioParseError("scenario is missing the 'traffic' section")
    packet = _build(VoicePacketParams, _section(data, "packet"), "packet")
    capacity = _build(CapacityParams, _section(data, "capacity"), "capacity")
    qos = _build(QosBounds, _section(data, "qos"), "qos")
    traffic = _traffic_from_dict(_section(data, "traffic"), capacity.max_sessions)
    return ScenarioConfig(traffic=traffic, packet=packet, capacity=capacity, qos=qos)


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: malformed JSON ({exc})") from None
    return scenario_from_dict(data)


def dumps_scenario(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(dumps_scenario(config) + "\n")


def default_scenario(rho_e: float = 0.45, rho_gin: float = 0.5, rho_gout: float = 0.8) -> ScenarioConfig:
    """Default voice, capacity and QoS parameters with the given traffic intensities."""
    base = ScenarioConfig(traffic=SessionTrafficParams(0.0, 0.0, 0.0))
    return base.with_intensities(rho_e, rho_gin, rho_gout)
