"""Closed-form and Monte-Carlo latency/reliability models for the uplink protocols.

Four schemes are covered: Selective Repeat ARQ, HARQ with mutual-information
accumulation, the two-phase Occupy CoW relaying scheme, and the two-phase
edge-driven ReFlexUp protocol. Rate terms are always normalized by the
bandwidth before entering the outage formula, and packet sizes are carried in
bits.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .cec import CecConfig, optimal_tcm_case3
from .channel import ChannelParams, outage_probability, spawn_stream

__all__ = [
    "Protocol",
    "Method",
    "NetworkShape",
    "ProtocolOutcome",
    "HarqParams",
    "OccupyCowParams",
    "MonteCarloEstimate",
    "ReflexupLatency",
    "split_nodes",
    "srarq_latency",
    "srarq_pfail",
    "harq_pfail",
    "harq_expected_rounds",
    "harq_latency",
    "occupycow_phase_probs",
    "occupycow_pfail",
    "occupycow_latency",
    "reflexup_pfail",
    "reflexup_latency",
]

_MIN_TRIALS = 10_000


class Protocol(enum.Enum):
    SELECTIVE_REPEAT_ARQ = "selective_repeat_arq"
    HARQ = "harq"
    OCCUPY_COW = "occupy_cow"
    REFLEXUP = "reflexup"


class Method(enum.Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class NetworkShape:
    """Field-network head counts and packet sizing.

    relay_fanout is the average number of sensors served per relay and may be
    fractional (it enters the session-rate arithmetic, not a membership list).
    """

    n_total: int
    n_sensors: int
    n_relays: int
    relay_fanout: float
    packet_bits: int
    payload_bits_per_node: int | None = None

    def __post_init__(self) -> None:
        if self.n_total != self.n_sensors + self.n_relays:
            raise ValueError("n_total must equal n_sensors + n_relays")
        if self.n_relays > 0 and self.relay_fanout * self.n_relays < self.n_sensors - 1e-9:
            raise ValueError("relay_fanout * n_relays must cover all sensors")
        if self.packet_bits <= 0:
            raise ValueError("packet_bits must be > 0")
        if self.payload_bits_per_node is None:
            object.__setattr__(self, "payload_bits_per_node", self.packet_bits)


def split_nodes(n_total: int, relay_sensor_ratio: float, packet_bits: int) -> NetworkShape:
    """Build a NetworkShape from a total head count and the n_s/n_v ratio.

    Sensors get round(n_total / (1 + ratio)) heads; the remainder are relays.
    """
    if n_total < 2:
        raise ValueError("need at least one sensor and one relay")
    if relay_sensor_ratio <= 0:
        raise ValueError("relay_sensor_ratio must be > 0")
    n_sensors = round(n_total / (1.0 + relay_sensor_ratio))
    n_sensors = min(max(n_sensors, 1), n_total - 1)
    n_relays = n_total - n_sensors
    return NetworkShape(
        n_total=n_total,
        n_sensors=n_sensors,
        n_relays=n_relays,
        relay_fanout=n_sensors / n_relays,
        packet_bits=packet_bits,
    )


@dataclass(frozen=True)
class ProtocolOutcome:
    """A (latency, failure probability) pair for one protocol at one operating point."""

    t_cm: float
    p_fail: float
    protocol_tag: Protocol
    method_tag: Method

    def __post_init__(self) -> None:
        if not self.t_cm > 0:
            raise ValueError("t_cm must be > 0")
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")


@dataclass(frozen=True)
class HarqParams:
    """HARQ knobs: round budget Q, diversity order L, optional round estimate."""

    max_rounds: int
    diversity_order: int
    rounds_estimate: float | None = None

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.diversity_order < 1:
            raise ValueError("diversity_order must be >= 1")
        if self.rounds_estimate is not None and not (
            1.0 <= self.rounds_estimate <= self.max_rounds
        ):
            raise ValueError("rounds_estimate must lie in [1, max_rounds]")


@dataclass(frozen=True)
class OccupyCowParams:
    """Two-phase relaying failure parameters.

    p12 is the conditional phase-2 failure min(p1/p2, 1) (1 when p2 == 0),
    matching the fixed-schedule failure model this feeds.
    """

    p1: float
    p2: float
    p12: float
    t1: float
    t2: float

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "p12"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("phase durations must be > 0")


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float
    trials: int


class ReflexupLatency(NamedTuple):
    """Achieved two-phase latency plus the budget bookkeeping behind it."""

    t_cm: float
    infeasible: bool
    transfer_floor: float
    target: float


# --------------------------------------------------------------------------
# Selective Repeat ARQ
# --------------------------------------------------------------------------


def srarq_latency(shape: NetworkShape, chan: ChannelParams) -> float:
    """Average uplink time N_v * m * (3 - 2*P_l) / R with one retransmission round."""
    p_l = outage_probability(chan)
    return shape.n_sensors * shape.packet_bits * (3.0 - 2.0 * p_l) / chan.rate_bps


def srarq_pfail(p_timeout: float, p_error: float) -> float:
    """Per-attempt failure p_a + (1 - p_a) * p_b from timeouts and packet errors."""
    if not 0.0 <= p_timeout <= 1.0 or not 0.0 <= p_error <= 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    return p_timeout + (1.0 - p_timeout) * p_error


# --------------------------------------------------------------------------
# HARQ
# --------------------------------------------------------------------------

_CHUNK = 200_000


def _harq_round_totals(
    chan: ChannelParams, params: HarqParams, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """Cumulative per-round mutual information, shape (trials, Q)."""
    snr = chan.snr_linear
    fades = rng.exponential(
        1.0, size=(trials, params.max_rounds, params.diversity_order)
    )
    per_round = np.log2(1.0 + snr * fades).mean(axis=2)
    return np.cumsum(per_round, axis=1)


def harq_pfail(
    chan: ChannelParams,
    params: HarqParams,
    trials: int,
    seed: int = 0,
) -> MonteCarloEstimate:
    """Monte-Carlo outage after Q mutual-information-accumulating rounds.

    Estimates P(sum over Q rounds of the L-branch average log2(1 + snr*|h|^2)
    <= R/W). Returns the estimate with its binomial standard error.
    """
    if trials < _MIN_TRIALS:
        raise ValueError(f"trials must be >= {_MIN_TRIALS} for a meaningful CI")
    rng = spawn_stream(seed, 0x4A, 0)
    r_norm = chan.spectral_efficiency
    failures = 0
    done = 0
    while done < trials:
        n = min(_CHUNK, trials - done)
        totals = _harq_round_totals(chan, params, n, rng)
        failures += int((totals[:, -1] <= r_norm).sum())
        done += n
    p = failures / trials
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / trials)
    return MonteCarloEstimate(p, stderr, trials)


def harq_expected_rounds(
    chan: ChannelParams,
    params: HarqParams,
    trials: int,
    seed: int = 0,
) -> MonteCarloEstimate:
    """Monte-Carlo mean of the first decoding round, capped at Q."""
    if trials < _MIN_TRIALS:
        raise ValueError(f"trials must be >= {_MIN_TRIALS} for a meaningful CI")
    rng = spawn_stream(seed, 0x4A, 1)
    r_norm = chan.spectral_efficiency
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        n = min(_CHUNK, trials - done)
        cum = _harq_round_totals(chan, params, n, rng)
        decoded = cum > r_norm
        # First decoding round (1-based); undecoded packets stay at the cap Q.
        first = np.where(
            decoded.any(axis=1), decoded.argmax(axis=1) + 1, params.max_rounds
        ).astype(float)
        total += float(first.sum())
        total_sq += float((first**2).sum())
        done += n
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0)
    return MonteCarloEstimate(mean, math.sqrt(var / trials), trials)


def harq_latency(shape: NetworkShape, chan: ChannelParams, d_hat: float) -> float:
    """Average uplink time d_hat * N_G * m / R."""
    if d_hat < 1:
        raise ValueError("d_hat must be >= 1")
    return d_hat * shape.n_total * shape.packet_bits / chan.rate_bps


# --------------------------------------------------------------------------
# Occupy CoW
# --------------------------------------------------------------------------


def occupycow_phase_probs(
    shape: NetworkShape, chan: ChannelParams, t1: float, t2: float
) -> OccupyCowParams:
    """Per-phase link failures for the two-phase relaying scheme.

    Phase k moves n_v * (m + 1) bits in its window t_k, so its outage is the
    Rayleigh outage at rate n_v*(m+1)/t_k (bandwidth-normalized, like every
    other rate term here).
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("phase durations must be > 0")
    bits = shape.n_sensors * (shape.packet_bits + 1)
    p1 = outage_probability(chan.with_rate(bits / t1))
    p2 = outage_probability(chan.with_rate(bits / t2))
    p12 = min(p1 / p2, 1.0) if p2 > 0 else 1.0
    return OccupyCowParams(p1=p1, p2=p2, p12=p12, t1=t1, t2=t2)


def occupycow_pfail(n: int, params: OccupyCowParams) -> float:
    """Fixed-schedule system failure of the two-phase relaying scheme.

    Sums, over a = 1..n-1 phase-1 survivors, the probability that at least one
    of the n-a stragglers also fails its phase-2 rescue:

        sum C(n,a) * (1-p1)^a * p1^(n-a) * (1 - (1-p12)^(n-a))

    The all-fail stratum (a = 0) carries no relays and contributes no failure
    mass under this form; the simulator and the enumeration oracle share that
    convention. Binomial masses come from scipy's log-domain pmf.
    """
    if n < 2:
        raise ValueError("need n >= 2 nodes")
    a = np.arange(1, n)
    mass = stats.binom.pmf(a, n, 1.0 - params.p1)
    rescue_fail = 1.0 - (1.0 - params.p12) ** (n - a)
    total = float(np.dot(mass, rescue_fail))
    return min(max(total, 0.0), 1.0)


def occupycow_latency(params: OccupyCowParams) -> float:
    """Total two-phase window t1 + t2."""
    return params.t1 + params.t2


# --------------------------------------------------------------------------
# ReFlexUp
# --------------------------------------------------------------------------


def reflexup_pfail(
    shape: NetworkShape,
    chan: ChannelParams,
    t_vs: float,
    p_timeout: float = 1e-4,
    rate_phase2: float | None = None,
) -> float:
    """End-to-end failure of the two-phase edge-driven uplink.

    Each relay session carries m * (fanout + 1) bits inside the phase-1
    budget t_vs, fixing the session rate; both phases run at that rate unless
    a phase-2 rate is given. Each phase fails like one Selective-Repeat
    attempt (timeout p_a or Rayleigh outage at the session rate) and the
    phases compose independently:

        P_fail = 1 - (1 - P_phase1) * (1 - P_phase2)
    """
    if t_vs <= 0:
        raise ValueError("t_vs must be > 0")
    rate1 = shape.packet_bits * (shape.relay_fanout + 1.0) / t_vs
    rate2 = rate_phase2 if rate_phase2 is not None else rate1
    p1 = srarq_pfail(p_timeout, outage_probability(chan.with_rate(rate1)))
    p2 = srarq_pfail(p_timeout, outage_probability(chan.with_rate(rate2)))
    return 1.0 - (1.0 - p1) * (1.0 - p2)


def reflexup_latency(
    shape: NetworkShape,
    chan: ChannelParams,
    cec: CecConfig,
    t_cp: float,
    rate_phase1: float | None = None,
    rate_phase2: float | None = None,
) -> ReflexupLatency:
    """Two-phase transmission time steered toward the padded-slot optimum.

    Phase 1 moves every sensor packet to its relay, phase 2 forwards the
    cached packets plus each relay's own toward the controller. Lost packets
    are re-sent bundled with their cached predecessor, so each loss costs two
    extra packet airtimes and the per-phase time is bits/R * (1 + 2*P_l).
    The reported t_cm is capped at the efficiency-optimal window
    sqrt(N*c0*t_cp); when even the loss-free transfer cannot fit inside that
    window the result is flagged infeasible (the offered rates alone cannot
    hit the target and the relays must adapt the rate upward).
    """
    rate1 = rate_phase1 if rate_phase1 is not None else chan.rate_bps
    rate2 = rate_phase2 if rate_phase2 is not None else chan.rate_bps
    if rate1 <= 0 or rate2 <= 0:
        raise ValueError("phase rates must be > 0")
    bits1 = shape.n_sensors * shape.packet_bits
    bits2 = shape.n_relays * (shape.relay_fanout + 1.0) * shape.packet_bits
    floor = bits1 / rate1 + bits2 / rate2
    p1 = outage_probability(chan.with_rate(rate1))
    p2 = outage_probability(chan.with_rate(rate2))
    with_retx = bits1 * (1.0 + 2.0 * p1) / rate1 + bits2 * (1.0 + 2.0 * p2) / rate2
    target = optimal_tcm_case3(t_cp, cec)
    infeasible = floor > target
    return ReflexupLatency(
        t_cm=min(with_retx, target),
        infeasible=infeasible,
        transfer_floor=floor,
        target=target,
    )
