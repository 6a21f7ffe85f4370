"""Channel and arrival processes, and the seeded randomness contract.

Mean service rates follow a per-link two-state Markov chain: at every slot
each link flips between the two states independently with probability
delta_t.  Realized service capacities are Rayleigh draws whose scale is set
so the sample mean equals the current mean rate.  Arrivals are Poisson,
either at a fixed rate or at an adaptive rate tied to the current channel
means.

Randomness is organized as one substream per (purpose, link), where purpose
is one of channel / service / arrival / shed.  Substreams are derived from
the run seed alone, so the environment trajectory is identical no matter
which policy is being simulated; policy comparisons under one seed are
paired.  Vectorized draws consume a substream exactly like repeated scalar
draws, so trajectories do not depend on chunk size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .topology import NetworkTopology

__all__ = [
    "RngStream",
    "TimeInvariantDelta",
    "TimeVaryingDelta",
    "ConstantDelta",
    "FixedPoisson",
    "AdaptivePoisson",
    "delta_at",
    "delta_slice",
    "rayleigh_scale",
    "initial_channel_state",
    "channel_step",
    "sample_service",
    "sample_arrivals",
    "adaptive_rate",
    "total_variation",
    "Environment",
    "EnvChunk",
    "SlotView",
    "DEFAULT_STATES",
]

DEFAULT_STATES = (0.25, 0.75)

_PURPOSES = {"channel": 0, "service": 1, "arrival": 2, "shed": 3}

# Rayleigh(scale) has mean scale * sqrt(pi/2); this factor inverts it.
_RAYLEIGH_FACTOR = math.sqrt(2.0 / math.pi)


class RngStream:
    """Named substreams: one generator per (purpose, link).

    Identical seed and draw sequence give bit-identical results across runs
    and platforms (PCG64 under the hood).  Generators are cached, so a
    substream advances monotonically over the lifetime of the stream.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gens: dict[tuple[int, int], np.random.Generator] = {}

    def generator(self, purpose: str, link: int) -> np.random.Generator:
        key = (_PURPOSES[purpose], int(link))
        gen = self._gens.get(key)
        if gen is None:
            seq = np.random.SeedSequence((self.seed, key[0], key[1]))
            gen = np.random.Generator(np.random.PCG64(seq))
            self._gens[key] = gen
        return gen


@dataclass(frozen=True)
class TimeInvariantDelta:
    """Flip probability 0.5 / sqrt(T), constant over the horizon."""


@dataclass(frozen=True)
class TimeVaryingDelta:
    """Flip probability 0.5 / sqrt(t + 1), decaying over time."""


@dataclass(frozen=True)
class ConstantDelta:
    """Fixed flip probability; value 0 freezes the channel."""

    value: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"flip probability {self.value} outside [0, 1]")


DeltaSchedule = TimeInvariantDelta | TimeVaryingDelta | ConstantDelta


def delta_at(schedule, t: int, horizon: int) -> float:
    """Flip probability at slot t for a run of length ``horizon``."""
    if t < 0 or horizon < 1:
        raise ValueError(f"need t >= 0 and horizon >= 1, got t={t} T={horizon}")
    if isinstance(schedule, TimeInvariantDelta):
        return 0.5 / math.sqrt(horizon)
    if isinstance(schedule, TimeVaryingDelta):
        return 0.5 / math.sqrt(t + 1)
    if isinstance(schedule, ConstantDelta):
        return schedule.value
    raise TypeError(f"unknown delta schedule {schedule!r}")


def delta_slice(schedule, t0: int, n: int, horizon: int) -> np.ndarray:
    """Vector of flip probabilities for slots t0 .. t0+n-1."""
    if isinstance(schedule, TimeInvariantDelta):
        return np.full(n, 0.5 / math.sqrt(horizon))
    if isinstance(schedule, TimeVaryingDelta):
        return 0.5 / np.sqrt(np.arange(t0, t0 + n, dtype=np.float64) + 1.0)
    if isinstance(schedule, ConstantDelta):
        return np.full(n, schedule.value)
    raise TypeError(f"unknown delta schedule {schedule!r}")


@dataclass(frozen=True)
class FixedPoisson:
    """Same Poisson rate on every link, every slot."""

    lam: float
    a_max: Optional[int] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"arrival rate {self.lam} is negative")


@dataclass(frozen=True)
class AdaptivePoisson:
    """Per-slot rate set to the tightest node bottleneck, see adaptive_rate."""

    a_max: Optional[int] = None


ArrivalModel = FixedPoisson | AdaptivePoisson


def rayleigh_scale(mu: float) -> float:
    """Rayleigh scale sigma with mean mu: sigma = sqrt(2/pi) * mu."""
    return _RAYLEIGH_FACTOR * mu


def initial_channel_state(num_links: int, stream: RngStream,
                          states=DEFAULT_STATES) -> np.ndarray:
    """Each link starts in one of the two states with equal probability.

    Consumes the first draw of every link's channel substream.
    """
    mu = np.empty(num_links)
    for e in range(num_links):
        u = stream.generator("channel", e).random()
        mu[e] = states[0] if u < 0.5 else states[1]
    return mu


def channel_step(mu: np.ndarray, delta: float, stream: RngStream,
                 states=DEFAULT_STATES) -> np.ndarray:
    """Advance every link's two-state chain by one slot.

    Each link flips to the other state independently with probability
    ``delta``.  One uniform per link is consumed from its channel substream.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"flip probability {delta} outside [0, 1]")
    both = states[0] + states[1]
    out = mu.copy()
    for e in range(len(mu)):
        if stream.generator("channel", e).random() < delta:
            out[e] = both - out[e]
    return out


def sample_service(mu: np.ndarray, stream: RngStream,
                   theta_cap: Optional[float] = None) -> np.ndarray:
    """One Rayleigh service-capacity draw per link, mean mu[e].

    Optionally clipped at theta_cap (off by default: the channel model is
    heavy-tailed unless a bounded regime is requested explicitly).
    """
    theta = np.empty(len(mu))
    for e in range(len(mu)):
        if mu[e] <= 0:
            raise ValueError(f"mean service rate mu[{e}]={mu[e]} must be positive")
        theta[e] = stream.generator("service", e).rayleigh(scale=rayleigh_scale(mu[e]))
    if theta_cap is not None:
        np.minimum(theta, theta_cap, out=theta)
    return theta


def sample_arrivals(model, lam_vec: np.ndarray, stream: RngStream) -> np.ndarray:
    """One Poisson draw per link; truncated at the model's a_max if set."""
    lam = np.asarray(lam_vec, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("arrival rates must be nonnegative")
    a = np.empty(len(lam), dtype=np.int64)
    for e in range(len(lam)):
        a[e] = stream.generator("arrival", e).poisson(lam[e])
    if model.a_max is not None:
        np.minimum(a, model.a_max, out=a)
    return a


def adaptive_rate(topology: NetworkTopology, mu: np.ndarray) -> float:
    """Tightest per-node bound on a uniform arrival rate.

    For each node v with at least one adjacent link, the load it can carry is
    limited by 1 / sum over adjacent links of 1/mu_e; the rate is the minimum
    over nodes.  Nodes without links impose no constraint.
    """
    if np.any(mu <= 0):
        raise ValueError("mean service rates must be positive")
    best = math.inf
    for v in range(topology.num_nodes):
        ids = topology._incidence[v]
        if not ids:
            continue
        denom = sum(1.0 / mu[e] for e in ids)
        best = min(best, 1.0 / denom)
    if math.isinf(best):
        raise ValueError("topology has no links; adaptive rate undefined")
    return best


def total_variation(mu_trace: np.ndarray, t1: int, t2: int) -> float:
    """Cumulative sup-norm drift of the mean-rate trace over (t1, t2].

    ``mu_trace`` holds one row per slot; the result is
    sum over t in t1+1 .. t2 of max_e |mu_trace[t, e] - mu_trace[t-1, e]|.
    """
    trace = np.asarray(mu_trace, dtype=np.float64)
    if trace.ndim != 2:
        raise ValueError("mu_trace must be 2-d (slots x links)")
    if not (0 <= t1 < t2 <= len(trace) - 1):
        raise IndexError(f"need 0 <= t1 < t2 <= {len(trace) - 1}, "
                         f"got t1={t1} t2={t2}")
    diff = np.abs(trace[t1 + 1:t2 + 1] - trace[t1:t2])
    return float(np.sum(np.max(diff, axis=1)))


@dataclass
class EnvChunk:
    """Environment realization for slots t0 .. t0+len-1 (policy-independent)."""

    t0: int
    mu: np.ndarray        # (n, E) mean service rates after the slot's flip
    theta: np.ndarray     # (n, E) realized service capacities
    arrivals: np.ndarray  # (n, E) packet arrivals, float-valued integers
    lam: np.ndarray       # (n,) arrival rate shared by all links
    gamma_inc: np.ndarray  # (n,) per-slot sup-norm change of mu

    def __len__(self) -> int:
        return len(self.lam)


@dataclass
class SlotView:
    """One slot's realized environment."""

    t: int
    mu: np.ndarray
    theta: np.ndarray
    arrivals: np.ndarray
    lam: float
    gamma_inc: float


class Environment:
    """Sequential, chunked generator of the exogenous processes.

    All channel flips, service draws and arrivals are functions of the seed
    only; schedulers cannot perturb them.  Chunks must be consumed in order.
    The slot ordering within a chunk matches the per-slot contract: the
    channel advances first, the adaptive rate (if any) is computed from the
    post-step means, then arrivals and capacities are realized.
    """

    def __init__(self, topology: NetworkTopology, delta_schedule, arrival_model,
                 horizon: int, seed: int, states=DEFAULT_STATES,
                 theta_cap: Optional[float] = None, chunk: int = 8192):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        if chunk < 1:
            raise ValueError("chunk size must be positive")
        self.topology = topology
        self.delta_schedule = delta_schedule
        self.arrival_model = arrival_model
        self.horizon = int(horizon)
        self.states = (float(states[0]), float(states[1]))
        self.theta_cap = theta_cap
        self.chunk = int(chunk)
        self.stream = RngStream(seed)
        E = topology.num_links
        self._gen_channel = [self.stream.generator("channel", e) for e in range(E)]
        self._gen_service = [self.stream.generator("service", e) for e in range(E)]
        self._gen_arrival = [self.stream.generator("arrival", e) for e in range(E)]
        init = np.empty(E)
        for e in range(E):
            u = self._gen_channel[e].random()
            init[e] = self.states[0] if u < 0.5 else self.states[1]
        self._state_idx = (init == self.states[1]).astype(np.int64)
        self._prev_mu: Optional[np.ndarray] = None
        self._next_t = 0
        self._cur: Optional[EnvChunk] = None
        if isinstance(arrival_model, AdaptivePoisson):
            if E == 0:
                raise ValueError("adaptive arrivals need at least one link")
            inc = np.zeros((topology.num_nodes, E))
            for v in range(topology.num_nodes):
                for e in topology._incidence[v]:
                    inc[v, e] = 1.0
            self._incidence_matrix = inc[inc.sum(axis=1) > 0]
        else:
            self._incidence_matrix = None

    def next_chunk(self) -> EnvChunk:
        """Realize the next block of slots (at most ``chunk``)."""
        t0 = self._next_t
        if t0 >= self.horizon:
            raise RuntimeError("environment exhausted: horizon reached")
        n = min(self.chunk, self.horizon - t0)
        E = self.topology.num_links
        s0, s1 = self.states
        deltas = delta_slice(self.delta_schedule, t0, n, self.horizon)

        flips = np.empty((n, E), dtype=np.int64)
        for e in range(E):
            flips[:, e] = self._gen_channel[e].random(n) < deltas
        idx = (self._state_idx[None, :] + np.cumsum(flips, axis=0)) % 2
        states_arr = np.array([s0, s1])
        mu = states_arr[idx]
        self._state_idx = idx[-1].copy()

        prev = self._prev_mu
        gamma_inc = np.empty(n)
        if n > 1:
            gamma_inc[1:] = np.max(np.abs(mu[1:] - mu[:-1]), axis=1)
        gamma_inc[0] = 0.0 if prev is None else float(np.max(np.abs(mu[0] - prev)))
        self._prev_mu = mu[-1].copy()

        theta = np.empty((n, E))
        for e in range(E):
            theta[:, e] = self._gen_service[e].rayleigh(
                scale=_RAYLEIGH_FACTOR * mu[:, e])
        if self.theta_cap is not None:
            np.minimum(theta, self.theta_cap, out=theta)

        if isinstance(self.arrival_model, FixedPoisson):
            lam = np.full(n, self.arrival_model.lam)
        else:
            node_load = (1.0 / mu) @ self._incidence_matrix.T
            lam = 1.0 / np.max(node_load, axis=1)
        arrivals = np.empty((n, E))
        for e in range(E):
            arrivals[:, e] = self._gen_arrival[e].poisson(lam=lam)
        if self.arrival_model.a_max is not None:
            np.minimum(arrivals, float(self.arrival_model.a_max), out=arrivals)

        self._next_t = t0 + n
        out = EnvChunk(t0=t0, mu=mu, theta=theta, arrivals=arrivals,
                       lam=lam, gamma_inc=gamma_inc)
        self._cur = out
        return out

    def slot(self, t: int) -> SlotView:
        """Single-slot access; slots must be visited in order."""
        cur = self._cur
        if cur is None or t >= cur.t0 + len(cur):
            cur = self.next_chunk()
        if not cur.t0 <= t < cur.t0 + len(cur):
            raise RuntimeError(f"environment slots must be consumed in order; "
                               f"slot {t} is outside the current chunk")
        i = t - cur.t0
        return SlotView(t=t, mu=cur.mu[i], theta=cur.theta[i],
                        arrivals=cur.arrivals[i], lam=float(cur.lam[i]),
                        gamma_inc=float(cur.gamma_inc[i]))
