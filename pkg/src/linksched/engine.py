"""Per-slot simulation loop, queue dynamics, metrics and the coupled harness.

Slot structure (the decision always precedes the randomness it is scored
against): the channel advances, the scheduler picks an activation from past
information only, arrivals and capacities realize, effective service is
activation times capacity, queues update by the positive-part recursion, and
the slot's feedback is delivered.

Two interchangeable backends drive the loop: a compiled chunk kernel and a
pure-Python reference (see linksched.kernels).  Both consume the identical
pre-drawn environment streams and perform floating-point reductions in the
same order, so a run is bit-identical whichever backend executes it.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .policies import (
    Feedback,
    IdealizedMaxWeight,
    PolicyConfig,
    make_policy,
)
from .solver import ENUMERATION_LIMIT, activation_table, max_weight_activation
from .stochastic import (
    DEFAULT_STATES,
    AdaptivePoisson,
    ConstantDelta,
    Environment,
    FixedPoisson,
    TimeInvariantDelta,
    TimeVaryingDelta,
)
from .topology import (
    ConflictGraph,
    ExplicitSet,
    NetworkTopology,
    NodeExclusive,
    build_grid,
    from_edges,
)

__all__ = [
    "SimConfig",
    "MetricsLog",
    "SimState",
    "CouplingViolation",
    "queue_update",
    "step",
    "run",
    "coupled_run",
    "frame_regret",
    "bits_from_mask",
]


def queue_update(q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Positive-part recursion q' = max(q + a - b, 0), per link."""
    if np.any(np.asarray(a) < 0) or np.any(np.asarray(b) < 0):
        raise ValueError("arrivals and services must be nonnegative")
    return np.maximum(q + a - b, 0.0)


def _seq_sum(values) -> float:
    """Ascending-index float sum; matches the compiled kernel's reduction."""
    total = 0.0
    for v in values:
        total += float(v)
    return total


def bits_from_mask(mask: int, num_links: int) -> np.ndarray:
    bits = np.zeros(num_links, dtype=np.int8)
    for e in range(num_links):
        if mask >> e & 1:
            bits[e] = 1
    return bits


@dataclass(frozen=True)
class SimConfig:
    """Everything a run needs; (config, seed) fully determines its output."""

    topology: NetworkTopology
    interference: object = NodeExclusive()
    arrivals: object = FixedPoisson(0.11)
    delta: object = TimeInvariantDelta()
    policy: PolicyConfig = PolicyConfig("mw_ucb")
    horizon: int = 10_000
    seed: int = 0
    states: tuple[float, float] = DEFAULT_STATES
    theta_cap: Optional[float] = None
    stride: Optional[int] = None
    log_regret: bool = False
    record_decisions: bool = False
    chunk: int = 8192

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.stride is not None and self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.log_regret and self.policy.kind == "idealized_mw":
            raise ValueError("per-frame regret is defined for the frame-based "
                             "policies, not idealized_mw")

    def resolved_stride(self) -> int:
        if self.stride is not None:
            return self.stride
        return 100 if self.horizon >= 100_000 else 1

    def to_dict(self) -> dict:
        """Canonical, JSON-able form (used for hashing and worker transport)."""
        if isinstance(self.interference, NodeExclusive):
            interference = {"kind": "node_exclusive"}
        elif isinstance(self.interference, ConflictGraph):
            interference = {"kind": "conflict_graph",
                            "conflicts": [list(p) for p in self.interference.conflicts]}
        elif isinstance(self.interference, ExplicitSet):
            interference = {"kind": "explicit",
                            "activations": [list(v) for v in self.interference.activations]}
        else:
            raise TypeError(f"unknown interference model {self.interference!r}")
        if isinstance(self.arrivals, FixedPoisson):
            arrivals = {"kind": "fixed", "lambda": self.arrivals.lam,
                        "a_max": self.arrivals.a_max}
        elif isinstance(self.arrivals, AdaptivePoisson):
            arrivals = {"kind": "adaptive", "a_max": self.arrivals.a_max}
        else:
            raise TypeError(f"unknown arrival model {self.arrivals!r}")
        if isinstance(self.delta, TimeInvariantDelta):
            delta = {"kind": "time_invariant"}
        elif isinstance(self.delta, TimeVaryingDelta):
            delta = {"kind": "time_varying"}
        elif isinstance(self.delta, ConstantDelta):
            delta = {"kind": "constant", "value": self.delta.value}
        else:
            raise TypeError(f"unknown delta schedule {self.delta!r}")
        return {
            "topology": {"nodes": self.topology.num_nodes,
                         "edges": [list(l) for l in self.topology.links]},
            "interference": interference,
            "arrivals": arrivals,
            "delta": delta,
            "channel": {"states": list(self.states), "theta_cap": self.theta_cap},
            "policy": {"kind": self.policy.kind, "tau": self.policy.tau,
                       "d": self.policy.d, "alpha": self.policy.alpha},
            "horizon": self.horizon,
            "seed": self.seed,
            "stride": self.stride,
            "log_regret": self.log_regret,
            "record_decisions": self.record_decisions,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    @staticmethod
    def from_dict(d: dict) -> "SimConfig":
        topo_spec = d["topology"]
        if "grid" in topo_spec:
            topology = build_grid(*topo_spec["grid"])
        else:
            topology = from_edges(topo_spec["nodes"], topo_spec["edges"])
        inter_spec = d.get("interference", {"kind": "node_exclusive"})
        kind = inter_spec["kind"]
        if kind == "node_exclusive":
            interference = NodeExclusive()
        elif kind == "conflict_graph":
            interference = ConflictGraph(tuple(tuple(p) for p in inter_spec["conflicts"]))
        elif kind == "explicit":
            interference = ExplicitSet(tuple(tuple(v) for v in inter_spec["activations"]))
        else:
            raise ValueError(f"unknown interference kind {kind!r}")
        arr_spec = d.get("arrivals", {"kind": "fixed", "lambda": 0.11})
        if arr_spec["kind"] == "fixed":
            arrivals = FixedPoisson(arr_spec["lambda"], arr_spec.get("a_max"))
        elif arr_spec["kind"] == "adaptive":
            arrivals = AdaptivePoisson(arr_spec.get("a_max"))
        else:
            raise ValueError(f"unknown arrival kind {arr_spec['kind']!r}")
        delta_spec = d.get("delta", {"kind": "time_invariant"})
        if delta_spec["kind"] == "time_invariant":
            delta = TimeInvariantDelta()
        elif delta_spec["kind"] == "time_varying":
            delta = TimeVaryingDelta()
        elif delta_spec["kind"] == "constant":
            delta = ConstantDelta(delta_spec.get("value", 0.0))
        else:
            raise ValueError(f"unknown delta kind {delta_spec['kind']!r}")
        pol = d.get("policy", {"kind": "mw_ucb"})
        channel = d.get("channel", {})
        return SimConfig(
            topology=topology,
            interference=interference,
            arrivals=arrivals,
            delta=delta,
            policy=PolicyConfig(pol.get("kind", "mw_ucb"), pol.get("tau"),
                                pol.get("d"), pol.get("alpha", 0.5)),
            horizon=int(d["horizon"]),
            seed=int(d.get("seed", 0)),
            states=tuple(channel.get("states", DEFAULT_STATES)),
            theta_cap=channel.get("theta_cap"),
            stride=d.get("stride"),
            log_regret=bool(d.get("log_regret", False)),
            record_decisions=bool(d.get("record_decisions", False)),
        )


@dataclass
class MetricsLog:
    """Sampled run metrics plus run identity.

    ``t`` holds completed-slot counts (strictly increasing, first 0 and last
    the horizon); ``total_backlog[i]`` is the queue total after t[i] slots
    and ``gamma[i]`` the cumulative channel variation over the realized mean
    trace at that point.  ``frames``/``frame_regret`` are per-frame when
    regret logging is on; ``decisions`` is one activation bitmask per slot
    when recording is on.
    """

    t: np.ndarray
    total_backlog: np.ndarray
    gamma: np.ndarray
    q_final: np.ndarray
    q_total_final: float
    frames: Optional[np.ndarray] = None
    frame_regret: Optional[np.ndarray] = None
    decisions: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def equals(self, other: "MetricsLog") -> bool:
        """Bit-exact comparison of everything except timing metadata."""
        same = (
            np.array_equal(self.t, other.t)
            and np.array_equal(self.total_backlog, other.total_backlog)
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.q_final, other.q_final)
            and self.q_total_final == other.q_total_final
        )
        for a, b in ((self.frames, other.frames),
                     (self.frame_regret, other.frame_regret),
                     (self.decisions, other.decisions)):
            same = same and ((a is None) == (b is None))
            if same and a is not None:
                same = np.array_equal(a, b)
        return same


class CouplingViolation(AssertionError):
    """A pathwise queue inequality failed in a coupled run."""

    def __init__(self, slot: int, link: int, q: float, q_imaginary: float,
                 detail: str):
        self.slot = slot
        self.link = link
        self.q = q
        self.q_imaginary = q_imaginary
        super().__init__(f"slot {slot}, link {link}: q={q!r}, "
                         f"q_imaginary={q_imaginary!r}: {detail}")


@dataclass
class SimState:
    """Queue state between slots of a stepwise simulation."""

    t: int
    q: np.ndarray


def _policy_argmax(config: SimConfig):
    """Argmax callable for the policies, plus the table if one exists."""
    topo = config.topology
    if topo.num_links <= ENUMERATION_LIMIT:
        table = activation_table(config.interference, topo)
        return table.argmax, table
    def argmax(weights):
        bits = max_weight_activation(weights, config.interference, topo)
        return bits, float(np.dot(bits, weights)), None
    return argmax, None


def step(state: SimState, policy, env: Environment, t: int):
    """Advance one slot: decide, realize, serve, update, feed back."""
    if t != state.t:
        raise ValueError(f"state is at slot {state.t}, cannot step slot {t}")
    view = env.slot(t)
    if isinstance(policy, IdealizedMaxWeight):
        x = policy.decide(t, state.q, view.mu)
    else:
        x = policy.decide(t, queues=state.q if t % policy.tau == 0 else None)
    b = x * view.theta
    q_next = queue_update(state.q, view.arrivals, b)
    fb = Feedback(t=t, x=x, a=view.arrivals, b=b, q_next=q_next)
    policy.observe(fb)
    return SimState(t=t + 1, q=q_next), fb


def _sample_positions(t0: int, n: int, stride: int, horizon: int,
                      frame_len: int | None = None) -> np.ndarray:
    """Chunk-local indices of the slots whose completion is sampled.

    Samples land every ``stride`` completed slots and at the horizon; when
    per-frame regret is logged, frame boundaries are sampled too so every
    regret value has a series row.
    """
    completed = np.arange(t0 + 1, t0 + n + 1)
    sel = (completed % stride == 0) | (completed == horizon)
    if frame_len is not None:
        sel |= completed % frame_len == 0
    return np.nonzero(sel)[0]


def run(config: SimConfig, backend: str = "auto") -> MetricsLog:
    """Execute the configured run and return its sampled metrics.

    ``backend`` is "auto" (compiled when available), "compiled" or "pure".
    The metrics are identical either way.
    """
    t_start = time.perf_counter()
    topo = config.topology
    E = topo.num_links
    argmax, table = _policy_argmax(config)
    use_compiled = kernels.select_backend(backend, table is not None) == "compiled"
    if config.log_regret and table is None:
        raise ValueError("regret logging needs an enumerable admissible set")

    env = Environment(topo, config.delta, config.arrivals, config.horizon,
                      config.seed, states=config.states,
                      theta_cap=config.theta_cap, chunk=config.chunk)
    T = config.horizon
    stride = config.resolved_stride()
    policy = make_policy(config.policy, E, T, argmax)
    windowed = not isinstance(policy, IdealizedMaxWeight)
    tau, d = (policy.tau, policy.d) if windowed else (None, None)

    ts = [0]
    backlogs = [0.0]
    gammas = [0.0]
    frames: list[int] = []
    regvals: list[float] = []
    masks_all: list[np.ndarray] = []
    gamma_running = 0.0
    sample_frames = tau if config.log_regret else None

    if use_compiled:
        from . import _core
        q = np.zeros(E)
        w = np.zeros(E)
        phi = np.zeros(E)
        nact = np.zeros(E, dtype=np.int64)
        ring_b = np.zeros((d or 1, E))
        ring_x = np.zeros((d or 1, E), dtype=np.int8)
        b_prev = np.zeros(E)
        x_prev = np.zeros(E, dtype=np.int8)
        wbar = np.zeros(E)
        wmu = np.zeros(E)
        regret_state = np.zeros(1)
        ucb_c = 1.5 * math.log(tau) if windowed else 0.0
        backlog_buf = np.zeros(env.chunk)
        mask_buf = np.zeros(env.chunk, dtype=np.int64)
        while env._next_t < T:
            chunk = env.next_chunk()
            n = len(chunk.lam)
            nf_cap = (n // (tau or T)) + 2
            frame_buf = np.zeros(nf_cap, dtype=np.int64)
            regval_buf = np.zeros(nf_cap)
            if windowed:
                nf = _core.advance_window(
                    chunk.t0, n, T, tau, d, ucb_c,
                    chunk.theta, chunk.arrivals, chunk.mu,
                    table.rows, table.masks,
                    q, w, phi, nact, ring_b, ring_x, b_prev, x_prev,
                    wbar, wmu, backlog_buf[:n], mask_buf[:n],
                    1 if config.log_regret else 0,
                    regret_state, frame_buf, regval_buf)
                frames.extend(int(j) for j in frame_buf[:nf])
                regvals.extend(float(v) for v in regval_buf[:nf])
            else:
                _core.advance_idealized(
                    n, chunk.theta, chunk.arrivals, chunk.mu,
                    table.rows, table.masks,
                    q, wmu, backlog_buf[:n], mask_buf[:n])
            sel = _sample_positions(chunk.t0, n, stride, T, sample_frames)
            gam_cum = gamma_running + np.cumsum(chunk.gamma_inc)
            gamma_running = float(gam_cum[-1])
            ts.extend(int(chunk.t0 + 1 + i) for i in sel)
            backlogs.extend(float(backlog_buf[i]) for i in sel)
            gammas.extend(float(gam_cum[i]) for i in sel)
            if config.record_decisions:
                masks_all.append(mask_buf[:n].copy())
        q_final = q.copy()
    else:
        q = np.zeros(E)
        regacc = 0.0
        while env._next_t < T:
            chunk = env.next_chunk()
            n = len(chunk.lam)
            sel = set(int(i) for i in
                      _sample_positions(chunk.t0, n, stride, T, sample_frames))
            gam_cum = gamma_running + np.cumsum(chunk.gamma_inc)
            gamma_running = float(gam_cum[-1])
            chunk_masks = (np.zeros(n, dtype=np.int64)
                           if config.record_decisions else None)
            for i in range(n):
                t = chunk.t0 + i
                if windowed:
                    x = policy.decide(
                        t, queues=q if t % tau == 0 else None)
                else:
                    x = policy.decide(t, q, chunk.mu[i])
                b = x * chunk.theta[i]
                q = np.maximum(q + chunk.arrivals[i] - b, 0.0)
                policy.observe(Feedback(t=t, x=x, a=chunk.arrivals[i], b=b,
                                        q_next=q))
                if config.log_regret and windowed:
                    wmu_t = policy.frame_weights * chunk.mu[i]
                    obj = table.objectives(wmu_t)
                    regacc += float(np.max(obj)) - float(obj[policy.last_row])
                    if t % tau == tau - 1 or t == T - 1:
                        frames.append(t // tau)
                        regvals.append(regacc)
                        regacc = 0.0
                if chunk_masks is not None:
                    if policy.last_row is not None:
                        chunk_masks[i] = table.masks[policy.last_row]
                    else:
                        chunk_masks[i] = int(
                            sum(1 << e for e in range(E) if x[e]))
                if i in sel:
                    ts.append(t + 1)
                    backlogs.append(_seq_sum(q))
                    gammas.append(float(gam_cum[i]))
            if chunk_masks is not None:
                masks_all.append(chunk_masks)
        q_final = q.copy()

    log = MetricsLog(
        t=np.array(ts, dtype=np.int64),
        total_backlog=np.array(backlogs),
        gamma=np.array(gammas),
        q_final=q_final,
        q_total_final=_seq_sum(q_final),
        frames=np.array(frames, dtype=np.int64) if config.log_regret else None,
        frame_regret=np.array(regvals) if config.log_regret else None,
        decisions=np.concatenate(masks_all) if masks_all else None,
        meta={
            "config_hash": config.config_hash(),
            "seed": config.seed,
            "policy": config.policy.kind,
            "tau": tau,
            "d": d,
            "horizon": T,
            "stride": stride,
            "backend": "compiled" if use_compiled else "pure",
            "elapsed_s": time.perf_counter() - t_start,
        },
    )
    return log


def frame_regret(mu_trace: np.ndarray, w: np.ndarray, decisions: np.ndarray,
                 model, topology: NetworkTopology,
                 frame: Optional[tuple[int, int]] = None) -> float:
    """Weighted-service gap to the omniscient per-slot maximizer.

    For each slot of ``frame`` (half-open, defaulting to the whole trace) the
    exact solver maximizes sum_e w[e] * mu[t, e] * x_e over the admissible
    set; the regret is that total minus what ``decisions`` achieved under the
    same frozen weights.  Decisions may be an (n, E) bit matrix or a bitmask
    vector aligned with ``mu_trace``.
    """
    table = activation_table(model, topology)
    mu_trace = np.asarray(mu_trace, dtype=np.float64)
    E = topology.num_links
    dec = np.asarray(decisions)
    if dec.ndim == 1:
        dec = np.stack([bits_from_mask(int(m), E) for m in dec])
    lo, hi = frame if frame is not None else (0, len(mu_trace))
    if not (0 <= lo <= hi <= len(mu_trace) and hi <= len(dec)):
        raise IndexError(f"frame {frame} outside trace of length {len(mu_trace)}")
    total = 0.0
    w = np.asarray(w, dtype=np.float64)
    for t in range(lo, hi):
        wmu = w * mu_trace[t]
        obj = table.objectives(wmu)
        chosen = 0.0
        for e in range(E):
            chosen += dec[t, e] * wmu[e]
        total += float(np.max(obj)) - chosen
    return total


def coupled_run(config: SimConfig, shed_fraction: float,
                tolerance: float = 1e-9):
    """Drive the policy on the real system and mirror its decisions onto an
    imaginary system fed a thinned copy of the arrivals.

    Each arriving packet is kept independently with probability
    ``shed_fraction``, so thinned arrivals never exceed the originals.  Every
    slot the sandwich q_imaginary <= q <= q_imaginary + shed_total is
    asserted per link, and in the bounded regime (a_max and theta_cap both
    set) the one-slot change of either system's queue must stay within
    a_max + theta_cap.  Inequalities get a small absolute-plus-relative
    ``tolerance`` for float rounding.  Violations raise CouplingViolation.

    Returns the metrics of the original and the imaginary system.
    """
    if not 0.0 <= shed_fraction <= 1.0:
        raise ValueError(f"shed fraction {shed_fraction} outside [0, 1]")
    topo = config.topology
    E = topo.num_links
    argmax, table = _policy_argmax(config)
    env = Environment(topo, config.delta, config.arrivals, config.horizon,
                      config.seed, states=config.states,
                      theta_cap=config.theta_cap, chunk=config.chunk)
    T = config.horizon
    stride = config.resolved_stride()
    policy = make_policy(config.policy, E, T, argmax)
    windowed = not isinstance(policy, IdealizedMaxWeight)
    a_max = config.arrivals.a_max
    bounded = a_max is not None and config.theta_cap is not None
    lipschitz = (a_max + config.theta_cap) if bounded else None
    shed_gens = [env.stream.generator("shed", e) for e in range(E)]

    q = np.zeros(E)
    qi = np.zeros(E)
    shed_total = np.zeros(E)
    ts = [0]
    backlogs = [0.0]
    backlogs_i = [0.0]
    gammas = [0.0]
    gamma_running = 0.0

    while env._next_t < T:
        chunk = env.next_chunk()
        n = len(chunk.lam)
        sel = set(int(i) for i in _sample_positions(chunk.t0, n, stride, T))
        gam_cum = gamma_running + np.cumsum(chunk.gamma_inc)
        gamma_running = float(gam_cum[-1])
        thinned = np.empty((n, E))
        for e in range(E):
            counts = chunk.arrivals[:, e].astype(np.int64)
            thinned[:, e] = shed_gens[e].binomial(counts, shed_fraction)
        for i in range(n):
            t = chunk.t0 + i
            if windowed:
                x = policy.decide(t, queues=q if t % policy.tau == 0 else None)
            else:
                x = policy.decide(t, q, chunk.mu[i])
            b = x * chunk.theta[i]
            q_old = q
            qi_old = qi
            q = np.maximum(q + chunk.arrivals[i] - b, 0.0)
            qi = np.maximum(qi + thinned[i] - b, 0.0)
            shed_total = shed_total + (chunk.arrivals[i] - thinned[i])
            policy.observe(Feedback(t=t, x=x, a=chunk.arrivals[i], b=b,
                                    q_next=q))
            for e in range(E):
                tol = tolerance * (1.0 + q[e])
                if qi[e] > q[e] + tol:
                    raise CouplingViolation(
                        t, e, q[e], qi[e],
                        "imaginary queue exceeds the original")
                if q[e] > qi[e] + shed_total[e] + tol:
                    raise CouplingViolation(
                        t, e, q[e], qi[e],
                        f"original exceeds imaginary + shed sum "
                        f"{shed_total[e]!r}")
                if bounded:
                    if abs(q[e] - q_old[e]) > lipschitz + tolerance:
                        raise CouplingViolation(
                            t, e, q[e], qi[e],
                            f"one-slot change {abs(q[e] - q_old[e])!r} beyond "
                            f"{lipschitz}")
                    if abs(qi[e] - qi_old[e]) > lipschitz + tolerance:
                        raise CouplingViolation(
                            t, e, q[e], qi[e],
                            f"imaginary one-slot change beyond {lipschitz}")
            if i in sel:
                ts.append(t + 1)
                backlogs.append(_seq_sum(q))
                backlogs_i.append(_seq_sum(qi))
                gammas.append(float(gam_cum[i]))

    t_arr = np.array(ts, dtype=np.int64)
    gam_arr = np.array(gammas)
    meta = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "policy": config.policy.kind,
        "shed_fraction": shed_fraction,
        "horizon": T,
    }
    original = MetricsLog(t=t_arr, total_backlog=np.array(backlogs),
                          gamma=gam_arr, q_final=q.copy(),
                          q_total_final=_seq_sum(q), meta=dict(meta))
    imaginary = MetricsLog(t=t_arr.copy(), total_backlog=np.array(backlogs_i),
                           gamma=gam_arr.copy(), q_final=qi.copy(),
                           q_total_final=_seq_sum(qi),
                           meta=dict(meta, system="imaginary"))
    return original, imaginary
