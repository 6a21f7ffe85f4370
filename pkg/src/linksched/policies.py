"""Scheduling policies and their sliding-window statistics.

Three schedulers share one decision rule, "activate the admissible set with
the largest total weight", and differ in how the per-link weights are built:

* MaxWeightUCB: the horizon is split into frames of length tau.  At each
  frame start the queue backlogs are frozen into normalized weights; within
  the frame, per-link mean service rates are estimated from the last d
  observed capacities (window statistics restart with the frame) and an
  optimism bonus is added.  Only feedback from links it activated is ever
  used: the policy is implementable under partial observability.
* RestartUCB: the special case d = tau (the window spans the whole frame).
* IdealizedMaxWeight: weights queue * true mean rate every slot.  This needs
  the true channel means, so it is a benchmark, not an implementable policy.

The convention 0/0 = 0 applies to both the normalized queue weights and the
empirical means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "POLICY_KINDS",
    "PolicyConfig",
    "SlidingWindowStats",
    "Feedback",
    "default_hyperparams",
    "default_window",
    "frame_reset",
    "window_update",
    "ucb_weights",
    "MaxWeightUCB",
    "RestartUCB",
    "IdealizedMaxWeight",
    "make_policy",
]

POLICY_KINDS = ("mw_ucb", "restart_ucb", "idealized_mw")


def _snap_ceil(x: float) -> int:
    """ceil with a tolerance snap so T**(2/3) at round powers stays exact."""
    nearest = round(x)
    if abs(x - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(x))


def default_window(tau: int, alpha: float) -> int:
    """Window size for frame length tau: min(tau, 2*ceil(tau^((2/3)(1-a))) + 150)."""
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    d = 2 * _snap_ceil(tau ** ((2.0 / 3.0) * (1.0 - alpha))) + 150
    return min(tau, d)


def default_hyperparams(horizon: int, alpha: float) -> tuple[int, int]:
    """Frame length and window size for a run of length ``horizon``.

    tau = ceil(T^(2/3)); the window follows default_window(tau, alpha).
    alpha is the assumed growth exponent of the channel variation (larger
    alpha, faster drift, smaller window).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    tau = _snap_ceil(horizon ** (2.0 / 3.0))
    return tau, default_window(tau, alpha)


@dataclass(frozen=True)
class PolicyConfig:
    """Which scheduler to run and its frame/window hyperparameters.

    tau and d left as None are filled from default_hyperparams at resolve
    time; alpha only matters for that derivation.
    """

    kind: str
    tau: Optional[int] = None
    d: Optional[int] = None
    alpha: float = 0.5

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}, "
                             f"expected one of {POLICY_KINDS}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.tau is not None and self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.d is not None and self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.tau is not None and self.d is not None and self.d > self.tau:
            raise ValueError(f"window d={self.d} exceeds frame tau={self.tau}")

    def resolved(self, horizon: int) -> tuple[int, int]:
        """Concrete (tau, d) for this run, applying defaults and clamps."""
        tau = self.tau if self.tau is not None else \
            default_hyperparams(horizon, self.alpha)[0]
        if self.kind == "restart_ucb":
            return tau, tau
        d = self.d if self.d is not None else default_window(tau, self.alpha)
        if d > tau:
            raise ValueError(f"window d={d} exceeds frame tau={tau}")
        return tau, d


@dataclass
class Feedback:
    """What a slot reveals to the scheduler.

    b is the effective service x * theta: capacities of links that were not
    activated are never exposed, which is the partial-observability contract.
    """

    t: int
    x: np.ndarray       # (E,) int8 activation bits
    a: np.ndarray       # (E,) arrivals
    b: np.ndarray       # (E,) observed effective service, 0 where x is 0
    q_next: np.ndarray  # (E,) queue lengths after the slot


class SlidingWindowStats:
    """Per-link window sums over the last d slots of the current frame.

    phi[e] and nact[e] are maintained recursively (subtract the slot leaving
    the window, add the newest feedback) and always equal the direct sums of
    observed capacities / activation counts over slots
    max(frame_start, t - d) .. t-1.
    """

    def __init__(self, num_links: int, d: int):
        if d < 1:
            raise ValueError(f"window size must be >= 1, got {d}")
        self.num_links = num_links
        self.d = d
        self.phi = np.zeros(num_links)
        self.nact = np.zeros(num_links, dtype=np.int64)
        self.ring_b = np.zeros((d, num_links))
        self.ring_x = np.zeros((d, num_links), dtype=np.int8)
        self.frame_start = 0
        self.t = 0

    def reset(self, t: int):
        self.phi[:] = 0.0
        self.nact[:] = 0
        self.ring_b[:] = 0.0
        self.ring_x[:] = 0
        self.frame_start = t
        self.t = t

    def mu_hat(self) -> np.ndarray:
        """Empirical mean capacity per link, 0 where nothing was observed."""
        return np.divide(self.phi, self.nact,
                         out=np.zeros(self.num_links), where=self.nact > 0)


def frame_reset(stats: SlidingWindowStats, queues: np.ndarray,
                t: int) -> tuple[SlidingWindowStats, np.ndarray]:
    """Start a frame at slot t: clear the window, freeze queue weights.

    Weights are the backlogs normalized by their maximum (0/0 = 0), so they
    lie in [0, 1] and the largest queue gets weight 1.  ``stats`` is cleared
    in place and returned along with the frozen weight vector.
    """
    stats.reset(t)
    q = np.asarray(queues, dtype=np.float64)
    qmax = float(np.max(q)) if len(q) else 0.0
    if qmax > 0.0:
        w = q / qmax
    else:
        w = np.zeros(len(q))
    return stats, w


def window_update(stats: SlidingWindowStats, feedback: Feedback,
                  t: int) -> SlidingWindowStats:
    """Advance the window sums to serve the decision at slot t.

    Requires the feedback of slot t-1 and t strictly inside the current
    frame; updates must be applied for consecutive slots.
    """
    if feedback is None or feedback.t != t - 1:
        have = None if feedback is None else feedback.t
        raise ValueError(f"window update at slot {t} needs feedback for slot "
                         f"{t - 1}, got {have}")
    if t != stats.t + 1:
        raise ValueError(f"window updates must be consecutive: stats at slot "
                         f"{stats.t}, update for {t}")
    d = stats.d
    # Slot t-1-d leaves the window exactly when it was inside the frame; its
    # entry sits where the newest feedback is about to be written.
    idx = (t - 1) % d
    if t - stats.frame_start >= d + 1:
        stats.phi -= stats.ring_b[idx]
        stats.nact -= stats.ring_x[idx]
    stats.phi += feedback.b
    stats.nact += feedback.x
    stats.ring_b[idx] = feedback.b
    stats.ring_x[idx] = feedback.x
    stats.t = t
    return stats


def ucb_weights(stats: SlidingWindowStats, w: np.ndarray, tau: int) -> np.ndarray:
    """Optimistic weights min{w * mu_hat + sqrt(1.5 ln(tau) / n), 1}.

    Links never observed this window get the maximal weight 1 (their bonus
    is infinite before clamping), so every link is eventually explored.
    Outputs always lie in [0, 1].
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    ucb_c = 1.5 * math.log(tau)
    mu_hat = stats.mu_hat()
    with np.errstate(divide="ignore"):
        rho = np.sqrt(ucb_c / stats.nact)
    return np.minimum(w * mu_hat + rho, 1.0)


class MaxWeightUCB:
    """Frame-restarted max-weight scheduling with sliding-window optimism.

    ``argmax`` maps a weight vector to (bits, value, row) over the admissible
    set; the policy itself never sees channel means, only its own feedback.
    """

    kind = "mw_ucb"

    def __init__(self, num_links: int, tau: int, d: int, argmax):
        if not 1 <= d <= tau:
            raise ValueError(f"need 1 <= d <= tau, got d={d} tau={tau}")
        self.num_links = num_links
        self.tau = tau
        self.d = d
        self.argmax = argmax
        self.stats = SlidingWindowStats(num_links, d)
        self.frame_weights = np.zeros(num_links)
        self.last_weights: Optional[np.ndarray] = None
        self.last_row: Optional[int] = None
        self._pending: Optional[Feedback] = None

    def decide(self, t: int, queues: Optional[np.ndarray] = None) -> np.ndarray:
        if t % self.tau == 0:
            if queues is None:
                raise ValueError(f"slot {t} is a restart point; queue state "
                                 "is required to freeze the frame weights")
            _, self.frame_weights = frame_reset(self.stats, queues, t)
        else:
            window_update(self.stats, self._pending, t)
        wbar = ucb_weights(self.stats, self.frame_weights, self.tau)
        self.last_weights = wbar
        bits, _, row = self.argmax(wbar)
        self.last_row = row
        return bits

    def observe(self, feedback: Feedback):
        self._pending = feedback


class RestartUCB(MaxWeightUCB):
    """Window equals the frame: estimates restart but never slide."""

    kind = "restart_ucb"

    def __init__(self, num_links: int, tau: int, argmax):
        super().__init__(num_links, tau, tau, argmax)


class IdealizedMaxWeight:
    """Max-weight with full channel knowledge: weights Q_e(t) * mu_e(t).

    Uses the live queues every slot (no frames).  Benchmark only.
    """

    kind = "idealized_mw"

    def __init__(self, num_links: int, argmax):
        self.num_links = num_links
        self.argmax = argmax
        self.last_weights: Optional[np.ndarray] = None
        self.last_row: Optional[int] = None

    def decide(self, t: int, queues: np.ndarray, mu: np.ndarray) -> np.ndarray:
        weights = queues * mu
        self.last_weights = weights
        bits, _, row = self.argmax(weights)
        self.last_row = row
        return bits

    def observe(self, feedback: Feedback):
        pass


def make_policy(config: PolicyConfig, num_links: int, horizon: int, argmax):
    """Instantiate the scheduler described by ``config``."""
    tau, d = config.resolved(horizon)
    if config.kind == "mw_ucb":
        return MaxWeightUCB(num_links, tau, d, argmax)
    if config.kind == "restart_ucb":
        return RestartUCB(num_links, tau, argmax)
    if config.kind == "idealized_mw":
        return IdealizedMaxWeight(num_links, argmax)
    raise ValueError(f"unknown policy kind {config.kind!r}")
