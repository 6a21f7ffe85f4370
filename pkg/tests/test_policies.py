import math

import numpy as np
import pytest

from linksched import (
    Feedback,
    IdealizedMaxWeight,
    MaxWeightUCB,
    NodeExclusive,
    PolicyConfig,
    RestartUCB,
    SlidingWindowStats,
    activation_table,
    build_grid,
    default_hyperparams,
    default_window,
    frame_reset,
    from_edges,
    make_policy,
    ucb_weights,
    window_update,
)


class TestDefaultHyperparams:
    def test_reference_setting(self):
        # T = 1e6, alpha = 1/2: tau = 1e4, d = 2*ceil(1e4^(1/3)) + 150
        assert default_hyperparams(10 ** 6, 0.5) == (10 ** 4, 194)

    def test_horizon_one_clamps(self):
        assert default_hyperparams(1, 0.0) == (1, 1)
        assert default_hyperparams(1, 0.9) == (1, 1)

    def test_alpha_zero(self):
        # d = 2*ceil(1e4^(2/3)) + 150 = 2*465 + 150
        assert default_hyperparams(10 ** 6, 0.0) == (10 ** 4, 1080)

    def test_window_from_tau(self):
        assert default_window(1000, 0.5) == 170
        assert default_window(10_000, 0.5) == 194

    def test_validation(self):
        with pytest.raises(ValueError):
            default_hyperparams(0, 0.5)
        with pytest.raises(ValueError):
            default_hyperparams(100, 1.0)


class TestPolicyConfig:
    def test_d_cannot_exceed_tau(self):
        with pytest.raises(ValueError):
            PolicyConfig("mw_ucb", tau=10, d=11)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PolicyConfig("thompson")

    def test_restart_forces_d_tau(self):
        tau, d = PolicyConfig("restart_ucb", tau=500).resolved(10_000)
        assert (tau, d) == (500, 500)

    def test_resolved_defaults(self):
        tau, d = PolicyConfig("mw_ucb").resolved(10 ** 6)
        assert (tau, d) == (10 ** 4, 194)


class TestFrameReset:
    def test_zero_queues(self):
        stats = SlidingWindowStats(3, 4)
        _, w = frame_reset(stats, np.zeros(3), 0)
        assert np.array_equal(w, np.zeros(3))

    def test_normalization(self):
        stats = SlidingWindowStats(3, 4)
        _, w = frame_reset(stats, np.array([2.0, 4.0, 1.0]), 8)
        assert np.allclose(w, [0.5, 1.0, 0.25])

    def test_single_link_self_normalizes(self):
        stats = SlidingWindowStats(1, 2)
        _, w = frame_reset(stats, np.array([5.0]), 0)
        assert w[0] == 1.0

    def test_clears_window(self):
        stats = SlidingWindowStats(2, 3)
        stats.phi[:] = 7.0
        stats.nact[:] = 2
        stats.ring_b[:] = 1.0
        frame_reset(stats, np.ones(2), 6)
        assert not stats.phi.any()
        assert not stats.nact.any()
        assert not stats.ring_b.any()
        assert stats.frame_start == 6


def _direct_sums(hist_x, hist_b, frame_start, t, d, num_links):
    """Window statistics recomputed from raw history (the test oracle)."""
    lo = max(frame_start, t - d)
    n = np.zeros(num_links, dtype=np.int64)
    phi = np.zeros(num_links)
    for s in range(lo, t):
        n += hist_x[s]
        phi += hist_b[s]
    return phi, n


class TestWindowUpdate:
    def test_never_activated_link(self):
        stats = SlidingWindowStats(2, 4)
        frame_reset(stats, np.zeros(2), 0)
        fb = Feedback(t=0, x=np.array([1, 0], dtype=np.int8),
                      a=np.zeros(2), b=np.array([0.3, 0.0]),
                      q_next=np.zeros(2))
        window_update(stats, fb, 1)
        assert stats.nact[1] == 0
        assert stats.mu_hat()[1] == 0.0

    def test_saturated_window_constant_capacity(self):
        # activated every slot at capacity 0.6: after d slots mu_hat = 0.6
        d = 5
        stats = SlidingWindowStats(1, d)
        frame_reset(stats, np.zeros(1), 0)
        for t in range(1, 20):
            fb = Feedback(t=t - 1, x=np.ones(1, dtype=np.int8), a=np.zeros(1),
                          b=np.array([0.6]), q_next=np.zeros(1))
            window_update(stats, fb, t)
            if t >= d:
                assert stats.nact[0] == d
                assert stats.mu_hat()[0] == pytest.approx(0.6, rel=1e-12)

    def test_window_slides_past_single_activation(self):
        d = 3
        stats = SlidingWindowStats(1, d)
        frame_reset(stats, np.zeros(1), 0)
        obs = [(1, 0.7), (0, 0.0), (0, 0.0), (0, 0.0), (0, 0.0)]
        for t in range(1, 6):
            x, b = obs[t - 1]
            fb = Feedback(t=t - 1, x=np.array([x], dtype=np.int8),
                          a=np.zeros(1), b=np.array([b]), q_next=np.zeros(1))
            window_update(stats, fb, t)
        assert stats.nact[0] == 0
        assert stats.phi[0] == 0.0

    def test_slot_mismatch_rejected(self):
        stats = SlidingWindowStats(1, 3)
        frame_reset(stats, np.zeros(1), 0)
        fb = Feedback(t=5, x=np.ones(1, dtype=np.int8), a=np.zeros(1),
                      b=np.ones(1), q_next=np.zeros(1))
        with pytest.raises(ValueError):
            window_update(stats, fb, 1)
        with pytest.raises(ValueError):
            window_update(stats, None, 1)

    def test_recursion_equals_direct_sums_randomized(self):
        # acceptance-grade property at reduced size; the full 1e4-slot run
        # lives in test_acceptance
        rng = np.random.default_rng(99)
        E = 5
        for trial in range(5):
            tau = int(rng.integers(5, 60))
            d = int(rng.integers(1, tau + 1))
            stats = SlidingWindowStats(E, d)
            hist_x, hist_b = [], []
            fb = None
            frame_start = 0
            for t in range(400):
                if t % tau == 0:
                    frame_reset(stats, rng.random(E) * 5, t)
                    frame_start = t
                else:
                    window_update(stats, fb, t)
                phi, n = _direct_sums(hist_x, hist_b, frame_start, t, d, E)
                assert np.array_equal(stats.nact, n)
                assert np.allclose(stats.phi, phi, rtol=1e-12, atol=1e-12)
                x = (rng.random(E) < 0.5).astype(np.int8)
                theta = rng.random(E)
                b = x * theta
                hist_x.append(x)
                hist_b.append(b)
                fb = Feedback(t=t, x=x, a=np.zeros(E), b=b, q_next=np.zeros(E))


class TestUcbWeights:
    def test_unvisited_link_gets_one(self):
        stats = SlidingWindowStats(2, 4)
        frame_reset(stats, np.zeros(2), 0)
        w = ucb_weights(stats, np.array([0.3, 0.8]), 1000)
        assert np.array_equal(w, np.ones(2))

    def test_large_bonus_clamps(self):
        # tau=1000, n=6, w=1, mu_hat=0: bonus sqrt(3 ln 1000 / 12) > 1
        stats = SlidingWindowStats(1, 10)
        frame_reset(stats, np.ones(1), 0)
        stats.nact[0] = 6
        rho = math.sqrt(3 * math.log(1000) / (2 * 6))
        assert rho > 1
        w = ucb_weights(stats, np.ones(1), 1000)
        assert w[0] == 1.0

    def test_formula_values(self):
        # tau = e^2 makes the bonus sqrt(3/n): n=3 gives 1, n=300 gives 0.1
        stats = SlidingWindowStats(1, 1000)
        frame_reset(stats, np.ones(1), 0)
        stats.nact[0] = 3
        stats.phi[0] = 0.3
        w = ucb_weights(stats, np.ones(1), math.e ** 2)
        assert w[0] == 1.0
        stats.nact[0] = 300
        stats.phi[0] = 30.0
        w = ucb_weights(stats, np.ones(1), math.e ** 2)
        assert w[0] == pytest.approx(0.2, rel=1e-12)

    def test_always_in_unit_interval(self):
        rng = np.random.default_rng(5)
        stats = SlidingWindowStats(6, 50)
        frame_reset(stats, rng.random(6), 0)
        for _ in range(200):
            stats.nact[:] = rng.integers(0, 50, 6)
            stats.phi[:] = stats.nact * rng.random(6) * 3
            w = ucb_weights(stats, rng.random(6), int(rng.integers(1, 10**5)))
            assert np.all(w >= 0) and np.all(w <= 1)


class TestDecide:
    def test_first_slot_max_cardinality(self, grid33):
        table = activation_table(NodeExclusive(), grid33)
        pol = MaxWeightUCB(12, tau=100, d=50, argmax=table.argmax)
        x = pol.decide(0, queues=np.zeros(12))
        # all weights equal 1: cardinality decides, tie broken to the
        # lexicographically smallest maximum matching
        sizes = table.bits.sum(axis=1)
        best_rows = table.bits[sizes == sizes.max()]
        expect = min(map(tuple, best_rows))
        assert tuple(x) == expect
        assert x.sum() == 4

    def test_idealized_zero_queues_idle(self, grid33):
        table = activation_table(NodeExclusive(), grid33)
        pol = IdealizedMaxWeight(12, argmax=table.argmax)
        x = pol.decide(0, np.zeros(12), np.full(12, 0.75))
        assert not x.any()

    def test_idealized_single_link_activates(self):
        topo = from_edges(2, [(0, 1)])
        table = activation_table(NodeExclusive(), topo)
        pol = IdealizedMaxWeight(1, argmax=table.argmax)
        x = pol.decide(0, np.array([2.0]), np.array([0.25]))
        assert list(x) == [1]

    def test_restart_slot_requires_queues(self):
        topo = from_edges(2, [(0, 1)])
        table = activation_table(NodeExclusive(), topo)
        pol = MaxWeightUCB(1, tau=10, d=5, argmax=table.argmax)
        with pytest.raises(ValueError):
            pol.decide(0, queues=None)

    def test_partial_observability_interface(self, grid33):
        # the implementable policies cannot even be handed channel means
        table = activation_table(NodeExclusive(), grid33)
        pol = MaxWeightUCB(12, tau=10, d=5, argmax=table.argmax)
        with pytest.raises(TypeError):
            pol.decide(0, queues=np.zeros(12), mu=np.full(12, 0.75))

    def test_frame_weights_constant_within_frame(self, grid33):
        rng = np.random.default_rng(1)
        table = activation_table(NodeExclusive(), grid33)
        pol = MaxWeightUCB(12, tau=20, d=10, argmax=table.argmax)
        q = rng.random(12) * 4
        frozen = None
        for t in range(60):
            x = pol.decide(t, queues=q if t % 20 == 0 else None)
            if t % 20 == 0:
                frozen = pol.frame_weights.copy()
            else:
                assert np.array_equal(pol.frame_weights, frozen)
            theta = rng.random(12)
            b = x * theta
            pol.observe(Feedback(t=t, x=x, a=np.zeros(12), b=b,
                                 q_next=q))
            q = np.maximum(q + rng.poisson(0.2, 12) - b, 0.0)


class TestMakePolicy:
    def test_kinds(self, grid33):
        table = activation_table(NodeExclusive(), grid33)
        for kind, cls in (("mw_ucb", MaxWeightUCB),
                          ("restart_ucb", RestartUCB),
                          ("idealized_mw", IdealizedMaxWeight)):
            pol = make_policy(PolicyConfig(kind), 12, 10_000, table.argmax)
            assert isinstance(pol, cls)

    def test_restart_window_equals_frame(self, grid33):
        table = activation_table(NodeExclusive(), grid33)
        pol = make_policy(PolicyConfig("restart_ucb", tau=77), 12, 10_000,
                          table.argmax)
        assert pol.d == pol.tau == 77
