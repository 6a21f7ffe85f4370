"""Regression for the capacity diagnostic: the standard grid cell's
symmetric-load capacity is 0.1796875 (price the four center links at 1/4;
only one can be active per slot and the best of their four independent
states averages 0.71875)."""

import importlib.util
import pathlib

import numpy as np
import pytest

from linksched import build_grid, from_edges


def _tool():
    path = pathlib.Path(__file__).resolve().parent.parent / "tools" / \
        "capacity.py"
    spec = importlib.util.spec_from_file_location("capacity_tool", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_grid_capacity_bound():
    tool = _tool()
    cap, prices = tool.symmetric_capacity(build_grid(3, 3), iters=1500)
    assert 0.1796875 <= cap <= 0.1796875 * 1.01
    # the bottleneck prices concentrate on the center node's links
    center_share = sum(prices[e] for e, (u, v) in
                       enumerate(build_grid(3, 3).links) if 4 in (u, v))
    assert center_share > 0.95


def test_single_link_capacity():
    # one link: capacity is the mean of the better scheduling, E[mu] with no
    # contention is just serving it every slot: E[mu] = 0.5
    tool = _tool()
    cap, _ = tool.symmetric_capacity(from_edges(2, [(0, 1)]), iters=200)
    assert cap == pytest.approx(0.5, rel=1e-6)


def test_two_disjoint_links():
    tool = _tool()
    topo = from_edges(4, [(0, 1), (2, 3)])
    cap, _ = tool.symmetric_capacity(topo, iters=400)
    # both links can run every slot; per-link capacity stays E[mu]
    assert cap == pytest.approx(0.5, rel=1e-3)


def test_shared_node_pair():
    # two links through one node: serve the better one each slot, so the
    # uniform per-link rate is E[max(mu1, mu2)] / 2; the max is 0.75 unless
    # both links sit in the low state
    tool = _tool()
    topo = from_edges(3, [(0, 1), (1, 2)])
    cap, _ = tool.symmetric_capacity(topo, iters=1500)
    expected = (0.75 * 0.75 + 0.25 * 0.25) / 2
    assert expected == pytest.approx(0.3125)
    assert expected <= cap <= expected * 1.01


def test_monte_carlo_mode():
    tool = _tool()
    cap_exact, _ = tool.symmetric_capacity(build_grid(3, 3), iters=300)
    cap_mc, _ = tool.symmetric_capacity(build_grid(3, 3), iters=300,
                                        samples=2000, seed=1)
    assert abs(cap_mc - cap_exact) < 0.01
