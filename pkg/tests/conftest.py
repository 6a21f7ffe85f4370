"""Shared test fixtures and independent oracles.

The oracles here deliberately avoid the package's own algorithms: matchings
are counted by delete/contract recursion, window sums are recomputed from
raw history, and objectives are brute-force maxima over enumerated sets.
"""

import numpy as np
import pytest

from linksched import NetworkTopology, from_edges


def random_topology(rng: np.random.Generator, max_nodes: int = 8,
                    max_links: int = 12) -> NetworkTopology:
    """Random simple graph with 2..max_nodes nodes and 1..max_links links."""
    nodes = int(rng.integers(2, max_nodes + 1))
    pairs = [(i, j) for i in range(nodes) for j in range(i + 1, nodes)]
    order = rng.permutation(len(pairs))
    count = int(rng.integers(1, min(len(pairs), max_links) + 1))
    return from_edges(nodes, [pairs[k] for k in order[:count]])


def count_matchings(edges: list[tuple[int, int]]) -> int:
    """Delete/contract matching count, independent of the DFS enumerator."""
    if not edges:
        return 1
    (u, v), rest = edges[0], edges[1:]
    without = count_matchings(rest)
    using = count_matchings([e for e in rest if u not in e and v not in e])
    return without + using


def is_matching(bits, links) -> bool:
    used = set()
    for e, active in enumerate(bits):
        if active:
            u, v = links[e]
            if u in used or v in used:
                return False
            used.add(u)
            used.add(v)
    return True


def brute_force_max(table_bits: np.ndarray, weights: np.ndarray) -> float:
    """Best objective over an enumerated activation set, by plain dot."""
    return max(float(np.dot(row.astype(float), weights)) for row in table_bits)


@pytest.fixture(scope="session")
def grid33():
    from linksched import build_grid
    return build_grid(3, 3)
