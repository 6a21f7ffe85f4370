"""Exact argmax of a linear weight functional over the admissible set.

Every scheduling policy reduces its per-slot decision to

    argmax over admissible x of  sum_e weights[e] * x[e]

which this module solves exactly.  Two routes exist:

* enumeration: the full admissible set is materialized (guarded to at most
  24 links) and scanned; this doubles as the brute-force oracle in tests.
* blossom: for node-exclusive interference on larger graphs, an exact
  maximum-weight matching of the undirected support.

Ties are broken toward the lexicographically smallest bit vector, so results
are reproducible.  Links with weight <= 0 are never activated.  The scan
accumulates each row's objective over link ids in ascending order; the
compiled simulation core does the same, which keeps decisions identical
between backends.
"""

from __future__ import annotations

from functools import lru_cache

import networkx as nx
import numpy as np

from .topology import (
    ConflictGraph,
    ExplicitSet,
    NetworkTopology,
    NodeExclusive,
)

__all__ = [
    "ENUMERATION_LIMIT",
    "enumerate_activations",
    "ActivationTable",
    "activation_table",
    "max_weight_activation",
    "max_weight_matching_exact",
]

ENUMERATION_LIMIT = 24


def _check_weights(weights, num_links: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (num_links,):
        raise ValueError(f"weights have shape {w.shape}, expected ({num_links},)")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    return w


def enumerate_activations(model, topology: NetworkTopology) -> np.ndarray:
    """Complete admissible set as an (n, num_links) int8 matrix.

    Rows are in ascending lexicographic order of the bit vector (x_0 most
    significant), so the first row is the all-zeros activation.  Guarded to
    ``ENUMERATION_LIMIT`` links.
    """
    E = topology.num_links
    if E > ENUMERATION_LIMIT:
        raise ValueError(f"{E} links exceeds the enumeration guard "
                         f"of {ENUMERATION_LIMIT}")

    rows: list[tuple[int, ...]] = []
    if isinstance(model, ExplicitSet):
        if model.width != E:
            raise ValueError(f"explicit set is over {model.width} links, "
                             f"topology has {E}")
        rows = list(model.activations)
    elif isinstance(model, NodeExclusive):
        used = [False] * topology.num_nodes
        bits = [0] * E

        def walk(k: int):
            if k == E:
                rows.append(tuple(bits))
                return
            walk(k + 1)
            tail, head = topology.links[k]
            if not used[tail] and not used[head]:
                used[tail] = used[head] = True
                bits[k] = 1
                walk(k + 1)
                bits[k] = 0
                used[tail] = used[head] = False

        # Emit x_k = 0 before x_k = 1 at each depth: output is lex ascending.
        walk(0)
        rows.sort()
    elif isinstance(model, ConflictGraph):
        blocked = [set() for _ in range(E)]
        for a, b in model.conflicts:
            if a < E and b < E:
                blocked[a].add(b)
                blocked[b].add(a)
        active: list[int] = []
        bits = [0] * E

        def walk_cg(k: int):
            if k == E:
                rows.append(tuple(bits))
                return
            walk_cg(k + 1)
            if not blocked[k] & set(active):
                active.append(k)
                bits[k] = 1
                walk_cg(k + 1)
                bits[k] = 0
                active.pop()

        walk_cg(0)
        rows.sort()
    else:
        raise TypeError(f"unknown interference model {model!r}")

    return np.array(rows, dtype=np.int8).reshape(len(rows), E)


class ActivationTable:
    """Prepared admissible set with a fast exact argmax.

    The table holds every admissible activation as a float row; ``argmax``
    scans all rows accumulating the objective link-by-link in ascending id
    order and keeps the first row attaining the maximum.  Because rows are
    sorted lexicographically, "first" is the lexicographically smallest
    maximizer.  For matching/independent-set interference that maximizer
    never activates a link of weight <= 0 (dropping it is admissible and lex
    smaller); ``exclude_nonpositive`` enforces the same guarantee for
    explicit activation sets that are not closed under dropping links.

    The scan order matches the compiled core's, so decisions agree bitwise
    between backends.
    """

    def __init__(self, model, topology: NetworkTopology):
        self.topology = topology
        self.model = model
        self.bits = enumerate_activations(model, topology)
        self.rows = self.bits.astype(np.float64)
        self.masks = np.array(
            [sum(1 << e for e in range(topology.num_links) if row[e])
             for row in self.bits],
            dtype=np.int64,
        )

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]

    def objectives(self, weights: np.ndarray) -> np.ndarray:
        """Per-row objectives, accumulated over links in ascending order."""
        obj = np.zeros(self.num_rows)
        for k in range(self.topology.num_links):
            obj += self.rows[:, k] * weights[k]
        return obj

    def argmax(self, weights,
               exclude_nonpositive: bool = False) -> tuple[np.ndarray, float, int]:
        """Best activation under ``weights``: (bits, value, row index)."""
        w = _check_weights(weights, self.topology.num_links)
        obj = self.objectives(w)
        if exclude_nonpositive and np.any(w <= 0.0):
            bad = np.zeros(self.num_rows, dtype=bool)
            for k in np.nonzero(w <= 0.0)[0]:
                bad |= self.bits[:, k] != 0
            obj = np.where(bad, -np.inf, obj)
        best = int(np.argmax(obj))
        return self.bits[best].copy(), float(obj[best]), best


@lru_cache(maxsize=64)
def activation_table(model, topology: NetworkTopology) -> ActivationTable:
    """Cached ActivationTable (models and topologies are hashable)."""
    return ActivationTable(model, topology)


def _matching_bits(topology: NetworkTopology, pairs) -> np.ndarray:
    bits = np.zeros(topology.num_links, dtype=np.int8)
    index = {}
    for e, (tail, head) in enumerate(topology.links):
        index[(tail, head)] = e
        index[(head, tail)] = e
    for u, v in pairs:
        bits[index[(u, v)]] = 1
    return bits


def max_weight_matching_exact(topology: NetworkTopology, weights) -> np.ndarray:
    """Exact maximum-weight matching of the undirected support.

    Links with weight <= 0 are discarded up front; on the rest a
    blossom-style general-graph matching is computed.  Only the objective
    value is pinned down by this routine; among equal-value matchings the
    choice is implementation-defined (use max_weight_activation when the
    lexicographic tie-break matters).
    """
    w = _check_weights(weights, topology.num_links)
    g = nx.Graph()
    g.add_nodes_from(range(topology.num_nodes))
    for e, (tail, head) in enumerate(topology.links):
        if w[e] > 0.0:
            g.add_edge(tail, head, weight=w[e])
    mate = nx.max_weight_matching(g, maxcardinality=False)
    return _matching_bits(topology, mate)


def _blossom_value(topology: NetworkTopology, w: np.ndarray,
                   forced_off: set[int], forced_on: set[int]) -> float | None:
    """Optimal matching value with some links forced out or in.

    Returns None when the forced-on links are not themselves a matching.
    """
    used = set()
    base = 0.0
    for e in sorted(forced_on):
        tail, head = topology.links[e]
        if tail in used or head in used:
            return None
        used.add(tail)
        used.add(head)
        base += w[e]
    g = nx.Graph()
    g.add_nodes_from(range(topology.num_nodes))
    for e, (tail, head) in enumerate(topology.links):
        if e in forced_off or e in forced_on:
            continue
        if tail in used or head in used:
            continue
        if w[e] > 0.0:
            g.add_edge(tail, head, weight=w[e])
    mate = nx.max_weight_matching(g, maxcardinality=False)
    value = base
    index = {}
    for e, (tail, head) in enumerate(topology.links):
        index[(tail, head)] = e
        index[(head, tail)] = e
    for u, v in mate:
        value += w[index[(u, v)]]
    return value


def _lex_smallest_matching(topology: NetworkTopology, w: np.ndarray) -> np.ndarray:
    """Lexicographically smallest maximum-weight matching.

    Fixes links one id at a time: link e stays off whenever some optimal
    matching excludes it.  Costs one blossom solve per link, so this is the
    slow path used only beyond the enumeration guard.
    """
    target = _blossom_value(topology, w, set(), set())
    off: set[int] = set()
    on: set[int] = set()
    tol = 1e-9 * max(1.0, abs(target))
    for e in range(topology.num_links):
        without = _blossom_value(topology, w, off | {e}, on)
        if without is not None and without >= target - tol:
            off.add(e)
            target = without
        else:
            on.add(e)
            with_e = _blossom_value(topology, w, off, on)
            target = with_e
    bits = np.zeros(topology.num_links, dtype=np.int8)
    for e in on:
        bits[e] = 1
    return bits


def max_weight_activation(weights, model, topology: NetworkTopology) -> np.ndarray:
    """argmax over the admissible set of sum_e weights[e] * x_e.

    Ties go to the lexicographically smallest bit vector; links with
    weight <= 0 are never activated.  Small instances are solved by the
    prepared enumeration table; node-exclusive interference beyond the
    enumeration guard falls back to repeated blossom solves.
    """
    w = _check_weights(weights, topology.num_links)
    if topology.num_links <= ENUMERATION_LIMIT:
        bits, _, _ = activation_table(model, topology).argmax(
            w, exclude_nonpositive=True)
        return bits
    if isinstance(model, NodeExclusive):
        return _lex_smallest_matching(topology, w)
    raise ValueError(f"{topology.num_links} links exceeds the enumeration guard "
                     f"of {ENUMERATION_LIMIT} and no exact solver exists for "
                     f"{type(model).__name__}")
