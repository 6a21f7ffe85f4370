"""Network graphs, link indexing and interference constraints.

A network is a directed graph whose links carry single-hop traffic.  Which
links may transmit simultaneously is governed by an interference model; the
set of admissible activation vectors is what the schedulers optimize over.

Link ordering convention: links are sorted by (tail, head) and indexed
0..num_links-1 in that order, so a given graph always produces the same link
ids.  Interference is evaluated on the undirected support of the links
(node-exclusive admissibility means the active links form a matching of the
underlying undirected graph).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NetworkTopology",
    "NodeExclusive",
    "ConflictGraph",
    "ExplicitSet",
    "build_grid",
    "from_edges",
    "adjacent_links",
    "is_admissible",
]


@dataclass(frozen=True)
class NetworkTopology:
    """Directed-link graph with a fixed link <-> integer-id bijection.

    Attributes:
        num_nodes: number of nodes, ids 0..num_nodes-1.
        links: directed links as (tail, head) pairs, sorted by (tail, head).
            The position of a link in this tuple is its link id.
    """

    num_nodes: int
    links: tuple[tuple[int, int], ...]
    _incidence: tuple[tuple[int, ...], ...] = field(
        init=False, repr=False, compare=False, default=()
    )

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError(f"need at least one node, got {self.num_nodes}")
        seen = set()
        for tail, head in self.links:
            if not (0 <= tail < self.num_nodes and 0 <= head < self.num_nodes):
                raise ValueError(f"link ({tail}, {head}) has an endpoint "
                                 f"outside 0..{self.num_nodes - 1}")
            if tail == head:
                raise ValueError(f"self-loop ({tail}, {head}) is not a valid link")
            if (tail, head) in seen:
                raise ValueError(f"duplicate directed link ({tail}, {head})")
            seen.add((tail, head))
        if tuple(sorted(self.links)) != tuple(self.links):
            raise ValueError("links must be sorted by (tail, head); "
                             "use from_edges() to build from unsorted input")
        incidence = [[] for _ in range(self.num_nodes)]
        for e, (tail, head) in enumerate(self.links):
            incidence[tail].append(e)
            incidence[head].append(e)
        object.__setattr__(
            self, "_incidence", tuple(tuple(ids) for ids in incidence)
        )

    @property
    def num_links(self) -> int:
        return len(self.links)

    def endpoints(self, link: int) -> tuple[int, int]:
        return self.links[link]


def from_edges(num_nodes: int, edges) -> NetworkTopology:
    """Build a topology from an iterable of (tail, head) pairs.

    Edges are sorted by (tail, head) to fix the link indexing.
    """
    links = tuple(sorted((int(t), int(h)) for t, h in edges))
    return NetworkTopology(num_nodes=num_nodes, links=links)


def build_grid(rows: int, cols: int) -> NetworkTopology:
    """Rectangular grid with one directed link per undirected grid edge.

    Node (r, c) has id r*cols + c.  Each grid edge becomes one directed link
    from the lower to the higher node id, so the number of links is
    rows*(cols-1) + cols*(rows-1).
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            node = r * cols + c
            if c + 1 < cols:
                edges.append((node, node + 1))
            if r + 1 < rows:
                edges.append((node, node + cols))
    return from_edges(rows * cols, edges)


def adjacent_links(topology: NetworkTopology, node: int) -> list[int]:
    """All links with tail or head equal to ``node``, sorted by link id."""
    if not 0 <= node < topology.num_nodes:
        raise ValueError(f"node {node} outside 0..{topology.num_nodes - 1}")
    return list(topology._incidence[node])


@dataclass(frozen=True)
class NodeExclusive:
    """No two active links may share a node endpoint (matching constraint)."""


@dataclass(frozen=True)
class ConflictGraph:
    """Pairs of link ids that may not be active together.

    An activation is admissible iff the active links form an independent set
    of the conflict graph.
    """

    conflicts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        norm = tuple(sorted({(min(a, b), max(a, b)) for a, b in self.conflicts}))
        object.__setattr__(self, "conflicts", norm)
        for a, b in norm:
            if a == b:
                raise ValueError(f"conflict pair ({a}, {b}) repeats a link")
            if a < 0:
                raise ValueError(f"negative link id in conflict pair ({a}, {b})")


@dataclass(frozen=True)
class ExplicitSet:
    """Admissible set given by explicit enumeration.

    The all-zeros activation is always included, whether or not it appears in
    the input.
    """

    activations: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.activations:
            raise ValueError("explicit activation set needs at least one vector")
        width = len(self.activations[0])
        vecs = set()
        for v in self.activations:
            if len(v) != width:
                raise ValueError("activation vectors must share one length")
            if any(b not in (0, 1) for b in v):
                raise ValueError(f"non-binary activation vector {v}")
            vecs.add(tuple(int(b) for b in v))
        vecs.add((0,) * width)
        object.__setattr__(self, "activations", tuple(sorted(vecs)))

    @property
    def width(self) -> int:
        return len(self.activations[0])


InterferenceModel = NodeExclusive | ConflictGraph | ExplicitSet


def _as_bits(x, num_links: int) -> np.ndarray:
    bits = np.asarray(x)
    if bits.shape != (num_links,):
        raise ValueError(f"activation has shape {bits.shape}, expected ({num_links},)")
    return bits


def is_admissible(model, x, topology: NetworkTopology) -> bool:
    """True iff ``x`` is an admissible activation under ``model``."""
    bits = _as_bits(x, topology.num_links)
    active = [e for e in range(topology.num_links) if bits[e]]
    if isinstance(model, NodeExclusive):
        used = set()
        for e in active:
            tail, head = topology.links[e]
            if tail in used or head in used:
                return False
            used.add(tail)
            used.add(head)
        return True
    if isinstance(model, ConflictGraph):
        for a, b in model.conflicts:
            if a < topology.num_links and b < topology.num_links:
                if bits[a] and bits[b]:
                    return False
        return True
    if isinstance(model, ExplicitSet):
        if model.width != topology.num_links:
            raise ValueError(f"explicit set is over {model.width} links, "
                             f"topology has {topology.num_links}")
        return tuple(int(b) for b in bits) in set(model.activations)
    raise TypeError(f"unknown interference model {model!r}")
