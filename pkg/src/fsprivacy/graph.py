"""Undirected communication graphs over agents 1..n.

Agents are 1-indexed everywhere in the public API. Edges are stored as
``(i, j)`` with ``i < j`` in lexicographic order; that order also fixes the
column order of the incidence matrix and the directed-edge stream indices
used for noise generation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np

from . import _backend, _fallback
from .errors import DomainError

# exhaustive subset enumeration stops being practical past this
ENUMERATION_CAP = 20


@dataclass(frozen=True)
class Topology:
    n: int
    edges: tuple[tuple[int, int], ...]
    _nbrs: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __init__(self, n: int, edges: Iterable[Iterable[int]] = ()):
        n = int(n)
        if n < 1:
            raise DomainError(f"agent count must be positive, got {n}")
        normalized = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise DomainError(f"self-loop at agent {i}")
            if not (1 <= i <= n and 1 <= j <= n):
                raise DomainError(f"edge {{{i},{j}}} has an endpoint outside 1..{n}")
            pair = (min(i, j), max(i, j))
            if pair in normalized:
                raise DomainError(f"duplicate edge {{{pair[0]},{pair[1]}}}")
            normalized.add(pair)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(sorted(normalized)))
        nbrs = [set() for _ in range(n + 1)]
        for i, j in self.edges:
            nbrs[i].add(j)
            nbrs[j].add(i)
        object.__setattr__(self, "_nbrs", tuple(frozenset(s) for s in nbrs))

    @property
    def agents(self) -> range:
        return range(1, self.n + 1)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, i: int) -> int:
        return len(neighbors(self, i))

    def edge_index(self, i: int, j: int) -> int:
        """Position of ``{i, j}`` in the oriented edge list."""
        pair = (min(i, j), max(i, j))
        try:
            return self.edges.index(pair)
        except ValueError:
            raise DomainError(f"{{{i},{j}}} is not an edge") from None

    def directed_index(self, i: int, j: int) -> int:
        """Stream index of the directed pair ``i -> j``: 2e for low->high, 2e+1 otherwise."""
        return 2 * self.edge_index(i, j) + (0 if i < j else 1)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = 1
        return a

    def adjacency_masks(self) -> np.ndarray:
        """Bitmask rows (bit v-1 set for each neighbor v) for the connectivity kernels."""
        masks = np.zeros(self.n, dtype=np.uint64)
        for i, j in self.edges:
            masks[i - 1] |= np.uint64(1 << (j - 1))
            masks[j - 1] |= np.uint64(1 << (i - 1))
        return masks

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        if "n" not in d or "edges" not in d:
            raise DomainError("topology needs keys 'n' and 'edges'")
        edges = []
        for e in d["edges"]:
            if len(e) != 2:
                raise DomainError(f"edge {e!r} must have two endpoints")
            if not e[0] < e[1]:
                raise DomainError(f"edge {list(e)} must be written as [i, j] with i < j")
            edges.append(e)
        return cls(d["n"], edges)

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        return cls.from_dict(json.loads(text))


def oriented_edges(topology: Topology) -> tuple[tuple[int, int], ...]:
    return topology.edges


def complete_graph(n: int) -> Topology:
    return Topology(n, combinations(range(1, n + 1), 2))


def path_graph(n: int) -> Topology:
    return Topology(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Topology:
    if n < 3:
        raise DomainError("a cycle needs at least 3 agents")
    return Topology(n, [(i, i + 1) for i in range(1, n)] + [(1, n)])


def random_graph(n: int, p: float, rng: np.random.Generator, connected: bool = False) -> Topology:
    """Erdos-Renyi G(n, p); with ``connected=True`` resample until connected."""
    while True:
        edges = [e for e in combinations(range(1, n + 1), 2) if rng.random() < p]
        g = Topology(n, edges)
        if not connected or is_connected(g):
            return g


def _check_agent(topology: Topology, i: int) -> None:
    if not 1 <= i <= topology.n:
        raise DomainError(f"agent {i} outside 1..{topology.n}")


def _mask(topology: Topology, agents: Iterable[int]) -> int:
    m = 0
    for a in agents:
        _check_agent(topology, a)
        m |= 1 << (a - 1)
    return m


def neighbors(topology: Topology, i: int) -> frozenset[int]:
    _check_agent(topology, i)
    return topology._nbrs[i]


def induced_subgraph(topology: Topology, keep: Iterable[int]) -> tuple[Topology, dict[int, int]]:
    """Subgraph on ``keep``, reindexed 1..|keep| in increasing agent order.

    Returns the graph and the old->new index map.
    """
    keep = sorted(set(keep))
    if not keep:
        raise DomainError("cannot induce a subgraph on an empty agent set")
    for a in keep:
        _check_agent(topology, a)
    index = {old: new for new, old in enumerate(keep, start=1)}
    edges = [(index[i], index[j]) for i, j in topology.edges if i in index and j in index]
    return Topology(len(keep), edges), index


def _connected_without(topology: Topology, removed: int) -> bool:
    if topology.n > 62:
        # python ints have no width limit
        masks = [0] * topology.n
        for i, j in topology.edges:
            masks[i - 1] |= 1 << (j - 1)
            masks[j - 1] |= 1 << (i - 1)
        return _fallback.connected_without(masks, topology.n, removed)
    return bool(_backend.connected_without(topology.adjacency_masks(), topology.n, removed))


def is_connected(topology: Topology) -> bool:
    return _connected_without(topology, 0)


def is_vertex_cut(topology: Topology, c: Iterable[int]) -> bool:
    """True iff removing ``c`` leaves a disconnected graph.

    Leaving a single agent does not count as disconnected.
    """
    mask = _mask(topology, set(c))
    if mask == (1 << topology.n) - 1:
        raise DomainError("the cut candidate may not contain every agent")
    return not _connected_without(topology, mask)


def vertex_connectivity(topology: Topology) -> int:
    """Size of the smallest vertex cut; ``n - 1`` for complete graphs, 0 if disconnected.

    Exhaustive enumeration in increasing cut size.
    """
    if topology.n > 62:
        raise DomainError("vertex_connectivity supports at most 62 agents")
    return int(_backend.min_vertex_cut_size(topology.adjacency_masks(), topology.n))
