"""Hypothesis strategies for small graphs."""
from itertools import combinations

from hypothesis import strategies as st

from fsprivacy import Topology, is_connected


@st.composite
def topologies(draw, min_n=1, max_n=8, connected=False):
    n = draw(st.integers(min_n, max_n))
    pairs = list(combinations(range(1, n + 1), 2))
    chosen = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    topo = Topology(n, [p for p, keep in zip(pairs, chosen) if keep])
    if connected and not is_connected(topo):
        # add a path through all agents to force connectivity
        extra = [(i, i + 1) for i in range(1, n) if (i, i + 1) not in topo.edges]
        topo = Topology(n, list(topo.edges) + extra)
    return topo
