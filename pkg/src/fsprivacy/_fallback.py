"""Pure numpy/Python versions of the compiled kernels in ``_kernels.pyx``.

Same algorithms and the same uniform bit streams; used when the extension is
not built or when ``FSPRIVACY_PURE_PYTHON=1``.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S11, _S27, _S30, _S31 = (np.uint64(k) for k in (11, 27, 30, 31))


def splitmix64(x):
    """splitmix64 finalizer; works on uint64 scalars and arrays (wrapping)."""
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def counter_uniforms(seed, tag, trials, streams):
    """Uniform pairs (u1 in (0, 1], u2 in [0, 1)), each shaped (trials, streams)."""
    trials = np.ascontiguousarray(trials, dtype=np.int64).view(np.uint64)
    streams = np.ascontiguousarray(streams, dtype=np.int64).view(np.uint64)
    k1 = splitmix64(splitmix64(np.uint64(seed)) ^ np.uint64(tag))
    k2 = splitmix64(k1 ^ trials)[:, None]
    k3 = splitmix64(k2 ^ streams[None, :])
    a = splitmix64(k3)
    b = splitmix64(a)
    u1 = ((a >> _S11) + np.uint64(1)).astype(np.float64) * 2.0**-53
    u2 = (b >> _S11).astype(np.float64) * 2.0**-53
    return u1, u2


def connected_without(adj, n, removed):
    remaining = ((1 << n) - 1) & ~int(removed)
    if bin(remaining).count("1") <= 1:
        return True
    seen = remaining & -remaining
    frontier = seen
    while frontier:
        reach = 0
        f = frontier
        while f:
            v = (f & -f).bit_length() - 1
            f &= f - 1
            reach |= int(adj[v])
        frontier = reach & remaining & ~seen
        seen |= frontier
    return seen == remaining


def min_vertex_cut_size(adj, n):
    if n <= 1 or not connected_without(adj, n, 0):
        return 0
    for k in range(1, n - 1):
        for subset in combinations(range(n), k):
            mask = 0
            for v in subset:
                mask |= 1 << v
            if not connected_without(adj, n, mask):
                return k
    return n - 1


def dgd_loop(W, Q, alpha, D, poly, x0, lo, hi, steps, tol, patience, atc):
    # overflow is detected by the finiteness check below, not by warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _dgd_loop(W, Q, alpha, D, poly, x0, lo, hi, steps, tol, patience, atc)


def _dgd_loop(W, Q, alpha, D, poly, x0, lo, hi, steps, tol, patience, atc):
    steps = np.asarray(steps, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    hist = np.empty((steps.size + 1,) + x.shape)
    hist[0] = x
    quiet = 0
    d = D.shape[1]
    for k, eta in enumerate(steps):
        if poly:
            g = np.full(x.shape[0], D[:, d - 1])
            for l in range(d - 2, -1, -1):
                g = g * x[:, 0] + D[:, l]
            grad = g[:, None]
        else:
            grad = np.einsum("iab,ib->ia", Q, x) + alpha
        if atc:
            nxt = W @ (x - eta * grad)
        else:
            nxt = W @ x - eta * grad
        if not np.all(np.isfinite(nxt)):
            return hist[: k + 1], False, k + 1
        nxt = np.clip(nxt, lo, hi)
        hist[k + 1] = nxt
        move = np.sqrt(((nxt - x) ** 2).sum(axis=1)).max()
        x = nxt
        quiet = quiet + 1 if move < tol * eta else 0
        if quiet >= patience:
            return hist[: k + 2], True, -1
    return hist, False, -1
