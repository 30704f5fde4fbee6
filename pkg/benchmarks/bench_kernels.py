"""Time the compiled kernels against the numpy fallback.

Run ``python benchmarks/bench_kernels.py``. Each kernel is called with the
same inputs on both backends, outputs are checked for equality, and the best
of several repeats is reported.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fsprivacy import _fallback, complete_graph, consensus_weights, cycle_graph, random_graph

try:
    from fsprivacy import _kernels
except ImportError:
    _kernels = None


def adjacency_masks(topology) -> np.ndarray:
    adj = topology.adjacency()
    return np.array([sum(1 << j for j in np.flatnonzero(row)) for row in adj], dtype=np.uint64)


def cases(trials: int):
    trial_ids = np.arange(trials, dtype=np.int64)
    streams = np.arange(12, dtype=np.int64)
    yield "counter_uniforms", f"{trials} trials x 12 streams", lambda impl: impl.counter_uniforms(
        2024, 7, trial_ids, streams)

    topo = random_graph(14, 0.5, np.random.default_rng(0), connected=True)
    adj = adjacency_masks(topo)
    yield "min_vertex_cut_size", "random graph, 14 agents", lambda impl: impl.min_vertex_cut_size(adj, topo.n)

    for name, g in (("K3", complete_graph(3)), ("cycle 20", cycle_graph(20))):
        n = g.n
        W = consensus_weights(g)
        Q = np.tile(2.0 * np.eye(2), (n, 1, 1))
        alpha = np.random.default_rng(1).normal(size=(n, 2))
        D = np.zeros((n, 1))
        x0 = np.zeros((n, 2))
        lo, hi = np.full(2, -100.0), np.full(2, 100.0)
        steps = 1.0 / np.sqrt(np.arange(1, 5001))
        yield "dgd_loop", f"{name}, 5000 rounds, m=2", (
            lambda impl, W=W, Q=Q, alpha=alpha, D=D, x0=x0, lo=lo, hi=hi, steps=steps:
            impl.dgd_loop(W, Q, alpha, D, False, x0, lo, hi, steps, 1e-300, 10, True))


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=0, atol=1e-12)
    return a == b


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--trials", type=int, default=200_000)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled kernels are not built; only the fallback is available")
        return 1
    print(f"{'kernel':22s} {'case':32s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}  match")
    for kernel, label, call in cases(args.trials):
        times = {}
        for impl in (_fallback, _kernels):
            times[impl] = min(timeit.repeat(lambda: call(impl), number=1, repeat=args.repeat)) * 1e3
        match = same(call(_fallback), call(_kernels))
        py, c = times[_fallback], times[_kernels]
        print(f"{kernel:22s} {label:32s} {py:10.2f} {c:12.2f} {py / c:7.1f}x  {'yes' if match else 'NO'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
