"""Counter RNG against a plain-integer reimplementation, and compiled vs fallback kernels."""
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from fsprivacy import CounterRNG, random_graph
from fsprivacy import _backend, _fallback
from fsprivacy.optimizer import consensus_weights

from oracles import counter_normal

try:
    from fsprivacy import _kernels
except ImportError:  # extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


@given(st.integers(0, 2**63 - 1), st.integers(0, 2**64 - 1), st.integers(0, 10**9), st.integers(0, 10**6))
def test_matches_integer_oracle(seed, tag, trial, stream):
    got = CounterRNG(seed, tag).normals([trial], [stream])[0, 0]
    assert got == pytest.approx(counter_normal(seed, tag, trial, stream), rel=1e-12, abs=1e-12)


def test_order_independence():
    rng = CounterRNG(42)
    full = rng.normals(np.arange(100), np.arange(7))
    part = rng.normals([57, 3], [6, 0])
    assert np.array_equal(part, full[[57, 3]][:, [6, 0]])


def test_standard_normal():
    z = CounterRNG(7).normals(np.arange(20_000), np.arange(5)).ravel()
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.01


def test_substreams_are_distinct_and_stable():
    rng = CounterRNG(1)
    assert rng.substream(1) == CounterRNG(1).substream(1)
    assert rng.substream(1) != rng.substream(2)
    a = rng.substream(1).normals(np.arange(500), [0])[:, 0]
    b = rng.substream(2).normals(np.arange(500), [0])[:, 0]
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.2


def test_rejects_negative_indices():
    with pytest.raises(ValueError):
        CounterRNG(0).normals([-1], [0])


def test_backend_name():
    assert _backend.BACKEND in ("compiled", "python")


@needs_ext
@given(st.integers(0, 2**63 - 1), st.integers(0, 2**64 - 1))
def test_uniforms_bit_identical(seed, tag):
    trials = np.arange(0, 5000, 37, dtype=np.int64)
    streams = np.arange(11, dtype=np.int64)
    for a, b in zip(_kernels.counter_uniforms(seed, tag, trials, streams),
                    _fallback.counter_uniforms(seed, tag, trials, streams)):
        assert np.array_equal(a, b)


@needs_ext
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(0.1, 0.9))
def test_graph_kernels_agree(seed, n, p):
    topo = random_graph(n, p, np.random.default_rng(seed))
    adj = topo.adjacency_masks()
    assert _kernels.min_vertex_cut_size(adj, n) == _fallback.min_vertex_cut_size(adj, n)
    for removed in range(0, 1 << n, max(1, (1 << n) // 64)):
        assert bool(_kernels.connected_without(adj, n, removed)) == _fallback.connected_without(adj, n, removed)


def _dgd_inputs(poly: bool, seed: int):
    g = np.random.default_rng(seed)
    topo = random_graph(5, 0.6, g, connected=True)
    w = consensus_weights(topo)
    m = 1 if poly else 2
    a = g.normal(size=(5, m, m))
    q = np.einsum("iab,icb->iac", a, a)
    alpha = g.normal(size=(5, m))
    d = g.normal(size=(5, 3)) * [1, 1, 0.1]
    x0 = g.uniform(-1, 1, size=(5, m))
    lo, hi = -2 * np.ones(m), 2 * np.ones(m)
    steps = 0.3 / np.sqrt(np.arange(1, 401))
    return w, q, alpha, d, poly, x0, lo, hi, steps


@needs_ext
@pytest.mark.parametrize("poly", [False, True])
@pytest.mark.parametrize("atc", [True, False])
def test_dgd_kernels_agree(poly, atc):
    args = _dgd_inputs(poly, 3)
    h1, s1, b1 = _kernels.dgd_loop(*args, 1e-9, 10, atc)
    h2, s2, b2 = _fallback.dgd_loop(*args, 1e-9, 10, atc)
    assert (s1, b1) == (s2, b2)
    assert np.allclose(np.asarray(h1), h2, rtol=0, atol=1e-12)


@needs_ext
def test_dgd_divergence_round_agrees():
    w, q, alpha, d, poly, x0, _, _, _ = _dgd_inputs(False, 4)
    big = np.full(2, np.inf)
    steps = np.full(3000, 50.0)
    r1 = _kernels.dgd_loop(w, q, alpha, d, poly, x0, -big, big, steps, 1e-9, 10, False)
    r2 = _fallback.dgd_loop(w, q, alpha, d, poly, x0, -big, big, steps, 1e-9, 10, False)
    assert r1[2] == r2[2] > 0
