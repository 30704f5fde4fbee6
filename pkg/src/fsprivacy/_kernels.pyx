# cython: language_level=3
"""Compiled hot kernels.

Must stay bit-identical with ``_fallback.py``. The Box-Muller transform is
applied in numpy by the caller so both backends share one ``log``/``cos``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t splitmix64(uint64_t x) noexcept nogil:
    cdef uint64_t z = x + GOLDEN
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


def counter_uniforms(uint64_t seed, uint64_t tag, int64_t[::1] trials, int64_t[::1] streams):
    cdef Py_ssize_t nt = trials.shape[0]
    cdef Py_ssize_t ns = streams.shape[0]
    out1 = np.empty((nt, ns), dtype=np.float64)
    out2 = np.empty((nt, ns), dtype=np.float64)
    cdef double[:, ::1] o1 = out1
    cdef double[:, ::1] o2 = out2
    cdef uint64_t k1 = splitmix64(splitmix64(seed) ^ tag)
    cdef uint64_t k2, k3, a, b
    cdef Py_ssize_t t, s
    with nogil:
        for t in range(nt):
            k2 = splitmix64(k1 ^ <uint64_t>trials[t])
            for s in range(ns):
                k3 = splitmix64(k2 ^ <uint64_t>streams[s])
                a = splitmix64(k3)
                b = splitmix64(a)
                o1[t, s] = (<double>((a >> 11) + 1)) * TWO_M53
                o2[t, s] = (<double>(b >> 11)) * TWO_M53
    return out1, out2


cdef inline int popcount(uint64_t x) noexcept nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef inline int lowest_bit(uint64_t x) noexcept nogil:
    cdef int i = 0
    while not (x & 1):
        x >>= 1
        i += 1
    return i


cdef bint _connected_without(const uint64_t[::1] adj, int n, uint64_t removed) noexcept nogil:
    cdef uint64_t full = (<uint64_t>1 << n) - 1 if n < 64 else <uint64_t>0xFFFFFFFFFFFFFFFF
    cdef uint64_t remaining = full & ~removed
    if popcount(remaining) <= 1:
        return True
    cdef uint64_t seen = remaining & (~remaining + 1)
    cdef uint64_t frontier = seen
    cdef uint64_t reach, f
    cdef int v
    while frontier:
        reach = 0
        f = frontier
        while f:
            v = lowest_bit(f)
            f &= f - 1
            reach |= adj[v]
        frontier = reach & remaining & ~seen
        seen |= frontier
    return seen == remaining


def connected_without(const uint64_t[::1] adj, int n, uint64_t removed):
    return bool(_connected_without(adj, n, removed))


cdef int _min_cut(const uint64_t[::1] adj, int n) noexcept nogil:
    cdef int k
    cdef uint64_t s, c, r
    cdef uint64_t limit = <uint64_t>1 << n
    if n <= 1 or not _connected_without(adj, n, 0):
        return 0
    for k in range(1, n - 1):
        s = (<uint64_t>1 << k) - 1
        while s < limit:
            if not _connected_without(adj, n, s):
                return k
            # Gosper's hack: next subset with the same popcount
            c = s & (~s + 1)
            r = s + c
            s = (((r ^ s) >> 2) // c) | r
    return n - 1


def min_vertex_cut_size(const uint64_t[::1] adj, int n):
    if n > 62:
        raise ValueError("bitmask kernel supports at most 62 agents")
    cdef int k
    with nogil:
        k = _min_cut(adj, n)
    return k


cdef int _dgd_core(const double[:, ::1] W, const double[:, :, ::1] Q, const double[:, ::1] alpha,
                   const double[:, ::1] D, bint poly, double[:, :, ::1] hist,
                   const double[::1] lo, const double[::1] hi, const double[::1] steps,
                   double tol, int patience, bint atc, int* rounds_out, bint* stopped_out) noexcept nogil:
    cdef Py_ssize_t n = hist.shape[1], m = hist.shape[2], d = D.shape[1]
    cdef Py_ssize_t K = steps.shape[0]
    cdef Py_ssize_t k, i, j, a, b, l
    cdef double eta, g, acc, v, move, dist, xv
    cdef int quiet = 0
    cdef double* y = <double*> malloc(n * m * sizeof(double))
    cdef double* grad = <double*> malloc(n * m * sizeof(double))
    rounds_out[0] = 0
    stopped_out[0] = False
    for k in range(K):
        eta = steps[k]
        for i in range(n):
            for a in range(m):
                if poly:
                    xv = hist[k, i, 0]
                    g = D[i, d - 1]
                    for l in range(d - 2, -1, -1):
                        g = g * xv + D[i, l]
                else:
                    g = alpha[i, a]
                    for b in range(m):
                        g = g + Q[i, a, b] * hist[k, i, b]
                grad[i * m + a] = g
                y[i * m + a] = hist[k, i, a] - eta * g if atc else hist[k, i, a]
        move = 0.0
        for i in range(n):
            dist = 0.0
            for a in range(m):
                acc = 0.0
                for j in range(n):
                    acc = acc + W[i, j] * y[j * m + a]
                if not atc:
                    acc = acc - eta * grad[i * m + a]
                if not isfinite(acc):
                    free(y)
                    free(grad)
                    rounds_out[0] = <int>(k + 1)
                    return -1
                if acc < lo[a]:
                    acc = lo[a]
                elif acc > hi[a]:
                    acc = hi[a]
                hist[k + 1, i, a] = acc
                v = acc - hist[k, i, a]
                dist = dist + v * v
            dist = sqrt(dist)
            if dist > move:
                move = dist
        rounds_out[0] = <int>(k + 1)
        if move < tol * eta:
            quiet += 1
        else:
            quiet = 0
        if quiet >= patience:
            stopped_out[0] = True
            break
    free(y)
    free(grad)
    return 0


def dgd_loop(W, Q, alpha, D, bint poly, x0, lo, hi, steps, double tol, int patience, bint atc):
    """Run the DGD rounds; returns (history, stopped, bad_round) with bad_round = -1 when finite."""
    cdef double[::1] st = np.ascontiguousarray(steps, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    hist = np.empty((st.shape[0] + 1, x0.shape[0], x0.shape[1]), dtype=np.float64)
    hist[0] = x0
    cdef double[:, :, ::1] h = hist
    cdef const double[:, ::1] w = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, :, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef const double[:, ::1] al = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef const double[:, ::1] dd = np.ascontiguousarray(D, dtype=np.float64)
    cdef const double[::1] l = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(hi, dtype=np.float64)
    cdef int rounds = 0
    cdef bint stopped = False
    cdef int status
    with nogil:
        status = _dgd_core(w, q, al, dd, poly, h, l, u, st, tol, patience, atc, &rounds, &stopped)
    if status != 0:
        return hist[:rounds], False, rounds
    return hist[:rounds + 1], bool(stopped), -1
