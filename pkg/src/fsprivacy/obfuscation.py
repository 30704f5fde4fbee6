"""Zero-sum masking of local costs over the communication graph.

Each agent i draws r_ij ~ N(0, sigma^2 I_m) for every neighbor j and sends it
to j; its mask is u_i = sum_{j in N_i} (r_ij - r_ji). Masks sum to zero, so
shifting every affine coefficient by its mask leaves the aggregate cost
unchanged.

Noise for trial t, directed pair i->j and coordinate k is the counter-based
normal at stream ``directed_index(i, j) * m + k`` (see ``rng``), where the
directed index of edge e = {i, j}, i < j, is 2e for i->j and 2e+1 for j->i.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .costs import Cost, PolynomialCost, _check_dims
from .errors import DomainError
from .graph import Topology, neighbors
from .rng import CounterRNG
from .spectral import incidence


@dataclass(frozen=True)
class PairwiseNoise:
    """r[(i, j)] is the vector agent i sent to neighbor j."""

    r: Mapping[tuple[int, int], np.ndarray]
    m: int

    def __getitem__(self, pair: tuple[int, int]) -> np.ndarray:
        return self.r[pair]

    def __len__(self) -> int:
        return len(self.r)


@dataclass(frozen=True)
class MaskSet:
    u: Mapping[int, np.ndarray]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.u[i]

    def matrix(self) -> np.ndarray:
        """m x n, column i-1 is u_i."""
        return np.column_stack([self.u[i] for i in sorted(self.u)])

    def total(self) -> np.ndarray:
        return self.matrix().sum(axis=1)


def _streams(topology: Topology, m: int) -> np.ndarray:
    return np.arange(2 * topology.num_edges * m, dtype=np.int64)


def draw_noise_batch(topology: Topology, sigma: float, m: int, rng: CounterRNG, trials) -> np.ndarray:
    """Noise for many executions at once, shape (trials, 2|E|, m), directed-index order."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    trials = np.atleast_1d(np.asarray(trials, dtype=np.int64))
    z = rng.normals(trials, _streams(topology, m))
    return sigma * z.reshape(trials.size, 2 * topology.num_edges, m)


def masks_from_noise_batch(topology: Topology, noise: np.ndarray) -> np.ndarray:
    """Masks (trials, n, m) from batched noise (trials, 2|E|, m)."""
    diff = noise[:, 0::2, :] - noise[:, 1::2, :]  # r_ij - r_ji for i < j
    return np.einsum("ne,tem->tnm", incidence(topology), diff)


def draw_noise(topology: Topology, sigma: float, m: int, rng: CounterRNG, trial: int = 0) -> PairwiseNoise:
    batch = draw_noise_batch(topology, sigma, m, rng, [trial])[0]
    r = {}
    for e, (i, j) in enumerate(topology.edges):
        r[(i, j)] = batch[2 * e]
        r[(j, i)] = batch[2 * e + 1]
    return PairwiseNoise(r, m)


def compute_masks(topology: Topology, noise: PairwiseNoise) -> MaskSet:
    u = {}
    for i in topology.agents:
        acc = np.zeros(noise.m)
        for j in sorted(neighbors(topology, i)):
            try:
                acc = acc + noise[(i, j)] - noise[(j, i)]
            except KeyError:
                raise DomainError(f"noise is missing an entry for edge {{{i},{j}}}") from None
        u[i] = acc
    return MaskSet(u)


def effective_costs(costs: Sequence[Cost], masks: MaskSet) -> list[Cost]:
    """h~_i(x) = h_i(x) + u_i^T x."""
    m = _check_dims(costs)
    if len(masks.u) != len(costs):
        raise DomainError(f"{len(masks.u)} masks for {len(costs)} costs")
    out = []
    for i, cost in enumerate(costs, start=1):
        u = np.atleast_1d(masks[i])
        if u.size != m:
            raise DomainError(f"mask of agent {i} has dimension {u.size}, costs have {m}")
        out.append(cost.with_affine(cost.affine + u))
    return out


def noise_trace(topology: Topology, noise: PairwiseNoise, masks: MaskSet) -> dict:
    """Audit record ``{"r": {"i->j": [...]}, "u": {"i": [...]}}``."""
    r = {}
    for i, j in topology.edges:
        r[f"{i}->{j}"] = noise[(i, j)].tolist()
        r[f"{j}->{i}"] = noise[(j, i)].tolist()
    return {"r": r, "u": {str(i): masks[i].tolist() for i in sorted(masks.u)}}


def _check_polynomials(costs: Sequence[Cost]) -> None:
    for c in costs:
        if not isinstance(c, PolynomialCost):
            raise DomainError("degree masking needs univariate polynomial costs")


def mask_degree(costs: Sequence[PolynomialCost], ell: int, topology: Topology, sigma: float,
                rng: CounterRNG, trial: int = 0) -> list[PolynomialCost]:
    """Shift every agent's degree-``ell`` coefficient by a fresh zero-sum mask."""
    _check_polynomials(costs)
    if len(costs) != topology.n:
        raise DomainError(f"{len(costs)} costs for {topology.n} agents")
    if any(not 1 <= ell <= c.degree for c in costs):
        raise DomainError(f"degree index {ell} outside 1..d for some cost")
    masks = compute_masks(topology, draw_noise(topology, sigma, 1, rng, trial))
    return [c.with_coefficient(ell, c.coefficient(ell) + masks[i][0]) for i, c in enumerate(costs, start=1)]


def degree_stream(rng: CounterRNG, ell: int) -> CounterRNG:
    """Noise stream for degree ``ell``; degree 1 reuses the caller's stream."""
    return rng if ell == 1 else rng.substream(ell)


def mask_all_degrees(costs: Sequence[PolynomialCost], topology: Topology, sigma: float,
                     rng: CounterRNG, trial: int = 0) -> list[PolynomialCost]:
    """Mask every degree 1..d with independent noise; lower-degree costs are zero-padded."""
    _check_polynomials(costs)
    d = max(c.degree for c in costs)
    out = [PolynomialCost(np.pad(c.coeffs, (0, d - c.degree))) for c in costs]
    for ell in range(1, d + 1):
        out = mask_degree(out, ell, topology, sigma, degree_stream(rng, ell), trial)
    return out


@dataclass(frozen=True)
class PhaseOneRecord:
    """Everything produced by one masking execution (the worst case: all of it is observable)."""

    topology: Topology
    costs: tuple
    noise: PairwiseNoise
    masks: MaskSet
    effective: tuple


def run_phase_one(costs: Sequence[Cost], topology: Topology, sigma: float, rng: CounterRNG,
                  trial: int = 0) -> PhaseOneRecord:
    m = _check_dims(costs)
    if len(costs) != topology.n:
        raise DomainError(f"{len(costs)} costs for {topology.n} agents")
    noise = draw_noise(topology, sigma, m, rng, trial)
    masks = compute_masks(topology, noise)
    return PhaseOneRecord(topology, tuple(costs), noise, masks, tuple(effective_costs(costs, masks)))
