"""Laplacian spectra, generalized inverses and the degenerate Gaussian N†(0, cL)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SupportMismatchError
from .graph import Topology, oriented_edges
from .rng import CounterRNG

# eigenvalues below RANK_CUTOFF * max|eigenvalue| count as zero
RANK_CUTOFF = 1e-10
_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray   # ascending
    vectors: np.ndarray  # orthonormal columns

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class DegenerateGaussian:
    """N†(0_n, scale * L) for the Laplacian L of a connected graph."""

    laplacian: np.ndarray
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        # validates connectivity (exactly one zero eigenvalue)
        generalized_inverse(self.laplacian)

    @property
    def dim(self) -> int:
        return self.laplacian.shape[0]

    def density(self, r) -> float:
        return degenerate_density(self, r)


def laplacian(topology: Topology) -> np.ndarray:
    """Degree matrix minus adjacency."""
    a = topology.adjacency().astype(float)
    return np.diag(a.sum(axis=1)) - a


def incidence(topology: Topology, order=None) -> np.ndarray:
    """Oriented incidence matrix: column for {i, j}, i < j, is +1 at row i, -1 at row j."""
    order = oriented_edges(topology) if order is None else tuple(tuple(e) for e in order)
    if sorted(order) != sorted(topology.edges):
        raise DomainError("edge order is not a permutation of the topology's edges")
    theta = np.zeros((topology.n, len(order)))
    for col, (i, j) in enumerate(order):
        lo, hi = min(i, j), max(i, j)
        theta[lo - 1, col] = 1.0
        theta[hi - 1, col] = -1.0
    return theta


def _as_symmetric(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > _SYMMETRY_TOL * scale:
        raise DomainError("matrix is not symmetric")
    return m


def eigendecompose(m) -> EigenDecomposition:
    m = _as_symmetric(m)
    values, vectors = np.linalg.eigh(m)
    return EigenDecomposition(values, vectors)


def _nonzero_mask(values: np.ndarray) -> np.ndarray:
    top = np.abs(values).max(initial=0.0)
    return np.abs(values) > RANK_CUTOFF * top


def algebraic_connectivity(l) -> float:
    """Second-smallest eigenvalue of a Laplacian."""
    values = eigendecompose(l).values
    if values.size < 2:
        raise DomainError("algebraic connectivity needs at least two agents")
    return float(values[1])


def _connected_spectrum(l) -> EigenDecomposition:
    eig = eigendecompose(l)
    zeros = int((~_nonzero_mask(eig.values)).sum())
    if eig.values.size >= 2 and zeros != 1:
        raise DomainError(f"Laplacian has {zeros} zero eigenvalues; the graph must be connected")
    return eig


def generalized_inverse(l) -> np.ndarray:
    """M Diag(0, 1/mu_2, ..., 1/mu_n) M^T for a connected-graph Laplacian."""
    eig = _connected_spectrum(l)
    inv = np.zeros_like(eig.values)
    keep = _nonzero_mask(eig.values)
    inv[keep] = 1.0 / eig.values[keep]
    out = (eig.vectors * inv) @ eig.vectors.T
    return 0.5 * (out + out.T)


def pseudo_determinant(l, scale: float) -> float:
    """det*(2 pi scale L) = (2 pi scale)^(n-1) * prod of nonzero eigenvalues."""
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    eig = _connected_spectrum(l)
    nz = eig.values[_nonzero_mask(eig.values)]
    return float((2.0 * math.pi * scale) ** nz.size * np.prod(nz))


def degenerate_density(dist: DegenerateGaussian, r) -> float:
    r = np.asarray(r, dtype=float)
    if r.shape != (dist.dim,):
        raise DomainError(f"expected a vector of length {dist.dim}")
    off_support = abs(r.sum())
    if off_support != 0.0 and off_support > 1e-9 * np.linalg.norm(r):
        return 0.0
    quad = float(r @ generalized_inverse(dist.laplacian) @ r)
    return math.exp(-quad / (2.0 * dist.scale)) / math.sqrt(pseudo_determinant(dist.laplacian, dist.scale))


def sample_mask_vectors(topology: Topology, sigma: float, rng: CounterRNG, trials) -> np.ndarray:
    """Batch of Theta @ C draws, one row per trial index, C_e ~ N(0, 2 sigma^2) per edge."""
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    trials = np.atleast_1d(np.asarray(trials, dtype=np.int64))
    if topology.num_edges == 0:
        return np.zeros((trials.size, topology.n))
    c = math.sqrt(2.0) * sigma * rng.normals(trials, np.arange(topology.num_edges))
    return c @ incidence(topology).T


def sample_mask_vector(topology: Topology, sigma: float, rng: CounterRNG, trial: int = 0) -> np.ndarray:
    return sample_mask_vectors(topology, sigma, rng, [trial])[0]


def psd_pinv(m) -> tuple[np.ndarray, np.ndarray, float]:
    """Pseudo-inverse, orthonormal support basis and log pseudo-determinant of a PSD matrix."""
    eig = eigendecompose(m)
    keep = _nonzero_mask(eig.values)
    if np.any(eig.values[keep] < 0):
        raise DomainError("covariance is not positive semidefinite")
    basis = eig.vectors[:, keep]
    vals = eig.values[keep]
    pinv = (basis / vals) @ basis.T
    return 0.5 * (pinv + pinv.T), basis, float(np.sum(np.log(vals)))


def gaussian_kl(mean_a, cov_a, mean_b, cov_b, support_tol: float = 1e-6) -> float:
    """KL(N(mean_a, cov_a) || N(mean_b, cov_b)) for possibly singular covariances.

    Both distributions must live on the same affine subspace; otherwise the
    divergence is infinite and SupportMismatchError is raised.
    """
    mean_a = np.atleast_1d(np.asarray(mean_a, dtype=float))
    mean_b = np.atleast_1d(np.asarray(mean_b, dtype=float))
    cov_a = np.atleast_2d(_as_symmetric(np.atleast_2d(cov_a)))
    cov_b = np.atleast_2d(_as_symmetric(np.atleast_2d(cov_b)))
    d = mean_a.size
    if mean_b.size != d or cov_a.shape != (d, d) or cov_b.shape != (d, d):
        raise DomainError("mean/covariance dimensions disagree")

    pinv_b, basis_b, logdet_b = psd_pinv(cov_b)
    _, basis_a, logdet_a = psd_pinv(cov_a)
    if basis_a.shape[1] != basis_b.shape[1]:
        raise SupportMismatchError(
            f"covariance ranks differ ({basis_a.shape[1]} vs {basis_b.shape[1]}): infinite divergence"
        )
    proj_a = basis_a @ basis_a.T
    proj_b = basis_b @ basis_b.T
    if np.abs(proj_a - proj_b).max(initial=0.0) > support_tol:
        raise SupportMismatchError("covariance column spaces differ: infinite divergence")

    delta = mean_a - mean_b
    outside = delta - proj_b @ delta
    if np.linalg.norm(outside) > 1e-8 * (1.0 + np.linalg.norm(mean_a) + np.linalg.norm(mean_b)):
        raise SupportMismatchError("mean difference leaves the common support: infinite divergence")

    quad = float(delta @ pinv_b @ delta)
    if np.array_equal(cov_a, cov_b):
        return 0.5 * quad
    rank = basis_b.shape[1]
    kl = 0.5 * (float(np.trace(pinv_b @ cov_a)) - rank + quad + logdet_b - logdet_a)
    return max(kl, 0.0)


def matrix_to_json(m) -> str:
    """Row-major JSON dump for debugging."""
    return json.dumps(np.asarray(m, dtype=float).tolist())
