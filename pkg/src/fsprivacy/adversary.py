"""Passive adversary: views, theoretical privacy bounds, and Monte Carlo KL audits.

A corrupted set C observes its own costs, every noise vector on an edge
incident to C, and (worst case) every agent's effective cost. Subtracting the
C-incident noise from an honest agent's effective coefficient leaves

    abar_i = alpha_i + sum_{j in N_i \\ C} (r_ij - r_ji),

which carries all the information the view holds about the honest
coefficients. The audit estimates the KL divergence between the laws of
abar_H under two coefficient scenarios by fitting Gaussians to samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

import numpy as np

from .errors import DomainError, ScenarioError, SupportMismatchError
from .graph import ENUMERATION_CAP, Topology, induced_subgraph, is_vertex_cut, neighbors, vertex_connectivity
from .obfuscation import PhaseOneRecord, draw_noise_batch
from .rng import CounterRNG
from .spectral import RANK_CUTOFF, algebraic_connectivity, gaussian_kl, incidence, laplacian

MIN_AUDIT_TRIALS = 10_000
JACKKNIFE_GROUPS = 20
EVIDENCE_NOTE = "finite-sample spot check of one scenario pair; evidence, not proof of the bound"


class NoGuarantee:
    """Returned instead of an epsilon when the corrupted set can disconnect the honest agents."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NO_GUARANTEE"

    def __str__(self) -> str:
        return "no guarantee"


NO_GUARANTEE = NoGuarantee()


@dataclass(frozen=True)
class CorruptedSet:
    c: frozenset
    n: int

    def __init__(self, c: Iterable[int], n: int):
        c = frozenset(int(a) for a in c)
        for a in c:
            if not 1 <= a <= n:
                raise DomainError(f"corrupted agent {a} outside 1..{n}")
        if len(c) >= n:
            raise DomainError("at least one agent must stay honest")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "n", int(n))

    @property
    def honest(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.n + 1) if i not in self.c)

    def __contains__(self, i: int) -> bool:
        return i in self.c

    def __iter__(self):
        return iter(sorted(self.c))

    def __len__(self) -> int:
        return len(self.c)


def _corrupted(c, n: int) -> CorruptedSet:
    return c if isinstance(c, CorruptedSet) else CorruptedSet(c, n)


@dataclass(frozen=True)
class AdversaryView:
    corrupted: CorruptedSet
    corrupted_costs: dict          # i -> private cost, i in C
    corrupted_effective: dict      # i -> effective cost, i in C
    noise: dict                    # (i, j) -> r_ij for every directed edge touching C
    honest_effective: dict         # i -> effective affine coefficient, i in H


@dataclass(frozen=True)
class ReducedView:
    abar: dict                     # i -> abar_i, i in H

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.abar[i] for i in sorted(self.abar)])


@dataclass(frozen=True)
class ScenarioPair:
    A: np.ndarray                  # m x n
    B: np.ndarray
    c: CorruptedSet

    def __init__(self, A, B, c):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape != B.shape:
            raise DomainError(f"scenario shapes differ: {A.shape} vs {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", _corrupted(c, A.shape[1]))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def distance_sq(self) -> float:
        return float(np.sum((self.A - self.B) ** 2))


def extract_view(record: PhaseOneRecord, c) -> AdversaryView:
    topo = record.topology
    c = _corrupted(c, topo.n)
    if not c.c:
        raise DomainError("the adversary must corrupt at least one agent")
    noise = {}
    for i, j in topo.edges:
        if i in c or j in c:
            noise[(i, j)] = record.noise[(i, j)]
            noise[(j, i)] = record.noise[(j, i)]
    return AdversaryView(
        corrupted=c,
        corrupted_costs={i: record.costs[i - 1] for i in c},
        corrupted_effective={i: record.effective[i - 1] for i in c},
        noise=noise,
        honest_effective={i: record.effective[i - 1].affine for i in c.honest},
    )


def reduce_view(view: AdversaryView, topology: Topology, c=None) -> ReducedView:
    """Strip the C-incident noise (known to the adversary) from honest effective coefficients."""
    c = view.corrupted if c is None else _corrupted(c, topology.n)
    abar = {}
    for i in c.honest:
        value = np.array(view.honest_effective[i], dtype=float)
        for j in sorted(neighbors(topology, i) & c.c):
            try:
                value = value - (view.noise[(i, j)] - view.noise[(j, i)])
            except KeyError:
                raise DomainError(f"view lacks noise on edge {{{i},{j}}}") from None
        abar[i] = value
    return ReducedView(abar)


def validate_scenario(scenario: ScenarioPair) -> Optional[str]:
    """None when both matching constraints hold, else a description of the violation."""
    A, B, c = scenario.A, scenario.B, scenario.c
    tol = 1e-12 * max(1.0, float(np.abs(A).max(initial=0.0)), float(np.abs(B).max(initial=0.0)))
    for i in sorted(c.c):
        if np.abs(A[:, i - 1] - B[:, i - 1]).max() > tol:
            return f"corrupted coefficient mismatch at agent {i}"
    h = [i - 1 for i in c.honest]
    if np.abs(A[:, h].sum(axis=1) - B[:, h].sum(axis=1)).max() > tol * len(h):
        return "honest sum mismatch"
    return None


def honest_algebraic_connectivity(topology: Topology, c) -> float:
    c = _corrupted(c, topology.n)
    sub, _ = induced_subgraph(topology, c.honest)
    return algebraic_connectivity(laplacian(sub))


def theoretical_epsilon(topology: Topology, c, sigma: float):
    """1 / (4 sigma^2 mu2(L_H)), or NO_GUARANTEE if C is a vertex cut.

    With a single honest agent the honest-sum constraint pins its coefficient,
    so no two admissible scenarios differ and 0.0 is returned.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    c = _corrupted(c, topology.n)
    if is_vertex_cut(topology, c.c):
        return NO_GUARANTEE
    if len(c.honest) == 1:
        return 0.0
    return 1.0 / (4.0 * sigma**2 * honest_algebraic_connectivity(topology, c))


def degree_privacy_epsilon(topology: Topology, c, sigma: float, ell: int):
    """Same bound as the affine case, for the degree-``ell`` coefficients."""
    if ell < 1:
        raise DomainError("degree index must be at least 1")
    return theoretical_epsilon(topology, c, sigma)


def _subsets_up_to(n: int, t: int):
    for k in range(0, t + 1):
        yield from combinations(range(1, n + 1), k)


def corollary_epsilon(topology: Topology, t: int, sigma: float):
    """Worst case of theoretical_epsilon over all |C| <= t (empty set included)."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if t < 0:
        raise DomainError("t must be non-negative")
    if topology.n > ENUMERATION_CAP:
        raise DomainError(
            f"{topology.n} agents exceeds the exhaustive enumeration cap of {ENUMERATION_CAP}; "
            "use sampled_corollary_epsilon, which reports a lower bound"
        )
    if vertex_connectivity(topology) < t + 1:
        return NO_GUARANTEE
    return max(theoretical_epsilon(topology, c, sigma) for c in _subsets_up_to(topology.n, t))


def corollary_table(topology: Topology, t: int, sigma: float) -> list[dict]:
    """Worst-case epsilon and attaining corrupted set for each size 0..t."""
    if topology.n > ENUMERATION_CAP:
        raise DomainError(f"{topology.n} agents exceeds the enumeration cap of {ENUMERATION_CAP}")
    rows = []
    for k in range(0, min(t, topology.n - 1) + 1):
        worst, worst_c, cuts = None, None, 0
        for c in combinations(range(1, topology.n + 1), k):
            eps = theoretical_epsilon(topology, c, sigma)
            if eps is NO_GUARANTEE:
                cuts += 1
                worst, worst_c = NO_GUARANTEE, c
                continue
            if worst is not NO_GUARANTEE and (worst is None or eps > worst):
                worst, worst_c = eps, c
        rows.append({"size": k, "epsilon": worst, "worst_c": list(worst_c), "vertex_cuts": cuts})
    return rows


@dataclass(frozen=True)
class SampledBound:
    """Max of theoretical_epsilon over randomly sampled corrupted sets: a lower bound only."""

    value: object
    samples: int
    lower_bound: bool = True


def sampled_corollary_epsilon(topology: Topology, t: int, sigma: float, samples: int,
                              rng: np.random.Generator) -> SampledBound:
    worst = 0.0
    for _ in range(samples):
        k = int(rng.integers(0, min(t, topology.n - 1) + 1))
        c = rng.choice(np.arange(1, topology.n + 1), size=k, replace=False).tolist()
        eps = theoretical_epsilon(topology, c, sigma)
        if eps is NO_GUARANTEE:
            return SampledBound(NO_GUARANTEE, samples)
        worst = max(worst, eps)
    return SampledBound(worst, samples)


def _cross_incidence(topology: Topology, c: CorruptedSet) -> np.ndarray:
    """Incidence columns of edges with exactly one endpoint in C (others zeroed)."""
    theta = incidence(topology)
    for e, (i, j) in enumerate(topology.edges):
        if (i in c) == (j in c):
            theta[:, e] = 0.0
    return theta


def _branch_batch(A: np.ndarray, topology: Topology, c: "CorruptedSet", sigma: float,
                  rng: CounterRNG, trials) -> tuple[np.ndarray, np.ndarray]:
    """Effective coefficients (T, n, m) and reduced honest views (T, |H|, m) of one batch."""
    trials = np.atleast_1d(np.asarray(trials, dtype=np.int64))
    noise = draw_noise_batch(topology, sigma, A.shape[0], rng, trials)
    diff = noise[:, 0::2, :] - noise[:, 1::2, :]
    effective = A.T[None, :, :] + np.einsum("ne,tem->tnm", incidence(topology), diff)
    known = np.einsum("ne,tem->tnm", _cross_incidence(topology, c), diff)
    h = [i - 1 for i in c.honest]
    return effective, effective[:, h, :] - known[:, h, :]


def reduced_view_batch(coeffs, topology: Topology, c, sigma: float, rng: CounterRNG,
                       trials) -> np.ndarray:
    """Reduced views abar_H for a batch of executions, shape (trials, |H|, m).

    Runs the full masking step, forms every agent's effective coefficient and
    removes the noise the adversary holds; identical noise for identical
    ``rng`` and trial indices regardless of ``coeffs``.
    """
    A = np.atleast_2d(np.asarray(coeffs, dtype=float))
    return _branch_batch(A, topology, _corrupted(c, topology.n), sigma, rng, trials)[1]


def random_scenario(topology: Topology, c, rng: np.random.Generator, m: int = 1,
                    scale: float = 1.0) -> "ScenarioPair":
    """A valid scenario pair: B differs from A only on H, with equal honest sums."""
    c = _corrupted(c, topology.n)
    A = rng.uniform(-scale, scale, size=(m, topology.n))
    delta = np.zeros_like(A)
    h = [i - 1 for i in c.honest]
    d = rng.normal(0.0, scale, size=(m, len(h)))
    delta[:, h] = d - d.mean(axis=1, keepdims=True)
    return ScenarioPair(A, A + delta, c)


@dataclass
class _Moments:
    """Per-group shifted moment sums; finalization is independent of accumulation order."""

    shift: np.ndarray              # (m, d)
    groups: int
    floor: float = 0.0             # variances below this are rounding residue, set to zero
    count: np.ndarray = field(init=False)
    s1: np.ndarray = field(init=False)
    s2: np.ndarray = field(init=False)

    def __post_init__(self):
        m, d = self.shift.shape
        self.count = np.zeros(self.groups)
        self.s1 = np.zeros((self.groups, m, d))
        self.s2 = np.zeros((self.groups, m, d, d))

    def add(self, group: np.ndarray, samples: np.ndarray) -> None:
        y = np.transpose(samples, (0, 2, 1)) - self.shift[None]        # (T, m, d)
        for g in np.unique(group):
            sel = y[group == g]
            self.count[g] += sel.shape[0]
            self.s1[g] += sel.sum(axis=0)
            self.s2[g] += np.einsum("tmi,tmj->mij", sel, sel)

    def fit(self, drop: Optional[int] = None):
        keep = np.ones(self.groups, bool)
        if drop is not None:
            keep[drop] = False
        n = self.count[keep].sum()
        s1 = self.s1[keep].sum(axis=0)
        s2 = self.s2[keep].sum(axis=0)
        mean_shifted = s1 / n
        cov = (s2 - n * np.einsum("mi,mj->mij", mean_shifted, mean_shifted)) / (n - 1)
        cov = 0.5 * (cov + np.transpose(cov, (0, 2, 1)))
        for k in range(cov.shape[0]):
            vals, vecs = np.linalg.eigh(cov[k])
            if np.any(vals < self.floor):
                vals = np.where(vals < self.floor, 0.0, vals)
                cov[k] = (vecs * vals) @ vecs.T
        return self.shift + mean_shifted, cov


def _kl_sum(fit_a, fit_b) -> float:
    (mean_a, cov_a), (mean_b, cov_b) = fit_a, fit_b
    return sum(gaussian_kl(mean_a[k], cov_a[k], mean_b[k], cov_b[k]) for k in range(mean_a.shape[0]))


def _rank(cov: np.ndarray) -> int:
    vals = np.linalg.eigvalsh(cov)
    return int((np.abs(vals) > RANK_CUTOFF * np.abs(vals).max(initial=0.0)).sum())


@dataclass
class PrivacyReport:
    epsilon_theory: object
    mu2_honest: Optional[float]
    kl_empirical: Optional[float]
    kl_bound: Optional[float]
    kl_stderr: Optional[float]
    trials: int
    mean_A: np.ndarray             # (m, |H|)
    mean_B: np.ndarray
    cov_A: np.ndarray              # (m, |H|, |H|)
    cov_B: np.ndarray
    corrupted: list
    honest: list
    sigma: float
    support_rank: list
    flags: list = field(default_factory=list)
    histograms: Optional[list] = None

    @property
    def cov(self) -> np.ndarray:
        """Pooled covariance of the two branches."""
        return 0.5 * (self.cov_A + self.cov_B)

    def to_dict(self) -> dict:
        def arr(x):
            x = np.asarray(x)
            return x[0].tolist() if x.shape[0] == 1 else x.tolist()

        eps = self.epsilon_theory
        return {
            "epsilon_theory": str(eps) if eps is NO_GUARANTEE else eps,
            "mu2_honest": self.mu2_honest,
            "kl_empirical": self.kl_empirical,
            "kl_bound": self.kl_bound,
            "kl_stderr": self.kl_stderr,
            "trials": self.trials,
            "mean_A": arr(self.mean_A),
            "mean_B": arr(self.mean_B),
            "cov": arr(self.cov),
            "cov_A": arr(self.cov_A),
            "cov_B": arr(self.cov_B),
            "corrupted": self.corrupted,
            "honest": self.honest,
            "sigma": self.sigma,
            "support_rank": self.support_rank,
            "flags": self.flags,
        }


def _histogram_edges(A: np.ndarray, B: np.ndarray, topology: Topology, honest, sigma: float, bins: int):
    """Common bin edges per honest (agent, coordinate) covering +-6 sd of the effective coefficient."""
    edges = {}
    for i in honest:
        sd = sigma * math.sqrt(2.0 * max(topology.degree(i), 1))
        for k in range(A.shape[0]):
            lo = min(A[k, i - 1], B[k, i - 1]) - 6 * sd
            hi = max(A[k, i - 1], B[k, i - 1]) + 6 * sd
            edges[(i, k)] = np.linspace(lo, hi, bins + 1)
    return edges


def empirical_kl(scenario: ScenarioPair, topology: Topology, sigma: float, trials: int,
                 rng: CounterRNG, chunk: int = 20_000, histogram_bins: int = 0) -> PrivacyReport:
    """Monte Carlo estimate of KL(View_C(A), View_C(B)) next to the theoretical bound.

    Each branch runs ``trials`` independent masking executions (branch A on
    ``rng.substream(1)``, branch B on ``rng.substream(2)``), reduces every
    view, fits a Gaussian per coordinate and sums the coordinate KLs. The
    standard error is a grouped jackknife over trial indices.
    """
    violation = validate_scenario(scenario)
    if violation is not None:
        raise ScenarioError(violation)
    if scenario.n != topology.n:
        raise DomainError(f"scenario has {scenario.n} agents, topology has {topology.n}")
    if trials < 2 * JACKKNIFE_GROUPS:
        raise DomainError(f"need at least {2 * JACKKNIFE_GROUPS} trials")
    c = scenario.c
    if not c.c:
        raise DomainError("the adversary must corrupt at least one agent")
    honest = list(c.honest)
    h = [i - 1 for i in honest]
    flags = []
    if trials < MIN_AUDIT_TRIALS:
        flags.append(f"only {trials} trials; below the recommended {MIN_AUDIT_TRIALS}")

    eps = theoretical_epsilon(topology, c, sigma)
    if eps is NO_GUARANTEE:
        flags.append("C is a vertex cut: no privacy guarantee")
        mu2, bound = None, None
    else:
        mu2 = honest_algebraic_connectivity(topology, c) if len(honest) > 1 else None
        bound = eps * scenario.distance_sq()

    group_size = -(-trials // JACKKNIFE_GROUPS)
    # cancellation in abar leaves ~1e-16 relative residue where the true variance is zero
    scale = max(1.0, sigma * math.sqrt(2.0 * topology.num_edges), float(np.abs(scenario.A).max()),
                float(np.abs(scenario.B).max()))
    floor = (1e-10 * scale) ** 2
    hist_edges = _histogram_edges(scenario.A, scenario.B, topology, honest, sigma, histogram_bins) if histogram_bins else None
    fits, moments, hist = {}, {}, {}
    for label, coeffs, tag in (("A", scenario.A, 1), ("B", scenario.B, 2)):
        mom = _Moments(coeffs[:, h].copy(), JACKKNIFE_GROUPS, floor)
        branch_rng = rng.substream(tag)
        counts = {key: np.zeros(histogram_bins, dtype=np.int64) for key in (hist_edges or {})}
        for start in range(0, trials, chunk):
            ids = np.arange(start, min(start + chunk, trials), dtype=np.int64)
            eff, samples = _branch_batch(coeffs, topology, c, sigma, branch_rng, ids)
            mom.add(ids // group_size, samples)
            if hist_edges:
                for (i, k), e in hist_edges.items():
                    counts[(i, k)] += np.histogram(eff[:, i - 1, k], bins=e)[0]
        moments[label] = mom
        fits[label] = mom.fit()
        hist[label] = counts

    ranks = [_rank(fits["A"][1][k]) for k in range(scenario.m)]
    try:
        kl = _kl_sum(fits["A"], fits["B"])
        loo = np.array([_kl_sum(moments["A"].fit(g), moments["B"].fit(g)) for g in range(JACKKNIFE_GROUPS)])
        g = JACKKNIFE_GROUPS
        stderr = float(math.sqrt((g - 1) / g * np.sum((loo - loo.mean()) ** 2)))
    except SupportMismatchError as exc:
        flags.append(f"support mismatch: {exc}")
        kl, stderr = None, None
    flags.append(EVIDENCE_NOTE)

    histograms = None
    if hist_edges:
        histograms = [
            {"branch": label, "agent": i, "coordinate": k + 1, "edges": hist_edges[(i, k)], "counts": hist[label][(i, k)]}
            for label in ("A", "B")
            for (i, k) in sorted(hist_edges)
        ]
    return PrivacyReport(
        epsilon_theory=eps,
        mu2_honest=mu2,
        kl_empirical=kl,
        kl_bound=bound,
        kl_stderr=stderr,
        trials=trials,
        mean_A=fits["A"][0],
        mean_B=fits["B"][0],
        cov_A=fits["A"][1],
        cov_B=fits["B"][1],
        corrupted=sorted(c.c),
        honest=honest,
        sigma=float(sigma),
        support_rank=ranks,
        flags=flags,
        histograms=histograms,
    )
