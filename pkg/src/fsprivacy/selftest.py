"""Quick invariant suite behind ``fsprivacy selftest``.

Each check is seeded, so repeated invocations with one seed give identical
results. ``corrupt_mask`` perturbs one mask inside the zero-sum check and
exists only as a negative control.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adversary import empirical_kl, random_scenario
from .costs import QuadraticCost
from .graph import complete_graph, is_vertex_cut, random_graph
from .obfuscation import draw_noise_batch, masks_from_noise_batch, run_phase_one
from .rng import CounterRNG
from .spectral import laplacian


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def check_zero_sum(seed: int, executions: int = 200, corrupt_mask: bool = False) -> CheckResult:
    gen = np.random.default_rng([seed, 1])
    rng = CounterRNG(seed, 101)
    worst = 0.0
    for t in range(executions):
        n = int(gen.integers(2, 9))
        topo = random_graph(n, 0.5, gen, connected=True)
        sigma = float(gen.uniform(0.1, 10.0))
        u = masks_from_noise_batch(topo, draw_noise_batch(topo, sigma, 1, rng, [t]))[0]
        if corrupt_mask:
            u[0, 0] += 1e-3
        worst = max(worst, float(np.abs(u.sum(axis=0)).max()) / (n * sigma))
    passed = worst <= 1e-9
    return CheckResult("zero_sum", passed, f"max |sum u| / (n sigma) = {worst:.3g} (limit 1e-9)")


def check_mask_covariance(seed: int, samples: int = 50_000) -> CheckResult:
    rng = CounterRNG(seed, 102)
    worst = 0.0
    for topo in (complete_graph(3), random_graph(6, 0.5, np.random.default_rng([seed, 2]), connected=True)):
        u = masks_from_noise_batch(topo, draw_noise_batch(topo, 1.0, 1, rng, np.arange(samples)))[:, :, 0]
        target = 2.0 * laplacian(topo)
        rel = np.linalg.norm(np.cov(u, rowvar=False) - target) / np.linalg.norm(target)
        worst = max(worst, float(rel))
    return CheckResult("mask_covariance", worst <= 0.05, f"relative Frobenius error {worst:.4f} (limit 0.05)")


def check_sum_preservation(seed: int, executions: int = 100, points: int = 20) -> CheckResult:
    gen = np.random.default_rng([seed, 3])
    rng = CounterRNG(seed, 103)
    worst = 0.0
    for t in range(executions):
        n = int(gen.integers(2, 9))
        m = int(gen.integers(1, 4))
        topo = random_graph(n, 0.5, gen, connected=True)
        costs = []
        for _ in range(n):
            g = gen.normal(size=(m, m))
            costs.append(QuadraticCost(g @ g.T, gen.normal(size=m), float(gen.normal())))
        record = run_phase_one(costs, topo, float(gen.uniform(0.1, 10.0)), rng, trial=t)
        for x in gen.uniform(-10, 10, size=(points, m)):
            diff = sum(c.evaluate(x) for c in record.effective) - sum(c.evaluate(x) for c in costs)
            worst = max(worst, abs(diff))
    return CheckResult("sum_preservation", worst <= 1e-7, f"max |sum h~ - sum h| = {worst:.3g} (limit 1e-7)")


def check_bound_compliance(seed: int, scenarios: int = 5, trials: int = 5_000) -> CheckResult:
    gen = np.random.default_rng([seed, 4])
    done, failures, worst = 0, 0, -np.inf
    while done < scenarios:
        n = int(gen.integers(3, 7))
        topo = random_graph(n, 0.6, gen, connected=True)
        c = sorted(gen.choice(np.arange(1, n + 1), size=int(gen.integers(1, n - 1)), replace=False).tolist())
        if is_vertex_cut(topo, c):
            continue
        sigma = float(gen.uniform(0.5, 2.0))
        report = empirical_kl(random_scenario(topo, c, gen), topo, sigma, trials, CounterRNG(seed, 200 + done))
        slack = report.kl_empirical - report.kl_bound - 3.0 * report.kl_stderr
        worst = max(worst, slack)
        failures += slack > 0
        done += 1
    return CheckResult(
        "bound_compliance", failures == 0,
        f"{failures}/{scenarios} scenarios above bound + 3 SE at {trials} trials (worst slack {worst:.4f})",
    )


def run_selftest(seed: int = 0, corrupt_mask: bool = False) -> list[CheckResult]:
    return [
        check_zero_sum(seed, corrupt_mask=corrupt_mask),
        check_mask_covariance(seed),
        check_sum_preservation(seed),
        check_bound_compliance(seed),
    ]
