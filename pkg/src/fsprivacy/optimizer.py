"""Synchronous-round projected distributed gradient descent."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .costs import Box, Cost, QuadraticCost, _as_polynomial, _check_dims, aggregate_minimizer
from .errors import DivergenceError, DomainError
from .graph import Topology, is_connected

STEP_SCHEDULES = ("inverse_sqrt", "inverse_linear", "constant")
UPDATES = ("atc", "cta")


@dataclass
class DgdConfig:
    """Phase II settings.

    ``update="atc"`` (adapt-then-combine) mixes the neighbors' post-gradient
    states, x_i <- P(sum_j w_ij (x_j - eta grad h_j(x_j))); ``"cta"`` is the
    combine-then-adapt form x_i <- P(sum_j w_ij x_j - eta grad h_i(x_i)).
    ``init`` is ``"center"``, ``"zeros"`` or an (n, m) array.
    """

    box: Box
    max_rounds: int = 5000
    step0: float = 1.0
    step_schedule: str = "inverse_sqrt"
    weight_scheme: str = "metropolis"
    tolerance: float = 1e-9
    init: object = "center"
    update: str = "atc"
    patience: int = 10

    def __post_init__(self):
        if self.max_rounds < 1:
            raise DomainError("max_rounds must be positive")
        if not self.step0 > 0:
            raise DomainError("step0 must be positive")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if self.step_schedule not in STEP_SCHEDULES:
            raise DomainError(f"unknown step schedule {self.step_schedule!r}")
        if self.weight_scheme != "metropolis":
            raise DomainError(f"unknown weight scheme {self.weight_scheme!r}")
        if self.update not in UPDATES:
            raise DomainError(f"unknown update {self.update!r}")

    def step(self, k: int) -> float:
        if self.step_schedule == "inverse_sqrt":
            return self.step0 / np.sqrt(k + 1)
        if self.step_schedule == "inverse_linear":
            return self.step0 / (k + 1)
        return self.step0


@dataclass
class ExecutionTrace:
    estimates: np.ndarray                 # (rounds + 1, n, m), row 0 is the initial state
    oracle: Optional[np.ndarray] = None
    stopped_early: bool = False
    disagreements: np.ndarray = field(init=False)
    errors: Optional[np.ndarray] = field(init=False)  # (rounds + 1, n) distance to oracle

    def __post_init__(self):
        x = self.estimates
        diff = x[:, :, None, :] - x[:, None, :, :]
        self.disagreements = np.sqrt((diff**2).sum(axis=-1)).max(axis=(1, 2))
        if self.oracle is None:
            self.errors = None
        else:
            self.errors = np.linalg.norm(x - self.oracle, axis=-1)

    @property
    def rounds(self) -> int:
        return self.estimates.shape[0] - 1

    @property
    def final(self) -> np.ndarray:
        return self.estimates[-1]

    @property
    def final_mean(self) -> np.ndarray:
        return self.final.mean(axis=0)

    def max_error(self, k: int = -1) -> float:
        if self.errors is None:
            raise DomainError("trace has no oracle minimizer")
        return float(self.errors[k].max())

    def mean_error(self, k: int = -1) -> float:
        if self.oracle is None:
            raise DomainError("trace has no oracle minimizer")
        return float(np.linalg.norm(self.estimates[k].mean(axis=0) - self.oracle))


def consensus_weights(topology: Topology) -> np.ndarray:
    """Metropolis weights: w_ij = 1 / (1 + max(deg_i, deg_j)) on edges."""
    if not is_connected(topology):
        raise DomainError("consensus weights need a connected topology")
    deg = topology.adjacency().sum(axis=1)
    w = np.zeros((topology.n, topology.n))
    for i, j in topology.edges:
        w[i - 1, j - 1] = w[j - 1, i - 1] = 1.0 / (1.0 + max(deg[i - 1], deg[j - 1]))
    w[np.diag_indices(topology.n)] = 1.0 - w.sum(axis=1)
    return w


def _initial(config: DgdConfig, n: int, m: int) -> np.ndarray:
    init = config.init
    if isinstance(init, str):
        if init == "center":
            x = np.tile(config.box.center, (n, 1))
        elif init == "zeros":
            x = np.zeros((n, m))
        else:
            raise DomainError(f"unknown init {init!r}")
    else:
        x = np.asarray(init, dtype=float).reshape(n, m)
    return np.clip(x, config.box.lo, config.box.hi)


def dgd_run(costs: Sequence[Cost], topology: Topology, config: DgdConfig,
            oracle: Optional[np.ndarray] = None) -> ExecutionTrace:
    """Run DGD on ``costs`` (one per agent) and record every round.

    Without an explicit ``oracle`` the aggregate minimizer is computed when
    it is unique. Stops early once the largest per-agent move stays below
    ``tolerance * eta_k`` for ``patience`` consecutive rounds.
    """
    m = _check_dims(costs)
    n = topology.n
    if len(costs) != n:
        raise DomainError(f"{len(costs)} costs for {n} agents")
    if config.box.dim != m:
        raise DomainError("box dimension does not match the costs")
    w = consensus_weights(topology)
    if oracle is None:
        try:
            oracle = aggregate_minimizer(costs, config.box)
        except DomainError:
            oracle = None

    x0 = _initial(config, n, m)
    steps = np.array([config.step(k) for k in range(config.max_rounds)])
    Q, alpha, D, poly = _gradient_model(costs)
    history, stopped, bad = _backend.dgd_loop(
        w, Q, alpha, D, poly, x0, config.box.lo, config.box.hi, steps,
        float(config.tolerance), int(config.patience), config.update == "atc",
    )
    if bad >= 0:
        raise DivergenceError(bad)
    return ExecutionTrace(np.asarray(history), oracle, bool(stopped))


def _gradient_model(costs: Sequence[Cost]):
    """Stack costs into (Q, alpha) for quadratics or derivative coefficients for polynomials."""
    n = len(costs)
    if all(isinstance(c, QuadraticCost) for c in costs):
        Q = np.stack([c.Q for c in costs])
        alpha = np.stack([c.alpha for c in costs])
        return Q, alpha, np.zeros((n, 1)), False
    polys = [_as_polynomial(c) for c in costs]
    d = max(p.size for p in polys) - 1
    D = np.zeros((n, max(d, 1)))
    for i, p in enumerate(polys):
        der = np.polynomial.polynomial.polyder(p)
        D[i, : der.size] = der
    return np.zeros((n, 1, 1)), np.zeros((n, 1)), D, True


def disagreement(trace: ExecutionTrace, round_index: int) -> float:
    """Largest pairwise distance between agents' estimates at a round."""
    if not 0 <= round_index <= trace.rounds:
        raise DomainError(f"round {round_index} outside 0..{trace.rounds}")
    return float(trace.disagreements[round_index])


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_trace_csv(trace: ExecutionTrace, estimates_path, summary_path) -> None:
    """Write per-agent estimates and per-round diagnostics (agents 1-indexed)."""
    rounds, n, m = trace.estimates.shape
    with open(estimates_path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["round", "agent", "coordinate", "value"])
        for k in range(rounds):
            for i in range(n):
                for c in range(m):
                    out.writerow([k, i + 1, c + 1, _fmt(trace.estimates[k, i, c])])
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["round", "disagreement", "error_to_oracle"])
        for k in range(rounds):
            err = "" if trace.errors is None else _fmt(trace.errors[k].max())
            out.writerow([k, _fmt(trace.disagreements[k]), err])
