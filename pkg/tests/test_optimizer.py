import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsprivacy import (
    Box, CounterRNG, DgdConfig, DivergenceError, DomainError, PolynomialCost, QuadraticCost, Topology,
    consensus_weights, dgd_run, disagreement, random_graph, run_phase_one,
)
from fsprivacy.optimizer import write_trace_csv

from oracles import dgd_reference
from strategies import topologies


class TestWeights:
    def test_k3(self, k3):
        assert np.allclose(consensus_weights(k3), np.full((3, 3), 1 / 3))

    def test_single_edge(self):
        assert np.allclose(consensus_weights(Topology(2, [(1, 2)])), [[0.5, 0.5], [0.5, 0.5]])

    def test_disconnected(self):
        with pytest.raises(DomainError):
            consensus_weights(Topology(3, [(1, 2)]))

    @given(topologies(connected=True))
    def test_doubly_stochastic(self, topo):
        w = consensus_weights(topo)
        assert np.allclose(w.sum(axis=0), 1) and np.allclose(w.sum(axis=1), 1)
        assert np.all(w >= 0) and np.array_equal(w, w.T)
        adj = topo.adjacency()
        off = ~np.eye(topo.n, dtype=bool)
        assert np.all(w[off & (adj == 0)] == 0)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [{"max_rounds": 0}, {"step0": 0}, {"tolerance": 0},
                                        {"step_schedule": "cosine"}, {"weight_scheme": "uniform"},
                                        {"update": "push"}])
    def test_rejects(self, kwargs, wide_box):
        with pytest.raises(DomainError):
            DgdConfig(box=wide_box, **kwargs)

    def test_schedules(self, wide_box):
        assert DgdConfig(wide_box, step0=2.0).step(3) == pytest.approx(1.0)
        assert DgdConfig(wide_box, step0=2.0, step_schedule="inverse_linear").step(3) == pytest.approx(0.5)
        assert DgdConfig(wide_box, step0=2.0, step_schedule="constant").step(3) == 2.0


class TestAgainstReference:
    @pytest.mark.parametrize("update", ["atc", "cta"])
    def test_quadratic_trajectory(self, update):
        g = np.random.default_rng(1)
        topo = random_graph(5, 0.6, g, connected=True)
        costs = []
        for _ in range(5):
            a = g.normal(size=(2, 2))
            costs.append(QuadraticCost(a @ a.T, g.normal(size=2)))
        box = Box([-1.0, -0.5], [1.0, 2.0])
        cfg = DgdConfig(box, max_rounds=60, step0=0.4, tolerance=1e-300, init="zeros", update=update)
        trace = dgd_run(costs, topo, cfg)
        ref = dgd_reference(consensus_weights(topo).tolist(), [c.gradient for c in costs], np.zeros((5, 2)),
                            box.lo, box.hi, [cfg.step(k) for k in range(60)], update == "atc")
        assert np.allclose(trace.estimates, ref, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("update", ["atc", "cta"])
    def test_polynomial_trajectory(self, update):
        topo = Topology(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
        costs = [PolynomialCost(c) for c in ([0, 1.0, -0.5, 0.2], [1, 0.5, 0.5, 0.05], [0, -1, 0.25], [0, 0, 1.0])]
        box = Box([-2.0], [2.0])
        cfg = DgdConfig(box, max_rounds=80, step0=0.3, tolerance=1e-300, update=update)
        trace = dgd_run(costs, topo, cfg)
        ref = dgd_reference(consensus_weights(topo).tolist(), [c.gradient for c in costs], np.zeros((4, 1)),
                            box.lo, box.hi, [cfg.step(k) for k in range(80)], update == "atc")
        assert np.allclose(trace.estimates, ref, rtol=0, atol=1e-12)


class TestConvergence:
    def test_three_agents_unmasked(self, three_costs, k3, wide_box):
        trace = dgd_run(three_costs, k3, DgdConfig(wide_box))
        assert trace.oracle == pytest.approx([-1.0])
        assert trace.max_error() < 1e-2
        assert disagreement(trace, trace.rounds) < 1e-2

    @pytest.mark.parametrize("seed", range(5))
    def test_three_agents_masked(self, three_costs, k3, wide_box, seed):
        record = run_phase_one(three_costs, k3, 1.0, CounterRNG(seed))
        trace = dgd_run(list(record.effective), k3, DgdConfig(wide_box))
        assert trace.max_error() < 1e-2

    def test_single_agent(self):
        box = Box([-100.0], [100.0])
        trace = dgd_run([QuadraticCost([[1.0]], [0.0])], Topology(1), DgdConfig(box, init=[[10.0]]))
        assert abs(trace.final[0, 0]) < 1e-6
        assert np.all(trace.disagreements == 0)

    def test_early_stop(self, three_costs, k3, wide_box):
        trace = dgd_run(three_costs, k3, DgdConfig(wide_box))
        assert trace.stopped_early and trace.rounds < 5000

    def test_cta_keeps_a_step_size_bias(self, three_costs, k3, wide_box):
        # combine-then-adapt leaves an O(step) consensus error; adapt-then-combine does not
        cta = dgd_run(three_costs, k3, DgdConfig(wide_box, update="cta"))
        atc = dgd_run(three_costs, k3, DgdConfig(wide_box, update="atc"))
        assert cta.max_error() > 1e-3 > 1e-9 > atc.max_error()

    @pytest.mark.parametrize("update", ["atc", "cta"])
    def test_monotone_trend(self, wide_box, update):
        costs = [QuadraticCost([[q]], [a]) for q, a in ((1.0, 1.0), (2.0, 2.0), (4.0, 3.0))]
        topo = Topology(3, [(1, 2), (2, 3)])
        cfg = DgdConfig(wide_box, max_rounds=2000, tolerance=1e-300, update=update)
        trace = dgd_run(costs, topo, cfg)
        assert trace.mean_error(2000) < trace.mean_error(200)

    @given(topologies(min_n=2, max_n=6, connected=True), st.integers(0, 2**32 - 1))
    def test_iterates_stay_in_box(self, topo, seed):
        g = np.random.default_rng(seed)
        costs = [QuadraticCost([[g.uniform(0.1, 3)]], [g.normal(scale=50)]) for _ in range(topo.n)]
        box = Box([-1.0], [0.5])
        trace = dgd_run(costs, topo, DgdConfig(box, max_rounds=200, step0=g.uniform(0.1, 2)))
        assert np.all(trace.estimates >= -1.0) and np.all(trace.estimates <= 0.5)

    def test_gamma_does_not_change_trajectory(self, three_costs, k3, wide_box):
        shifted = [QuadraticCost(c.Q, c.alpha, 123.0) for c in three_costs]
        a = dgd_run(three_costs, k3, DgdConfig(wide_box))
        b = dgd_run(shifted, k3, DgdConfig(wide_box))
        assert np.array_equal(a.estimates, b.estimates)

    def test_masked_and_unmasked_means_agree(self, three_costs, k3, wide_box):
        base = dgd_run(three_costs, k3, DgdConfig(wide_box))
        for seed in range(10):
            record = run_phase_one(three_costs, k3, 1.0, CounterRNG(seed))
            masked = dgd_run(list(record.effective), k3, DgdConfig(wide_box))
            assert np.linalg.norm(masked.final_mean - base.final_mean) < 2e-9


class TestFailuresAndDiagnostics:
    def test_divergence_names_round(self, k3):
        costs = [QuadraticCost([[2.0]], [1.0])] * 3
        huge = Box([-1e308], [1e308])
        with pytest.raises(DivergenceError, match="round") as info:
            dgd_run(costs, k3, DgdConfig(huge, step0=1e6, step_schedule="constant", max_rounds=500, init=[[1.0]] * 3))
        assert info.value.round_index > 0

    def test_disagreement(self, three_costs, k3, wide_box):
        trace = dgd_run(three_costs, k3, DgdConfig(wide_box))
        assert disagreement(trace, 0) == 0.0
        with pytest.raises(DomainError):
            disagreement(trace, trace.rounds + 1)

    def test_mismatched_inputs(self, three_costs, k3, wide_box):
        with pytest.raises(DomainError):
            dgd_run(three_costs[:2], k3, DgdConfig(wide_box))
        with pytest.raises(DomainError):
            dgd_run(three_costs, k3, DgdConfig(Box([0, 0], [1, 1])))

    def test_trace_csv(self, three_costs, k3, wide_box, tmp_path):
        trace = dgd_run(three_costs, k3, DgdConfig(wide_box, max_rounds=4, tolerance=1e-300))
        write_trace_csv(trace, tmp_path / "est.csv", tmp_path / "rounds.csv")
        rows = list(csv.reader(open(tmp_path / "est.csv")))
        assert rows[0] == ["round", "agent", "coordinate", "value"] and len(rows) == 1 + 5 * 3
        rounds = list(csv.reader(open(tmp_path / "rounds.csv")))
        assert rounds[0] == ["round", "disagreement", "error_to_oracle"] and len(rounds) == 6
