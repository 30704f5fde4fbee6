import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsprivacy import Box, DomainError, PolynomialCost, QuadraticCost, aggregate_minimizer, project
from fsprivacy.costs import affine_coefficients, cost_from_dict, evaluate, gradient, sum_polynomial

from oracles import central_difference


def random_quadratic(g, m):
    a = g.normal(size=(m, m))
    return QuadraticCost(a @ a.T, g.normal(size=m), float(g.normal()))


class TestQuadratic:
    def test_evaluate_examples(self, three_costs):
        assert evaluate(three_costs[0], [1.0]) == 2.0
        assert evaluate(three_costs[2], [-1.0]) == -2.0
        assert evaluate(QuadraticCost([[0.0]], [0.0]), [7.0]) == 0.0

    def test_gradient_examples(self, three_costs):
        assert gradient(three_costs[0], [0.0]) == pytest.approx([1.0])
        flat = QuadraticCost(np.zeros((2, 2)), [3.0, -1.0])
        for x in ([0, 0], [5, -2]):
            assert np.array_equal(gradient(flat, x), [3.0, -1.0])

    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_gradient_matches_finite_differences(self, m, seed):
        g = np.random.default_rng(seed)
        cost = random_quadratic(g, m)
        x = g.uniform(-3, 3, size=m)
        fd = central_difference(cost.evaluate, x)
        assert np.allclose(cost.gradient(x), fd, rtol=1e-6, atol=1e-6)

    @pytest.mark.parametrize("q", [[[1.0, 2.0], [0.0, 1.0]], [[-1.0]]])
    def test_rejects_non_psd_or_asymmetric(self, q):
        with pytest.raises(DomainError):
            QuadraticCost(q, np.zeros(len(q)))

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            QuadraticCost(np.eye(2), [1.0])

    def test_dict_round_trip(self, three_costs):
        c = cost_from_dict(three_costs[1].to_dict())
        assert np.array_equal(c.Q, three_costs[1].Q) and np.array_equal(c.alpha, three_costs[1].alpha)
        with pytest.raises(DomainError):
            cost_from_dict({"kind": "cubic"})


class TestPolynomial:
    def test_evaluate_and_derivatives(self):
        p = PolynomialCost([1.0, -2.0, 0.0, 0.5])
        assert p.evaluate([2.0]) == pytest.approx(1 - 4 + 4)
        assert p.gradient([2.0]) == pytest.approx([-2 + 6])
        assert p.second_derivative(2.0) == pytest.approx(6.0)
        assert p.degree == 3 and p.affine == pytest.approx([-2.0])

    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=6), st.floats(-2, 2))
    def test_gradient_matches_finite_differences(self, coeffs, x):
        p = PolynomialCost(coeffs)
        fd = central_difference(p.evaluate, np.array([x]))
        assert np.allclose(p.gradient([x]), fd, rtol=1e-6, atol=1e-6)

    def test_needs_degree_one(self):
        with pytest.raises(DomainError):
            PolynomialCost([1.0])

    def test_with_coefficient(self):
        p = PolynomialCost([0.0, 1.0, 2.0])
        q = p.with_coefficient(2, -1.0)
        assert q.coefficient(2) == -1.0 and p.coefficient(2) == 2.0


class TestBoxAndProjection:
    def test_clamp(self, wide_box):
        assert project(wide_box, [150.0]) == pytest.approx([100.0])
        assert project(wide_box, [3.5]) == pytest.approx([3.5])

    def test_empty_box(self):
        with pytest.raises(DomainError):
            Box([1.0], [0.0])

    @given(st.integers(0, 2**32 - 1))
    def test_idempotent_and_nonexpansive(self, seed):
        g = np.random.default_rng(seed)
        lo = g.uniform(-5, 0, size=3)
        box = Box(lo, lo + g.uniform(0, 5, size=3))
        x, y = g.normal(scale=6, size=(2, 3))
        px, py = project(box, x), project(box, y)
        assert np.array_equal(project(box, px), px)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-15
        assert box.contains(px)


class TestAggregate:
    def test_three_agent_minimizer(self, three_costs, wide_box):
        assert aggregate_minimizer(three_costs, wide_box) == pytest.approx([-1.0])

    def test_single_cost(self, wide_box):
        assert aggregate_minimizer([QuadraticCost([[1.0]], [0.0])], wide_box) == pytest.approx([0.0])

    def test_clamped(self, wide_box):
        assert aggregate_minimizer([QuadraticCost([[1.0]], [-150.0])], wide_box) == pytest.approx([100.0])

    def test_singular_hessian(self, wide_box):
        with pytest.raises(DomainError):
            aggregate_minimizer([QuadraticCost([[0.0]], [1.0])], wide_box)

    def test_affine_coefficients(self, three_costs):
        assert np.array_equal(affine_coefficients(three_costs), [[1.0, 2.0, 3.0]])
        zeros = [QuadraticCost(np.eye(2), np.zeros(2)) for _ in range(3)]
        assert np.array_equal(affine_coefficients(zeros), np.zeros((2, 3)))
        assert affine_coefficients(three_costs[:1]).shape == (1, 1)

    @given(st.integers(1, 4), st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_first_order_optimality(self, m, n, seed):
        g = np.random.default_rng(seed)
        costs = [random_quadratic(g, m) for _ in range(n)]
        costs = [QuadraticCost(c.Q + 0.1 * np.eye(m), 5 * c.alpha) for c in costs]
        box = Box(-np.ones(m), np.ones(m))
        z = aggregate_minimizer(costs, box)
        grad = sum(c.gradient(z) for c in costs)
        for x in g.uniform(-1, 1, size=(50, m)):
            assert grad @ (x - z) >= -1e-6

    def test_polynomial_minimizer(self):
        costs = [PolynomialCost([0, 3.0, 1.5, 0.1])]
        box = Box([-2.0], [2.0])
        # 3 + 3x + 0.3x^2 = 0 in the box
        root = (-3 + np.sqrt(9 - 3.6)) / 0.6
        assert aggregate_minimizer(costs, box) == pytest.approx([root])
        assert np.array_equal(sum_polynomial(costs), [0, 3.0, 1.5, 0.1])

    def test_gamma_never_changes_the_minimizer(self, three_costs, wide_box):
        shifted = [QuadraticCost(c.Q, c.alpha, 1e6) for c in three_costs]
        assert np.array_equal(aggregate_minimizer(shifted, wide_box), aggregate_minimizer(three_costs, wide_box))
