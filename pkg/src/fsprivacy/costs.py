"""Local cost functions: a public non-affine part plus a private affine coefficient."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DomainError


def _vec(x, m: int | None = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DomainError(f"expected a vector, got shape {x.shape}")
    if m is not None and x.size != m:
        raise DomainError(f"dimension mismatch: expected {m}, got {x.size}")
    return x


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """h(x) = 0.5 x^T Q x + alpha^T x + gamma, Q symmetric PSD."""

    Q: np.ndarray
    alpha: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        a = _vec(self.alpha)
        if q.shape != (a.size, a.size):
            raise DomainError(f"Q has shape {q.shape} but alpha has length {a.size}")
        if not np.allclose(q, q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(q).max())):
            raise DomainError("Q must be symmetric")
        norm = np.linalg.norm(q, 2) if q.size else 0.0
        if q.size and np.linalg.eigvalsh(q).min() < -1e-9 * max(norm, 1.0):
            raise DomainError("Q must be positive semidefinite")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def dim(self) -> int:
        return self.alpha.size

    @property
    def affine(self) -> np.ndarray:
        return self.alpha

    def evaluate(self, x) -> float:
        x = _vec(x, self.dim)
        return float(0.5 * x @ self.Q @ x + self.alpha @ x + self.gamma)

    def gradient(self, x) -> np.ndarray:
        x = _vec(x, self.dim)
        return self.Q @ x + self.alpha

    def with_affine(self, alpha) -> "QuadraticCost":
        return QuadraticCost(self.Q, _vec(alpha, self.dim), self.gamma)

    def to_dict(self) -> dict:
        return {"kind": "quadratic", "Q": self.Q.tolist(), "alpha": self.alpha.tolist(), "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class PolynomialCost:
    """Univariate h(x) = sum_l coeffs[l] * x**l."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = _vec(self.coeffs)
        if c.size < 2:
            raise DomainError("polynomial cost needs degree >= 1")
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return 1

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def affine(self) -> np.ndarray:
        return self.coeffs[1:2].copy()

    def evaluate(self, x) -> float:
        x = _vec(x, 1)[0]
        return float(np.polynomial.polynomial.polyval(x, self.coeffs))

    def gradient(self, x) -> np.ndarray:
        x = _vec(x, 1)[0]
        return np.array([np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs))])

    def second_derivative(self, x) -> float:
        x = _vec(x, 1)[0]
        return float(np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs, 2)))

    def coefficient(self, ell: int) -> float:
        return float(self.coeffs[ell])

    def with_coefficient(self, ell: int, value: float) -> "PolynomialCost":
        c = self.coeffs.copy()
        c[ell] = value
        return PolynomialCost(c)

    def with_affine(self, alpha) -> "PolynomialCost":
        return self.with_coefficient(1, _vec(alpha, 1)[0])

    def to_dict(self) -> dict:
        return {"kind": "polynomial", "coeffs": self.coeffs.tolist()}


Cost = Union[QuadraticCost, PolynomialCost]


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        if lo.shape != hi.shape:
            raise DomainError("box bounds have different dimensions")
        if np.any(lo > hi):
            raise DomainError("box is empty: lo > hi in some coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x) -> bool:
        x = _vec(x, self.dim)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


def cost_from_dict(d: dict) -> Cost:
    kind = d.get("kind")
    if kind == "quadratic":
        return QuadraticCost(d["Q"], d["alpha"], d.get("gamma", 0.0))
    if kind == "polynomial":
        return PolynomialCost(d["coeffs"])
    raise DomainError(f"unknown cost kind {kind!r}")


def evaluate(cost: Cost, x) -> float:
    return cost.evaluate(x)


def gradient(cost: Cost, x) -> np.ndarray:
    return cost.gradient(x)


def project(box: Box, x) -> np.ndarray:
    return np.clip(_vec(x, box.dim), box.lo, box.hi)


def _check_dims(costs: Sequence[Cost]) -> int:
    if not costs:
        raise DomainError("need at least one cost")
    dims = {c.dim for c in costs}
    if len(dims) != 1:
        raise DomainError(f"costs have mixed dimensions {sorted(dims)}")
    return dims.pop()


def affine_coefficients(costs: Sequence[Cost]) -> np.ndarray:
    """m x n matrix whose column i is agent i's affine coefficient."""
    _check_dims(costs)
    return np.column_stack([c.affine for c in costs])


def _as_polynomial(cost: Cost) -> np.ndarray:
    if isinstance(cost, PolynomialCost):
        return cost.coeffs
    return np.array([cost.gamma, cost.alpha[0], 0.5 * cost.Q[0, 0]])


def sum_polynomial(costs: Sequence[Cost]) -> np.ndarray:
    """Coefficients of the aggregate of univariate costs."""
    if _check_dims(costs) != 1:
        raise DomainError("polynomial aggregation needs univariate costs")
    polys = [_as_polynomial(c) for c in costs]
    out = np.zeros(max(p.size for p in polys))
    for p in polys:
        out[: p.size] += p
    return out


def aggregate_minimizer(costs: Sequence[Cost], box: Box) -> np.ndarray:
    """Minimizer of sum_i h_i over the box, used as a test oracle."""
    m = _check_dims(costs)
    if box.dim != m:
        raise DomainError("box dimension does not match the costs")
    if any(isinstance(c, PolynomialCost) for c in costs):
        return _polynomial_minimizer(sum_polynomial(costs), box)

    q = sum(c.Q for c in costs)
    a = sum(c.alpha for c in costs)
    eigs = np.linalg.eigvalsh(q)
    if eigs.min() <= 1e-12 * max(1.0, abs(eigs.max())):
        raise DomainError("non-unique minimizer: aggregate Hessian is singular")
    x = np.linalg.solve(q, -a)
    if box.contains(x):
        return x
    return _box_qp(q, a, box, start=project(box, x))


def _box_qp(q: np.ndarray, a: np.ndarray, box: Box, start: np.ndarray) -> np.ndarray:
    # projected gradient with step 1/L; q is positive definite so this converges linearly
    step = 1.0 / np.linalg.eigvalsh(q).max()
    x = start
    for _ in range(200_000):
        nxt = project(box, x - step * (q @ x + a))
        if np.linalg.norm(nxt - x) <= 1e-14 * (1.0 + np.linalg.norm(x)):
            return nxt
        x = nxt
    return x


def _polynomial_minimizer(coeffs: np.ndarray, box: Box) -> np.ndarray:
    P = np.polynomial.polynomial
    deriv = P.polyder(coeffs)
    if not np.any(deriv):
        raise DomainError("non-unique minimizer: aggregate cost is constant")
    lo, hi = box.lo[0], box.hi[0]
    candidates = [lo, hi]
    for root in P.polyroots(deriv) if deriv.size > 1 else []:
        if abs(root.imag) < 1e-12 and lo <= root.real <= hi:
            candidates.append(root.real)
    values = [P.polyval(x, coeffs) for x in candidates]
    return np.array([candidates[int(np.argmin(values))]])
