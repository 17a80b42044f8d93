"""Benchmark fixed-point problems with exactly known solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import CountedMap, DomainError
from .linalg import (
    elementwise_arctanh,
    make_rng,
    poisson_exact_solve,
    sample_orthogonal,
    spectral_affine,
)

__all__ = [
    "ProblemInstance",
    "ParameterError",
    "build_clustered_linear",
    "build_tanh",
    "build_poisson",
    "build_problem",
    "PROBLEMS",
    "FIXED_POINT_TOL",
]

FIXED_POINT_TOL = 1e-9


class ParameterError(ValueError):
    pass


@dataclass
class ProblemInstance:
    name: str
    map: CountedMap
    x_star: np.ndarray
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)
    # arrays behind the map (operator matrix, source term), kept out of params
    data: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.map.dimension

    def fresh_map(self) -> CountedMap:
        """Independent handle on the same map with its counter at zero."""
        return self.map.fresh()

    def fixed_point_residual(self) -> float:
        tx = np.asarray(self.map.raw_map(self.x_star), dtype=np.float64)
        return float(np.max(np.abs(tx - self.x_star)))


def _finalise(name, raw, x_star, seed, params):
    x_star = np.asarray(x_star, dtype=np.float64)
    prob = ProblemInstance(name, CountedMap(raw, x_star.size), x_star, seed, params)
    res = prob.fixed_point_residual()
    if not res < FIXED_POINT_TOL:
        raise ParameterError(f"{name}: reference is not a fixed point (residual {res:.3e})")
    return prob


def _eigenvalues(d, lo, hi):
    if d == 1:
        return np.array([lo], dtype=np.float64)
    return np.linspace(lo, hi, d)


def build_clustered_linear(d: int = 80, lambda_lo: float = 0.9, lambda_hi: float = 0.99,
                           seed: int = 0, x_star=None) -> ProblemInstance:
    """Affine map ``T(x) = M x + c`` with ``M = Q diag(lambda) Q^T``.

    The eigenvalues are evenly spaced in ``[lambda_lo, lambda_hi]``. ``Q`` is
    drawn first from the seeded generator, then ``x_star`` (standard normal)
    unless one is supplied, and ``c = x_star - M x_star``.
    """
    if d < 1:
        raise ParameterError("d must be >= 1")
    if not (0.0 <= lambda_lo <= lambda_hi < 1.0):
        raise ParameterError("need 0 <= lambda_lo <= lambda_hi < 1")
    rng = make_rng(seed)
    lam = _eigenvalues(d, lambda_lo, lambda_hi)
    Q = sample_orthogonal(d, rng)
    M = spectral_affine(lam, Q)
    if x_star is None:
        x_star = rng.standard_normal(d)
    x_star = np.asarray(x_star, dtype=np.float64).reshape(d)
    c = x_star - M @ x_star

    def T(x):
        return M @ x + c

    params = {"d": d, "lambda_lo": lambda_lo, "lambda_hi": lambda_hi, "omega": 1.8}
    prob = _finalise("clustered", T, x_star, seed, params)
    prob.data["matrix"] = M
    return prob


def build_tanh(d: int = 320, lambda_lo: float = 0.0, lambda_hi: float = 0.999,
               amp: float = 0.7, seed: int = 0, x_star=None) -> ProblemInstance:
    """Nonlinear map ``T(x) = tanh(B x + c)`` with ``c = arctanh(x_star) - B x_star``.

    ``B = Q diag(lambda) Q^T`` as for the clustered problem; ``x_star`` is
    uniform in ``[-amp, amp]`` per component unless supplied.
    """
    if d < 1:
        raise ParameterError("d must be >= 1")
    if not (0.0 <= lambda_lo <= lambda_hi < 1.0):
        raise ParameterError("need 0 <= lambda_lo <= lambda_hi < 1")
    if not 0.0 < amp < 1.0:
        raise DomainError("amp must lie in (0, 1) for arctanh to be defined")
    rng = make_rng(seed)
    lam = _eigenvalues(d, lambda_lo, lambda_hi)
    Q = sample_orthogonal(d, rng)
    B = spectral_affine(lam, Q)
    if x_star is None:
        x_star = rng.uniform(-amp, amp, d)
    x_star = np.asarray(x_star, dtype=np.float64).reshape(d)
    c = elementwise_arctanh(x_star) - B @ x_star

    def T(x):
        return np.tanh(B @ x + c)

    params = {"d": d, "lambda_lo": lambda_lo, "lambda_hi": lambda_hi, "amp": amp,
              "omega": 1.5}
    prob = _finalise("tanh", T, x_star, seed, params)
    prob.data["matrix"] = B
    return prob


def poisson_source(x, y):
    return np.sin(np.pi * x ** 2) * np.sin(2.0 * np.pi * y ** 2)


def build_poisson(n: int = 50, source: Callable = poisson_source) -> ProblemInstance:
    """Jacobi map of the five-point Poisson discretisation on the unit square.

    Interior nodes sit at ``(i h, j h)``, ``h = 1/(n+1)``; unknowns are
    flattened with ``k = (j-1) n + (i-1)`` (x index fastest). The map is::

        T(u)_ij = (u_{i-1,j} + u_{i+1,j} + u_{i,j-1} + u_{i,j+1} + h^2 f_ij) / 4

    with zero Dirichlet values outside the grid.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    h = 1.0 / (n + 1)
    nodes = np.arange(1, n + 1) * h
    X, Y = np.meshgrid(nodes, nodes)  # X[j, i] = x_i, Y[j, i] = y_j
    rhs = np.asarray(source(X, Y), dtype=np.float64).reshape(n, n)
    scaled = h * h * rhs

    def T(u):
        padded = np.pad(u.reshape(n, n), 1)
        total = (padded[:-2, 1:-1] + padded[2:, 1:-1]
                 + padded[1:-1, :-2] + padded[1:-1, 2:] + scaled)
        return (total / 4.0).reshape(-1)

    x_star = poisson_exact_solve(n, rhs.reshape(-1))
    params = {"n": n, "h": h, "omega": 1.0}
    prob = _finalise("poisson", T, x_star, None, params)
    prob.data["rhs"] = rhs.reshape(-1)
    return prob


PROBLEMS = {
    "clustered": build_clustered_linear,
    "tanh": build_tanh,
    "poisson": build_poisson,
}

RANDOMISED = {"clustered", "tanh"}


def build_problem(name: str, seed: Optional[int] = 0, **kwargs) -> ProblemInstance:
    try:
        builder = PROBLEMS[name]
    except KeyError:
        raise ParameterError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    if name in RANDOMISED:
        return builder(seed=seed, **kwargs)
    return builder(**kwargs)
