"""Map abstraction, evaluation accounting and the solve-report data model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DimensionError",
    "DomainError",
    "SolverError",
    "SingularFitError",
    "DivergenceError",
    "CountedMap",
    "FixedPointMapHandle",
    "counted_map",
    "SolveConfig",
    "ResidualTrace",
    "SolveReport",
    "residual_inf_norm",
    "inner",
    "as_vector",
]


class DimensionError(ValueError):
    """Vector lengths disagree with each other or with the map dimension."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SolverError(ArithmeticError):
    """Base class for solver failures; carries the partial report when known."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularFitError(SolverError):
    """A closed-form weight fit has a zero denominator."""


class DivergenceError(SolverError):
    """Iterates became non-finite or the residual blew up."""


def as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1)


def inner(a: np.ndarray, b: np.ndarray) -> float:
    # np.sum uses numpy's pairwise reduction, not BLAS, so the result does not
    # depend on which BLAS kernel the platform happens to ship.
    return float(np.sum(a * b))


def residual_inf_norm(x, tx) -> float:
    """Return ``max_i |tx_i - x_i|``."""
    x = as_vector(x)
    tx = as_vector(tx)
    if x.shape != tx.shape:
        raise DimensionError(f"length mismatch: {x.size} vs {tx.size}")
    if x.size == 0:
        raise DimensionError("empty vectors have no residual")
    return float(np.max(np.abs(tx - x)))


class CountedMap:
    """A map ``T: R^d -> R^d`` that counts how often it is evaluated.

    Each solve should own its handle; use :meth:`fresh` to get an independent
    copy with the counter reset.
    """

    def __init__(self, raw_map: Callable[[np.ndarray], np.ndarray], dimension: int):
        if int(dimension) < 1:
            raise ValueError("dimension must be a positive integer")
        self.raw_map = raw_map
        self.dimension = int(dimension)
        self.eval_count = 0

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise DimensionError(
                f"map expects shape ({self.dimension},), got {x.shape}"
            )
        out = np.asarray(self.raw_map(x), dtype=np.float64)
        self.eval_count += 1
        if out.shape != (self.dimension,):
            raise DimensionError(
                f"map returned shape {out.shape}, expected ({self.dimension},)"
            )
        return out

    __call__ = evaluate

    def fresh(self) -> "CountedMap":
        return CountedMap(self.raw_map, self.dimension)

    def __repr__(self):
        return f"CountedMap(dimension={self.dimension}, eval_count={self.eval_count})"


FixedPointMapHandle = CountedMap


def counted_map(raw_map, d: int) -> CountedMap:
    return CountedMap(raw_map, d)


@dataclass(frozen=True)
class SolveConfig:
    """Stopping protocol and method parameters shared by all solvers.

    ``omega`` is read only by the relaxed sweep and ``depth`` only by
    Anderson acceleration.
    """

    tol: float = 1e-8
    max_evals: int = 1_000_000
    theta: float = 1e-9
    omega: float = 1.0
    depth: int = 2

    def __post_init__(self):
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValueError(f"tol must be a positive finite number, got {self.tol}")
        if int(self.max_evals) != self.max_evals or self.max_evals < 2:
            raise ValueError(f"max_evals must be an integer >= 2, got {self.max_evals}")
        if not (self.theta >= 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be non-negative, got {self.theta}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ValueError(f"depth must be a positive integer, got {self.depth}")


@dataclass
class ResidualTrace:
    """Residual history as ``(evals_used, residual_inf)`` samples."""

    samples: list = field(default_factory=list)

    def append(self, evals_used: int, residual_inf: float):
        residual_inf = float(residual_inf)
        if not math.isfinite(residual_inf) or residual_inf < 0:
            raise ValueError(f"residual must be finite and non-negative, got {residual_inf}")
        if self.samples and evals_used <= self.samples[-1][0]:
            raise ValueError("evals_used must be strictly increasing")
        self.samples.append((int(evals_used), residual_inf))

    @property
    def evals(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples], dtype=np.int64)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples], dtype=np.float64)

    def last(self):
        return self.samples[-1] if self.samples else None

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


@dataclass
class SolveReport:
    method_name: str
    converged: bool
    total_evals: int
    trace: ResidualTrace
    final_iterate: np.ndarray
    final_residual_inf: float
    final_error_inf: Optional[float] = None
    # loop bodies for TPA, steps for the one-evaluation baselines
    iterations: int = 0
    message: str = ""
