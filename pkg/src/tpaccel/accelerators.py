"""Three-point polynomial acceleration (TPA) and baseline fixed-point solvers.

The algebraic helpers (:func:`tpa_weight`, :func:`tpa_blend`,
:func:`optimal_coefficients`, :func:`error_polynomial`, :func:`aitken_step`,
:func:`anderson2_double_blend`) are exposed so that the identities linking
TPA to Aitken's process and to depth-two Anderson mixing can be checked
directly.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .core import (
    CountedMap,
    DimensionError,
    DivergenceError,
    DomainError,
    ResidualTrace,
    SingularFitError,
    SolveConfig,
    SolveReport,
    as_vector,
    inner,
)

__all__ = [
    "TpaState",
    "AndersonHistory",
    "tpa_weight",
    "tpa_blend",
    "optimal_coefficients",
    "error_polynomial",
    "error_polynomial_slope",
    "aitken_step",
    "anderson2_weight",
    "anderson2_double_blend",
    "tpa_solve",
    "picard_solve",
    "relaxed_solve",
    "anderson_solve",
    "GROWTH_LIMIT",
]

# Abort once a residual exceeds this multiple of the first recorded residual.
GROWTH_LIMIT = 1e12


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------


def _same_shape(*vectors):
    shape = vectors[0].shape
    for v in vectors[1:]:
        if v.shape != shape:
            raise DimensionError(f"length mismatch: {shape} vs {v.shape}")


def tpa_weight(r1, r2, theta: float) -> float:
    """Regularised least-squares estimate of ``w = 1/(1 - m)``.

    Minimises ``||w (r1 - r2) - r1||^2 + theta^2 (w - 1)^2`` over scalar ``w``,
    which has the closed form::

        w = (<r1 - r2, r1> + theta^2) / (||r1 - r2||^2 + theta^2)

    Raises
    ------
    SingularFitError
        If the denominator vanishes (``theta == 0`` and ``r1 == r2``).
    """
    r1 = as_vector(r1)
    r2 = as_vector(r2)
    _same_shape(r1, r2)
    gap = r1 - r2
    theta2 = theta * theta
    den = inner(gap, gap) + theta2
    if den == 0.0:
        raise SingularFitError("residual gap is zero and theta = 0")
    return (inner(gap, r1) + theta2) / den


def tpa_blend(y1, y2, y3, w: float) -> np.ndarray:
    """Quadratic blend ``y1 + 2w(y2 - y1) + w^2 (y1 - 2 y2 + y3)``.

    Equivalently ``(1-w)^2 y1 + 2w(1-w) y2 + w^2 y3``; the weights sum to one,
    so constant vectors are preserved for every ``w``.
    """
    y1 = as_vector(y1)
    y2 = as_vector(y2)
    y3 = as_vector(y3)
    _same_shape(y1, y2, y3)
    return y1 + 2.0 * w * (y2 - y1) + w * w * (y1 - 2.0 * y2 + y3)


def optimal_coefficients(m):
    """Blend coefficients ``(a, b)`` placing a double root of the error polynomial at ``m``.

    ``a = -2m / (1-m)^2`` and ``b = 1 / (1-m)^2``. Accepts scalars or arrays.
    """
    m_arr = np.asarray(m, dtype=np.float64)
    if not np.all(np.abs(m_arr) < 1.0):
        raise DomainError("contraction factor must satisfy |m| < 1")
    scale = 1.0 / (1.0 - m_arr) ** 2
    a = -2.0 * m_arr * scale
    b = scale
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


def error_polynomial(a, b, m):
    """Prefactor ``1 - a - b + a m + b m^2`` of the leading error after blending."""
    return 1.0 - a - b + a * m + b * m * m


def error_polynomial_slope(a, b, m):
    """Derivative of :func:`error_polynomial` with respect to ``m``."""
    return a + 2.0 * b * m


def aitken_step(y1: float, y2: float, y3: float) -> float:
    """Aitken's delta-squared transform ``y1 - (y2 - y1)^2 / (y3 - 2 y2 + y1)``."""
    second_diff = y3 - 2.0 * y2 + y1
    if second_diff == 0.0:
        raise SingularFitError("second difference is zero")
    return y1 - (y2 - y1) ** 2 / second_diff


def anderson2_weight(r1, r2, theta: float) -> float:
    """Depth-two Anderson mixing coefficient.

    Closed-form minimiser of ``||(1-a) r1 + a r2||^2 + theta^2 (a^2 + (1-a)^2)``.
    Note the ``2 theta^2`` in the denominator, unlike :func:`tpa_weight`.
    """
    r1 = as_vector(r1)
    r2 = as_vector(r2)
    _same_shape(r1, r2)
    gap = r1 - r2
    theta2 = theta * theta
    den = inner(gap, gap) + 2.0 * theta2
    if den == 0.0:
        raise SingularFitError("residual gap is zero and theta = 0")
    return (inner(gap, r1) + theta2) / den


def anderson2_double_blend(y1, y2, y3, theta: float) -> np.ndarray:
    """Apply the depth-two Anderson coefficient twice.

    The pairs ``(y1, y2)`` and ``(y2, y3)`` are mixed with the same
    coefficient ``a`` and the two results are mixed once more, giving
    ``(1-a)^2 y1 + 2a(1-a) y2 + a^2 y3``. At ``theta = 0`` this is the TPA update.
    """
    y1 = as_vector(y1)
    y2 = as_vector(y2)
    y3 = as_vector(y3)
    _same_shape(y1, y2, y3)
    a = anderson2_weight(y2 - y1, y3 - y2, theta)
    first = (1.0 - a) * y1 + a * y2
    second = (1.0 - a) * y2 + a * y3
    return (1.0 - a) * first + a * second


# ---------------------------------------------------------------------------
# solver state
# ---------------------------------------------------------------------------


@dataclass
class TpaState:
    """Everything TPA keeps between loops: three iterates, two residuals, one weight."""

    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    w: float = 1.0

    @classmethod
    def from_iterates(cls, y1, y2, y3, w=1.0):
        return cls(y1, y2, y3, y2 - y1, y3 - y2, w)

    def is_consistent(self) -> bool:
        return bool(
            np.array_equal(self.r1, self.y2 - self.y1)
            and np.array_equal(self.r2, self.y3 - self.y2)
        )


class AndersonHistory:
    """Sliding window of the ``depth`` most recent ``(x_i, f_i = T(x_i) - x_i)`` pairs."""

    def __init__(self, depth: int):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.depth = depth
        self.iterates = deque(maxlen=depth)
        self.residuals = deque(maxlen=depth)

    def __len__(self):
        return len(self.iterates)

    def push(self, x: np.ndarray, f: np.ndarray):
        self.iterates.append(x)
        self.residuals.append(f)

    def mixing_coefficients(self, theta: float) -> np.ndarray:
        """Coefficients ``alpha`` (summing to one) minimising
        ``||sum_i alpha_i f_i||^2 + theta^2 ||alpha||^2``.

        The constraint is eliminated by writing ``alpha`` relative to the
        newest pair, ``alpha = e_k + sum_{i<k} gamma_i (e_i - e_k)``.
        """
        k = len(self.residuals)
        if k == 0:
            raise ValueError("empty history")
        if k == 1:
            return np.ones(1)
        f_new = self.residuals[-1]
        diffs = np.column_stack([self.residuals[i] - f_new for i in range(k - 1)])
        theta2 = theta * theta
        ones = np.ones(k - 1)
        gram = diffs.T @ diffs + theta2 * (np.eye(k - 1) + np.outer(ones, ones))
        rhs = -(diffs.T @ f_new) + theta2 * ones
        try:
            gamma = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), rhs)
        except np.linalg.LinAlgError:
            gamma = np.linalg.lstsq(gram, rhs, rcond=None)[0]
        return np.append(gamma, 1.0 - gamma.sum())

    def extrapolate(self, theta: float) -> np.ndarray:
        alpha = self.mixing_coefficients(theta)
        out = np.zeros_like(self.iterates[-1])
        for coeff, x, f in zip(alpha, self.iterates, self.residuals):
            out += coeff * (x + f)
        return out


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def _initial_vector(fmap: CountedMap, x0) -> np.ndarray:
    x = np.array(x0, dtype=np.float64).reshape(-1)
    if x.size != fmap.dimension:
        raise DimensionError(f"x0 has length {x.size}, map dimension is {fmap.dimension}")
    return x


def _error(x, x_star):
    if x_star is None:
        return None
    return float(np.max(np.abs(x - as_vector(x_star))))


def _finish(name, converged, used, trace, x, x_star, iterations, message=""):
    last = trace.last()
    return SolveReport(
        method_name=name,
        converged=converged,
        total_evals=used,
        trace=trace,
        final_iterate=x,
        final_residual_inf=last[1] if last else math.inf,
        final_error_inf=_error(x, x_star) if np.all(np.isfinite(x)) else None,
        iterations=iterations,
        message=message,
    )


def _one_eval_solver(
    name: str,
    fmap: CountedMap,
    x0,
    cfg: SolveConfig,
    update: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    x_star=None,
) -> SolveReport:
    """Shared loop for methods that spend one map evaluation per step."""
    x = _initial_vector(fmap, x0)
    start = fmap.eval_count
    trace = ResidualTrace()
    best = x
    steps = 0
    first = None
    while fmap.eval_count - start < cfg.max_evals:
        if not np.all(np.isfinite(x)):
            report = _finish(name, False, fmap.eval_count - start, trace, best, x_star, steps)
            raise DivergenceError(f"{name}: non-finite iterate", report)
        tx = fmap(x)
        steps += 1
        used = fmap.eval_count - start
        f = tx - x
        res = float(np.max(np.abs(f)))
        if not (math.isfinite(res) and np.all(np.isfinite(tx))):
            report = _finish(name, False, used, trace, best, x_star, steps)
            raise DivergenceError(f"{name}: non-finite map value", report)
        trace.append(used, res)
        best = tx
        if res < cfg.tol:
            return _finish(name, True, used, trace, tx, x_star, steps)
        if first is None:
            first = res
        elif res > GROWTH_LIMIT * first:
            report = _finish(name, False, used, trace, tx, x_star, steps)
            raise DivergenceError(f"{name}: residual grew beyond {GROWTH_LIMIT:g}x", report)
        x = update(x, tx, f)
    return _finish(name, False, fmap.eval_count - start, trace, best, x_star, steps,
                   "evaluation budget exhausted")


def picard_solve(fmap: CountedMap, x0, cfg: SolveConfig, *, x_star=None,
                 name: str = "picard") -> SolveReport:
    """Plain iteration ``x <- T(x)``."""
    return _one_eval_solver(name, fmap, x0, cfg, lambda x, tx, f: tx, x_star)


def relaxed_solve(fmap: CountedMap, x0, cfg: SolveConfig, *, x_star=None,
                  name: Optional[str] = None) -> SolveReport:
    """Relaxed sweep ``x <- (1 - omega) x + omega T(x)``.

    Convergence is judged on the unrelaxed residual ``||T(x) - x||_inf``.
    ``omega = 1`` reproduces :func:`picard_solve` bit for bit.
    """
    omega = cfg.omega
    if name is None:
        name = f"relaxed(omega={omega:g})"
    return _one_eval_solver(
        name, fmap, x0, cfg, lambda x, tx, f: (1.0 - omega) * x + omega * tx, x_star
    )


def anderson_solve(fmap: CountedMap, x0, cfg: SolveConfig, *, x_star=None,
                   name: Optional[str] = None) -> SolveReport:
    """Type-II Anderson acceleration over a window of ``cfg.depth`` pairs.

    The next iterate is ``sum_i alpha_i T(x_i)`` with ``alpha`` from
    :meth:`AndersonHistory.mixing_coefficients`; no damping is applied.
    """
    if name is None:
        name = f"anderson(m={cfg.depth})"
    history = AndersonHistory(cfg.depth)

    def update(x, tx, f):
        history.push(x, f)
        if len(history) == 1:
            return tx
        return history.extrapolate(cfg.theta)

    return _one_eval_solver(name, fmap, x0, cfg, update, x_star)


def tpa_solve(fmap: CountedMap, x0, cfg: SolveConfig, *, x_star=None,
              callback: Optional[Callable[[TpaState], None]] = None,
              name: str = "tpa") -> SolveReport:
    """Three-point polynomial accelerator.

    Two map evaluations start the run (``y2 = T(x0)``, ``y3 = T(y2)``) and each
    loop blends ``(y1, y2, y3)`` with :func:`tpa_weight` / :func:`tpa_blend`
    and re-evaluates twice. The run stops when ``||y3 - y2||_inf < tol`` and
    returns ``y3``. ``callback`` receives the :class:`TpaState` after each loop.

    Raises
    ------
    DivergenceError
        On non-finite values or runaway residual growth; ``exc.report`` holds
        the partial run.
    SingularFitError
        If ``theta == 0`` and two consecutive residuals coincide.
    """
    y1 = _initial_vector(fmap, x0)
    start = fmap.eval_count
    trace = ResidualTrace()
    loops = 0

    def used():
        return fmap.eval_count - start

    def fail(exc_type, message, x):
        report = _finish(name, False, used(), trace, x, x_star, loops)
        return exc_type(f"{name}: {message}", report)

    y2 = fmap(y1)
    y3 = fmap(y2)
    rho = float(np.max(np.abs(y3 - y2)))
    if not (math.isfinite(rho) and np.all(np.isfinite(y3))):
        raise fail(DivergenceError, "non-finite map value at startup", y1)
    trace.append(used(), rho)
    if rho < cfg.tol:
        return _finish(name, True, used(), trace, y3, x_star, loops)
    first = rho

    while used() + 2 <= cfg.max_evals:
        r1 = y2 - y1
        r2 = y3 - y2
        try:
            w = tpa_weight(r1, r2, cfg.theta)
        except SingularFitError as exc:
            raise fail(SingularFitError, str(exc), y3) from None
        y1 = tpa_blend(y1, y2, y3, w)
        if not (math.isfinite(w) and np.all(np.isfinite(y1))):
            raise fail(DivergenceError, "non-finite blended iterate", y3)

        y2 = fmap(y1)
        res = float(np.max(np.abs(y2 - y1)))
        if not (math.isfinite(res) and np.all(np.isfinite(y2))):
            raise fail(DivergenceError, "non-finite map value", y1)
        trace.append(used(), res)

        y3 = fmap(y2)
        rho = float(np.max(np.abs(y3 - y2)))
        if not (math.isfinite(rho) and np.all(np.isfinite(y3))):
            raise fail(DivergenceError, "non-finite map value", y2)
        trace.append(used(), rho)
        loops += 1
        if callback is not None:
            callback(TpaState.from_iterates(y1, y2, y3, w))
        if rho < cfg.tol:
            return _finish(name, True, used(), trace, y3, x_star, loops)
        if max(res, rho) > GROWTH_LIMIT * first:
            raise fail(DivergenceError, f"residual grew beyond {GROWTH_LIMIT:g}x", y3)

    return _finish(name, False, used(), trace, y3, x_star, loops,
                   "evaluation budget exhausted")
