"""Dense linear algebra used by the problem generators.

Matrices are plain 2-D ``float64`` numpy arrays. Random draws go through
``numpy.random.Generator`` with the PCG64 bit generator; standard normals use
numpy's ziggurat sampler, uniforms the 53-bit double conversion.
"""

from __future__ import annotations

import numpy as np

from .core import DomainError

__all__ = [
    "FactorizationError",
    "make_rng",
    "householder_qr",
    "sample_orthogonal",
    "spectral_affine",
    "elementwise_arctanh",
    "dirichlet_sine_basis",
    "poisson_exact_solve",
]


class FactorizationError(np.linalg.LinAlgError):
    pass


def make_rng(seed) -> np.random.Generator:
    """Seeded PCG64 generator."""
    return np.random.Generator(np.random.PCG64(seed))


def householder_qr(A):
    """QR factorisation of a square matrix by Householder reflections.

    The diagonal of ``R`` is made non-negative, which makes the factorisation
    unique for full-rank ``A``.

    Parameters
    ----------
    A : (n, n) array_like

    Returns
    -------
    Q : (n, n) ndarray
        Orthogonal factor.
    R : (n, n) ndarray
        Upper-triangular factor with ``diag(R) >= 0``.

    Raises
    ------
    FactorizationError
        If ``A`` is not square or is numerically rank deficient.
    """
    R = np.array(A, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise FactorizationError(f"expected a square matrix, got shape {R.shape}")
    n = R.shape[0]
    scale = np.linalg.norm(R)
    threshold = n * np.finfo(np.float64).eps * scale
    Q = np.eye(n)
    for k in range(n - 1):
        x = R[k:, k]
        alpha = np.linalg.norm(x)
        if alpha <= threshold:
            raise FactorizationError(f"matrix is rank deficient at column {k}")
        v = x.copy()
        v[0] += alpha if x[0] >= 0 else -alpha
        v /= np.linalg.norm(v)
        R[k:, k:] -= 2.0 * np.outer(v, v @ R[k:, k:])
        Q[:, k:] -= 2.0 * np.outer(Q[:, k:] @ v, v)
        R[k + 1:, k] = 0.0
    if n == 0 or abs(R[n - 1, n - 1]) <= threshold:
        raise FactorizationError("matrix is rank deficient")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q *= signs
    R *= signs[:, None]
    return Q, R


def sample_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Q factor of a ``d x d`` standard-normal matrix (non-negative ``diag(R)``)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    G = rng.standard_normal((d, d))
    Q, _ = householder_qr(G)
    return Q


def spectral_affine(lam, Q) -> np.ndarray:
    """Symmetric matrix ``Q diag(lam) Q^T``, symmetrised by averaging with its transpose."""
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    Q = np.asarray(Q, dtype=np.float64)
    if Q.shape != (lam.size, lam.size):
        raise ValueError(f"Q must be {lam.size}x{lam.size}, got {Q.shape}")
    M = (Q * lam) @ Q.T
    return 0.5 * (M + M.T)


def elementwise_arctanh(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.abs(x) < 1.0):
        raise DomainError("arctanh requires |x_i| < 1 for every component")
    return np.arctanh(x)


def dirichlet_sine_basis(n: int):
    """Eigenpairs of the 1-D Dirichlet stencil ``tridiag(-1, 2, -1)`` of size ``n``.

    Returns ``(S, mu)`` with ``S[i, k] = sin((i+1)(k+1) pi / (n+1))`` and
    ``mu[k] = 2 - 2 cos((k+1) pi / (n+1))``. ``S`` is symmetric and
    ``S @ S = (n+1)/2 * I``.
    """
    idx = np.arange(1, n + 1)
    theta = np.pi / (n + 1)
    S = np.sin(np.outer(idx, idx) * theta)
    mu = 2.0 - 2.0 * np.cos(idx * theta)
    return S, mu


def poisson_exact_solve(n: int, f_grid) -> np.ndarray:
    """Solve the five-point Dirichlet Poisson system on an ``n x n`` interior grid.

    Solves ``A u = h^2 f`` where ``A`` is the unscaled stencil
    (4 on the diagonal, -1 for each neighbour) and ``h = 1/(n+1)``, by
    diagonalising ``A`` in the sine basis along both axes. ``f_grid`` and the
    result are flattened row-major with the x index fastest.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    F = np.asarray(f_grid, dtype=np.float64).reshape(n, n)
    h = 1.0 / (n + 1)
    S, mu = dirichlet_sine_basis(n)
    norm = 2.0 / (n + 1)
    coeffs = S @ (h * h * F) @ S
    coeffs /= mu[:, None] + mu[None, :]
    return (norm * norm * (S @ coeffs @ S)).reshape(-1)
