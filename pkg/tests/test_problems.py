import numpy as np
import pytest

from tpaccel.accelerators import anderson_solve, picard_solve, relaxed_solve, tpa_solve
from tpaccel.core import DomainError, SolveConfig
from tpaccel.problems import (
    FIXED_POINT_TOL,
    ParameterError,
    build_clustered_linear,
    build_poisson,
    build_problem,
    build_tanh,
)


@pytest.fixture(scope="module")
def clustered():
    return build_clustered_linear(seed=3)


@pytest.fixture(scope="module")
def tanh_problem():
    return build_tanh(seed=3)


@pytest.fixture(scope="module")
def poisson():
    return build_poisson()


def test_instances_are_fixed_points(clustered, tanh_problem, poisson):
    for prob in (clustered, tanh_problem, poisson):
        assert prob.fixed_point_residual() < FIXED_POINT_TOL
        assert prob.map.eval_count == 0
    x = clustered.x_star
    assert np.max(np.abs(clustered.map.raw_map(x) - x)) <= 1e-12 * np.max(np.abs(x))
    assert tanh_problem.fixed_point_residual() <= 1e-12
    assert poisson.fixed_point_residual() <= 1e-10


def test_clustered_small_forced():
    prob = build_clustered_linear(d=1, lambda_lo=0.5, lambda_hi=0.5, seed=0, x_star=[5.0])
    T = prob.map.raw_map
    assert T(np.array([0.0]))[0] == pytest.approx(2.5)
    assert T(np.array([2.0]))[0] == pytest.approx(3.5)


def test_clustered_dominant_eigenvalue(clustered):
    M = clustered.data["matrix"]
    v = np.random.default_rng(0).standard_normal(M.shape[0])
    for _ in range(20000):
        v = M @ v
        v /= np.linalg.norm(v)
    assert abs(v @ M @ v - 0.99) < 1e-6
    eig = np.linalg.eigvalsh(M)
    np.testing.assert_allclose(eig, np.linspace(0.9, 0.99, 80), atol=1e-12)


def test_clustered_jacobian_is_constant(clustered):
    T = clustered.map.raw_map
    rng = np.random.default_rng(1)
    x, dx = rng.standard_normal((2, 80))
    np.testing.assert_allclose(T(x + dx) - T(x), clustered.data["matrix"] @ dx, atol=1e-12)


@pytest.mark.parametrize("kwargs", [dict(lambda_lo=0.5, lambda_hi=0.4), dict(lambda_hi=1.0),
                                    dict(lambda_lo=-0.1)])
def test_clustered_bad_range(kwargs):
    with pytest.raises(ParameterError):
        build_clustered_linear(d=5, **kwargs)


def test_tanh_constant_map():
    prob = build_tanh(d=1, lambda_lo=0.0, lambda_hi=0.0, x_star=[0.5])
    T = prob.map.raw_map
    for x in (-3.0, 0.0, 0.9):
        assert T(np.array([x]))[0] == pytest.approx(0.5, rel=1e-15)
    for solver in (tpa_solve, picard_solve, anderson_solve):
        rep = solver(prob.fresh_map(), [0.0], SolveConfig())
        assert rep.converged and rep.total_evals <= 2


def test_tanh_reference_range(tanh_problem):
    assert np.max(np.abs(tanh_problem.x_star)) <= 0.7


@pytest.mark.parametrize("amp", [1.0, 1.2, 0.0])
def test_tanh_bad_amplitude(amp):
    with pytest.raises(DomainError):
        build_tanh(d=4, amp=amp)


def test_poisson_zero_source():
    prob = build_poisson(n=6, source=lambda x, y: 0.0 * x)
    np.testing.assert_array_equal(prob.x_star, 0.0)
    np.testing.assert_array_equal(prob.map.raw_map(np.zeros(36)), 0.0)


def test_poisson_layout_and_stencil():
    n = 4
    prob = build_poisson(n=n)
    h = 1 / (n + 1)
    rhs = prob.data["rhs"]
    # k = (j-1) n + (i-1): x index fastest
    i, j = 3, 2
    k = (j - 1) * n + (i - 1)
    assert rhs[k] == pytest.approx(np.sin(np.pi * (i * h) ** 2) * np.sin(2 * np.pi * (j * h) ** 2))
    u = np.zeros(n * n)
    u[k] = 1.0
    Tu = prob.map.raw_map(u) - prob.map.raw_map(np.zeros(n * n))
    neighbours = [k - 1, k + 1, k - n, k + n]
    np.testing.assert_allclose(Tu[neighbours], 0.25)
    assert np.count_nonzero(np.abs(Tu) > 1e-15) == 4


def test_poisson_map_is_affine(poisson):
    T = poisson.map.raw_map
    rng = np.random.default_rng(2)
    u, v = rng.standard_normal((2, 2500))
    a, b = 0.3, -1.7
    T0 = T(np.zeros(2500))
    np.testing.assert_allclose(T(a * u + b * v) - T0, a * (T(u) - T0) + b * (T(v) - T0), atol=1e-12)


def test_builders_are_deterministic():
    for build in (build_clustered_linear, build_tanh):
        a, b = build(seed=17), build(seed=17)
        assert np.array_equal(a.x_star, b.x_star)
        assert np.array_equal(a.data["matrix"], b.data["matrix"])
        x = np.linspace(-0.5, 0.5, a.dimension)
        assert np.array_equal(a.map.raw_map(x), b.map.raw_map(x))
    assert np.array_equal(build_poisson(n=10).x_star, build_poisson(n=10).x_star)


def test_build_problem_dispatch():
    assert build_problem("clustered", seed=2, d=10).seed == 2
    assert build_problem("poisson", seed=5, n=3).seed is None
    with pytest.raises(ParameterError):
        build_problem("heat")


def test_fresh_maps_are_independent(clustered):
    a, b = clustered.fresh_map(), clustered.fresh_map()
    a(np.zeros(80))
    assert (a.eval_count, b.eval_count) == (1, 0)


def test_poisson_picard_count(poisson):
    rep = picard_solve(poisson.fresh_map(), np.zeros(2500), SolveConfig(), x_star=poisson.x_star)
    assert rep.converged and abs(rep.total_evals - 4317) <= 0.02 * 4317


def test_clustered_picard_count(clustered):
    rep = picard_solve(clustered.fresh_map(), np.zeros(80), SolveConfig())
    assert rep.converged and 900 <= rep.total_evals <= 1600


def test_tanh_picard_count(tanh_problem):
    rep = picard_solve(tanh_problem.fresh_map(), np.zeros(320), SolveConfig())
    assert rep.converged and 90 <= rep.total_evals <= 200


def test_poisson_relaxed_runs(poisson):
    rep = relaxed_solve(poisson.fresh_map(), np.zeros(2500), SolveConfig(omega=0.8, max_evals=50))
    assert rep.total_evals == 50 and not rep.converged
