import numpy as np
import pytest

from dyncov.errors import (
    DegenerateWindowError,
    InsufficientDataError,
    InvalidArgumentError,
)
from dyncov.smoothing import (
    KernelSpec,
    WlsProblem,
    kernel_eval,
    knn_bandwidth,
    knn_bandwidths,
    scaled_kernel,
    solve_wls,
)


def test_kernel_point_values():
    assert kernel_eval(0.0) == 0.75
    assert kernel_eval(1.5) == 0.0
    assert kernel_eval(0.5) == pytest.approx(0.5625, abs=1e-15)
    assert kernel_eval(-0.5) == pytest.approx(0.5625, abs=1e-15)
    assert kernel_eval(1.0) == 0.0
    assert kernel_eval(-1.0) == 0.0


def test_kernel_rejects_nonfinite():
    with pytest.raises(InvalidArgumentError):
        kernel_eval(np.nan)
    with pytest.raises(InvalidArgumentError):
        kernel_eval(np.inf)


def test_kernel_nonnegative_symmetric_random():
    rng = np.random.default_rng(0)
    u = rng.uniform(-3, 3, size=1000)
    k = kernel_eval(u)
    assert np.all(k >= 0)
    assert np.allclose(k, kernel_eval(-u), atol=0, rtol=0)


def test_kernel_integrates_to_one():
    u = np.linspace(-1, 1, 200001)
    integral = np.trapezoid(kernel_eval(u), u)
    assert integral == pytest.approx(1.0, abs=1e-6)


def test_scaled_kernel_values():
    assert scaled_kernel(0.0, 2.0) == pytest.approx(0.375, abs=1e-15)
    assert scaled_kernel(2.0, 1.0) == 0.0
    assert scaled_kernel(0.25, 0.5) == pytest.approx(1.125, abs=1e-12)


def test_scaled_kernel_integrates_to_one():
    for h in (0.1, 1.0, 10.0):
        u = np.linspace(-h, h, 200001)
        integral = np.trapezoid(scaled_kernel(u, h), u)
        assert integral == pytest.approx(1.0, abs=1e-6)


def test_scaled_kernel_rejects_bad_bandwidth():
    with pytest.raises(InvalidArgumentError):
        scaled_kernel(0.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        scaled_kernel(0.0, -1.0)


def test_kernel_spec_validation():
    spec = KernelSpec()
    assert spec.family == "epanechnikov"
    assert spec.support_radius == 1.0
    with pytest.raises(InvalidArgumentError):
        KernelSpec(family="gaussian")


def test_knn_bandwidth_sorted_distances():
    assert knn_bandwidth(0.0, [1.0, 2.0, 5.0], 2) == 2.0
    assert knn_bandwidth(0.0, [1.0, 2.0, 5.0], 3) == 5.0
    assert knn_bandwidth(0.0, [1.0, 2.0, 5.0], 1) == 1.0


def test_knn_bandwidth_excludes_zero_distance():
    # the query's own observation must not collapse the window
    assert knn_bandwidth(0.0, [0.0, 1.0], 1) == 1.0
    with pytest.raises(InsufficientDataError):
        knn_bandwidth(0.0, [0.0, 1.0], 2)


def test_knn_bandwidth_tie_determinism():
    assert knn_bandwidth(0.0, [1.0, -1.0, 1.0], 2) == 1.0
    assert knn_bandwidth(0.0, [1.0, -1.0, 1.0], 3) == 1.0


def test_knn_bandwidth_2d_points():
    pts = np.array([[3.0, 4.0], [0.0, 1.0], [6.0, 8.0]])
    assert knn_bandwidth(np.zeros(2), pts, 2) == pytest.approx(5.0, abs=1e-12)


def test_knn_bandwidths_vector():
    centers = np.array([0.0, 1.0])
    pts = np.array([0.0, 1.0, 3.0])
    out = knn_bandwidths(centers, pts, 1)
    assert out.shape == (2,)
    assert out[0] == 1.0 and out[1] == 1.0


def test_wls_weighted_mean():
    problem = WlsProblem(
        design=np.array([[1.0], [1.0]]),
        response=np.array([1.0, 3.0]),
        weights=np.array([1.0, 1.0]),
    )
    sol = solve_wls(problem)
    assert sol.coefficients[0] == pytest.approx(2.0, abs=1e-12)


def test_wls_exact_on_linear_data():
    rng = np.random.default_rng(1)
    for _ in range(20):
        X = rng.standard_normal((12, 3))
        b = rng.standard_normal(3)
        w = rng.uniform(0.1, 2.0, size=12)
        sol = solve_wls(WlsProblem(design=X, response=X @ b, weights=w))
        assert np.allclose(sol.coefficients, b, atol=1e-10)


def test_wls_matches_normal_equations_oracle():
    # independent oracle: explicit Gram inversion
    rng = np.random.default_rng(2)
    for _ in range(100):
        X = rng.standard_normal((6, 3))
        y = rng.standard_normal(6)
        w = rng.uniform(0.05, 3.0, size=6)
        oracle = np.linalg.inv((X * w[:, None]).T @ X) @ (X * w[:, None]).T @ y
        sol = solve_wls(WlsProblem(design=X, response=y, weights=w))
        assert np.allclose(sol.coefficients, oracle, rtol=1e-8, atol=1e-10)


def test_wls_uniform_weights_equals_ols():
    rng = np.random.default_rng(3)
    for _ in range(100):
        X = rng.standard_normal((10, 4))
        y = rng.standard_normal(10)
        ols = np.linalg.lstsq(X, y, rcond=None)[0]
        sol = solve_wls(WlsProblem(design=X, response=y, weights=np.ones(10)))
        assert np.allclose(sol.coefficients, ols, rtol=1e-8, atol=1e-10)


def test_wls_weight_scale_invariance():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((9, 3))
    y = rng.standard_normal(9)
    w = rng.uniform(0.1, 1.0, size=9)
    a = solve_wls(WlsProblem(design=X, response=y, weights=w)).coefficients
    b = solve_wls(WlsProblem(design=X, response=y, weights=737.0 * w)).coefficients
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_wls_multi_response():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((15, 3))
    B = rng.standard_normal((3, 4))
    sol = solve_wls(
        WlsProblem(design=X, response=X @ B, weights=np.ones(15))
    )
    assert sol.coefficients.shape == (3, 4)
    assert np.allclose(sol.coefficients, B, atol=1e-10)


def test_wls_zero_weights_error():
    with pytest.raises(DegenerateWindowError):
        solve_wls(
            WlsProblem(
                design=np.ones((3, 1)),
                response=np.ones(3),
                weights=np.zeros(3),
            )
        )


def test_wls_singular_design_ridge_fallback():
    # duplicated column makes the Gram exactly singular
    X = np.ones((5, 2))
    y = np.arange(5.0)
    sol = solve_wls(WlsProblem(design=X, response=y, weights=np.ones(5)))
    assert sol.ridge_applied
    assert sol.applied_ridge > 0
    assert np.all(np.isfinite(sol.coefficients))


def test_wls_validation():
    with pytest.raises(InvalidArgumentError):
        WlsProblem(
            design=np.ones((3, 2)),
            response=np.ones(4),
            weights=np.ones(3),
        )
    with pytest.raises(InvalidArgumentError):
        WlsProblem(
            design=np.ones((3, 2)),
            response=np.ones(3),
            weights=-np.ones(3),
        )
