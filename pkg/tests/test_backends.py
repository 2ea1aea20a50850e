"""Numba and numpy kernel implementations must agree to float precision."""

import subprocess
import sys

import numpy as np
import pytest

from dyncov import _kernels_numba as knb
from dyncov import _kernels_numpy as knp
from dyncov.smoothing import knn_bandwidths


def _random_problem(rng, n, p, q):
    X = rng.uniform(-1, 1, size=(n + 1, q))
    Y = rng.standard_normal((n + 1, p))
    beta = rng.standard_normal(q)
    beta /= np.linalg.norm(beta)
    X_reg = X[1:]
    Ys = Y[1:]
    X_lag = X[:-1]
    z = X_lag @ beta
    return X_reg, Ys, X_lag, z


@pytest.mark.parametrize("seed", range(6))
def test_local_linear_anchors_equivalence(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(30, 80))
    p = int(rng.integers(1, 5))
    q = int(rng.integers(1, 5))
    X_reg, Ys, X_lag, z = _random_problem(rng, n, p, q)
    centers = np.concatenate([z[:5], rng.uniform(z.min(), z.max(), size=3)])
    bw = knn_bandwidths(centers, z, min(max(8, 3 * q), n - 2))
    # one deliberately empty window
    centers = np.append(centers, z.max() + 10.0)
    bw = np.append(bw, 1e-6)

    a = knp.local_linear_anchors(X_reg, Ys, z, centers, bw)
    b = knb.local_linear_anchors(X_reg, Ys, z, centers, bw)
    assert np.allclose(a[0], b[0], atol=1e-10, equal_nan=True)
    assert np.array_equal(a[2], b[2])
    # condition estimates are only meaningful on clean solves; on singular
    # Grams the smallest singular value is rounding noise
    clean = a[2] == 0
    assert np.allclose(a[1][clean], b[1][clean], rtol=1e-6)
    assert np.allclose(a[3], b[3], atol=1e-12)
    assert a[2][-1] == 2  # the empty window is flagged in both


@pytest.mark.parametrize("seed", range(6))
def test_beta_step2_system_equivalence(seed):
    rng = np.random.default_rng(200 + seed)
    n = int(rng.integers(30, 70))
    p = int(rng.integers(1, 4))
    q = int(rng.integers(1, 4))
    X_reg, Ys, X_lag, z = _random_problem(rng, n, p, q)
    h = 0.2 * (z.max() - z.min())
    bw = np.full(z.shape, h)
    coeffs, _, flags, _ = knp.local_linear_anchors(X_reg, Ys, z, z, bw)
    valid = flags < 2
    valid[rng.integers(0, z.size)] = False

    Ga, ba, ca = knp.beta_step2_system(X_reg, Ys, X_lag, z, h, coeffs, valid)
    Gb, bb, cb = knb.beta_step2_system(X_reg, Ys, X_lag, z, h, coeffs, valid)
    assert np.allclose(Ga, Gb, atol=1e-9)
    assert np.allclose(ba, bb, atol=1e-9)
    assert ca == pytest.approx(cb, rel=1e-10)


@pytest.mark.parametrize("init_alpha0", [True, False])
def test_garch_path_equivalence(init_alpha0):
    rng = np.random.default_rng(7)
    for _ in range(10):
        m = int(rng.integers(1, 4))
        s = int(rng.integers(0, 4))
        alpha0 = float(rng.uniform(0.05, 0.8))
        alpha = rng.uniform(0.01, 0.3 / m, size=m)
        gamma = rng.uniform(0.01, 0.5 / max(s, 1), size=s)
        r2 = rng.standard_normal(int(rng.integers(5, 200))) ** 2
        a = knp.garch_sigma2_path(alpha0, alpha, gamma, r2, init_alpha0, 1e-6)
        b = knb.garch_sigma2_path(alpha0, alpha, gamma, r2, init_alpha0, 1e-6)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)
        na = knp.garch_nll_terms(alpha0, alpha, gamma, r2, init_alpha0, 1e-6)
        nb = knb.garch_nll_terms(alpha0, alpha, gamma, r2, init_alpha0, 1e-6)
        assert na == pytest.approx(nb, rel=1e-10)


def test_nw_moments_equivalence():
    rng = np.random.default_rng(8)
    for _ in range(10):
        n = int(rng.integers(10, 120))
        q = int(rng.integers(1, 5))
        X = rng.uniform(-1, 1, size=(n, q))
        X_lag = X[:-1]
        X_next = X[1:]
        u = rng.uniform(-1, 1, size=q)
        h2 = float(rng.uniform(0.3, 2.0))
        ma, sa, wa = knp.nw_moments(X_lag, X_next, u, h2)
        mb, sb, wb = knb.nw_moments(X_lag, X_next, u, h2)
        assert np.allclose(ma, mb, atol=1e-12, equal_nan=True)
        assert np.allclose(sa, sb, atol=1e-12, equal_nan=True)
        assert wa == pytest.approx(wb, abs=1e-12)


def test_nw_moments_empty_window_equivalence():
    X = np.zeros((5, 2))
    u = np.array([50.0, 50.0])
    ma, sa, wa = knp.nw_moments(X, X, u, 0.5)
    mb, sb, wb = knb.nw_moments(X, X, u, 0.5)
    assert np.all(np.isnan(ma)) and np.all(np.isnan(mb))
    assert np.all(np.isnan(sa)) and np.all(np.isnan(sb))
    assert wa == 0.0 and wb == 0.0


def _run_probe(env_value):
    code = "from dyncov._backend import backend_name; print(backend_name())"
    import os

    env = dict(os.environ)
    if env_value is None:
        env.pop("DYNCOV_BACKEND", None)
    else:
        env["DYNCOV_BACKEND"] = env_value
    return subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )


def test_backend_env_selection():
    out = _run_probe("numpy")
    assert out.returncode == 0 and out.stdout.strip() == "numpy"
    out = _run_probe("numba")
    assert out.returncode == 0 and out.stdout.strip() == "numba"


def test_backend_env_invalid():
    out = _run_probe("cuda")
    assert out.returncode != 0
    assert "DYNCOV_BACKEND" in out.stderr
