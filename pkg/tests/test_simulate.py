import numpy as np
import pytest

from dyncov.errors import InvalidArgumentError
from dyncov.simulate import (
    SimulationConfig,
    curve_values,
    draw_xi,
    run_simulation_study,
    simulate_dgp,
)

SMALL = SimulationConfig(n=80, p=3, q=4, master_seed=1)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        SimulationConfig(n=5)
    with pytest.raises(InvalidArgumentError):
        SimulationConfig(q=3)  # default beta has length 4
    with pytest.raises(InvalidArgumentError):
        SimulationConfig(garch=(0.5, 0.6, 0.5))
    cfg = SimulationConfig()
    assert np.linalg.norm(cfg.beta_unit) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(cfg.beta_unit, np.array([1.0, 2.0, 0.0, 2.0]) / 3.0)


def test_simulation_bit_identical():
    a, ta = simulate_dgp(SMALL, replication_seed=3)
    b, tb = simulate_dgp(SMALL, replication_seed=3)
    assert np.array_equal(a.returns, b.returns)
    assert np.array_equal(a.factors, b.factors)
    assert np.array_equal(ta.covariance, tb.covariance)


def test_replications_differ_but_share_curves():
    a, _ = simulate_dgp(SMALL, replication_seed=0)
    b, _ = simulate_dgp(SMALL, replication_seed=1)
    assert not np.array_equal(a.returns, b.returns)
    assert not np.array_equal(a.factors, b.factors)
    # curve constants come from the master seed only
    assert np.array_equal(draw_xi(SMALL), draw_xi(SMALL))
    other_master = SimulationConfig(n=80, p=3, q=4, master_seed=2)
    assert not np.array_equal(draw_xi(SMALL), draw_xi(other_master))


def test_shapes_and_dataset_fields():
    data, truth = simulate_dgp(SMALL, replication_seed=0)
    n, p, q = SMALL.n, SMALL.p, SMALL.q
    assert data.returns.shape == (n + 1, p)
    assert data.factors.shape == (n + 1, q)
    assert data.dates.shape == (n + 1,)
    assert np.all(data.risk_free == 0.0)
    assert len(data.asset_names) == p
    assert truth.covariance.shape == (p, p)
    assert truth.sigma2_next.shape == (p,)
    assert truth.phi.shape == (p, q)


def test_truth_self_consistency():
    data, truth = simulate_dgp(SMALL, replication_seed=2)
    # conditioning index is the second-to-last factor row through beta
    z = float(data.factors[-2] @ SMALL.beta_unit)
    assert truth.index_value == pytest.approx(z, abs=1e-12)

    g, A = curve_values(draw_xi(SMALL), np.array([z]))
    assert np.allclose(truth.g, g[0], atol=1e-12)
    assert np.allclose(truth.phi, A[0], atol=1e-12)
    assert np.allclose(truth.mean, truth.g, atol=1e-15)

    rebuilt = truth.phi @ truth.sigma_x @ truth.phi.T + np.diag(truth.sigma2_next)
    assert np.allclose(truth.covariance, 0.5 * (rebuilt + rebuilt.T), atol=1e-12)
    assert np.allclose(truth.covariance @ truth.covariance_inv, np.eye(SMALL.p), atol=1e-8)
    assert np.allclose(truth.sigma_x, np.eye(SMALL.q) / 3.0)


def test_curve_value_patterns():
    # factor loading shapes cycle with period 4: 0.8z, flat, sine, flat
    xi = np.zeros((6, 2))
    z = np.array([0.25, -0.5])
    g, A = curve_values(xi, z)
    assert np.allclose(g[:, 0], 3.0 * np.exp(-(z**2)), atol=1e-14)
    assert np.allclose(A[:, 0, 0], 0.8 * z, atol=1e-14)
    assert np.allclose(A[:, 0, 1], 0.0, atol=1e-14)
    assert np.allclose(A[:, 0, 2], 1.5 * np.sin(np.pi * z), atol=1e-14)
    assert np.allclose(A[:, 0, 3], 0.0, atol=1e-14)
    assert np.allclose(A[:, 0, 4], 0.8 * z, atol=1e-14)  # cycle restarts


def test_factor_covariance_near_identity_third():
    cfg = SimulationConfig(n=2000, p=2, q=4, master_seed=0)
    data, _ = simulate_dgp(cfg, replication_seed=0)
    emp = np.cov(data.factors.T, ddof=0)
    assert np.linalg.norm(emp - np.eye(4) / 3.0) < 0.05


def test_garch_noise_stationary_start():
    # the first-row conditional variance is the stationary value
    cfg = SimulationConfig(n=50, p=4, master_seed=3)
    a0, a1, g1 = cfg.garch
    data, truth = simulate_dgp(cfg, replication_seed=0)
    assert a0 / (1 - a1 - g1) == pytest.approx(0.625, abs=1e-15)
    # noise variance at the final step stays above the intercept
    assert np.all(truth.sigma2_next >= a0 - 1e-12)


def test_study_single_replication_flags_sd():
    res = run_simulation_study(SMALL, replications=1, estimators=("sam",))
    assert res.aggregate["n_ok"] == 1
    assert np.isnan(res.aggregate["delta_cov_sd"])
    assert np.isnan(res.aggregate["sd_return_sam"])
    assert np.isnan(res.aggregate["sharpe_sam"])
    assert len(res.records) == 1


def test_study_records_and_aggregate():
    res = run_simulation_study(SMALL, replications=2, estimators=("sam", "fan"))
    assert res.aggregate["n_ok"] == 2
    assert res.aggregate["n_failed"] == 0
    for col in ("delta_cov", "delta_inv", "entropy_sq", "beta_err", "ret_sam"):
        assert col in res.records.columns
    assert "ret_face" not in res.records.columns
    assert res.aggregate["delta_cov_mean"] == pytest.approx(
        res.records["delta_cov"].mean()
    )
    assert res.aggregate["sharpe_sam"] == pytest.approx(
        res.records["ret_sam"].mean() / res.records["ret_sam"].std(ddof=1)
    )


def test_study_deterministic():
    a = run_simulation_study(SMALL, replications=2, estimators=("sam",))
    b = run_simulation_study(SMALL, replications=2, estimators=("sam",))
    assert a.records.equals(b.records)


def test_study_validation():
    with pytest.raises(InvalidArgumentError):
        run_simulation_study(SMALL, replications=0)
    with pytest.raises(InvalidArgumentError):
        run_simulation_study(SMALL, replications=1, estimators=("sam", "gan"))
