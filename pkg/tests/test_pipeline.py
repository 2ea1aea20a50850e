import numpy as np
import pytest

from dyncov.coefficients import default_candidate_k
from dyncov.pipeline import PipelineConfig, fit_pipeline, predict_next
from dyncov.index import IndexConfig
from dyncov.simulate import SimulationConfig, simulate_dgp


@pytest.fixture(scope="module")
def fitted():
    # p must not be too small here: with a handful of assets the cross
    # section barely pins the index direction and the two-step iteration
    # can stall away from the truth.
    config = SimulationConfig(n=260, p=8, master_seed=11)
    data, truth = simulate_dgp(config, replication_seed=0)
    fit = fit_pipeline(data.returns[:-1], data.factors[:-1])
    return config, data, truth, fit


def test_fit_fields(fitted):
    config, data, truth, fit = fitted
    n_fit = config.n
    p, q = config.p, config.q

    assert np.linalg.norm(fit.beta.beta) == pytest.approx(1.0, abs=1e-12)
    assert fit.beta.beta[0] > 0
    assert fit.selected_k in default_candidate_k(n_fit)
    assert fit.cv_scores.shape == (len(default_candidate_k(n_fit)),)
    assert fit.residual_matrix.shape == (p, n_fit - 1)
    assert len(fit.garch_fits) == p
    assert fit.h2 > 0
    assert fit.g_star.shape == (p,)
    assert fit.phi_star.shape == (p, q)
    assert fit.sigma_x.shape == (q, q)
    assert np.all(fit.sigma2_next > 0)
    assert fit.factor_mean.shape == (q,)
    assert fit.n_obs == n_fit


def test_fit_recovers_direction(fitted):
    config, _, _, fit = fitted
    assert np.linalg.norm(fit.beta.beta - config.beta_unit) < 0.25


def test_predict_next_shapes_and_psd(fitted):
    config, _, _, fit = fitted
    cov, mu = predict_next(fit)
    p = config.p
    assert cov.matrix.shape == (p, p)
    assert mu.shape == (p,)
    assert np.array_equal(cov.matrix, cov.matrix.T)
    assert np.linalg.eigvalsh(cov.matrix)[0] > 0
    assert np.allclose(
        cov.matrix, cov.factor_part + cov.idio_part, atol=1e-12
    )
    # mean equals intercept plus loadings applied to the factor mean
    assert np.allclose(
        mu, fit.g_star + fit.phi_star @ fit.factor_mean, atol=1e-12
    )


def test_pipeline_deterministic(fitted):
    config, data, _, fit = fitted
    again = fit_pipeline(data.returns[:-1], data.factors[:-1])
    assert np.array_equal(fit.beta.beta, again.beta.beta)
    assert fit.selected_k == again.selected_k
    assert fit.h2 == again.h2
    cov_a, mu_a = predict_next(fit)
    cov_b, mu_b = predict_next(again)
    assert np.array_equal(cov_a.matrix, cov_b.matrix)
    assert np.array_equal(mu_a, mu_b)


def test_config_overrides_respected():
    config = SimulationConfig(n=120, p=3, master_seed=12)
    data, _ = simulate_dgp(config, replication_seed=0)
    Y, X = data.returns[:-1], data.factors[:-1]

    pc = PipelineConfig(
        index=IndexConfig(seed=4),
        candidate_k=(10, 30),
        cv_lookback=8,
        garch_m=2,
        garch_s=1,
        garch_init="first_residual",
    )
    fit = fit_pipeline(Y, X, pc)
    assert fit.selected_k in (10, 30)
    assert fit.cv_scores.shape == (2,)
    for gf in fit.garch_fits:
        assert gf.params.m == 2
        assert gf.params.s == 1
        assert gf.init_mode == "first_residual"
