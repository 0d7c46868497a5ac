import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fase import FASE, NGCVSearch, ScenarioSpec, gen_scenario_i, objective

from conftest import random_series


@pytest.fixture(scope="module")
def instance():
    return gen_scenario_i(ScenarioSpec("i", n=25, m=16, d=2, sigma=0.5, seed=9))


class TestFASEEstimator:
    def test_get_set_params_roundtrip(self):
        est = FASE(d=3, q=8, tol=1e-4)
        params = est.get_params()
        assert params["d"] == 3 and params["q"] == 8
        other = FASE().set_params(**params)
        assert other.get_params() == params

    def test_clone(self):
        est = FASE(d=3, q=8)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_not_fitted_error(self):
        with pytest.raises(NotFittedError):
            FASE().predict(0.5)

    def test_fit_predict_shapes(self, instance):
        series, truth, _ = instance
        est = FASE(d=2, q=8, max_iter=200).fit(series)
        single = est.predict(0.5)
        assert single.shape == (25, 2)
        batch = est.predict(np.array([0.2, 0.5, 0.9]))
        assert batch.shape == (3, 25, 2)
        theta = est.predict_adjacency(0.5)
        assert theta.shape == (25, 25)
        assert_allclose(theta, single @ single.T)
        assert est.trajectories().shape == (25, 16, 2)

    def test_accepts_raw_arrays(self, instance):
        series, _, _ = instance
        est = FASE(d=2, q=8, max_iter=50).fit(series.snapshots, indices=series.indices)
        assert est.coords_.shape == (25, 8, 2)

    def test_predict_at_observed_matches_trajectories(self, instance):
        series, _, _ = instance
        est = FASE(d=2, q=8, max_iter=100).fit(series)
        k = 5
        assert_allclose(
            est.predict(series.indices[k]), est.trajectories()[:, k, :]
        )

    def test_refuses_extrapolation(self, instance):
        series, _, _ = instance
        est = FASE(d=2, q=8, max_iter=20).fit(series)
        with pytest.raises(ValueError, match="domain"):
            est.predict(2.0)

    def test_fit_diagonal_flag_changes_loss(self, rng):
        series, basis, coords, _ = random_series(rng, n=10, m=8, d=2, sigma=1.0)
        with_diag = FASE(d=2, q=5, max_iter=50).fit(series)
        without = FASE(d=2, q=5, max_iter=50, fit_diagonal=False).fit(series)
        assert without.series_.masks is not None
        assert with_diag.series_.masks is None

    def test_sequential_flag(self, instance):
        series, _, _ = instance
        est = FASE(d=2, q=8, sequential=True, max_iter=100).fit(series)
        assert est.coords_.shape == (25, 8, 2)

    def test_penalized_flag(self, instance):
        series, _, _ = instance
        est = FASE(d=2, q=8, penalty=5.0, max_iter=100).fit(series)
        assert est.fit_.objective_trace[-1] <= est.fit_.objective_trace[0]

    def test_diagnostics_attribute(self, instance):
        series, _, _ = instance
        est = FASE(d=2, q=8, max_iter=20).fit(series)
        assert est.diagnostics_.gamma_sq > 0
        assert est.n_blocks_ >= 1


class TestNGCVSearch:
    def test_selects_and_refits(self, instance):
        series, _, _ = instance
        search = NGCVSearch(q_values=(6, 8), d_values=(1, 2), method="cd", max_iter=200)
        search.fit(series)
        assert (search.best_q_, search.best_d_) in [(q, d) for q in (6, 8) for d in (1, 2)]
        assert search.estimator_.q == search.best_q_
        assert search.predict(0.5).shape == (25, search.best_d_)

    def test_invalid_method(self, instance):
        series, _, _ = instance
        with pytest.raises(ValueError, match="method"):
            NGCVSearch(method="anneal").fit(series)

    def test_get_params(self):
        search = NGCVSearch(q_values=(6,), d_values=(1,))
        cloned = clone(search)
        assert cloned.get_params()["q_values"] == (6,)
