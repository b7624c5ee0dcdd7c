"""Persistence, linear ARX, and GBT forecasters."""

import numpy as np
import pytest

from ghicast._core import treebuild_np
from ghicast.errors import ParameterError, SingularMatrixError
from ghicast.models.gbt import GbtParams, fit_gbt, tree_predict
from ghicast.models.linear import fit_linear_arx
from ghicast.models.persistence import persistence_forecast, persistence_forecast_arrays

try:
    from ghicast._core import _treebuild_cy
except ImportError:
    _treebuild_cy = None


class TestPersistence:
    def test_clear_sky_index_one(self):
        pred, fb = persistence_forecast(500.0, 500.0, 300.0)
        assert pred == 300.0 and not fb

    def test_hand_evaluated(self):
        # k_c = 400/800 = 0.5 carried to a 600 W/m^2 clear-sky hour
        pred, fb = persistence_forecast(400.0, 800.0, 600.0)
        assert pred == 300.0 and not fb

    def test_guard_path(self):
        pred, fb = persistence_forecast(0.2, 0.5, 410.0)
        assert pred == 410.0 and fb

    def test_clearsky_scaling_equivariance(self, rng):
        for _ in range(100):
            i_h = float(rng.uniform(0, 900))
            ic_h = float(rng.uniform(2, 1000))
            ic_hp = float(rng.uniform(2, 1000))
            alpha = float(rng.uniform(0.1, 10))
            a, _ = persistence_forecast(i_h, ic_h, ic_hp)
            b, _ = persistence_forecast(i_h, alpha * ic_h, alpha * ic_hp)
            assert a == pytest.approx(b, rel=1e-12)

    def test_array_form_matches_scalar(self, rng):
        i_h = rng.uniform(0, 800, size=50)
        ic_h = rng.uniform(0, 900, size=50)
        ic_hp = rng.uniform(0, 900, size=50)
        pred, fb = persistence_forecast_arrays(i_h, ic_h, ic_hp)
        for k in range(50):
            p, f = persistence_forecast(i_h[k], ic_h[k], ic_hp[k])
            assert pred[k] == p and fb[k] == f


class TestLinearArx:
    def test_exact_recovery(self, rng):
        x = rng.normal(size=(200, 2))
        y = 2.0 * x[:, 0] - 3.0 * x[:, 1] + 5.0
        model = fit_linear_arx(x, y, 0.0)
        np.testing.assert_allclose(model.coefficients, [2.0, -3.0], atol=1e-8)
        assert model.intercept == pytest.approx(5.0, abs=1e-8)

    def test_constant_target(self, rng):
        x = rng.normal(size=(50, 3))
        model = fit_linear_arx(x, np.full(50, 4.25), 0.0)
        np.testing.assert_allclose(model.coefficients, 0.0, atol=1e-8)
        assert model.intercept == pytest.approx(4.25, abs=1e-10)

    def test_duplicate_columns_singular(self, rng):
        col = rng.normal(size=100)
        x = np.column_stack([col, col])
        with pytest.raises(SingularMatrixError, match="ridge"):
            fit_linear_arx(x, rng.normal(size=100), 0.0)

    def test_ridge_rescues_collinearity(self, rng):
        col = rng.normal(size=100)
        x = np.column_stack([col, col])
        model = fit_linear_arx(x, 3.0 * col + 1.0, 1e-6)
        pred = model.predict(x)
        np.testing.assert_allclose(pred, 3.0 * col + 1.0, atol=1e-3)

    def test_matches_pseudoinverse_oracle(self, rng):
        for _ in range(20):
            x = rng.normal(size=(20, 5))
            y = rng.normal(size=20)
            model = fit_linear_arx(x, y, 0.0)
            a = np.concatenate([x, np.ones((20, 1))], axis=1)
            beta = np.linalg.pinv(a) @ y
            np.testing.assert_allclose(model.coefficients, beta[:5], atol=1e-8)
            assert model.intercept == pytest.approx(beta[5], abs=1e-8)

    def test_minimum_sample_count(self, rng):
        x = rng.normal(size=(9, 2))
        with pytest.raises(ParameterError, match="at least 10"):
            fit_linear_arx(x, rng.normal(size=9), 0.0)


def brute_force_best_split(x, y, min_leaf=1):
    """Exhaustive single-split search oracle (all thresholds, direct SSE)."""
    best = (np.inf, None)
    xs = np.unique(x)
    for a, b in zip(xs[:-1], xs[1:]):
        thr = 0.5 * (a + b)
        left, right = y[x <= thr], y[x > thr]
        if len(left) < min_leaf or len(right) < min_leaf:
            continue
        sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        if sse < best[0] - 1e-12:
            best = (sse, thr)
    return best


class TestGbt:
    def test_null_ensemble_predicts_mean(self, rng):
        x = rng.normal(size=(60, 3))
        y = rng.normal(size=60) + 5.0
        model = fit_gbt(x, y, GbtParams(n_trees=0, min_leaf=5))
        np.testing.assert_allclose(model.predict(x), y.mean(), rtol=1e-12)

    def test_single_stump_finds_step(self, rng):
        x = np.sort(rng.uniform(0, 1, size=80))[:, None]
        y = np.where(x[:, 0] > 0.47, 10.0, 0.0)
        model = fit_gbt(x, y, GbtParams(n_trees=1, max_depth=1, shrinkage=1.0, min_leaf=1))
        pred = model.predict(x)
        assert float(np.mean((pred - y) ** 2)) < 1e-6
        _, thr = brute_force_best_split(x[:, 0], y)
        tree = model.trees[0]
        assert tree[0][0] == 0
        assert tree[1][0] == pytest.approx(thr, abs=1e-12)

    def test_stump_matches_bruteforce_on_random_data(self, rng):
        for _ in range(25):
            n = int(rng.integers(10, 120))
            x = rng.normal(size=(n, 1))
            y = rng.normal(size=n)
            model = fit_gbt(x, y, GbtParams(n_trees=1, max_depth=1, shrinkage=1.0, min_leaf=1))
            sse_oracle, thr_oracle = brute_force_best_split(x[:, 0], y)
            tree = model.trees[0]
            if tree[0][0] < 0:  # no split improved
                assert thr_oracle is None or sse_oracle >= ((y - y.mean()) ** 2).sum() - 1e-9
                continue
            pred = model.predict(x)
            sse_model = float(((pred - y) ** 2).sum())
            assert sse_model == pytest.approx(sse_oracle, rel=1e-9, abs=1e-9)

    def test_boosting_dominates_single_tree(self, rng):
        x = rng.normal(size=(300, 4))
        y = np.sin(x[:, 0]) + 0.5 * x[:, 1] ** 2 + rng.normal(scale=0.1, size=300)
        one = fit_gbt(x, y, GbtParams(n_trees=1, max_depth=3, shrinkage=1.0, min_leaf=5))
        many = fit_gbt(x, y, GbtParams(n_trees=40, max_depth=3, shrinkage=1.0, min_leaf=5))
        mse_one = float(np.mean((one.predict(x) - y) ** 2))
        mse_many = float(np.mean((many.predict(x) - y) ** 2))
        assert mse_many <= mse_one + 1e-12

    def test_training_mse_non_increasing(self, rng):
        x = rng.normal(size=(250, 3))
        y = x[:, 0] * 2 + np.abs(x[:, 1]) + rng.normal(scale=0.2, size=250)
        model = fit_gbt(x, y, GbtParams(n_trees=60, max_depth=2, shrinkage=0.3, min_leaf=5))
        mses = [float(np.mean((p - y) ** 2)) for p in model.staged_predict(x)]
        assert all(b <= a + 1e-12 for a, b in zip(mses, mses[1:]))

    def test_staged_prediction_consistency(self, rng):
        x = rng.normal(size=(150, 3))
        y = rng.normal(size=150)
        model = fit_gbt(x, y, GbtParams(n_trees=20, max_depth=2, shrinkage=0.25, min_leaf=5))
        for k in range(1, model.n_trees + 1):
            prev = model.predict(x, k - 1)
            step = model.shrinkage * tree_predict(model.trees[k - 1], x)
            np.testing.assert_array_equal(model.predict(x, k), prev + step)

    def test_parameter_validation(self, rng):
        with pytest.raises(ParameterError):
            GbtParams(max_depth=0)
        with pytest.raises(ParameterError):
            GbtParams(shrinkage=0.0)
        x = rng.normal(size=(10, 2))
        with pytest.raises(ParameterError, match="at least"):
            fit_gbt(x, rng.normal(size=10), GbtParams(min_leaf=20))


@pytest.mark.skipif(_treebuild_cy is None, reason="compiled kernel unavailable")
class TestKernelEquivalence:
    def test_trees_bit_identical(self, rng):
        for trial in range(80):
            n = int(rng.integers(4, 300))
            d = int(rng.integers(1, 7))
            x = rng.normal(size=(n, d))
            if trial % 3 == 0:
                x = np.round(x, 1)  # heavy ties
            r = rng.normal(size=n)
            depth = int(rng.integers(1, 5))
            min_leaf = int(rng.integers(1, 6))
            a = treebuild_np.grow_tree(x, r, depth, min_leaf)
            b = _treebuild_cy.grow_tree(x, r, depth, min_leaf)
            for u, v in zip(a, b):
                np.testing.assert_array_equal(u, v)

    def test_models_bit_identical(self, rng, monkeypatch):
        import ghicast._core as core

        x = rng.normal(size=(220, 5))
        y = np.sin(x[:, 0]) + rng.normal(scale=0.3, size=220)
        params = GbtParams(n_trees=25, max_depth=3, shrinkage=0.2, min_leaf=8)
        monkeypatch.setattr(core, "grow_tree", _treebuild_cy.grow_tree)
        m_cy = fit_gbt(x, y, params)
        monkeypatch.setattr(core, "grow_tree", treebuild_np.grow_tree)
        m_np = fit_gbt(x, y, params)
        np.testing.assert_array_equal(m_cy.predict(x), m_np.predict(x))
        for ta, tb in zip(m_cy.trees, m_np.trees):
            for u, v in zip(ta, tb):
                np.testing.assert_array_equal(u, v)
