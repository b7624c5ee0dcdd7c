import numpy as np
import pytest

from ghicast.data import N_HORIZONS, SiteSeries
from ghicast.errors import ParameterError
from ghicast.features import (
    FeatureConfig,
    build_samples,
    concat_samples,
    fit_norm_stats,
    horizon_view,
    normalize,
    nwp_matrix,
)
from ghicast.solargeo import elevation_filter


def _replace_channel(series, **channels):
    fields = dict(
        site_id=series.site_id,
        location=series.location,
        epochs=series.epochs,
        ground_ghi=series.ground_ghi,
        sat_ghi=series.sat_ghi,
        temp=series.temp,
        humidity=series.humidity,
        clearsky_ghi=series.clearsky_ghi,
        nwp=series.nwp,
    )
    fields.update(channels)
    return SiteSeries(**fields)


@pytest.fixture(scope="module")
def site(small_series):
    return small_series["s00"]


@pytest.fixture(scope="module")
def retained(site):
    return elevation_filter(site, 3.0)


class TestFeatureConfig:
    def test_paper_optimal_dim_22(self):
        cfg = FeatureConfig.paper_optimal()
        assert cfg.dim == 22
        assert cfg.sat_lags_current == 4 and cfg.sat_daily_lag
        names = cfg.feature_names
        assert names[:6] == [f"nwp_p{p}" for p in range(1, 7)]
        assert names[6:12] == [f"clearsky_p{p}" for p in range(1, 7)]
        assert names[12:16] == [f"sat_lag{k}" for k in range(4)]
        assert names[16:] == [f"sat_d24_p{p}" for p in range(1, 7)]

    def test_clearsky_only_dim_6(self):
        cfg = FeatureConfig(
            use_nwp=False, use_clearsky=True, use_sat=False, sat_daily_lag=False
        )
        assert cfg.dim == 6

    def test_needs_one_flag(self):
        with pytest.raises(ParameterError):
            FeatureConfig(use_nwp=False, use_clearsky=False, use_sat=False)

    def test_lag_count_range(self):
        with pytest.raises(ParameterError):
            FeatureConfig(sat_lags_current=0)
        with pytest.raises(ParameterError):
            FeatureConfig(sat_lags_current=7)

    def test_full_pool_dim(self):
        cfg = FeatureConfig(
            use_temp_hist=True, use_humid_hist=True, use_temp_fc=True, use_humid_fc=True
        )
        # 6 nwp + 6 cs + 4 lags + 6 daily + 4 temp + 4 humid + 6 tfc + 6 hfc
        assert cfg.dim == 42


class TestBuildSamples:
    def test_bruteforce_sample_count(self, site, retained):
        cfg = FeatureConfig.paper_optimal()
        samples = build_samples(site, cfg, retained)
        # independent slot scan over the raw series
        nwp = nwp_matrix(site, "ghi")
        expected = 0
        for i in range(site.n):
            if not retained[i]:
                continue
            if i + N_HORIZONS >= site.n or i - (cfg.sat_lags_current - 1) < 0:
                continue
            ok = True
            for p in range(1, N_HORIZONS + 1):
                if not retained[i + p] or np.isnan(site.ground_ghi[i + p]):
                    ok = False
                if i + p - 24 < 0 or np.isnan(site.sat_ghi[i + p - 24]):
                    ok = False
            for k in range(cfg.sat_lags_current):
                if np.isnan(site.sat_ghi[i - k]):
                    ok = False
            if np.isnan(nwp[i]).any():
                ok = False
            expected += ok
        assert samples.n == expected

    def test_feature_values_match_direct_indexing(self, site, retained):
        cfg = FeatureConfig.paper_optimal()
        samples = build_samples(site, cfg, retained)
        j = samples.n // 2
        i = site.slot_index(int(samples.issue_epochs[j]))
        x = samples.x[j]
        nwp = nwp_matrix(site, "ghi")
        np.testing.assert_array_equal(x[:6], nwp[i])
        np.testing.assert_array_equal(x[6:12], site.clearsky_ghi[i + 1 : i + 7])
        np.testing.assert_array_equal(x[12:16], site.sat_ghi[[i, i - 1, i - 2, i - 3]])
        np.testing.assert_array_equal(
            x[16:], site.sat_ghi[[i + p - 24 for p in range(1, 7)]]
        )
        np.testing.assert_array_equal(samples.y[j], site.ground_ghi[i + 1 : i + 7])

    def test_missing_lag_drops_sample(self, site, retained):
        cfg = FeatureConfig.paper_optimal()
        base = build_samples(site, cfg, retained)
        i = site.slot_index(int(base.issue_epochs[10]))
        sat = site.sat_ghi.copy()
        sat[i - 3] = np.nan  # kill lag 3 of that issue hour
        poked = _replace_channel(site, sat_ghi=sat)
        out = build_samples(poked, cfg, retained)
        assert int(base.issue_epochs[10]) not in set(out.issue_epochs.tolist())
        assert out.n < base.n

    def test_bit_identical_builds(self, site, retained):
        cfg = FeatureConfig.paper_optimal()
        a = build_samples(site, cfg, retained)
        b = build_samples(site, cfg, retained)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
        assert np.array_equal(a.issue_epochs, b.issue_epochs)

    def test_no_leakage_from_future_inputs(self, site, retained):
        cfg = FeatureConfig.paper_optimal()
        base = build_samples(site, cfg, retained)
        j = base.n // 3
        epoch = int(base.issue_epochs[j])
        i = site.slot_index(epoch)
        # poison satellite values strictly after the issue hour
        sat = site.sat_ghi.copy()
        sat[i + 1 :] = sat[i + 1 :] * 3.7 + 11.0
        out = build_samples(_replace_channel(site, sat_ghi=sat), cfg, retained)
        row = np.nonzero(out.issue_epochs == epoch)[0]
        assert len(row) == 1
        np.testing.assert_array_equal(out.x[row[0]], base.x[j])

    def test_ground_source_for_local_models(self, site, retained):
        cfg = FeatureConfig.local_default()
        samples = build_samples(site, cfg, retained)
        i = site.slot_index(int(samples.issue_epochs[0]))
        lag_cols = [samples.feature_names.index(f"ground_lag{k}") for k in range(2)]
        np.testing.assert_array_equal(
            samples.x[0, lag_cols], site.ground_ghi[[i, i - 1]]
        )


class TestNormalize:
    def test_train_stats_standardize(self, site, retained):
        samples = build_samples(site, FeatureConfig.paper_optimal(), retained)
        stats = fit_norm_stats(samples)
        normed = normalize(samples, stats)
        keep = ~stats.passthrough
        assert np.allclose(normed.x[:, keep].mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(normed.x[:, keep].std(axis=0), 1.0, atol=1e-9)
        np.testing.assert_array_equal(normed.y, samples.y)  # targets untouched

    def test_direct_arithmetic(self):
        from dataclasses import replace

        from ghicast.features import SampleSet

        cfg = FeatureConfig(use_nwp=False, use_sat=False, sat_daily_lag=False)
        x = np.array([[100.0], [150.0]] * 10)
        ss = SampleSet(
            x=x, y=np.zeros((20, 6)), site_ids=np.array(["a"] * 20),
            issue_epochs=np.arange(20, dtype=np.int64), cfg=replace(cfg),
        )
        stats = fit_norm_stats(ss)
        stats = type(stats)(mean=np.array([100.0]), std=np.array([50.0]),
                            passthrough=np.array([False]))
        out = normalize(ss, stats)
        assert out.x[1, 0] == 1.0
        assert out.x[0, 0] == 0.0

    def test_constant_column_passthrough_with_warning(self):
        from ghicast.features import SampleSet

        cfg = FeatureConfig(use_nwp=False, use_sat=False, sat_daily_lag=False)
        x = np.column_stack([np.full(20, 7.0), np.arange(20.0)])
        cfg2 = FeatureConfig(use_nwp=True, use_sat=False, sat_daily_lag=False)
        x6 = np.column_stack([np.full(20, 7.0)] * 6 + [np.arange(20.0)] * 6)
        ss = SampleSet(
            x=x6, y=np.zeros((20, 6)), site_ids=np.array(["a"] * 20),
            issue_epochs=np.arange(20, dtype=np.int64), cfg=cfg2,
        )
        with pytest.warns(UserWarning, match="zero-variance"):
            stats = fit_norm_stats(ss)
        out = normalize(ss, stats)
        np.testing.assert_array_equal(out.x[:, 0], x6[:, 0])

    def test_double_normalization_guard(self, site, retained):
        samples = build_samples(site, FeatureConfig.paper_optimal(), retained)
        stats = fit_norm_stats(samples)
        once = normalize(samples, stats)
        with pytest.raises(ParameterError, match="already normalized"):
            normalize(once, stats)


class TestHorizonView:
    def test_columns(self, site, retained):
        cfg = FeatureConfig.local_default()
        samples = build_samples(site, cfg, retained)
        for p in (1, 4, 6):
            x_p, y_p = horizon_view(samples, p)
            assert x_p.shape == (samples.n, 5)  # nwp_p, cs_p, 2 lags, daily_p
            np.testing.assert_array_equal(y_p, samples.y[:, p - 1])
            names = samples.feature_names
            np.testing.assert_array_equal(
                x_p[:, 0], samples.x[:, names.index(f"nwp_p{p}")]
            )
            np.testing.assert_array_equal(
                x_p[:, 1], samples.x[:, names.index(f"clearsky_p{p}")]
            )
            np.testing.assert_array_equal(
                x_p[:, 4], samples.x[:, names.index(f"ground_d24_p{p}")]
            )

    def test_bad_horizon(self, site, retained):
        samples = build_samples(site, FeatureConfig.local_default(), retained)
        with pytest.raises(ParameterError):
            horizon_view(samples, 7)


def test_concat_requires_same_config(site, retained):
    a = build_samples(site, FeatureConfig.paper_optimal(), retained)
    b = build_samples(site, FeatureConfig.local_default(), retained)
    with pytest.raises(ParameterError):
        concat_samples([a, b])
    both = concat_samples([a, a])
    assert both.n == 2 * a.n
