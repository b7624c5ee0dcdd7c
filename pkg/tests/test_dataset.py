import numpy as np
import pytest

from ghicast.data import (
    SiteSeries,
    drop_incomplete,
    load_sites,
    partition_sites,
    split_time,
    write_sites,
)
from ghicast.errors import IntegrityError, ParameterError, ParseError, UnknownSiteError
from ghicast.solargeo import elevation_filter
from ghicast.synth import SynthConfig, gen_dataset

OBS_HEADER = "site_id,timestamp,lat,lon,ghi_ground,ghi_sat,temp,humidity"


def _obs_csv(tmp_path, rows, name="obs.csv"):
    path = tmp_path / name
    path.write_text(OBS_HEADER + "\n" + "\n".join(rows) + "\n")
    return path


def _row(sid, ts, g="100", s="110", lat="52.0", lon="5.0"):
    return f"{sid},{ts},{lat},{lon},{g},{s},12.5,70"


class TestLoad:
    def test_two_sites_48_rows(self, tmp_path):
        rows = []
        for sid in ("a1", "b2"):
            for h in range(48):
                d, hh = divmod(h, 24)
                rows.append(_row(sid, f"2015-06-0{1 + d}T{hh:02d}:00:00Z"))
        out = load_sites([_obs_csv(tmp_path, rows)])
        assert sorted(out) == ["a1", "b2"]
        assert out["a1"].n == 48 and out["b2"].n == 48
        assert not np.isnan(out["a1"].clearsky_ghi).any()

    def test_gap_marks_missing(self, tmp_path):
        hours = [0, 1, 2, 6, 7]  # 3h hole
        rows = [_row("a1", f"2015-06-01T{h:02d}:00:00Z") for h in hours]
        series = load_sites([_obs_csv(tmp_path, rows)])["a1"]
        assert series.n == 8
        assert np.isnan(series.ground_ghi[[3, 4, 5]]).all()
        assert not np.isnan(series.ground_ghi[[0, 1, 2, 6, 7]]).any()

    def test_timestamp_regression_rejected(self, tmp_path):
        rows = [
            _row("a1", "2015-06-01T05:00:00Z"),
            _row("a1", "2015-06-01T03:00:00Z"),
        ]
        with pytest.raises(IntegrityError, match="regress"):
            load_sites([_obs_csv(tmp_path, rows)])

    def test_duplicate_timestamp_rejected(self, tmp_path):
        rows = [_row("a1", "2015-06-01T05:00:00Z")] * 2
        with pytest.raises(IntegrityError, match="duplicate"):
            load_sites([_obs_csv(tmp_path, rows)])

    def test_bad_value_names_file_and_line(self, tmp_path):
        rows = [_row("a1", "2015-06-01T05:00:00Z", g="oops")]
        path = _obs_csv(tmp_path, rows)
        with pytest.raises(ParseError, match=rf"{path.name}:2"):
            load_sites([path])

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("site,when,x\n")
        with pytest.raises(ParseError, match="header"):
            load_sites([path])

    def test_off_hour_timestamp_rejected(self, tmp_path):
        rows = [_row("a1", "2015-06-01T05:30:00Z")]
        with pytest.raises(ParseError, match="not on the hour"):
            load_sites([_obs_csv(tmp_path, rows)])

    def test_row_permutations_canonicalized(self, tmp_path):
        a = [_row("a1", f"2015-06-01T{h:02d}:00:00Z", g=str(50 + h)) for h in range(6)]
        b = [_row("b2", f"2015-06-01T{h:02d}:00:00Z", g=str(80 + h)) for h in range(6)]
        interleaved = [r for pair in zip(a, b) for r in pair]
        one = load_sites([_obs_csv(tmp_path, interleaved, "one.csv")])
        # same rows, site blocks in opposite order across two files
        two = load_sites(
            [_obs_csv(tmp_path, b, "f1.csv"), _obs_csv(tmp_path, a, "f2.csv")]
        )
        for sid in ("a1", "b2"):
            assert np.array_equal(one[sid].epochs, two[sid].epochs)
            assert np.array_equal(one[sid].ground_ghi, two[sid].ground_ghi)


class TestRoundTrip:
    def test_write_then_load_matches(self, tmp_path):
        cfg = SynthConfig(n_sites=2, start="2015-03-01", end="2015-03-20", seed=5)
        series = gen_dataset(cfg)
        obs, nwp = tmp_path / "obs.csv", tmp_path / "nwp.csv"
        write_sites(series, obs, nwp)
        back = load_sites([obs], [nwp], turbidity=cfg.turbidity)
        assert sorted(back) == sorted(series)
        for sid, orig in series.items():
            got = back[sid]
            assert np.array_equal(orig.epochs, got.epochs)
            for name in ("ground_ghi", "sat_ghi", "temp", "humidity"):
                a, b = getattr(orig, name), getattr(got, name)
                assert np.array_equal(np.isnan(a), np.isnan(b))
                m = ~np.isnan(a)
                assert np.allclose(a[m], b[m], rtol=1e-11, atol=1e-11)
            # clear sky recomputed from the same location/turbidity: exact
            assert np.allclose(orig.clearsky_ghi, got.clearsky_ghi, rtol=1e-11)
            assert np.array_equal(orig.nwp.issue_epochs, got.nwp.issue_epochs)
            assert np.allclose(orig.nwp.ghi, got.nwp.ghi, rtol=1e-11)


def _grid_series(n_days=30, start="2015-06-01"):
    cfg = SynthConfig(n_sites=1, start=start, end="2015-06-30", seed=3, missing_rate=0.0)
    return gen_dataset(cfg)["s00"]


class TestSplit:
    def test_paper_ratio_on_four_years(self):
        cfg = SynthConfig(n_sites=1, seed=2, missing_rate=0.0)
        series = gen_dataset(cfg)["s00"]
        split = split_time(
            series,
            (("2014-01-01", "2015-12-31"), ("2016-01-01", "2016-12-31"), ("2017-01-01", "2017-12-31")),
        )
        assert len(split.train) == 730 * 24
        assert len(split.validation) == 366 * 24  # leap year
        assert len(split.test) == 365 * 24
        ratio = len(split.train) / len(split.validation)
        assert 1.9 <= ratio <= 2.1

    def test_empty_ranges(self):
        series = _grid_series()
        split = split_time(
            series,
            (("2013-01-01", "2013-01-02"), ("2013-02-01", "2013-02-02"), ("2013-03-01", "2013-03-02")),
        )
        assert len(split.train) == len(split.validation) == len(split.test) == 0

    def test_single_day_ranges(self):
        series = _grid_series()
        split = split_time(
            series,
            (("2015-06-02", "2015-06-02"), ("2015-06-05", "2015-06-05"), ("2015-06-09", "2015-06-09")),
        )
        assert len(split.train) == 24 and len(split.validation) == 24 and len(split.test) == 24
        assert {e // 86400 for e in series.epochs[split.train]} == {
            series.epochs[0] // 86400 + 1
        }

    def test_overlap_rejected(self):
        series = _grid_series()
        with pytest.raises(ParameterError):
            split_time(
                series,
                (("2015-06-01", "2015-06-10"), ("2015-06-10", "2015-06-20"), ("2015-06-21", "2015-06-30")),
            )

    def test_slots_assigned_once(self):
        series = _grid_series()
        split = split_time(
            series,
            (("2015-06-01", "2015-06-10"), ("2015-06-11", "2015-06-20"), ("2015-06-21", "2015-06-30")),
        )
        all_idx = np.concatenate([split.train, split.validation, split.test])
        assert len(all_idx) == len(set(all_idx.tolist())) == series.n


class TestPartition:
    def test_five_of_thirty(self):
        ids = [f"s{i:02d}" for i in range(30)]
        part = partition_sites(ids, ids[:5])
        assert len(part.eval_sites) == 25
        assert set(part.train_sites) | set(part.eval_sites) == set(ids)
        assert not set(part.train_sites) & set(part.eval_sites)

    def test_all_train_empty_eval(self):
        ids = ["a", "b"]
        part = partition_sites(ids, ids)
        assert part.eval_sites == ()

    def test_unknown_id(self):
        with pytest.raises(UnknownSiteError):
            partition_sites(["a", "b"], ["a", "nope"])


class TestDropIncomplete:
    def test_identity_when_complete(self):
        series = _grid_series()
        assert drop_incomplete(series, ["ground", "sat"]).all()

    def test_single_missing_slot(self):
        series = _grid_series()
        sat = series.sat_ghi.copy()
        sat[100] = np.nan
        poked = SiteSeries(
            site_id=series.site_id,
            location=series.location,
            epochs=series.epochs,
            ground_ghi=series.ground_ghi,
            sat_ghi=sat,
            temp=series.temp,
            humidity=series.humidity,
            clearsky_ghi=series.clearsky_ghi,
            nwp=series.nwp,
        )
        mask = drop_incomplete(poked, ["ground", "sat"])
        assert not mask[100]
        assert mask.sum() == poked.n - 1

    def test_all_missing_channel_empty_mask(self):
        series = _grid_series()
        poked = SiteSeries(
            site_id=series.site_id,
            location=series.location,
            epochs=series.epochs,
            ground_ghi=series.ground_ghi,
            sat_ghi=np.full(series.n, np.nan),
            temp=series.temp,
            humidity=series.humidity,
            clearsky_ghi=series.clearsky_ghi,
            nwp=series.nwp,
        )
        assert not drop_incomplete(poked, ["sat"]).any()

    def test_filter_composition_commutes(self):
        series = _grid_series()
        ground = series.ground_ghi.copy()
        ground[50:60] = np.nan
        poked = SiteSeries(
            site_id=series.site_id,
            location=series.location,
            epochs=series.epochs,
            ground_ghi=ground,
            sat_ghi=series.sat_ghi,
            temp=series.temp,
            humidity=series.humidity,
            clearsky_ghi=series.clearsky_ghi,
            nwp=series.nwp,
        )
        elev = elevation_filter(poked, 3.0)
        comp = drop_incomplete(poked, ["ground"])
        assert np.array_equal(elev & comp, comp & elev)


class TestNwpLookup:
    def test_latest_issuance_with_daily_file(self, tmp_path):
        obs_rows = [_row("a1", f"2015-06-01T{h:02d}:00:00Z") for h in range(24)]
        nwp_lines = ["site_id,issue_time,horizon_h,ghi_nwp,temp_nwp,humidity_nwp"]
        for h in range(1, 7):
            nwp_lines.append(f"a1,2015-06-01T07:00:00Z,{h},{100 + h},15,70")
        obs = _obs_csv(tmp_path, obs_rows)
        nwp = tmp_path / "nwp.csv"
        nwp.write_text("\n".join(nwp_lines) + "\n")
        series = load_sites([obs], [nwp])["a1"]
        issue = series.epochs[7]
        # at 08:00, target 09:00 -> horizon 2 of the 07:00 issuance
        assert series.nwp.lookup(issue + 3600, issue + 2 * 3600) == 102.0
        # at 12:00, target 18:00 is beyond the 6h window -> unavailable
        assert np.isnan(series.nwp.lookup(issue + 5 * 3600, issue + 11 * 3600))

    def test_incomplete_issuance_rejected(self, tmp_path):
        obs = _obs_csv(tmp_path, [_row("a1", "2015-06-01T00:00:00Z")])
        nwp = tmp_path / "nwp.csv"
        nwp.write_text(
            "site_id,issue_time,horizon_h,ghi_nwp,temp_nwp,humidity_nwp\n"
            "a1,2015-06-01T07:00:00Z,1,100,15,70\n"
        )
        with pytest.raises(IntegrityError, match="lacks horizons"):
            load_sites([obs], [nwp])
