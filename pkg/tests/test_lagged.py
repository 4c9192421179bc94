import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aqiforecast.ingest import DailySeries
from aqiforecast.lagged import (
    ScalerKind,
    apply_scaler,
    build_lag_dataset,
    chrono_split,
    fit_scaler,
    invert_scaler,
    lag_filename,
    read_lag_dataset,
    write_lag_dataset,
)

# First ten PM2.5 rows of the published sample (concentration, daily AQI).
TABLE3_CONC = [6.10, 4.60, 9.60, 5.30, 5.90, 7.10, 7.50, 14.47, 4.20, 5.60]
TABLE3_AQI = [34.00, 26.00, 52.00, 29.00, 32.67, 39.00, 42.00, 61.00, 23.00, 31.00]
TABLE3_L1 = [26.00, 52.00, 29.00, 32.67, 39.00, 42.00, 61.00, 23.00, 31.00]
TABLE3_L7 = [61.00, 23.00, 31.00]


def _series(aqi, conc=None, start="2022-01-01") -> DailySeries:
    aqi = np.asarray(aqi, dtype=float)
    conc = aqi / 5 if conc is None else np.asarray(conc, dtype=float)
    return DailySeries("PM25", np.datetime64(start) + np.arange(aqi.size), conc, aqi)


def test_table3_lag1_and_lag7_targets():
    s = _series(TABLE3_AQI, TABLE3_CONC)
    l1 = build_lag_dataset(s, 1)
    assert (l1.x_conc[0], l1.x_aqi[0], l1.y[0]) == (6.10, 34.00, 26.00)
    assert l1.y.tolist() == TABLE3_L1
    assert build_lag_dataset(s, 7).y.tolist() == TABLE3_L7


def test_lag30_first_target():
    aqi = np.full(40, 50.0)
    aqi[0], aqi[30] = 34.0, 19.0
    ds = build_lag_dataset(_series(aqi), 30)
    assert ds.y[0] == 19.0 and len(ds) == 10


@given(st.integers(2, 80), st.data())
def test_alignment_and_row_count(n, data):
    lag = data.draw(st.integers(1, n - 1))
    aqi = np.arange(n, dtype=float) * 3 + 1
    s = _series(aqi)
    ds = build_lag_dataset(s, lag)
    assert len(ds) == n - lag
    i = data.draw(st.integers(0, n - lag - 1))
    assert ds.y[i] == s.aqi[i + lag]
    assert ds.x_aqi[i] == s.aqi[i] and ds.dates[i] == s.dates[i]
    assert ds.target_dates[i] == s.dates[i + lag]


def test_lag_is_positional_across_gaps():
    dates = np.array(["2022-01-01", "2022-01-02", "2022-01-05"], dtype="datetime64[D]")
    s = DailySeries("PM25", dates, [1.0, 2.0, 3.0], [10.0, 20.0, 30.0])
    ds = build_lag_dataset(s, 1)
    assert ds.y.tolist() == [20.0, 30.0]
    assert str(ds.target_dates[1]) == "2022-01-05"


@pytest.mark.parametrize("lag", [0, -1, 5, 6])
def test_bad_lags(lag):
    with pytest.raises(ValueError):
        build_lag_dataset(_series(np.arange(5.0)), lag)


def test_split_n10():
    ds = build_lag_dataset(_series(np.arange(11.0)), 1)
    sp = chrono_split(ds, 0.8)
    assert sp.train.y.tolist() == list(range(1, 9)) and sp.test.y.tolist() == [9.0, 10.0]


def test_split_sizes_for_1093_rows():
    ds = build_lag_dataset(_series(np.arange(1094.0)), 1)
    sp = chrono_split(ds, 0.8)
    assert (len(sp.train), len(sp.test)) == (math.floor(0.8 * 1093), 1093 - math.floor(0.8 * 1093))
    assert (len(sp.train), len(sp.test)) == (874, 219)


def test_split_alpha_099():
    sp = chrono_split(build_lag_dataset(_series(np.arange(11.0)), 1), 0.99)
    assert (len(sp.train), len(sp.test)) == (9, 1)


@pytest.mark.parametrize("alpha,n", [(0.05, 10), (0.0, 10), (1.0, 10), (0.5, 1)])
def test_degenerate_splits(alpha, n):
    ds = build_lag_dataset(_series(np.arange(n + 1.0)), 1)
    with pytest.raises(ValueError):
        chrono_split(ds, alpha)


@given(st.integers(2, 300), st.floats(0.01, 0.99))
def test_split_is_an_ordered_partition(n, alpha):
    ds = build_lag_dataset(_series(np.arange(n + 1.0)), 1)
    cut = math.floor(alpha * n)
    assume(0 < cut < n)
    sp = chrono_split(ds, alpha)
    assert len(sp.train) == cut
    assert sp.train.dates.max() < sp.test.dates.min()
    assert np.array_equal(sp.full.y, ds.y)


def test_standard_scaler_example():
    sc = fit_scaler(np.array([0.0, 10.0]), "standard")
    assert (sc.center[0], sc.spread[0]) == (5.0, 5.0)
    assert sc.transform(np.array([10.0]))[0] == 1.0


def test_minmax_midpoint():
    sc = fit_scaler(np.array([2.0, 4.0]), "minmax")
    assert sc.transform(np.array([3.0]))[0] == 0.0
    assert sc.transform(np.array([2.0, 4.0])).tolist() == [-1.0, 1.0]


@pytest.mark.parametrize("kind,msg", [("standard", "zero-variance"), ("minmax", "constant")])
def test_degenerate_column_is_named(kind, msg):
    x = np.column_stack([np.arange(5.0), np.ones(5)])
    with pytest.raises(ValueError, match=f"{msg}.*X_AQI"):
        fit_scaler(x, kind, ("X_CONC", "X_AQI"))


@given(
    arrays(np.float64, (40, 2), elements=st.floats(-1e3, 1e3)),
    st.sampled_from(list(ScalerKind)),
)
def test_scaler_round_trip(train, kind):
    assume(np.all(np.ptp(train, axis=0) > 1e-3))
    sc = fit_scaler(train, kind)
    x = np.random.default_rng(0).uniform(-2e3, 2e3, size=(1000, 2))
    back = invert_scaler(sc, apply_scaler(sc, x))
    np.testing.assert_allclose(back, x, rtol=1e-9, atol=1e-9 * 2e3)


@given(arrays(np.float64, (30, 2), elements=st.floats(-100, 100)))
def test_standard_scaler_matches_oracle(train):
    assume(np.all(np.std(train, axis=0) > 1e-3))
    sc = fit_scaler(train, "standard")
    for j in range(2):
        col = train[:, j].tolist()
        mean = math.fsum(col) / len(col)
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in col) / len(col))
        assert sc.center[j] == pytest.approx(mean, rel=1e-12, abs=1e-12)
        assert sc.spread[j] == pytest.approx(std, rel=1e-9)


def test_scaler_ignores_test_rows(pm25_split):
    train, test = pm25_split.train, pm25_split.test
    perturbed = pm25_split.full.with_values(
        x_conc=np.concatenate([train.x_conc, test.x_conc * 10 + 100]))
    again = chrono_split(perturbed, pm25_split.alpha)
    a = fit_scaler(train.features, "standard")
    b = fit_scaler(again.train.features, "standard")
    assert a.center.tobytes() == b.center.tobytes() and a.spread.tobytes() == b.spread.tobytes()
    # the perturbation is visible to a scaler that (wrongly) saw every row
    assert not np.allclose(fit_scaler(perturbed.features, "standard").center, a.center)


def test_scaler_dict_round_trip():
    sc = fit_scaler(np.array([[1.0, 5.0], [3.0, 9.0]]), "minmax", ("a", "b"), (0.0, 1.0))
    from aqiforecast.lagged import Scaler

    back = Scaler.from_dict(sc.to_dict())
    assert back.kind is sc.kind and back.columns == sc.columns
    assert back.center.tobytes() == sc.center.tobytes() and back.feature_range == (0.0, 1.0)


def test_lag_file_round_trip(tmp_path, pm25_series):
    ds = build_lag_dataset(pm25_series, 7)
    path = tmp_path / lag_filename("PM25", 7)
    write_lag_dataset(ds, path)
    header = path.read_text().splitlines()[0]
    assert header.startswith("DATE,X_CONC,X_AQI,Y_AQI_LAG_7")
    back = read_lag_dataset(path, "PM25")
    for name in ("dates", "target_dates", "x_conc", "x_aqi", "y"):
        assert getattr(back, name).tobytes() == getattr(ds, name).tobytes()
    assert back.lag == 7


def test_lag_file_without_target_dates(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("DATE,X_CONC,X_AQI,Y_AQI_LAG_1\n2022-01-01,6.1,34,26\n2022-01-02,4.6,26,52\n")
    ds = read_lag_dataset(path, "PM25")
    assert ds.target_dates.astype(str).tolist() == ["2022-01-02", "2022-01-03"]


def test_lag_file_bad_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("DATE,A,B\n")
    with pytest.raises(ValueError, match="not a lag dataset"):
        read_lag_dataset(path, "PM25")
