import io
import json
from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airstat.distfit import chi_square_gof, fit_exponential
from airstat.errors import ConfigError
from airstat.intervals import extract_intervals, hourly_window, intervals_from_minutes
from airstat.profile import StationaryPeriod
from airstat.records import FlightRecord, RouteKey
from airstat.streamgen import gen_homogeneous_poisson

R = RouteKey("NINTA", "OPOKA")


def rec(ts, route=R):
    return FlightRecord(ts.date(), route.entry_point, route.exit_point, ts)


def test_single_day_example():
    recs = [rec(datetime(2005, 6, 1, 13, 10)), rec(datetime(2005, 6, 1, 13, 30)),
            rec(datetime(2005, 6, 1, 14, 0))]
    s = extract_intervals(recs, R, hourly_window(13, 17))
    assert s.intervals.tolist() == [20.0, 30.0]
    assert s.n_boundary_dropped == 2 and s.n_zero_dropped == 0
    assert s.boundary_spans == [(10.0, 240.0)]
    assert s.window_minutes == 300


def test_no_cross_day_intervals():
    recs = [rec(datetime(2005, 6, 1, 17, 50)), rec(datetime(2005, 6, 2, 13, 5)),
            rec(datetime(2005, 6, 2, 13, 35))]
    s = extract_intervals(recs, R, hourly_window(13, 17))
    assert s.intervals.tolist() == [30.0]
    assert len(s.windows) == 2 and s.n_boundary_dropped == 4


def test_outside_window_ignored_and_zero_dropped():
    recs = [rec(datetime(2005, 6, 1, 12, 59)), rec(datetime(2005, 6, 1, 13, 0)),
            rec(datetime(2005, 6, 1, 13, 0)), rec(datetime(2005, 6, 1, 13, 45)),
            rec(datetime(2005, 6, 1, 18, 0))]
    s = extract_intervals(recs, R, hourly_window(13, 17))
    assert s.intervals.tolist() == [45.0]
    assert s.n_zero_dropped == 1
    assert s.boundary_spans == [(0.0, 255.0)]


def test_wrapping_window_follows_the_night():
    # window 22:00-01:59 opened on June 1
    recs = [rec(datetime(2005, 6, 1, 23, 0)), rec(datetime(2005, 6, 2, 0, 30)),
            rec(datetime(2005, 6, 2, 2, 0))]
    s = extract_intervals(recs, R, hourly_window(22, 1))
    assert s.intervals.tolist() == [90.0]
    assert s.windows[0].day.isoformat() == "2005-06-01"
    assert s.boundary_spans == [(60.0, 90.0)]


def test_monthly_period_rejected():
    p = StationaryPeriod("monthly", 0, 1, 1.0, 10, 1.0, 100.0)
    with pytest.raises(ConfigError):
        extract_intervals([], R, p)


def test_other_routes_do_not_matter():
    base = [rec(datetime(2005, 6, 1, 14, m)) for m in (0, 7, 31, 50)]
    noise = [rec(datetime(2005, 6, 1, 14, m), RouteKey("X", "Y")) for m in (3, 20, 40)]
    a = extract_intervals(base, R, hourly_window(14, 15))
    b = extract_intervals(sorted(base + noise, key=lambda r: r.entry_time), R, hourly_window(14, 15))
    assert a.intervals.tolist() == b.intervals.tolist() == [7.0, 24.0, 19.0]
    assert a.boundary_spans == b.boundary_spans


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 3 * 1440 - 1), max_size=80),
    st.integers(0, 23),
    st.integers(0, 23),
)
def test_conservation_per_window(minutes, h0, h1):
    t0 = datetime(2005, 3, 1)
    base = int(np.datetime64(t0, "m").astype(np.int64))
    times = np.sort(np.array(minutes, dtype=np.float64)) + base
    s = intervals_from_minutes(times, R, hourly_window(h0, h1))
    total_retained = 0.0
    for w in s.windows:
        # retained + zero-dropped (zero length) + both open spans = window length
        assert w.interval_sum + w.lead + w.trail == s.window_minutes
        assert w.n_arrivals >= 1
        total_retained += w.interval_sum
    assert s.intervals.sum() == total_retained
    assert len(s) == sum(w.n_arrivals - 1 - w.n_zero for w in s.windows)
    assert np.all(s.intervals > 0)


@pytest.mark.slow
def test_poisson_window_intervals_look_exponential():
    period = hourly_window(13, 17)
    runs, accepted = 300, 0
    for seed in range(runs):
        stream = gen_homogeneous_poisson(12.0, datetime(2005, 1, 1), 20 * 24, R, seed)
        s = intervals_from_minutes(stream.epoch_minutes(), R, period)
        accepted += chi_square_gof(s, fit_exponential(s)).p_value >= 0.05
    assert 0.90 <= accepted / runs <= 0.98


def test_sidecar_and_csv():
    recs = [rec(datetime(2005, 6, 1, 13, m)) for m in (5, 9, 30)]
    s = extract_intervals(recs, R, hourly_window(13, 13))
    buf = io.StringIO()
    s.write_csv(buf)
    assert buf.getvalue().splitlines() == ["interval_minutes", "4.0", "21.0"]
    side = io.StringIO()
    s.write_sidecar(side)
    meta = json.loads(side.getvalue())
    assert meta["n_intervals"] == 2 and meta["n_boundary_dropped"] == 2
    assert meta["boundary_spans"] == [[5.0, 30.0]]


def test_resolution_recorded():
    recs = [rec(datetime(2005, 6, 1, 13, m)) for m in (5, 9, 30)]
    assert extract_intervals(recs, R, hourly_window(13, 13)).resolution == 1.0
    base = float(np.datetime64("2005-06-01T13:05", "m").astype(np.int64))
    exact = intervals_from_minutes(np.array([base, base + 3.7]), R, hourly_window(13, 13))
    assert exact.resolution == 0.0 and exact.intervals.tolist() == pytest.approx([3.7])


@pytest.mark.slow
def test_minute_records_pass_exponential_gof():
    # 8 flights/hour: about 6% of minute-rounded gaps are zero
    period = hourly_window(9, 13)
    runs, accepted = 200, 0
    for seed in range(runs):
        stream = gen_homogeneous_poisson(8.0, datetime(2005, 1, 1), 60 * 24, R, seed)
        s = extract_intervals(stream.records, R, period)
        accepted += chi_square_gof(s, fit_exponential(s)).p_value >= 0.05
    assert 0.90 <= accepted / runs <= 0.98
