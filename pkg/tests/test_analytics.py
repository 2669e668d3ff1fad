"""Sampling, signature plots, cross-scale correlation and duration tables."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lobhawkes as lh
from lobhawkes.analytics import (
    RegularGrid,
    default_taus,
    duration_volume_table,
    durations,
    empirical_rates,
    epps_correlation,
    power_law_fit,
    previous_tick_sample,
    sample_path,
    signature_plot,
)
from lobhawkes.errors import InputError

from conftest import make_params_1a


def brute_previous_tick(times, values, grid_times):
    out = []
    for g in grid_times:
        i = max(j for j in range(len(times)) if times[j] <= g)
        out.append(values[i])
    return np.array(out)


class TestGrid:
    def test_times_and_span(self):
        g = RegularGrid(start=2.0, step=0.5, count=5)
        np.testing.assert_allclose(g.times, [2.0, 2.5, 3.0, 3.5, 4.0])
        assert g.span == 2.0

    def test_cover(self):
        g = RegularGrid.cover(0.0, 10.0, 3.0)
        assert g.count == 4  # 0, 3, 6, 9
        assert g.times[-1] <= 10.0

    def test_validation(self):
        with pytest.raises(InputError):
            RegularGrid(start=0.0, step=0.0, count=3)
        with pytest.raises(InputError):
            RegularGrid(start=0.0, step=1.0, count=0)
        with pytest.raises(InputError):
            RegularGrid(start=np.inf, step=1.0, count=3)


class TestPreviousTick:
    def test_hand_example(self):
        times = [0.0, 1.0, 3.0]
        values = [10.0, 20.0, 30.0]
        got = previous_tick_sample(times, values, np.array([0.0, 0.5, 1.0, 2.9, 3.0, 9.0]))
        np.testing.assert_array_equal(got, [10.0, 10.0, 20.0, 20.0, 30.0, 30.0])

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_matches_brute_force(self, data):
        n = data.draw(st.integers(1, 12))
        gaps = data.draw(
            st.lists(st.floats(0.0, 5.0), min_size=n, max_size=n)
        )
        times = np.cumsum(np.asarray(gaps))
        values = np.arange(n, dtype=float)
        k = data.draw(st.integers(1, 8))
        grid = data.draw(
            st.lists(
                st.floats(float(times[0]), float(times[-1]) + 2.0),
                min_size=k, max_size=k,
            )
        )
        grid = np.asarray(grid)
        got = previous_tick_sample(times, values, grid)
        np.testing.assert_array_equal(got, brute_previous_tick(times, values, grid))

    def test_before_start_policies(self):
        with pytest.raises(InputError, match="precede the first observation"):
            previous_tick_sample([1.0, 2.0], [5.0, 6.0], np.array([0.5]))
        got = previous_tick_sample(
            [1.0, 2.0], [5.0, 6.0], np.array([0.5, 1.5]), before_start="fill"
        )
        np.testing.assert_array_equal(got, [5.0, 5.0])

    def test_grid_object_accepted(self):
        g = RegularGrid(start=0.0, step=1.0, count=3)
        got = previous_tick_sample([0.0, 1.5], [1.0, 2.0], g)
        np.testing.assert_array_equal(got, [1.0, 1.0, 2.0])

    def test_validation(self):
        with pytest.raises(InputError):
            previous_tick_sample([1.0], [1.0, 2.0], np.array([1.0]))
        with pytest.raises(InputError):
            previous_tick_sample([], [], np.array([1.0]))
        with pytest.raises(InputError):
            previous_tick_sample([2.0, 1.0], [1.0, 2.0], np.array([2.0]))


class TestSamplePath:
    def test_mid_log_series(self):
        path = lh.PricePath(
            times=np.array([0.0, 1.0]),
            ask=np.array([101.0, 102.0]),
            bid=np.array([99.0, 100.0]),
            p0=99.0, tick=1.0, t_start=0.0, t_end=2.0,
        )
        g = RegularGrid(start=0.0, step=0.5, count=3)
        x = sample_path(path, g, price="mid", log=True)
        np.testing.assert_allclose(x, np.log([100.0, 100.0, 101.0]), rtol=1e-15)
        ask = sample_path(path, g, price="ask", log=False)
        np.testing.assert_array_equal(ask, [101.0, 101.0, 102.0])

    def test_unknown_series_rejected(self):
        path = lh.PricePath(
            times=np.array([0.0]), ask=np.array([1.0]), bid=np.array([1.0]),
            p0=1.0, tick=0.1, t_start=0.0, t_end=1.0,
        )
        with pytest.raises(InputError, match="mid, ask or bid"):
            sample_path(path, RegularGrid(0.0, 1.0, 1), price="last")


class TestSignaturePlot:
    def test_alternating_series_variance_halves(self):
        # X alternates 0, d, 0, d...: every step increment is d^2, while
        # stride-2 increments vanish, so V(2h) = 0 and V(h) = d^2 / h.
        d = 1e-3
        n = 1001
        x = np.where(np.arange(n) % 2 == 0, 0.0, d)
        curve = signature_plot(x, step=1.0, taus=[1.0, 2.0])
        assert curve[1.0] == pytest.approx(d * d, rel=1e-12)
        assert curve[2.0] == 0.0

    def test_random_walk_is_flat(self):
        rng = np.random.default_rng(5)
        x = np.cumsum(rng.normal(0.0, 1.0, size=200_001))
        curve = signature_plot(x, step=1.0, taus=[1.0, 2.0, 5.0, 10.0, 20.0])
        slope, _ = power_law_fit(curve)
        assert abs(slope) < 0.05
        vals = np.array(list(curve.values()))
        assert np.all(np.abs(vals - 1.0) < 0.05)

    def test_non_multiple_tau_rejected(self):
        x = np.zeros(10)
        with pytest.raises(InputError, match="multiple of the grid step"):
            signature_plot(x, step=1.0, taus=[1.5])

    def test_too_coarse_tau_dropped_with_warning(self):
        x = np.arange(5, dtype=float)
        with pytest.warns(UserWarning, match="exceeds the series span"):
            curve = signature_plot(x, step=1.0, taus=[1.0, 100.0])
        assert set(curve) == {1.0}

    def test_window_average(self):
        # Two windows with increment variances 1 and 9 average to 5.
        up = np.arange(6, dtype=float)
        x = np.concatenate([up, up[-1] + 3.0 * np.arange(1, 6)])
        full = signature_plot(x, step=1.0, taus=[1.0], window=5.0)
        assert full[1.0] == pytest.approx((1.0 + 9.0) / 2.0, rel=1e-12)

    def test_short_series_rejected(self):
        with pytest.raises(InputError):
            signature_plot(np.array([1.0]), step=1.0, taus=[1.0])


class TestEppsCorrelation:
    def test_identical_series(self):
        rng = np.random.default_rng(6)
        x = np.cumsum(rng.normal(size=5001))
        curve = epps_correlation(x, x, step=1.0, taus=[1.0, 5.0])
        for v in curve.values():
            assert v == pytest.approx(1.0, abs=1e-12)

    def test_negated_series(self):
        rng = np.random.default_rng(7)
        x = np.cumsum(rng.normal(size=5001))
        curve = epps_correlation(x, -x, step=1.0, taus=[1.0, 5.0])
        for v in curve.values():
            assert v == pytest.approx(-1.0, abs=1e-12)

    def test_independent_series_near_zero(self):
        rng = np.random.default_rng(8)
        x = np.cumsum(rng.normal(size=100_001))
        y = np.cumsum(rng.normal(size=100_001))
        curve = epps_correlation(x, y, step=1.0, taus=[1.0])
        assert abs(curve[1.0]) < 0.02

    def test_zero_variance_dropped(self):
        x = np.zeros(11)
        y = np.arange(11, dtype=float)
        with pytest.warns(UserWarning, match="zero realized variance"):
            curve = epps_correlation(x, y, step=1.0, taus=[1.0])
        assert curve == {}

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            epps_correlation(np.zeros(5), np.zeros(6), step=1.0, taus=[1.0])


class TestPowerLaw:
    def test_exact_power_law(self):
        taus = [1.0, 2.0, 4.0, 8.0]
        curve = {t: 3.0 * t ** -0.7 for t in taus}
        slope, r2 = power_law_fit(curve)
        assert slope == pytest.approx(-0.7, abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_needs_two_points(self):
        with pytest.raises(InputError):
            power_law_fit({1.0: 2.0})
        with pytest.raises(InputError):
            power_law_fit({1.0: 2.0, 2.0: -1.0})


class TestDurationsAndRates:
    def test_durations(self):
        ev = lh.EventStream.from_events(
            [1.0, 2.5, 3.0, 6.0], [0, 1, 0, 0], [1.0, 1.0, 1.0, 1.0], 0.0, 10.0
        )
        np.testing.assert_allclose(durations(ev), [1.5, 0.5, 3.0])
        np.testing.assert_allclose(durations(ev, stream=0), [2.0, 3.0])
        assert durations(ev, stream=3).size == 0

    def test_duration_volume_table(self):
        ev = lh.EventStream.from_events(
            [1.0, 3.0, 4.0], [0, 0, 0], [0.5, 1.5, 2.5], 0.0, 10.0
        )
        table = duration_volume_table(ev, stream=0)
        np.testing.assert_allclose(table, [[2.0, 1.5], [1.0, 2.5]])
        assert duration_volume_table(lh.EventStream.empty(0.0, 1.0)).shape == (0, 2)

    def test_empirical_rates(self):
        ev = lh.EventStream.from_events(
            [2.0, 4.0, 6.0, 8.0], [0, 0, 1, 0], [1.0] * 4, 0.0, 10.0
        )
        rates = empirical_rates(ev, burn_in=0.0)
        np.testing.assert_allclose(rates, [0.3, 0.1, 0.0, 0.0])
        # 10% burn-in drops nothing here but shortens the span.
        rates2 = empirical_rates(ev, burn_in=0.1)
        np.testing.assert_allclose(rates2, np.array([3.0, 1.0, 0.0, 0.0]) / 9.0)
        with pytest.raises(InputError):
            empirical_rates(ev, burn_in=1.0)

    def test_rates_match_simulation_truth(self):
        params = make_params_1a()
        res = lh.simulate(params, lh.SimConfig(horizon_end=5000.0, seed=55))
        expected = np.linalg.solve(
            np.eye(4) - params.branching, params.mu
        )
        got = empirical_rates(res.events)
        np.testing.assert_allclose(got, expected, rtol=0.08)


class TestDefaultTaus:
    def test_ladder(self):
        assert default_taus(1.0, max_tau=100.0) == [
            1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0
        ]

    def test_respects_bounds(self):
        taus = default_taus(0.5, max_tau=30.0)
        assert taus[0] == 0.5
        assert taus[-1] <= 30.0
        assert all(b > a for a, b in zip(taus, taus[1:]))
