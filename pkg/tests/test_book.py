"""Quote-path reconstruction from event counts."""

import numpy as np
import pytest

import lobhawkes as lh
from lobhawkes.book import PricePath, prices_from_counts, spread_series, stream_of_quote
from lobhawkes.errors import InputError
from lobhawkes.params import Side


def _stream(side, up):
    return stream_of_quote(0, side, up)


class TestPricesFromCounts:
    def test_three_up_one_down_on_ask(self):
        # Zero opening spread so both sides start at p0; three ask-up
        # moves and one ask-down leave the ask two ticks above p0.
        events = lh.EventStream.from_events(
            [1.0, 2.0, 3.0, 4.0],
            [_stream(Side.ASK, True)] * 3 + [_stream(Side.ASK, False)],
            [1.0] * 4,
            0.0,
            10.0,
        )
        path = prices_from_counts(events, p0=1.3, tick=1e-5, initial_spread_ticks=0)
        assert path.ask[-1] == pytest.approx(1.30002, abs=1e-12)
        assert path.bid[-1] == pytest.approx(1.3, abs=1e-12)

    def test_initial_spread(self):
        events = lh.EventStream.empty(0.0, 5.0)
        path = prices_from_counts(events, p0=2.0, tick=0.01, initial_spread_ticks=3)
        assert path.ask[0] == pytest.approx(2.03)
        assert path.bid[0] == pytest.approx(2.0)
        assert path.spread[0] == pytest.approx(0.03)

    def test_each_event_moves_one_tick(self):
        events = lh.EventStream.from_events(
            [1.0, 2.0, 3.0],
            [_stream(Side.BID, True), _stream(Side.BID, True), _stream(Side.BID, False)],
            [5.0, 0.1, 2.0],  # volumes do not affect the price step
            0.0,
            5.0,
        )
        path = prices_from_counts(events, p0=1.0, tick=1e-4)
        np.testing.assert_allclose(
            path.bid, [1.0, 1.0001, 1.0002, 1.0001], atol=1e-12
        )
        assert np.all(path.ask == path.ask[0])

    def test_asset_selection(self, two_asset_params):
        events = lh.EventStream.from_events(
            [1.0, 2.0],
            [0, 4],  # asset 0 ask-up, asset 1 ask-up
            [1.0, 1.0],
            0.0,
            5.0,
            n_assets=2,
        )
        p0 = prices_from_counts(events, p0=1.0, asset=0)
        p1 = prices_from_counts(events, p0=1.0, asset=1)
        assert len(p0.times) == 2  # opening + its own event
        assert len(p1.times) == 2
        assert p0.times[1] == 1.0
        assert p1.times[1] == 2.0

    def test_bad_asset_rejected(self):
        events = lh.EventStream.empty(0.0, 5.0)
        with pytest.raises(InputError):
            prices_from_counts(events, p0=1.0, asset=2)


class TestPricePathQueries:
    @pytest.fixture
    def path(self):
        events = lh.EventStream.from_events(
            [1.0, 3.0],
            [_stream(Side.ASK, True), _stream(Side.BID, False)],
            [1.0, 1.0],
            0.0,
            10.0,
        )
        return prices_from_counts(events, p0=1.0, tick=0.1, initial_spread_ticks=1)

    def test_previous_tick_lookup(self, path):
        assert path.ask_at(0.5) == pytest.approx(1.1)
        assert path.ask_at(1.0) == pytest.approx(1.2)  # jump applies at its time
        assert path.ask_at(2.9) == pytest.approx(1.2)
        assert path.bid_at(3.5) == pytest.approx(0.9)

    def test_mid_and_spread(self, path):
        assert path.spread_at(0.5) == pytest.approx(0.1)
        assert path.spread_at(2.0) == pytest.approx(1.2 - 1.0)
        assert path.spread_at(5.0) == pytest.approx(1.2 - 0.9)
        assert path.mid_at(5.0) == pytest.approx((1.2 + 0.9) / 2)

    def test_query_before_opening_rejected(self, path):
        with pytest.raises(InputError):
            path.ask_at(-0.1)

    def test_vector_queries(self, path):
        got = path.mid_at(np.array([0.5, 2.0, 5.0]))
        assert got.shape == (3,)

    def test_spread_series(self, path):
        grid = np.array([0.5, 2.0, 5.0])
        np.testing.assert_allclose(
            spread_series(path, grid), [0.1, 0.2, 0.3], atol=1e-12
        )
        assert spread_series(path, np.empty(0)).size == 0


class TestCrossedFraction:
    def test_never_crossed(self):
        events = lh.EventStream.empty(0.0, 10.0)
        path = prices_from_counts(events, p0=1.0, initial_spread_ticks=1)
        assert path.crossed_fraction() == 0.0

    def test_crossed_after_bid_up_through_ask(self):
        # Two bid-up moves against a one-tick opening spread cross the book
        # from the second move until the horizon end.
        events = lh.EventStream.from_events(
            [2.0, 4.0],
            [_stream(Side.BID, True)] * 2,
            [1.0, 1.0],
            0.0,
            10.0,
        )
        path = prices_from_counts(events, p0=1.0, tick=0.01, initial_spread_ticks=1)
        assert path.crossed_fraction() == pytest.approx(0.6)


class TestValidation:
    def test_mismatched_lengths(self):
        with pytest.raises(InputError):
            PricePath(
                times=np.array([0.0, 1.0]),
                ask=np.array([1.0]),
                bid=np.array([0.9, 0.9]),
                p0=0.9,
                tick=0.1,
                t_start=0.0,
                t_end=2.0,
            )

    def test_decreasing_times(self):
        with pytest.raises(InputError):
            PricePath(
                times=np.array([1.0, 0.5]),
                ask=np.array([1.0, 1.0]),
                bid=np.array([0.9, 0.9]),
                p0=0.9,
                tick=0.1,
                t_start=0.0,
                t_end=2.0,
            )
