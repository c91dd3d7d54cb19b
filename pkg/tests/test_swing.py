import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import impact_locator as il
from impact_locator import SwingParams, SwingRange, detect_swings, event_rate_series, rolling_stats
from impact_locator.events import EventPacket
from impact_locator.pipeline import find_swings

from conftest import SWING_PARAMS, noise_scene, rally_specs


def stream_of(timestamps, width=64, height=64):
    events = [(0, 0, 1, t) for t in timestamps]
    return EventPacket.from_events(events, width, height)


class TestEventRateSeries:
    def test_full_window_rate_scaling(self):
        # 5000 events inside one 500 us window -> 1e7 events/s at its center.
        ts = np.linspace(1001, 1250, 5000).astype(int)
        times, rates = event_rate_series(stream_of(sorted(ts)), 500, 500, 1250, 1250)
        assert times.tolist() == [1250]
        assert rates[0] == pytest.approx(1e7)

    def test_empty_stream_rates_zero(self):
        times, rates = event_rate_series(stream_of([]), 500, 500, 0, 2000)
        assert len(times) == 5
        assert not rates.any()

    def test_begin_after_finish_rejected(self):
        with pytest.raises(ValueError):
            event_rate_series(stream_of([1]), 500, 500, 10, 5)

    @given(
        st.lists(st.integers(0, 5000), min_size=0, max_size=300),
        st.integers(1, 1000),
        st.integers(1, 500),
    )
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force_counting(self, ts, t_acc, t_strd):
        stream = stream_of(sorted(ts))
        times, rates = event_rate_series(stream, t_acc, t_strd, 0, 5000)
        for t, rate in zip(times, rates):
            count = sum(1 for tk in ts if t - t_acc / 2 < tk <= t + t_acc / 2)
            assert rate == pytest.approx(count * 1e6 / t_acc)


class TestRollingStats:
    def test_constant_series_has_zero_variance(self):
        times = np.arange(10)
        rates = np.full(10, 3.5)
        _, means, variances = rolling_stats(times, rates, 4)
        assert np.allclose(means, 3.5)
        assert np.allclose(variances, 0.0)

    def test_single_spike_window_closed_form(self):
        n, k = 5, 10.0
        times = np.arange(n)
        rates = np.array([0.0, 0.0, 0.0, 0.0, k])
        _, means, variances = rolling_stats(times, rates, n)
        assert means[0] == pytest.approx(k / n)
        assert variances[0] == pytest.approx(k * k * (n - 1) / n**2)

    def test_window_stamped_at_last_reference_time(self):
        times = np.array([100, 200, 300, 400])
        stamped, _, _ = rolling_stats(times, np.ones(4), 3)
        assert stamped.tolist() == [300, 400]

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            rolling_stats(np.arange(3), np.ones(3), 4)

    @given(st.lists(st.floats(0, 1e8), min_size=5, max_size=60), st.integers(2, 5))
    @settings(max_examples=100, deadline=None)
    def test_matches_two_pass_computation(self, rates, n_eps):
        rates = np.asarray(rates)
        times = np.arange(len(rates))
        _, means, variances = rolling_stats(times, rates, n_eps)
        for i in range(len(means)):
            window = rates[i : i + n_eps]
            mean = window.sum() / n_eps
            var = sum((w - mean) ** 2 for w in window) / n_eps
            assert means[i] == pytest.approx(mean, rel=1e-12, abs=1e-9)
            assert variances[i] == pytest.approx(var, rel=1e-9, abs=1e-6)


class TestDetectSwings:
    PARAMS = SwingParams(tau_mean=10.0, tau_var=4.0, tau_t=5)

    def test_below_thresholds_detects_nothing(self):
        times = np.arange(20)
        assert detect_swings(times, np.full(20, 5.0), np.full(20, 1.0), self.PARAMS) == []

    def test_one_burst_one_range(self):
        times = np.arange(0, 20)
        means = np.where((times >= 4) & (times < 15), 50.0, 1.0)
        variances = np.where((times >= 4) & (times < 15), 9.0, 0.0)
        got = detect_swings(times, means, variances, self.PARAMS)
        assert got == [SwingRange(4, 15)]

    def test_open_range_flagged_truncated(self):
        times = np.arange(0, 10)
        means = np.where(times >= 6, 50.0, 1.0)
        variances = np.where(times >= 6, 9.0, 0.0)
        got = detect_swings(times, means, variances, self.PARAMS)
        assert got == [SwingRange(6, 9, truncated=True)]

    def test_close_waits_for_minimum_duration(self):
        times = np.arange(0, 20)
        means = np.full(20, 1.0)
        means[3] = 50.0  # a one-sample burst
        variances = np.where(means > 10, 9.0, 0.0)
        got = detect_swings(times, means, variances, self.PARAMS)
        # mean drops immediately, but t_end must be >= t_start + tau_t
        assert got == [SwingRange(3, 8)]

    def test_three_bursts_three_ordered_disjoint_ranges(self):
        stream, truth = il.generate_rally(rally_specs(3))
        got = find_swings(stream, SWING_PARAMS)
        assert len(got) == 3
        for prev, cur in zip(got, got[1:]):
            assert prev.t_end <= cur.t_start
        for swing, swing_truth in zip(got, truth.swings):
            assert swing.t_start <= swing_truth.t_imp <= swing.t_end

    def test_noise_only_stream_detects_nothing(self):
        stream, _ = il.generate(noise_scene())
        assert find_swings(stream, SWING_PARAMS) == []

    @given(
        st.lists(st.floats(0, 100), min_size=10, max_size=60),
        st.floats(1, 50),
        st.floats(0.1, 100),
        st.sampled_from([2.0, 4.0]),  # powers of two keep the scaling exact
    )
    @settings(max_examples=100, deadline=None)
    def test_threshold_scale_equivariance(self, means, tau_mean, tau_var, scale):
        times = np.arange(len(means)) * 3
        means = np.asarray(means)
        variances = np.abs(np.sin(times)) * 30
        base = SwingParams(tau_mean=tau_mean, tau_var=tau_var, tau_t=6)
        scaled = SwingParams(tau_mean=tau_mean * scale, tau_var=tau_var * scale**2, tau_t=6)
        got_base = detect_swings(times, means, variances, base)
        got_scaled = detect_swings(times, means * scale, variances * scale**2, scaled)
        assert got_base == got_scaled


class TestSwingTypes:
    def test_params_must_be_positive(self):
        with pytest.raises(ValueError):
            SwingParams(t_acc=0)

    def test_range_end_after_start(self):
        with pytest.raises(ValueError):
            SwingRange(100, 100)
        assert SwingRange(100, 100, truncated=True).duration() == 0
