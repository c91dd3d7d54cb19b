"""Swing-range detection from the event-rate series.

The event rate is the packet size scaled to events per second. Rolling
mean/variance over a trailing window of n_eps rates drive a two-threshold
state machine: a swing opens when both mean and variance exceed their
thresholds and closes at the first time, at least tau_t later, where the
mean drops back under its threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import EventStream


@dataclass(frozen=True)
class SwingParams:
    t_acc: int = 500
    t_strd: int = 500
    n_eps: int = 10
    tau_mean: float = 1e7  # events/s
    tau_var: float = 6e11  # (events/s)^2
    tau_t: int = 100_000  # us

    def __post_init__(self):
        if min(self.t_acc, self.t_strd, self.n_eps, self.tau_mean, self.tau_var, self.tau_t) <= 0:
            raise ValueError("all swing parameters must be positive")


@dataclass(frozen=True)
class SwingRange:
    t_start: int
    t_end: int
    truncated: bool = False  # stream ended before the closing condition

    def __post_init__(self):
        if self.t_end <= self.t_start and not self.truncated:
            raise ValueError("t_end must exceed t_start")

    def duration(self) -> int:
        return self.t_end - self.t_start


def event_rate_series(
    stream: EventStream, t_acc: int, t_strd: int, t_begin: int, t_finish: int
) -> tuple[np.ndarray, np.ndarray]:
    """Rates at t = t_begin, t_begin + t_strd, ... <= t_finish.

    Returns (times, rates) with rate = |packet| * 1e6 / t_acc. Packet sizes
    come from two vectorized binary searches, not per-packet scans.
    """
    if t_begin > t_finish:
        raise ValueError("t_begin must not exceed t_finish")
    times = np.arange(t_begin, t_finish + 1, t_strd, dtype=np.int64)
    lo = np.searchsorted(stream.t, times - t_acc / 2, side="right")
    hi = np.searchsorted(stream.t, times + t_acc / 2, side="right")
    rates = (hi - lo) * (1e6 / t_acc)
    return times, rates


def rolling_stats(
    times: np.ndarray, rates: np.ndarray, n_eps: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Population mean/variance over each trailing window of n_eps rates.

    The window is stamped with its last reference time so detection stays
    causal. Returns (times, means, variances), all of length
    len(rates) - n_eps + 1.
    """
    if len(rates) < n_eps:
        raise ValueError(f"need at least n_eps={n_eps} rate points, got {len(rates)}")
    windows = np.lib.stride_tricks.sliding_window_view(np.asarray(rates, dtype=float), n_eps)
    means = windows.mean(axis=1)
    variances = ((windows - means[:, None]) ** 2).mean(axis=1)
    return np.asarray(times[n_eps - 1 :]), means, variances


def detect_swings(
    times: np.ndarray, means: np.ndarray, variances: np.ndarray, params: SwingParams
) -> list[SwingRange]:
    """Scan the stats series for swing ranges (multiple per stream).

    An open range at the end of the series is emitted with the last
    reference time and flagged truncated instead of being dropped.
    """
    ranges: list[SwingRange] = []
    n = len(times)
    i = 0
    while i < n:
        if means[i] > params.tau_mean and variances[i] > params.tau_var:
            t_start = int(times[i])
            j = i + 1
            t_end = None
            while j < n:
                if times[j] >= t_start + params.tau_t and means[j] < params.tau_mean:
                    t_end = int(times[j])
                    break
                j += 1
            if t_end is None:
                ranges.append(SwingRange(t_start, int(times[n - 1]), truncated=True))
                break
            ranges.append(SwingRange(t_start, t_end))
            i = j + 1
        else:
            i += 1
    return ranges
