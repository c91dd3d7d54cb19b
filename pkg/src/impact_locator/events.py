"""Core event types: packets, event images, time surfaces.

Events are stored as flat per-attribute arrays (struct-of-arrays) so that
packet slicing and per-pixel reductions stay cache-friendly and vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np

POS = 1
NEG = -1


class Event(NamedTuple):
    """A single sensor event. ``polarity`` is +1 or -1."""

    x: int
    y: int
    polarity: int
    t: int


@dataclass(frozen=True)
class EventPacket:
    """Chronologically ordered set of events on a fixed sensor.

    ``ascending`` is the chronological order flag; equal timestamps keep
    their stored (input) order, so every derived quantity is deterministic.
    A whole recording is just a long ascending packet.
    """

    x: np.ndarray
    y: np.ndarray
    p: np.ndarray  # int8, +1 / -1
    t: np.ndarray  # int64, microseconds
    width: int
    height: int
    ascending: bool = True

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("attribute arrays must have equal length")

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self.t)):
            yield Event(int(self.x[i]), int(self.y[i]), int(self.p[i]), int(self.t[i]))

    @classmethod
    def from_events(cls, events, width: int, height: int, ascending: bool = True) -> "EventPacket":
        events = list(events)
        x = np.array([e[0] for e in events], dtype=np.int32)
        y = np.array([e[1] for e in events], dtype=np.int32)
        p = np.array([e[2] for e in events], dtype=np.int8)
        t = np.array([e[3] for e in events], dtype=np.int64)
        return cls(x, y, p, t, width, height, ascending)

    @classmethod
    def empty(cls, width: int, height: int, ascending: bool = True) -> "EventPacket":
        return cls(
            np.empty(0, np.int32),
            np.empty(0, np.int32),
            np.empty(0, np.int8),
            np.empty(0, np.int64),
            width,
            height,
            ascending,
        )

    def validate(self) -> "EventPacket":
        """Check coordinate bounds and the chronological-order invariant."""
        if len(self) == 0:
            return self
        if self.x.min() < 0 or self.x.max() >= self.width:
            raise ValueError("x coordinate out of sensor bounds")
        if self.y.min() < 0 or self.y.max() >= self.height:
            raise ValueError("y coordinate out of sensor bounds")
        dt = np.diff(self.t)
        if self.ascending:
            if dt.size and dt.min() < 0:
                raise ValueError("timestamps not non-decreasing")
        elif dt.size and dt.max() > 0:
            raise ValueError("timestamps not non-increasing")
        return self

    def slice(self, lo: int, hi: int) -> "EventPacket":
        return replace(self, x=self.x[lo:hi], y=self.y[lo:hi], p=self.p[lo:hi], t=self.t[lo:hi])


# A full stream is represented the same way as a packet.
EventStream = EventPacket


def packet_at(stream: EventStream, t: int, t_acc: int) -> EventPacket:
    """Events with t - t_acc/2 < t_k <= t + t_acc/2, via binary search.

    The stream must be ascending; repeated queries over a long recording
    stay sub-linear because only the slice bounds are searched.
    """
    if t_acc < 0:
        raise ValueError("t_acc must be >= 0")
    lo = int(np.searchsorted(stream.t, t - t_acc / 2, side="right"))
    hi = int(np.searchsorted(stream.t, t + t_acc / 2, side="right"))
    return stream.slice(lo, hi)


def split_at(packet: EventPacket, t: int) -> tuple[EventPacket, EventPacket]:
    """Split an ascending packet into (t_k < t, t_k >= t)."""
    i = int(np.searchsorted(packet.t, t, side="left"))
    return packet.slice(0, i), packet.slice(i, len(packet))


def reverse(packet: EventPacket) -> EventPacket:
    """Flip the chronological order; equal-timestamp runs are reversed too."""
    return replace(
        packet,
        x=packet.x[::-1],
        y=packet.y[::-1],
        p=packet.p[::-1],
        t=packet.t[::-1],
        ascending=not packet.ascending,
    )


def to_event_image(packet: EventPacket) -> np.ndarray:
    """height x width int8 grid of {+1, -1, 0}; later stored events overwrite.

    For a descending packet this means pixels end up holding the oldest
    event's polarity.
    """
    grid = np.zeros((packet.height, packet.width), dtype=np.int8)
    if len(packet):
        # Flat fancy assignment proceeds in index order, so the last
        # occurrence per pixel wins.
        grid.flat[packet.y.astype(np.int64) * packet.width + packet.x] = packet.p
    return grid


def to_time_surface(packet: EventPacket) -> np.ndarray:
    """height x width float grid; NaN marks pixels without events.

    Per pixel the timestamp of the last stored event is kept, then
    normalized over the packet's timestamp span so the oldest time maps to
    0.0 and the most recent to 1.0. A single-timestamp packet maps every
    defined cell to 1.0.
    """
    grid = np.full((packet.height, packet.width), np.nan)
    if len(packet) == 0:
        return grid
    t_min = int(packet.t.min())
    t_max = int(packet.t.max())
    if t_max == t_min:
        vals = np.ones(len(packet))
    else:
        vals = (packet.t - t_min) / (t_max - t_min)
    grid.flat[packet.y.astype(np.int64) * packet.width + packet.x] = vals
    return grid


def polarity_mask(image: np.ndarray, polarity: int) -> np.ndarray:
    """1 where the event image holds the selected polarity, else 0."""
    if polarity not in (POS, NEG):
        raise ValueError("polarity must be +1 or -1")
    return (image == polarity).astype(np.uint8)
