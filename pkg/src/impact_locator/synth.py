"""Synthetic event-camera scenes with ground truth.

The brightness model is idealized: a white racket frame and a bright ball
on a dark background emit events only where a contrast edge sweeps a
pixel, so event generation reduces to tracking boundary samples across the
pixel grid. Contact between ball and strings flashes the contact disk: one
+ event per pixel shortly before the impact time and one - event shortly
after, which is exactly the signature the timing stage looks for. Optional
string flicker emits alternating-polarity pairs at a fixed period, and
background noise is uniform in space and time.

Everything is deterministic given the scene seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .contours import Ellipse
from .events import EventStream
from .geometry import RelativePosition, default_tip_sign, position_from_relative
from .io import StreamHeader, write_binary, write_csv

LABELS = ("racket", "ball", "flicker", "noise")
LABEL_CODES = {name: i for i, name in enumerate(LABELS)}


@dataclass(frozen=True)
class RacketSpec:
    semi_major: float  # outer rim, px
    semi_minor: float
    rim_width: float  # px between outer rim and string bed
    theta0: float  # rad
    path: tuple[tuple[int, float, float], ...]  # (t_us, cx, cy) knots
    swing_interval: tuple[int, int]
    angular_velocity: float = 0.0  # rad/us
    vibration_amp: float = 0.0  # px, normal displacement of the frame edges
    vibration_period_us: int = 2000


@dataclass(frozen=True)
class BallSpec:
    radius: float
    v_in: tuple[float, float]  # px/us
    v_out: tuple[float, float]
    flight_us: int = 30_000


@dataclass(frozen=True)
class ImpactSpec:
    t: int
    u_pct: float
    v_pct: float
    duration_us: int = 4000  # half + before t, half - after


@dataclass(frozen=True)
class FlickerSpec:
    region: tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive)
    burst: tuple[int, int]
    period_us: int = 100
    pixel_fraction: float = 1.0


@dataclass(frozen=True)
class ArtifactSpec:
    """Short racket-frame-like +/- signature away from the true impact."""

    center: tuple[float, float]
    radius: float
    t: int
    duration_us: int = 4000


@dataclass(frozen=True)
class SceneSpec:
    sensor_dims: tuple[int, int]
    time_span: tuple[int, int]
    racket: RacketSpec
    ball: BallSpec | None = None
    impact: ImpactSpec | None = None
    flicker: FlickerSpec | None = None
    artifact: ArtifactSpec | None = None
    noise_rate: float = 0.0  # events/s over the whole sensor
    seed: int = 0

    def validate(self) -> "SceneSpec":
        if self.impact is not None:
            t0, t1 = self.racket.swing_interval
            if not (t0 < self.impact.t < t1):
                raise ValueError("impact time must lie inside the swing interval")
            if abs(self.impact.u_pct) > 100 or abs(self.impact.v_pct) > 100:
                raise ValueError("|u_pct| and |v_pct| must be <= 100")
            if self.ball is None:
                raise ValueError("an impact requires a ball")
        if self.time_span[0] >= self.time_span[1]:
            raise ValueError("empty time span")
        return self


@dataclass(frozen=True)
class SwingTruth:
    t_start: int
    t_end: int
    t_imp: int | None
    u_pct: float | None
    v_pct: float | None
    impact_center: tuple[float, float] | None
    racket: Ellipse | None  # string-bed boundary at t_imp


@dataclass(frozen=True)
class GroundTruth:
    swings: list[SwingTruth]
    labels: np.ndarray  # uint8 codes into LABELS, aligned with the stream


def racket_center(racket: RacketSpec, t) -> np.ndarray:
    knots = np.asarray(racket.path, dtype=float)
    cx = np.interp(t, knots[:, 0], knots[:, 1])
    cy = np.interp(t, knots[:, 0], knots[:, 2])
    return np.stack([np.atleast_1d(cx), np.atleast_1d(cy)], axis=-1)


def racket_theta(racket: RacketSpec, t: float) -> float:
    return racket.theta0 + racket.angular_velocity * (t - racket.swing_interval[0])


def string_bed_ellipse(racket: RacketSpec, t: float) -> Ellipse:
    c = racket_center(racket, t)[0]
    return Ellipse(
        float(c[0]),
        float(c[1]),
        racket.semi_major - racket.rim_width,
        racket.semi_minor - racket.rim_width,
        racket_theta(racket, t) % np.pi,
    )


class _Collector:
    def __init__(self):
        self.chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]] = []

    def add(self, x, y, p, t, label: str):
        if len(t):
            self.chunks.append(
                (
                    np.asarray(x, np.int64),
                    np.asarray(y, np.int64),
                    np.asarray(p, np.int8),
                    np.asarray(t, np.int64),
                    LABEL_CODES[label],
                )
            )


def _sweep_boundary(
    collector: _Collector,
    positions_fn,
    normals_fn,
    t0: int,
    t1: int,
    dt: int,
    polarity_flip: int,
    rng: np.random.Generator,
    label: str,
):
    """Emit one event whenever a boundary sample moves onto a new pixel.

    Polarity is the sign of normal . velocity (leading edge brightens),
    times polarity_flip (-1 for the string-bed boundary, where leading
    means white frame giving way to dark strings).
    """
    steps = np.arange(t0, t1, dt, dtype=np.int64)
    prev_pos = positions_fn(int(steps[0]))
    prev_px = np.round(prev_pos).astype(np.int64)
    for t in steps[1:]:
        pos = positions_fn(int(t))
        px = np.round(pos).astype(np.int64)
        moved = np.any(px != prev_px, axis=1)
        if moved.any():
            vel = pos[moved] - prev_pos[moved]
            nrm = normals_fn(int(t))[moved]
            pol = np.sign((vel * nrm).sum(axis=1)).astype(np.int8) * polarity_flip
            keep = pol != 0
            if keep.any():
                ts = int(t) + rng.integers(0, dt, size=int(keep.sum()))
                collector.add(px[moved][keep, 0], px[moved][keep, 1], pol[keep], ts, label)
        prev_pos, prev_px = pos, px


def _emit_racket(collector: _Collector, spec: SceneSpec, rng: np.random.Generator):
    racket = spec.racket
    t0, t1 = racket.swing_interval
    knots = np.asarray(racket.path, dtype=float)
    seg_dt = np.diff(knots[:, 0])
    seg_len = np.hypot(np.diff(knots[:, 1]), np.diff(knots[:, 2]))
    vmax = float((seg_len / np.maximum(seg_dt, 1)).max()) if len(seg_len) else 0.0
    vmax += abs(racket.angular_velocity) * racket.semi_major
    vmax += 2 * np.pi * racket.vibration_amp / max(racket.vibration_period_us, 1)
    if vmax <= 0:
        return
    dt = max(1, int(0.5 / vmax))
    omega_vib = 2 * np.pi / max(racket.vibration_period_us, 1)

    for semi_a, semi_b, flip in (
        (racket.semi_major, racket.semi_minor, 1),
        (racket.semi_major - racket.rim_width, racket.semi_minor - racket.rim_width, -1),
    ):
        perimeter = np.pi * (3 * (semi_a + semi_b) - np.sqrt((3 * semi_a + semi_b) * (semi_a + 3 * semi_b)))
        # Oversample the boundary so slow sweeps still outline every pixel.
        phis = np.linspace(0.0, 2 * np.pi, max(int(2 * perimeter), 16), endpoint=False)
        local = np.column_stack([semi_a * np.cos(phis), semi_b * np.sin(phis)])
        local_n = np.column_stack([semi_b * np.cos(phis), semi_a * np.sin(phis)])
        local_n /= np.linalg.norm(local_n, axis=1, keepdims=True)
        vib_phase = rng.uniform(0.0, 2 * np.pi, size=len(phis))

        def positions(t, local=local, local_n=local_n, vib_phase=vib_phase):
            th = racket_theta(racket, t)
            rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
            # Frame vibration keeps pixels emitting even where the edge
            # moves tangentially to the sweep direction.
            vib = racket.vibration_amp * np.sin(omega_vib * t + vib_phase)
            return (local + local_n * vib[:, None]) @ rot.T + racket_center(racket, t)[0]

        def normals(t, local_n=local_n):
            th = racket_theta(racket, t)
            rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
            return local_n @ rot.T

        _sweep_boundary(collector, positions, normals, t0, t1, dt, flip, rng, "racket")


def _emit_ball_flight(
    collector: _Collector,
    spec: SceneSpec,
    contact_center: np.ndarray,
    rng: np.random.Generator,
):
    ball = spec.ball
    impact = spec.impact
    half = impact.duration_us // 2
    phis = np.linspace(0.0, 2 * np.pi, max(int(2 * np.pi * ball.radius), 16), endpoint=False)
    circle = np.column_stack([np.cos(phis), np.sin(phis)])

    def make_leg(anchor_t: int, velocity, t0: int, t1: int):
        v = np.asarray(velocity, dtype=float)
        speed = float(np.hypot(*v))
        if speed <= 0 or t1 <= t0:
            return
        dt = max(1, int(0.8 / speed))

        def positions(t):
            return ball.radius * circle + contact_center + v * (t - anchor_t)

        def normals(t):
            return circle

        _sweep_boundary(collector, positions, normals, t0, t1, dt, 1, rng, "ball")

    # Incoming leg ends where contact starts; outgoing leg starts where it ends.
    make_leg(impact.t - half, ball.v_in, impact.t - half - ball.flight_us, impact.t - half)
    make_leg(impact.t + half, ball.v_out, impact.t + half, impact.t + half + ball.flight_us)


def _disk_pixels(center, radius: float, width: int, height: int):
    cx, cy = center
    x0, x1 = int(np.floor(cx - radius)), int(np.ceil(cx + radius)) + 1
    y0, y1 = int(np.floor(cy - radius)), int(np.ceil(cy + radius)) + 1
    xs, ys = np.meshgrid(np.arange(x0, x1), np.arange(y0, y1))
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius**2
    xs, ys = xs[inside], ys[inside]
    ok = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    return xs[ok], ys[ok]


def _emit_contact(
    collector: _Collector,
    center,
    radius: float,
    t_center: int,
    duration: int,
    dims,
    rng: np.random.Generator,
    label: str,
):
    xs, ys = _disk_pixels(center, radius, *dims)
    n = len(xs)
    if n == 0:
        return
    half = duration // 2
    tp = rng.integers(t_center - half, t_center, size=n)
    tn = rng.integers(t_center, t_center + half + 1, size=n)
    collector.add(xs, ys, np.ones(n, np.int8), tp, label)
    collector.add(xs, ys, np.full(n, -1, np.int8), tn, label)


def _emit_flicker(collector: _Collector, spec: SceneSpec, rng: np.random.Generator):
    fl = spec.flicker
    x0, y0, x1, y1 = fl.region
    xs, ys = np.meshgrid(np.arange(x0, x1), np.arange(y0, y1))
    xs, ys = xs.ravel(), ys.ravel()
    if fl.pixel_fraction < 1.0:
        keep = rng.random(len(xs)) < fl.pixel_fraction
        xs, ys = xs[keep], ys[keep]
    n = len(xs)
    if n == 0:
        return
    t0, t1 = fl.burst
    phases = rng.integers(0, fl.period_us, size=n)
    n_cycles = max((t1 - t0) // fl.period_us, 1)
    cycle_times = t0 + phases[:, None] + fl.period_us * np.arange(n_cycles)[None, :]
    pos_t = cycle_times.ravel()
    neg_t = (cycle_times + fl.period_us // 2).ravel()
    xs_r = np.repeat(xs, n_cycles)
    ys_r = np.repeat(ys, n_cycles)
    collector.add(xs_r, ys_r, np.ones(len(pos_t), np.int8), pos_t, "flicker")
    collector.add(xs_r, ys_r, np.full(len(neg_t), -1, np.int8), neg_t, "flicker")


def _emit_noise(collector: _Collector, spec: SceneSpec, rng: np.random.Generator):
    t0, t1 = spec.time_span
    n = int(rng.poisson(spec.noise_rate * (t1 - t0) / 1e6))
    if n == 0:
        return
    w, h = spec.sensor_dims
    collector.add(
        rng.integers(0, w, size=n),
        rng.integers(0, h, size=n),
        np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8),
        rng.integers(t0, t1, size=n),
        "noise",
    )


def impact_center_px(spec: SceneSpec) -> tuple[np.ndarray, Ellipse]:
    """Ground-truth pixel position of the contact disk center."""
    bed = string_bed_ellipse(spec.racket, spec.impact.t)
    tip = default_tip_sign(bed)
    rel = RelativePosition(spec.impact.u_pct, spec.impact.v_pct)
    return np.asarray(position_from_relative(rel, bed, tip)), bed


def generate(spec: SceneSpec) -> tuple[EventStream, GroundTruth]:
    """Build the event stream and ground truth for one swing scene."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    collector = _Collector()
    width, height = spec.sensor_dims

    _emit_racket(collector, spec, rng)

    contact_center = None
    bed = None
    if spec.impact is not None:
        contact_center, bed = impact_center_px(spec)
        _emit_ball_flight(collector, spec, contact_center, rng)
        _emit_contact(
            collector,
            contact_center,
            spec.ball.radius,
            spec.impact.t,
            spec.impact.duration_us,
            spec.sensor_dims,
            rng,
            "ball",
        )
    if spec.artifact is not None:
        _emit_contact(
            collector,
            np.asarray(spec.artifact.center),
            spec.artifact.radius,
            spec.artifact.t,
            spec.artifact.duration_us,
            spec.sensor_dims,
            rng,
            "racket",
        )
    if spec.flicker is not None:
        _emit_flicker(collector, spec, rng)
    if spec.noise_rate > 0:
        _emit_noise(collector, spec, rng)

    if collector.chunks:
        x = np.concatenate([c[0] for c in collector.chunks])
        y = np.concatenate([c[1] for c in collector.chunks])
        p = np.concatenate([c[2] for c in collector.chunks])
        t = np.concatenate([c[3] for c in collector.chunks])
        labels = np.concatenate(
            [np.full(len(c[3]), c[4], np.uint8) for c in collector.chunks]
        )
        inside = (x >= 0) & (x < width) & (y >= 0) & (y < height)
        x, y, p, t, labels = x[inside], y[inside], p[inside], t[inside], labels[inside]
        order = np.argsort(t, kind="stable")
        x, y, p, t, labels = x[order], y[order], p[order], t[order], labels[order]
    else:
        x = y = t = np.empty(0, np.int64)
        p = np.empty(0, np.int8)
        labels = np.empty(0, np.uint8)

    stream = EventStream(
        x.astype(np.int32), y.astype(np.int32), p.astype(np.int8), t.astype(np.int64),
        width, height,
    )
    swing = SwingTruth(
        t_start=spec.racket.swing_interval[0],
        t_end=spec.racket.swing_interval[1],
        t_imp=spec.impact.t if spec.impact else None,
        u_pct=spec.impact.u_pct if spec.impact else None,
        v_pct=spec.impact.v_pct if spec.impact else None,
        impact_center=tuple(contact_center) if contact_center is not None else None,
        racket=bed,
    )
    return stream, GroundTruth(swings=[swing], labels=labels)


def generate_rally(specs: list[SceneSpec]) -> tuple[EventStream, GroundTruth]:
    """Merge several single-swing scenes (disjoint time spans) into one
    stream, preserving per-event labels and per-swing truths."""
    if not specs:
        raise ValueError("need at least one scene")
    dims = specs[0].sensor_dims
    parts = [generate(s) for s in specs]
    x = np.concatenate([p[0].x for p in parts])
    y = np.concatenate([p[0].y for p in parts])
    pol = np.concatenate([p[0].p for p in parts])
    t = np.concatenate([p[0].t for p in parts])
    labels = np.concatenate([p[1].labels for p in parts])
    order = np.argsort(t, kind="stable")
    stream = EventStream(
        x[order].astype(np.int32), y[order].astype(np.int32),
        pol[order].astype(np.int8), t[order].astype(np.int64), *dims,
    )
    swings = [s for _, truth in parts for s in truth.swings]
    swings.sort(key=lambda s: s.t_start)
    return stream, GroundTruth(swings=swings, labels=labels[order])


# --- serialization -----------------------------------------------------------


def scene_to_dict(spec: SceneSpec) -> dict:
    return asdict(spec)


def scene_from_dict(data: dict) -> SceneSpec:
    def tup(v):
        return tuple(v) if v is not None else None

    racket = dict(data["racket"])
    racket["path"] = tuple(tuple(k) for k in racket["path"])
    racket["swing_interval"] = tup(racket["swing_interval"])
    kwargs = dict(
        sensor_dims=tup(data["sensor_dims"]),
        time_span=tup(data["time_span"]),
        racket=RacketSpec(**racket),
        noise_rate=data.get("noise_rate", 0.0),
        seed=data.get("seed", 0),
    )
    if data.get("ball"):
        ball = dict(data["ball"])
        ball["v_in"] = tup(ball["v_in"])
        ball["v_out"] = tup(ball["v_out"])
        kwargs["ball"] = BallSpec(**ball)
    if data.get("impact"):
        kwargs["impact"] = ImpactSpec(**data["impact"])
    if data.get("flicker"):
        flicker = dict(data["flicker"])
        flicker["region"] = tup(flicker["region"])
        flicker["burst"] = tup(flicker["burst"])
        kwargs["flicker"] = FlickerSpec(**flicker)
    if data.get("artifact"):
        artifact = dict(data["artifact"])
        artifact["center"] = tup(artifact["center"])
        kwargs["artifact"] = ArtifactSpec(**artifact)
    return SceneSpec(**kwargs)


def load_scenes(path) -> list[SceneSpec]:
    """Read a scene file: either one scene object or {"scenes": [...]}."""
    data = json.loads(Path(path).read_text())
    if "scenes" in data:
        return [scene_from_dict(d) for d in data["scenes"]]
    return [scene_from_dict(data)]


def write_scene(out_dir, stream: EventStream, truth: GroundTruth, stem: str = "scene") -> dict:
    """Write EVTS binary, CSV, and the ground-truth JSON sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = StreamHeader(
        stream.width, stream.height, int(stream.t[0]) if len(stream) else 0, len(stream)
    )
    evts = out_dir / f"{stem}.evts"
    csv = out_dir / f"{stem}.csv"
    truth_path = out_dir / f"{stem}.truth.json"
    write_binary(evts, header, stream)
    write_csv(csv, header, stream)
    payload = {
        "swings": [
            {
                "t_start": s.t_start,
                "t_end": s.t_end,
                "t_imp": s.t_imp,
                "u_pct": s.u_pct,
                "v_pct": s.v_pct,
                "impact_center": list(s.impact_center) if s.impact_center else None,
                "racket": asdict(s.racket) if s.racket else None,
            }
            for s in truth.swings
        ],
        "labels": "".join(LABELS[c][0] for c in truth.labels),
    }
    truth_path.write_text(json.dumps(payload, indent=2))
    return {"evts": str(evts), "csv": str(csv), "truth": str(truth_path)}
