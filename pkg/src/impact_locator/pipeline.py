"""End-to-end orchestration: swings -> impact timing -> contours -> uv.

Per-swing failures are recorded as structured stage errors without
aborting the other swings. The stream is consumed through its time index
only; no per-reference-time copies are materialized.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .contours import (
    BallNotFoundError,
    ContourParams,
    Ellipse,
    RacketNotFoundError,
    activity_noise_filter,
    binarize,
    detect_ellipses,
    morphological_closing,
    roi_crop,
    select_ball,
    select_racket,
)
from .events import EventStream, packet_at, to_event_image
from .geometry import default_tip_sign, relative_position
from .swing import SwingParams, SwingRange, detect_swings, event_rate_series, rolling_stats
from .timing import ImpactParams, NoImpactError, detect_impact, pats_image, rho_series

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

logger = logging.getLogger("impact_locator")


class ConfigError(ValueError):
    """Unparseable or inconsistent pipeline configuration."""


@dataclass(frozen=True)
class PipelineConfig:
    swing: SwingParams = field(default_factory=SwingParams)
    impact: ImpactParams = field(default_factory=ImpactParams)
    contours: ContourParams = field(default_factory=ContourParams)
    tip_sign: int = 0  # 0 = derive from the fitted racket orientation

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        from .timing import FocalPattern

        try:
            swing = SwingParams(**data.get("swing", {}))
            impact_kwargs = dict(data.get("impact", {}))
            if "pattern" in impact_kwargs:
                impact_kwargs["pattern"] = FocalPattern(impact_kwargs["pattern"])
            impact = ImpactParams(**impact_kwargs)
            contours = ContourParams(**data.get("contours", {}))
            output = data.get("output", {})
            tip_sign = int(output.get("tip_sign", 0))
            if tip_sign not in (-1, 0, 1):
                raise ValueError("tip_sign must be -1, 0, or 1")
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        return cls(swing=swing, impact=impact, contours=contours, tip_sign=tip_sign)


@dataclass
class StageError:
    stage: str
    message: str


@dataclass
class SwingOutcome:
    swing: SwingRange
    t_imp: int | None = None
    racket: Ellipse | None = None
    ball: Ellipse | None = None
    u_pct: float | None = None
    v_pct: float | None = None
    tip_sign: int | None = None
    timings_ms: dict = field(default_factory=dict)
    errors: list[StageError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def find_swings(stream: EventStream, params: SwingParams) -> list[SwingRange]:
    if len(stream) == 0:
        return []
    times, rates = event_rate_series(
        stream, params.t_acc, params.t_strd, int(stream.t[0]), int(stream.t[-1])
    )
    if len(rates) < params.n_eps:
        return []
    return detect_swings(*rolling_stats(times, rates, params.n_eps), params)


def find_impact(stream: EventStream, swing: SwingRange, params: ImpactParams) -> int:
    points = rho_series(stream, swing, params)
    t_imp, _ = detect_impact(
        points,
        params,
        (stream.width, stream.height),
        image_provider=lambda t: pats_image(stream, t, params.t_acc, params.pattern)[1],
    )
    return t_imp


def contour_image(stream: EventStream, t_imp: int, t_acc: int, params: ContourParams):
    """Denoised, closed binary image of the packet centered at t_imp, plus
    the ROI offset for coordinate restoration."""
    packet = packet_at(stream, t_imp, t_acc)
    packet = activity_noise_filter(packet, params.noise_window, params.noise_radius)
    image = morphological_closing(binarize(to_event_image(packet)), params.closing_kernel)
    if params.roi_enabled:
        return roi_crop(image)
    return image, (0, 0)


def find_contours(
    stream: EventStream, t_imp: int, params: ContourParams
) -> tuple[Ellipse, Ellipse]:
    """Racket (string-bed) and ball ellipses at t_imp, in sensor coords."""
    racket_img, (rx, ry) = contour_image(stream, t_imp, params.t_acc_racket, params)
    racket_ellipses = [
        e.translated(rx, ry)
        for e in detect_ellipses(racket_img, params.min_contour_points, params.min_semi_minor)
    ]
    racket = select_racket(racket_ellipses)
    ball_img, (bx, by) = contour_image(stream, t_imp, params.t_acc_ball, params)
    ball_ellipses = [
        e.translated(bx, by)
        for e in detect_ellipses(ball_img, params.min_contour_points, params.min_semi_minor)
    ]
    ball = select_ball(ball_ellipses, racket)
    return racket, ball


def process_swing(stream: EventStream, swing: SwingRange, config: PipelineConfig) -> SwingOutcome:
    outcome = SwingOutcome(swing=swing)
    t0 = time.perf_counter()
    try:
        outcome.t_imp = find_impact(stream, swing, config.impact)
    except NoImpactError as exc:
        outcome.errors.append(StageError("impact_timing", str(exc)))
        return outcome
    finally:
        outcome.timings_ms["impact_timing"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    try:
        outcome.racket, outcome.ball = find_contours(stream, outcome.t_imp, config.contours)
    except (RacketNotFoundError, BallNotFoundError) as exc:
        outcome.errors.append(StageError("contours", str(exc)))
        return outcome
    finally:
        outcome.timings_ms["contours"] = (time.perf_counter() - t0) * 1e3

    tip = config.tip_sign if config.tip_sign != 0 else default_tip_sign(outcome.racket)
    rel = relative_position((outcome.ball.cx, outcome.ball.cy), outcome.racket, tip)
    outcome.tip_sign = tip
    outcome.u_pct = rel.u_pct
    outcome.v_pct = rel.v_pct
    return outcome


def locate(stream: EventStream, config: PipelineConfig) -> list[SwingOutcome]:
    t0 = time.perf_counter()
    swings = find_swings(stream, config.swing)
    swing_ms = (time.perf_counter() - t0) * 1e3
    logger.info("detected %d swing(s) in %.1f ms", len(swings), swing_ms)
    outcomes = []
    for swing in swings:
        outcome = process_swing(stream, swing, config)
        outcome.timings_ms["swing_detection"] = swing_ms / max(len(swings), 1)
        outcomes.append(outcome)
    return outcomes


# --- serialization -----------------------------------------------------------


def _round6(value):
    """Recursively round floats to 6 significant digits so serialized
    output is byte-stable for identical inputs."""
    if isinstance(value, float):
        return float(f"{value:.6g}")
    if isinstance(value, dict):
        return {k: _round6(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round6(v) for v in value]
    return value


def ellipse_dict(e: Ellipse | None):
    if e is None:
        return None
    return {"cx": e.cx, "cy": e.cy, "a": e.a, "b": e.b, "theta": e.theta}


def outcome_dict(outcome: SwingOutcome, include_timings: bool = False) -> dict:
    data = {
        "swing": {
            "t_start": outcome.swing.t_start,
            "t_end": outcome.swing.t_end,
            "truncated": outcome.swing.truncated,
        },
        "t_imp": outcome.t_imp,
        "racket": ellipse_dict(outcome.racket),
        "ball": ellipse_dict(outcome.ball),
        "u_pct": outcome.u_pct,
        "v_pct": outcome.v_pct,
        "tip_sign": outcome.tip_sign,
        "errors": [{"stage": e.stage, "message": e.message} for e in outcome.errors],
    }
    if include_timings:
        data["timings_ms"] = outcome.timings_ms
    return _round6(data)
