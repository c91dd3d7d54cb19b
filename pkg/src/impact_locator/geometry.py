"""Racket-relative uv coordinates of the ball center.

v runs along the racket's major axis toward the tip, u along the minor
axis "upward", both as percentages of the respective semi-axis, so the
racket boundary maps to the circle u^2 + v^2 = 100^2.

An ellipse's rotation is only defined modulo pi, so both axis directions
need a sign convention: +v points toward the major-axis endpoint that sits
higher in the image (camera behind the player, racket head up at impact)
unless the caller overrides tip_sign, and +u is the minor-axis direction
with a negative image-row component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .contours import Ellipse


@dataclass(frozen=True)
class RelativePosition:
    u_pct: float  # lateral, + = upward along the racket face
    v_pct: float  # longitudinal, + = toward the tip


def default_tip_sign(racket: Ellipse) -> int:
    """+1 if the major-axis direction (cos theta, sin theta) already points
    to the higher (smaller y) endpoint, else -1. Horizontal major axis
    defaults to +1."""
    return -1 if math.sin(racket.theta) > 0 else 1


def _u_sign(racket: Ellipse) -> int:
    # Minor-axis direction is (-sin theta, cos theta); flip when it points
    # down the image (positive row component).
    return -1 if math.cos(racket.theta) > 0 else 1


def relative_position(
    ball_center: tuple[float, float], racket: Ellipse, tip_sign: int
) -> RelativePosition:
    """Map a pixel position into racket-relative uv percentages."""
    if tip_sign not in (1, -1):
        raise ValueError("tip_sign must be +1 or -1")
    dx = ball_center[0] - racket.cx
    dy = ball_center[1] - racket.cy
    ct, st = math.cos(racket.theta), math.sin(racket.theta)
    major = dx * ct + dy * st
    minor = -dx * st + dy * ct
    return RelativePosition(
        u_pct=100.0 * _u_sign(racket) * minor / racket.b,
        v_pct=100.0 * tip_sign * major / racket.a,
    )


def position_from_relative(
    rel: RelativePosition, racket: Ellipse, tip_sign: int
) -> tuple[float, float]:
    """Exact inverse of relative_position."""
    if tip_sign not in (1, -1):
        raise ValueError("tip_sign must be +1 or -1")
    major = rel.v_pct * tip_sign * racket.a / 100.0
    minor = rel.u_pct * _u_sign(racket) * racket.b / 100.0
    ct, st = math.cos(racket.theta), math.sin(racket.theta)
    return racket.cx + major * ct - minor * st, racket.cy + major * st + minor * ct
