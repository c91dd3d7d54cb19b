"""Impact-map rendering: racket outline in uv space with one marker per
located impact."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle

DEFAULT_MARKER_RADIUS_PCT = 4.0


def marker_radius_pct(result: dict) -> float:
    """Quarter of the ball diameter, expressed in racket-relative percent.

    Falls back to a fixed radius when a result carries no ellipses.
    """
    ball = result.get("ball")
    racket = result.get("racket")
    if not ball or not racket:
        return DEFAULT_MARKER_RADIUS_PCT
    ball_diameter = ball["a"] + ball["b"]  # 2 * mean semi-axis
    racket_mean = (racket["a"] + racket["b"]) / 2.0
    return 0.25 * 100.0 * ball_diameter / racket_mean / 2.0


def render_impact_map(results: list[dict], out_path) -> None:
    """Draw the racket boundary (the circle u^2 + v^2 = 100^2 in uv space)
    and a black circle per successfully located impact."""
    fig, ax = plt.subplots(figsize=(4, 4))
    boundary = Circle((0, 0), 100.0, fill=False, color="black", linewidth=1.2)
    ax.add_patch(boundary)
    for result in results:
        u, v = result.get("u_pct"), result.get("v_pct")
        if u is None or v is None:
            continue
        ax.add_patch(Circle((u, v), marker_radius_pct(result), color="black"))
    ax.set_xlim(-130, 130)
    ax.set_ylim(-130, 130)
    ax.set_aspect("equal")
    ax.set_xlabel("u (%)")
    ax.set_ylabel("v (%)")
    ax.axhline(0, color="0.8", linewidth=0.6, zorder=0)
    ax.axvline(0, color="0.8", linewidth=0.6, zorder=0)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
