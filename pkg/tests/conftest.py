"""Shared synthetic scenes and pipeline settings for the test suite.

The standard scene is a 640x360 sensor with a racket sweeping left to
right through the frame center, a ball arriving diagonally, and uniform
background noise. Geometry and speeds are chosen so that every stage has
a clean signal: the rim's own +/- signature per pixel is slower than the
impact accumulation window, and the frame edges vibrate slightly so rim
pixels keep emitting even where the edge moves tangentially.
"""

from __future__ import annotations

import numpy as np
import pytest

import impact_locator as il
from impact_locator.pipeline import PipelineConfig, locate
from impact_locator.synth import racket_center

W, H = 640, 360
SPEED = 0.002  # px/us racket sweep

# The default rate thresholds target a full-resolution sensor; the test
# scenes are quarter-size, so the swing thresholds scale down with them.
SWING_PARAMS = il.SwingParams(tau_mean=1.5e6, tau_var=1e11)

CONFIG = PipelineConfig(swing=SWING_PARAMS)


def make_scene(
    seed=0,
    u=20.0,
    v=-30.0,
    t_imp=175_000,
    theta=np.deg2rad(75),
    shift=0,
    flicker=None,
    artifact=None,
    noise=2e5,
    with_ball=True,
    x_imp=None,
):
    """One swing over [100, 250] ms (plus shift) with impact at frame center
    unless x_imp overrides it."""
    swing = (100_000 + shift, 250_000 + shift)
    t_imp = t_imp + shift
    y_imp = H / 2
    x_imp = W / 2 if x_imp is None else x_imp
    x0 = x_imp - SPEED * (t_imp - swing[0])
    x1 = x_imp + SPEED * (swing[1] - t_imp)
    racket = il.RacketSpec(
        semi_major=100.0,
        semi_minor=72.0,
        rim_width=12.0,
        theta0=theta,
        path=((swing[0], x0, y_imp), (swing[1], x1, y_imp)),
        swing_interval=swing,
        vibration_amp=0.7,
        vibration_period_us=1000,
    )
    ball = None
    impact = None
    if with_ball:
        ball = il.BallSpec(radius=11.0, v_in=(0.004, -0.002), v_out=(-0.004, -0.003), flight_us=25_000)
        impact = il.ImpactSpec(t=t_imp, u_pct=u, v_pct=v)
    return il.SceneSpec(
        sensor_dims=(W, H),
        time_span=(shift, 350_000 + shift),
        racket=racket,
        ball=ball,
        impact=impact,
        flicker=flicker,
        artifact=artifact,
        noise_rate=noise,
        seed=seed,
    )


def flicker_scene(seed=101):
    """Impact off-center, a 100 us flicker burst at the sensor center 40 ms
    earlier: a detector fooled by the flicker also wins the centroid rule."""
    spec = make_scene(seed=seed, x_imp=W / 2 + 80)
    t_f = spec.impact.t - 40_000
    cx, cy = racket_center(spec.racket, t_f)[0]
    region = (int(cx) - 40, int(cy) - 30, int(cx) + 40, int(cy) + 30)
    flicker = il.FlickerSpec(region=region, burst=(t_f - 700, t_f + 700), period_us=100)
    return make_scene(seed=seed, x_imp=W / 2 + 80, flicker=flicker), t_f


def artifact_scene(seed=102):
    """A short bright blob on the racket frame early in the swing, far from
    the sensor center, stronger than the true impact."""
    spec = make_scene(seed=seed)
    t_a = spec.racket.swing_interval[0] + 25_000
    cx, cy = racket_center(spec.racket, t_a)[0]
    artifact = il.ArtifactSpec(center=(float(cx) - 55, float(cy) - 40), radius=22.0, t=t_a, duration_us=1500)
    return make_scene(seed=seed, artifact=artifact), t_a


def noise_scene(seed=103, rate=1e5, span=350_000):
    """Background noise only: the racket stands still and stays silent."""
    racket = il.RacketSpec(
        semi_major=100.0,
        semi_minor=72.0,
        rim_width=12.0,
        theta0=0.5,
        path=((0, W / 2, H / 2), (span, W / 2, H / 2)),
        swing_interval=(0, span),
        vibration_amp=0.0,
    )
    return il.SceneSpec(
        sensor_dims=(W, H), time_span=(0, span), racket=racket, noise_rate=rate, seed=seed
    )


def contour_failure_scene(seed=104):
    """A dense flicker burst spanning the racket around the impact time:
    timing still resolves but the contour image collapses into one blob."""
    spec = make_scene(seed=seed)
    t_imp = spec.impact.t
    cx, cy = racket_center(spec.racket, t_imp)[0]
    region = (int(cx) - 105, int(cy) - 105, int(cx) + 105, int(cy) + 105)
    flicker = il.FlickerSpec(
        region=region, burst=(t_imp - 1200, t_imp + 1200), period_us=100, pixel_fraction=0.08
    )
    return make_scene(seed=seed, flicker=flicker)


def rally_specs(n=3, base_seed=200):
    rng = np.random.default_rng(base_seed)
    specs = []
    for k in range(n):
        specs.append(
            make_scene(
                seed=base_seed + k,
                u=float(rng.uniform(-35, 35)),
                v=float(rng.uniform(-35, 35)),
                shift=k * 350_000,
            )
        )
    return specs


def clean_scene_params(n, base_seed=2024):
    """Randomized (seed, u, v, theta) tuples for the clean-scene batch."""
    rng = np.random.default_rng(base_seed)
    out = []
    for k in range(n):
        out.append(
            (
                base_seed + k,
                float(rng.uniform(-40, 40)),
                float(rng.uniform(-40, 40)),
                float(rng.uniform(np.deg2rad(60), np.deg2rad(84))),
            )
        )
    return out


@pytest.fixture(scope="session")
def clean_scene():
    """One generated standard scene, shared across tests."""
    spec = make_scene(seed=0)
    stream, truth = il.generate(spec)
    return spec, stream, truth


@pytest.fixture(scope="session")
def clean_batch():
    """20 randomized clean scenes run through the full pipeline.

    Returns (records, elapsed_seconds); each record carries the truth and
    the pipeline outcome so the timing and position checks share one run.
    """
    import time

    t0 = time.perf_counter()
    records = []
    for seed, u, v, theta in clean_scene_params(20):
        spec = make_scene(seed=seed, u=u, v=v, theta=theta)
        stream, truth = il.generate(spec)
        outcomes = locate(stream, CONFIG)
        records.append({"spec": spec, "truth": truth, "outcomes": outcomes})
    return records, time.perf_counter() - t0
