"""Ball and racket contour extraction around the impact time.

Event images built from packets centered at t_imp (short window for the
fast racket, longer for the ball) are denoised, binarized, closed, and
optionally cropped to the busiest region. Component boundaries are fitted
with direct least-squares ellipses; the second-largest ellipse is the
string-bed boundary inside the racket frame and the largest ellipse whose
center falls inside it is the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .events import EventPacket

TILE = 32  # px, ROI tiling
ROI_KEEP_FRACTION = 0.25


class RacketNotFoundError(RuntimeError):
    """Fewer than two ellipses: no string-bed boundary to select."""


class BallNotFoundError(RuntimeError):
    """No ellipse qualifies as the ball inside the racket."""


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float  # semi-major, px
    b: float  # semi-minor, px
    theta: float  # rotation of the major axis vs. x-axis, [0, pi)

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError("require a >= b > 0")

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b

    def contains_center(self, x: float, y: float) -> bool:
        """Strict interior test via the normalized quadratic form."""
        dx, dy = x - self.cx, y - self.cy
        ct, st = math.cos(self.theta), math.sin(self.theta)
        m = (dx * ct + dy * st) / self.a
        n = (-dx * st + dy * ct) / self.b
        return m * m + n * n < 1.0

    def boundary_point(self, phi: float) -> tuple[float, float]:
        ct, st = math.cos(self.theta), math.sin(self.theta)
        ex, ey = self.a * math.cos(phi), self.b * math.sin(phi)
        return self.cx + ex * ct - ey * st, self.cy + ex * st + ey * ct

    def translated(self, dx: float, dy: float) -> "Ellipse":
        return Ellipse(self.cx + dx, self.cy + dy, self.a, self.b, self.theta)


@dataclass(frozen=True)
class ContourParams:
    t_acc_ball: int = 2000
    t_acc_racket: int = 500
    noise_window: int = 10_000  # us
    noise_radius: int = 1  # px, Chebyshev
    closing_kernel: int = 5  # px, odd
    roi_enabled: bool = False
    min_contour_points: int = 20
    min_semi_minor: float = 3.0

    def __post_init__(self):
        if min(
            self.t_acc_ball,
            self.t_acc_racket,
            self.noise_window,
            self.noise_radius,
            self.closing_kernel,
            self.min_contour_points,
            self.min_semi_minor,
        ) <= 0:
            raise ValueError("all contour parameters must be positive")
        if self.closing_kernel % 2 == 0:
            raise ValueError("closing_kernel must be odd")


def activity_noise_filter(packet: EventPacket, noise_window: int, noise_radius: int) -> EventPacket:
    """Keep events with a recent neighbor within Chebyshev distance
    noise_radius and the past noise_window microseconds.

    Single pass over a per-pixel last-timestamp grid; the output is always
    a subsequence of the input.
    """
    r = noise_radius
    last = np.full((packet.height + 2 * r, packet.width + 2 * r), np.iinfo(np.int64).min, np.int64)
    keep = np.zeros(len(packet), dtype=bool)
    xs, ys, ts = packet.x, packet.y, packet.t
    for i in range(len(packet)):
        x, y, t = int(xs[i]) + r, int(ys[i]) + r, int(ts[i])
        if last[y - r : y + r + 1, x - r : x + r + 1].max() >= t - noise_window:
            keep[i] = True
        last[y, x] = t
    idx = np.flatnonzero(keep)
    return EventPacket(
        packet.x[idx], packet.y[idx], packet.p[idx], packet.t[idx],
        packet.width, packet.height, packet.ascending,
    )


def binarize(image: np.ndarray) -> np.ndarray:
    """1 where the event image holds any polarity, else 0."""
    return (image != 0).astype(np.uint8)


def morphological_closing(image: np.ndarray, kernel_size: int) -> np.ndarray:
    """Dilation then erosion with a square element; outside counts as 0."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError("kernel_size must be odd and >= 1")
    if kernel_size == 1:
        return image.copy()
    kernel = np.ones((kernel_size, kernel_size), np.uint8)
    return cv2.morphologyEx(
        image, cv2.MORPH_CLOSE, kernel, borderType=cv2.BORDER_CONSTANT, borderValue=0
    )


def roi_crop(image: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    """Crop to the tiles holding most of the activity.

    The image is partitioned into 32x32 tiles; tiles with at least 25% of
    the maximum tile count are kept and their bounding box, expanded by one
    tile, is returned together with its (x, y) offset. An empty image comes
    back unchanged at offset (0, 0).
    """
    h, w = image.shape
    th, tw = -(-h // TILE), -(-w // TILE)
    padded = np.zeros((th * TILE, tw * TILE), dtype=np.int64)
    padded[:h, :w] = image
    counts = padded.reshape(th, TILE, tw, TILE).sum(axis=(1, 3))
    top = counts.max()
    if top == 0:
        return image, (0, 0)
    rows, cols = np.nonzero(counts >= ROI_KEEP_FRACTION * top)
    r0 = max(int(rows.min()) - 1, 0)
    r1 = min(int(rows.max()) + 2, th)
    c0 = max(int(cols.min()) - 1, 0)
    c1 = min(int(cols.max()) + 2, tw)
    y0, y1 = r0 * TILE, min(r1 * TILE, h)
    x0, x1 = c0 * TILE, min(c1 * TILE, w)
    return image[y0:y1, x0:x1], (x0, y0)


def fit_ellipse(xs: np.ndarray, ys: np.ndarray) -> Ellipse | None:
    """Direct least-squares conic fit constrained to ellipses
    (Fitzgibbon's constraint, Halir-Flusser partitioning).

    Returns None when the points do not determine an ellipse.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 5:
        return None
    mx, my = xs.mean(), ys.mean()
    x, y = xs - mx, ys - my
    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t_mat = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError:
        return None
    m = s1 + s2 @ t_mat
    # Premultiply by inv(C1) for the constraint 4ac - b^2 = 1.
    m = np.array([m[2] / 2.0, -m[1], m[0] / 2.0])
    try:
        eigval, eigvec = np.linalg.eig(m)
    except np.linalg.LinAlgError:
        return None
    eigval, eigvec = np.real(eigval), np.real(eigvec)
    cond = 4.0 * eigvec[0] * eigvec[2] - eigvec[1] ** 2
    good = np.flatnonzero((cond > 0) & np.isfinite(eigval))
    if good.size == 0:
        return None
    a1 = eigvec[:, good[0]]
    coeffs = np.concatenate([a1, t_mat @ a1])  # A, B, C, D, E, F (centered frame)
    return _conic_to_ellipse(coeffs, mx, my)


def _conic_to_ellipse(coeffs: np.ndarray, mx: float, my: float) -> Ellipse | None:
    a, b, c, d, e, f = coeffs
    den = b * b - 4.0 * a * c
    if den >= 0:
        return None
    cx = (2.0 * c * d - b * e) / den
    cy = (2.0 * a * e - b * d) / den
    f0 = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f
    quad = np.array([[a, b / 2.0], [b / 2.0, c]])
    lam, vec = np.linalg.eigh(quad)
    with np.errstate(divide="ignore", invalid="ignore"):
        axes_sq = -f0 / lam
    if np.any(axes_sq <= 0) or not np.all(np.isfinite(axes_sq)):
        return None
    axes = np.sqrt(axes_sq)
    major = int(np.argmax(axes))
    theta = math.atan2(vec[1, major], vec[0, major]) % math.pi
    return Ellipse(cx + mx, cy + my, float(axes[major]), float(axes[1 - major]), theta)


def detect_ellipses(
    image: np.ndarray, min_contour_points: int, min_semi_minor: float
) -> list[Ellipse]:
    """Fit an ellipse to the outer boundary of each 8-connected component.

    Boundaries come from border following on the component mask; fits with
    too few boundary points, sub-threshold semi-minor axes, or non-ellipse
    conics are dropped. Result is sorted by area, largest first.
    """
    n_labels, labels = cv2.connectedComponents(image.astype(np.uint8), connectivity=8)
    out: list[Ellipse] = []
    for label in range(1, n_labels):
        mask = (labels == label).astype(np.uint8)
        boundaries, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_NONE)
        for boundary in boundaries:
            pts = boundary.reshape(-1, 2)
            if len(pts) < min_contour_points:
                continue
            ellipse = fit_ellipse(pts[:, 0], pts[:, 1])
            if ellipse is None or ellipse.b < min_semi_minor:
                continue
            out.append(ellipse)
    out.sort(key=lambda e: e.area, reverse=True)
    return out


def select_racket(ellipses: list[Ellipse]) -> Ellipse:
    """The second-largest ellipse: the string-bed boundary just inside the
    racket frame (the largest is the frame's outer rim)."""
    if len(ellipses) < 2:
        raise RacketNotFoundError(
            f"need at least 2 ellipses to locate the racket, got {len(ellipses)}"
        )
    return ellipses[1]


def select_ball(ellipses: list[Ellipse], racket: Ellipse) -> Ellipse:
    """Largest ellipse centered strictly inside the racket and smaller than
    it in area."""
    best: Ellipse | None = None
    for e in ellipses:
        if e.area >= racket.area:
            continue
        if not racket.contains_center(e.cx, e.cy):
            continue
        if best is None or e.area > best.area:
            best = e
    if best is None:
        raise BallNotFoundError("no ellipse qualifies as the ball inside the racket")
    return best
