"""Locate a tennis ball's impact position on the racket from an
event-camera stream: swing ranges from event rates, impact timing from
polarity asymmetry in time symmetry (PATS), ball/racket contours as
ellipses, and the racket-relative uv position."""

from .contours import (
    BallNotFoundError,
    ContourParams,
    Ellipse,
    RacketNotFoundError,
    activity_noise_filter,
    binarize,
    detect_ellipses,
    fit_ellipse,
    morphological_closing,
    roi_crop,
    select_ball,
    select_racket,
)
from .events import (
    Event,
    EventPacket,
    EventStream,
    packet_at,
    polarity_mask,
    reverse,
    split_at,
    to_event_image,
    to_time_surface,
)
from .geometry import (
    RelativePosition,
    default_tip_sign,
    position_from_relative,
    relative_position,
)
from .io import IngestError, StreamHeader, read_binary, read_csv, read_stream, write_binary, write_csv
from .pipeline import ConfigError, PipelineConfig, SwingOutcome, locate, outcome_dict
from .swing import (
    SwingParams,
    SwingRange,
    detect_swings,
    event_rate_series,
    rolling_stats,
)
from .synth import (
    ArtifactSpec,
    BallSpec,
    FlickerSpec,
    GroundTruth,
    ImpactSpec,
    RacketSpec,
    SceneSpec,
    generate,
    generate_rally,
)
from .timing import (
    FocalPattern,
    ImpactParams,
    NoImpactError,
    PatsPoint,
    detect_impact,
    focal_time,
    laplacian_filter,
    pats_image,
    rho_series,
)

__version__ = "0.1.0"
