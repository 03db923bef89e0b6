"""Deterministic sparse event recordings of shapes under affine motion."""

from .errors import (
    BatchError,
    BoundsError,
    ConfigError,
    CorruptFile,
    DimensionMismatch,
    EvshapeError,
    FormatError,
    InvalidThreshold,
    SingularTransform,
)
from .eventgen import Event, EventFrame, InitMode, exact_diff, init_integrator, integrate_step
from .geometry import CoverageGrid, ShapeTemplate, contains, rasterize
from .io import (
    read_gerd,
    read_index,
    read_recording,
    validate_recording,
    write_gerd,
    write_index,
    write_recording,
)
from .noise import NoiseConfig
from .pipeline import (
    EVENTS_DTYPE,
    LabelRecord,
    Recording,
    RenderParameters,
    TransformParams,
    generate,
    generate_batch,
)
from .transforms import AccelerationProfile, AffineMap, AffineState, step, to_map

__version__ = "0.1.0"

__all__ = [
    "AccelerationProfile",
    "AffineMap",
    "AffineState",
    "BatchError",
    "BoundsError",
    "ConfigError",
    "CorruptFile",
    "CoverageGrid",
    "DimensionMismatch",
    "EVENTS_DTYPE",
    "Event",
    "EventFrame",
    "EvshapeError",
    "FormatError",
    "InitMode",
    "InvalidThreshold",
    "LabelRecord",
    "NoiseConfig",
    "Recording",
    "RenderParameters",
    "ShapeTemplate",
    "SingularTransform",
    "TransformParams",
    "contains",
    "exact_diff",
    "generate",
    "generate_batch",
    "init_integrator",
    "integrate_step",
    "rasterize",
    "read_gerd",
    "read_index",
    "read_recording",
    "step",
    "to_map",
    "validate_recording",
    "write_gerd",
    "write_index",
    "write_recording",
    "__version__",
]
