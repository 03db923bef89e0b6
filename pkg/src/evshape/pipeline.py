"""Recording orchestration: config -> warm-up -> per-frame loop -> events + labels.

`generate` is a pure function of RenderParameters (seed included): every
stochastic stage draws from its own named substream of the config seed, so
reruns, platforms with the same float semantics, and any parallelism level
produce byte-identical recordings.

Per frame: step transforms -> rasterize -> shape noise -> integrate ->
event-sampling noise -> background noise. Warm-up frames run the same loop
(transforms and integrator both advance) but discard their events; recorded
timestep indices start at 0 on the first post-warm-up frame. Acceleration
profiles see the recorded-frame index, i.e. negative t during warm-up.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as rngmod
from .errors import BatchError, ConfigError
from .eventgen import EventFrame, InitMode, init_integrator, integrate_step
from .geometry import ShapeTemplate, rasterize
from .noise import (
    NoiseConfig,
    apply_background_noise,
    apply_event_noise,
    apply_shape_noise,
)
from .transforms import (
    SIGMA_ROTATE,
    SIGMA_SCALE,
    SIGMA_SHEAR,
    SIGMA_TRANSLATE,
    AccelerationProfile,
    AffineState,
    gaussian_pair,
    gaussian_scalar,
    step,
    to_map,
)

# In-memory event table layout; t is the recorded timestep, p is +1/-1.
EVENTS_DTYPE = np.dtype([("t", "<u4"), ("x", "<u2"), ("y", "<u2"), ("p", "i1")])

_PAIR_BLOCKS = ("translate", "scale", "shear")
_DEFAULT_SIGMAS = {
    "translate": SIGMA_TRANSLATE,
    "scale": SIGMA_SCALE,
    "rotate": SIGMA_ROTATE,
    "shear": SIGMA_SHEAR,
}


@dataclass(frozen=True)
class TransformParams:
    """One transform block of the config.

    start / velocity_start are pairs for translate, scale and shear, scalars
    for rotate; None means "use the default": identity start values (sampled
    placement for translate), zero starting velocity. velocity_delta is the
    per-step acceleration: None for the block's default Gaussian sigma, a
    float for an explicit sigma, or a callable (t, rng) -> deltas for an
    arbitrary profile. Only enabled blocks move.
    """

    enabled: bool = False
    start: object = None
    velocity_start: object = None
    velocity_delta: object = None


@dataclass(frozen=True)
class RenderParameters:
    """Full generation config; the seed makes it a complete recipe."""

    width: int = 64
    height: int = 64
    length: int = 128
    upsample: int = 8
    threshold: float | None = None  # None -> upsample**2 (one pixel of change)
    warmup: int = 16
    shape: ShapeTemplate = ShapeTemplate.SQUARE
    base_size: float = 16.0
    seed: int = 0
    translate: TransformParams = field(default_factory=TransformParams)
    scale: TransformParams = field(default_factory=TransformParams)
    rotate: TransformParams = field(default_factory=TransformParams)
    shear: TransformParams = field(default_factory=TransformParams)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    integrator_init: InitMode = InitMode.UNIFORM

    @property
    def resolved_threshold(self) -> float:
        if self.threshold is None:
            return float(self.upsample * self.upsample)
        return float(self.threshold)

    def validate(self) -> list[str]:
        """Return all invariant violations (empty list means valid)."""
        problems = []
        if self.width < 8 or self.height < 8:
            problems.append(f"width and height must be >= 8, got {self.width}x{self.height}")
        if self.length < 1:
            problems.append(f"length must be >= 1, got {self.length}")
        if self.upsample < 1:
            problems.append(f"upsample must be >= 1, got {self.upsample}")
        if self.warmup < 0:
            problems.append(f"warmup must be >= 0, got {self.warmup}")
        if self.threshold is not None and self.threshold <= 0:
            problems.append(f"threshold must be > 0, got {self.threshold}")
        if self.base_size <= 0:
            problems.append(f"base_size must be > 0, got {self.base_size}")
        if not 0 <= self.seed < rngmod.MAX_SEED:
            problems.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        for name in ("translate", "scale", "rotate", "shear"):
            problems.extend(_check_block(name, getattr(self, name)))
        if self.scale.start is not None:
            sx, sy = self.scale.start
            if sx <= 0 or sy <= 0:
                problems.append(f"scale start must be positive, got {self.scale.start}")
        return problems

    def to_dict(self) -> dict:
        """JSON-ready dict; custom acceleration callables echo as 'custom'."""
        return {
            "width": self.width,
            "height": self.height,
            "length": self.length,
            "upsample": self.upsample,
            "threshold": self.threshold,
            "warmup": self.warmup,
            "shape": self.shape.value,
            "base_size": self.base_size,
            "seed": self.seed,
            "translate": _block_to_dict(self.translate),
            "scale": _block_to_dict(self.scale),
            "rotate": _block_to_dict(self.rotate),
            "shear": _block_to_dict(self.shear),
            "noise": asdict(self.noise),
            "integrator_init": self.integrator_init.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RenderParameters":
        """Strict inverse of to_dict; unknown keys are errors, not typos."""
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        kwargs: dict = dict(doc)
        if "shape" in kwargs:
            kwargs["shape"] = _parse_enum(ShapeTemplate, kwargs["shape"], "shape")
        if "integrator_init" in kwargs:
            kwargs["integrator_init"] = _parse_enum(
                InitMode, kwargs["integrator_init"], "integrator_init"
            )
        for name in ("translate", "scale", "rotate", "shear"):
            if name in kwargs:
                kwargs[name] = _block_from_dict(name, kwargs[name])
        if "noise" in kwargs and not isinstance(kwargs["noise"], NoiseConfig):
            noise_doc = kwargs["noise"]
            bad = set(noise_doc) - {"p_background", "p_shape", "p_event"}
            if bad:
                raise ConfigError(f"unknown noise key(s): {', '.join(sorted(bad))}")
            kwargs["noise"] = NoiseConfig(**noise_doc)
        return cls(**kwargs)


def _check_block(name: str, block: TransformParams) -> list[str]:
    problems = []
    pair = name in _PAIR_BLOCKS
    for attr in ("start", "velocity_start"):
        val = getattr(block, attr)
        if val is None:
            continue
        if pair:
            if not (isinstance(val, (tuple, list)) and len(val) == 2):
                problems.append(f"{name}.{attr} must be a pair, got {val!r}")
        elif isinstance(val, (tuple, list)):
            problems.append(f"{name}.{attr} must be a scalar, got {val!r}")
    delta = block.velocity_delta
    if delta is not None and not callable(delta):
        if isinstance(delta, (int, float)):
            if delta < 0:
                problems.append(f"{name}.velocity_delta sigma must be >= 0, got {delta}")
        else:
            problems.append(
                f"{name}.velocity_delta must be a sigma or a callable, got {delta!r}"
            )
    return problems


def _block_to_dict(block: TransformParams) -> dict:
    delta = block.velocity_delta
    if delta is not None and not isinstance(delta, (int, float)):
        delta = "custom"
    return {
        "enabled": block.enabled,
        "start": list(block.start) if isinstance(block.start, (tuple, list)) else block.start,
        "velocity_start": list(block.velocity_start)
        if isinstance(block.velocity_start, (tuple, list))
        else block.velocity_start,
        "velocity_delta": delta,
    }


def _block_from_dict(name: str, doc) -> TransformParams:
    if isinstance(doc, TransformParams):
        return doc
    bad = set(doc) - {"enabled", "start", "velocity_start", "velocity_delta"}
    if bad:
        raise ConfigError(f"unknown {name} key(s): {', '.join(sorted(bad))}")
    kwargs = dict(doc)
    for attr in ("start", "velocity_start"):
        if isinstance(kwargs.get(attr), list):
            kwargs[attr] = tuple(kwargs[attr])
    return TransformParams(**kwargs)


def _parse_enum(enum_cls, value, what: str):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        options = ", ".join(m.value for m in enum_cls)
        raise ConfigError(f"bad {what} {value!r}; expected one of: {options}") from None


@dataclass(frozen=True)
class LabelRecord:
    """Ground truth for one recorded frame: the state used to render it."""

    t: int
    shape: str
    tx: float
    ty: float
    sx: float
    sy: float
    theta: float
    shx: float
    shy: float
    vtx: float
    vty: float
    vsx: float
    vsy: float
    vtheta: float
    vshx: float
    vshy: float


@dataclass(eq=False)
class Recording:
    """One generated sequence: config, sorted event table, per-frame labels."""

    params: RenderParameters
    events: np.ndarray  # EVENTS_DTYPE, sorted by (t, y, x, p)
    labels: list[LabelRecord]

    @property
    def event_count(self) -> int:
        return len(self.events)

    def frame_events(self, t: int) -> np.ndarray:
        return self.events[self.events["t"] == t]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.params == other.params
            and np.array_equal(self.events, other.events)
            and self.labels == other.labels
        )


def _delta_source(name: str, block: TransformParams) -> Callable | None:
    if not block.enabled:
        return None
    delta = block.velocity_delta
    if callable(delta):
        return delta
    sigma = _DEFAULT_SIGMAS[name] if delta is None else float(delta)
    if name in _PAIR_BLOCKS:
        return gaussian_pair(sigma)
    return gaussian_scalar(sigma)


def _initial_state(params: RenderParameters, place_rng: np.random.Generator) -> AffineState:
    if params.translate.start is not None:
        tx, ty = (float(v) for v in params.translate.start)
    else:
        # Unset placement: uniform over the central 50% of the frame.
        tx = float(place_rng.uniform(0.25 * params.width, 0.75 * params.width))
        ty = float(place_rng.uniform(0.25 * params.height, 0.75 * params.height))
    sx, sy = (
        (float(params.scale.start[0]), float(params.scale.start[1]))
        if params.scale.start is not None
        else (1.0, 1.0)
    )
    theta = float(params.rotate.start) if params.rotate.start is not None else 0.0
    shx, shy = (
        (float(params.shear.start[0]), float(params.shear.start[1]))
        if params.shear.start is not None
        else (0.0, 0.0)
    )

    def pair(val):
        return (0.0, 0.0) if val is None else (float(val[0]), float(val[1]))

    vtx, vty = pair(params.translate.velocity_start)
    vsx, vsy = pair(params.scale.velocity_start)
    vtheta = (
        float(params.rotate.velocity_start)
        if params.rotate.velocity_start is not None
        else 0.0
    )
    vshx, vshy = pair(params.shear.velocity_start)
    return AffineState(
        tx=tx, ty=ty, sx=sx, sy=sy, theta=theta, shx=shx, shy=shy,
        vtx=vtx, vty=vty, vsx=vsx, vsy=vsy, vtheta=vtheta, vshx=vshx, vshy=vshy,
    )


def _label(t: int, shape: ShapeTemplate, s: AffineState) -> LabelRecord:
    return LabelRecord(
        t=t, shape=shape.value,
        tx=s.tx, ty=s.ty, sx=s.sx, sy=s.sy, theta=s.theta, shx=s.shx, shy=s.shy,
        vtx=s.vtx, vty=s.vty, vsx=s.vsx, vsy=s.vsy, vtheta=s.vtheta,
        vshx=s.vshx, vshy=s.vshy,
    )


def _pack_events(frames: list[EventFrame]) -> np.ndarray:
    total = sum(f.count for f in frames)
    events = np.empty(total, dtype=EVENTS_DTYPE)
    pos = 0
    for f in frames:
        n = f.count
        events["t"][pos : pos + n] = f.t
        events["x"][pos : pos + n] = f.xs
        events["y"][pos : pos + n] = f.ys
        events["p"][pos : pos + n] = f.polarities
        pos += n
    return events


def generate(params: RenderParameters) -> Recording:
    """Generate one recording; deterministic in params (seed included)."""
    problems = params.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    any_enabled = any(
        getattr(params, name).enabled for name in ("translate", "scale", "rotate", "shear")
    )
    if not any_enabled and not params.noise.any_nonzero:
        warnings.warn(
            "no transform enabled and all noise probabilities are zero: "
            "the recording will contain no events",
            stacklevel=2,
        )

    profile = AccelerationProfile(
        translate=_delta_source("translate", params.translate),
        scale=_delta_source("scale", params.scale),
        rotate=_delta_source("rotate", params.rotate),
        shear=_delta_source("shear", params.shear),
    )
    traj_rng = rngmod.substream(params.seed, "trajectory")
    place_rng = rngmod.substream(params.seed, "placement")
    integ_rng = rngmod.substream(params.seed, "integrator-init")
    shape_rng = rngmod.substream(params.seed, "shape-noise")
    event_rng = rngmod.substream(params.seed, "event-noise")
    bg_rng = rngmod.substream(params.seed, "background-noise")

    k = params.upsample
    theta = params.resolved_threshold
    state = _initial_state(params, place_rng)

    grid = rasterize(
        params.shape, to_map(state, params.base_size), params.width, params.height, k
    )
    grid = apply_shape_noise(grid, params.noise.p_shape, shape_rng)
    integ = init_integrator(
        params.width, params.height, k, theta, params.integrator_init,
        rng=integ_rng, initial_counts=grid,
    )

    frames: list[EventFrame] = []
    labels: list[LabelRecord] = []
    for step_idx in range(params.warmup + params.length):
        t = step_idx - params.warmup
        recording = t >= 0
        state = step(state, profile, t, traj_rng)
        grid = rasterize(
            params.shape, to_map(state, params.base_size), params.width, params.height, k
        )
        grid = apply_shape_noise(grid, params.noise.p_shape, shape_rng)
        integ, frame = integrate_step(integ, grid, t, recording)
        if recording:
            frame = apply_event_noise(frame, params.noise.p_event, event_rng)
            frame = apply_background_noise(
                frame, params.noise.p_background, params.width, params.height, bg_rng
            )
            frames.append(frame)
            labels.append(_label(t, params.shape, state))
    return Recording(params=params, events=_pack_events(frames), labels=labels)


def generate_batch(
    param_list: Sequence[RenderParameters], parallelism: int = 1
) -> list[Recording]:
    """Generate many recordings; output order matches input order.

    Parallelism is observationally transparent: every recording is identical
    to what a sequential `generate` call would produce. Per-item failures are
    collected and raised together as BatchError, without aborting the rest.
    """
    items = list(param_list)
    if not items:
        return []
    results: dict[int, Recording] = {}
    failures: dict[int, Exception] = {}
    if parallelism <= 1:
        for i, p in enumerate(items):
            try:
                results[i] = generate(p)
            except Exception as exc:  # noqa: BLE001 - reported per index
                failures[i] = exc
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = {i: pool.submit(generate, p) for i, p in enumerate(items)}
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    failures[i] = exc
    if failures:
        raise BatchError(failures, results)
    return [results[i] for i in range(len(items))]
