"""Stochastic corruption of the clean signal path.

Three independent mechanisms, each applied at its own pipeline stage:

* shape noise   - pixels inside the shape fail to report coverage; applied to
                  the grid BEFORE differencing/integration, which is what makes
                  both-polarity events appear inside the shape.
* event noise   - events are dropped after differencing/integration.
* background    - pixels fire spontaneously, independent of the stimulus;
                  added last so it is never thinned by event-sampling noise.

All three are the bitwise identity at p = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .eventgen import EventFrame
from .geometry import CoverageGrid


@dataclass(frozen=True)
class NoiseConfig:
    """Per-mechanism probabilities, each in [0, 1]."""

    p_background: float = 0.0  # fire probability per pixel per frame
    p_shape: float = 0.0  # dropout probability per covered pixel per frame
    p_event: float = 0.0  # drop probability per event

    def __post_init__(self):
        for name in ("p_background", "p_shape", "p_event"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")

    @property
    def any_nonzero(self) -> bool:
        return self.p_background > 0 or self.p_shape > 0 or self.p_event > 0


def apply_shape_noise(
    grid: CoverageGrid, p_shape: float, rng: np.random.Generator
) -> CoverageGrid:
    """Zero each covered pixel independently with probability p_shape.

    Dropouts are i.i.d. per frame, so a pixel lost on one frame usually
    reappears on the next, firing interior events of both polarities.
    """
    if p_shape <= 0.0:
        return grid
    drop = rng.random(grid.counts.shape) < p_shape
    counts = np.where(drop & (grid.counts > 0), 0, grid.counts)
    return CoverageGrid(grid.width, grid.height, grid.upsample, counts)


def apply_event_noise(
    frame: EventFrame, p_event: float, rng: np.random.Generator
) -> EventFrame:
    """Drop each event independently with probability p_event."""
    if p_event <= 0.0:
        return frame
    keep = rng.random(frame.count) >= p_event
    return EventFrame(frame.t, frame.xs[keep], frame.ys[keep], frame.polarities[keep])


def apply_background_noise(
    frame: EventFrame,
    p_background: float,
    width: int,
    height: int,
    rng: np.random.Generator,
) -> EventFrame:
    """Fire each pixel with probability p_background, polarity 50/50.

    Never removes events; collisions with an existing (x, y, polarity) are
    coalesced into one event.
    """
    if p_background <= 0.0:
        return frame
    fire = rng.random((height, width)) < p_background
    ys, xs = np.nonzero(fire)
    if len(xs) == 0:
        return frame
    pols = (rng.integers(0, 2, size=len(xs)) * 2 - 1).astype(np.int8)
    return EventFrame.from_arrays(
        frame.t,
        np.concatenate([frame.xs, xs.astype(np.uint16)]),
        np.concatenate([frame.ys, ys.astype(np.uint16)]),
        np.concatenate([frame.polarities, pols]),
    )
