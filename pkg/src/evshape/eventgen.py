"""Signed events from consecutive coverage grids.

Two routes produce events: `exact_diff` (binary frame differencing, the k=1
fast path) and the threshold integrator (`init_integrator` / `integrate_step`)
which banks fractional sub-pixel coverage changes per pixel and fires when the
signed budget crosses +/- threshold. With k=1, threshold=1 and zero-initialized
accumulators the integrator reduces exactly to `exact_diff`.

Emission is capped at one event per (pixel, polarity, frame) - a refractory
pixel. Each emission subtracts exactly one threshold from the accumulator, so
charge is conserved: surplus stays banked and fires on later frames even if
the input stops changing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, InvalidThreshold
from .geometry import CoverageGrid


class Event(NamedTuple):
    """A single polarity change: the atomic output unit."""

    t: int
    x: int
    y: int
    polarity: int  # +1 or -1


@dataclass(frozen=True)
class EventFrame:
    """Sparse address-event set for one timestep.

    Stored as coordinate arrays sorted by (y, x, polarity); at most one event
    per (x, y, polarity).
    """

    t: int
    xs: np.ndarray  # uint16
    ys: np.ndarray  # uint16
    polarities: np.ndarray  # int8, +1/-1

    @classmethod
    def empty(cls, t: int) -> "EventFrame":
        return cls(
            t,
            np.empty(0, dtype=np.uint16),
            np.empty(0, dtype=np.uint16),
            np.empty(0, dtype=np.int8),
        )

    @classmethod
    def from_arrays(cls, t: int, xs, ys, polarities) -> "EventFrame":
        """Build a frame in canonical order, coalescing duplicates."""
        rec = np.empty(len(xs), dtype=[("y", "u2"), ("x", "u2"), ("p", "i1")])
        rec["y"] = ys
        rec["x"] = xs
        rec["p"] = polarities
        rec = np.unique(rec)
        return cls(
            t,
            rec["x"].astype(np.uint16),
            rec["y"].astype(np.uint16),
            rec["p"].astype(np.int8),
        )

    @property
    def count(self) -> int:
        return len(self.xs)

    def to_events(self) -> list[Event]:
        return [
            Event(self.t, int(x), int(y), int(p))
            for x, y, p in zip(self.xs, self.ys, self.polarities)
        ]


class InitMode(enum.Enum):
    """Integrator accumulator initialization."""

    ZEROS = "zeros"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class IntegratorState:
    """Per-pixel signed charge accumulator plus the previous coverage grid."""

    accum: np.ndarray  # (height, width) float64
    threshold: float
    prev_counts: CoverageGrid


def _require_same_grid(a: CoverageGrid, b: CoverageGrid) -> None:
    if (a.width, a.height, a.upsample) != (b.width, b.height, b.upsample):
        raise DimensionMismatch(
            f"grids differ: {a.width}x{a.height}@k={a.upsample} "
            f"vs {b.width}x{b.height}@k={b.upsample}"
        )


def _frame_from_masks(t: int, pos: np.ndarray, neg: np.ndarray) -> EventFrame:
    pys, pxs = np.nonzero(pos)
    nys, nxs = np.nonzero(neg)
    xs = np.concatenate([pxs, nxs])
    ys = np.concatenate([pys, nys])
    ps = np.concatenate(
        [np.ones(len(pxs), dtype=np.int8), -np.ones(len(nxs), dtype=np.int8)]
    )
    # Canonical (y, x, polarity) order; pos/neg masks are disjoint so no
    # coalescing is needed, just a sort.
    order = np.lexsort((ps, xs, ys))
    return EventFrame(
        t,
        xs[order].astype(np.uint16),
        ys[order].astype(np.uint16),
        ps[order],
    )


def exact_diff(prev: CoverageGrid, curr: CoverageGrid, t: int = 0) -> EventFrame:
    """Binary frame differencing: 0->1 fires +1, 1->0 fires -1.

    Both grids must be binary rasters (k=1) with equal dimensions.
    """
    _require_same_grid(prev, curr)
    if prev.upsample != 1:
        raise ValueError("exact_diff requires binary (k=1) grids")
    a = prev.counts != 0
    b = curr.counts != 0
    return _frame_from_masks(t, b & ~a, a & ~b)


def init_integrator(
    width: int,
    height: int,
    k: int,
    threshold: float,
    init_mode: InitMode,
    rng: np.random.Generator | None = None,
    initial_counts: CoverageGrid | None = None,
) -> IntegratorState:
    """Fresh integrator state.

    UNIFORM mode draws each accumulator i.i.d. from (-threshold/2, threshold/2),
    which staggers first emissions and spreads events more evenly in time;
    ZEROS starts every pixel at zero charge. prev_counts should be the
    rasterization of the initial scene so the shape's first appearance does
    not fire a full-silhouette burst.
    """
    if threshold <= 0:
        raise InvalidThreshold(f"threshold must be > 0, got {threshold}")
    if init_mode is InitMode.ZEROS:
        accum = np.zeros((height, width), dtype=float)
    elif init_mode is InitMode.UNIFORM:
        if rng is None:
            raise ValueError("UNIFORM init requires an rng")
        accum = rng.uniform(-threshold / 2.0, threshold / 2.0, size=(height, width))
    else:  # pragma: no cover - exhaustive over the enum
        raise ValueError(f"unknown init mode {init_mode!r}")
    if initial_counts is None:
        initial_counts = CoverageGrid.zeros(width, height, k)
    if (initial_counts.width, initial_counts.height, initial_counts.upsample) != (
        width,
        height,
        k,
    ):
        raise DimensionMismatch("initial_counts does not match integrator dimensions")
    return IntegratorState(accum, float(threshold), initial_counts)


def integrate_step(
    state: IntegratorState,
    curr: CoverageGrid,
    t: int,
    recording: bool,
) -> tuple[IntegratorState, EventFrame]:
    """Bank the coverage delta and emit where the accumulator crosses threshold.

    At most one event per pixel and polarity per frame; each emission removes
    exactly one threshold of charge, leaving any excess banked for later
    frames. Warm-up frames (recording=False) update state but discard events.
    """
    _require_same_grid(state.prev_counts, curr)
    accum = state.accum + (curr.counts - state.prev_counts.counts)
    pos = accum >= state.threshold
    neg = accum <= -state.threshold
    accum = accum - state.threshold * pos + state.threshold * neg
    frame = _frame_from_masks(t, pos, neg) if recording else EventFrame.empty(t)
    return IntegratorState(accum, state.threshold, curr), frame
