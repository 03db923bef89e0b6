"""Canonical shape templates and supersampled rasterization.

Shapes are implicit closed regions on the unit box [-0.5, 0.5]^2; boundary
points count as inside. Size, position and orientation are carried entirely
by the affine map, never by the template.

Rasterization is a point-in-region test at sub-pixel sample centers: pixel
(x, y) owns the k*k samples (x + (i+0.5)/k, y + (j+0.5)/k) and its coverage
count is how many of them land inside the shape. Counts stay integral and
refine toward the true area as k grows. Pixels outside the grid are clipped
silently (shapes may legally wander out of the field of view).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .transforms import AffineMap


class ShapeTemplate(enum.Enum):
    """The three prototypical filled shapes."""

    SQUARE = "square"
    CIRCLE = "circle"
    TRIANGLE = "triangle"


# Triangle vertices in local coordinates: (-0.5, -0.5), (-0.5, 0.5) and the
# apex (0.5, 0.0) pointing right; an isoceles wedge spanning the unit box.


def contains(shape: ShapeTemplate, u, v):
    """True iff local point (u, v) lies in the closed canonical region.

    Accepts scalars or numpy arrays (elementwise). Pure: same input, same
    answer, no tolerance fudging.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if shape is ShapeTemplate.SQUARE:
        inside = (np.abs(u) <= 0.5) & (np.abs(v) <= 0.5)
    elif shape is ShapeTemplate.CIRCLE:
        inside = u * u + v * v <= 0.25
    elif shape is ShapeTemplate.TRIANGLE:
        # Half-plane tests against the three edges.
        inside = (u >= -0.5) & (v >= 0.5 * u - 0.25) & (v <= 0.25 - 0.5 * u)
    else:  # pragma: no cover - exhaustive over the enum
        raise ValueError(f"unknown shape {shape!r}")
    if inside.ndim == 0:
        return bool(inside)
    return inside


@dataclass(frozen=True)
class CoverageGrid:
    """Per-pixel sub-sample hit counts for one rasterized frame.

    counts has shape (height, width), integer values in [0, upsample**2];
    for upsample == 1 it is a binary raster.
    """

    width: int
    height: int
    upsample: int
    counts: np.ndarray

    @classmethod
    def zeros(cls, width: int, height: int, upsample: int = 1) -> "CoverageGrid":
        return cls(width, height, upsample, np.zeros((height, width), dtype=np.int32))


def rasterize(
    shape: ShapeTemplate,
    xform: AffineMap,
    grid_w: int,
    grid_h: int,
    k: int,
) -> CoverageGrid:
    """Rasterize the transformed shape onto a grid_w x grid_h grid at factor k.

    Sample points are mapped through the inverse affine map into local
    coordinates and tested with `contains`. Raises SingularTransform when the
    map cannot be inverted (degenerate scale/shear).
    """
    if k < 1:
        raise ValueError(f"upsample factor must be >= 1, got {k}")
    if grid_w < 1 or grid_h < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {grid_w}x{grid_h}")
    inv = xform.inverse_linear()
    tx, ty = xform.translation
    # World coordinates of every sub-sample column/row center.
    xs = (np.arange(grid_w * k) + 0.5) / k - tx
    ys = (np.arange(grid_h * k) + 0.5) / k - ty
    u = inv[0, 0] * xs[None, :] + inv[0, 1] * ys[:, None]
    v = inv[1, 0] * xs[None, :] + inv[1, 1] * ys[:, None]
    mask = contains(shape, u, v)
    counts = (
        mask.reshape(grid_h, k, grid_w, k)
        .sum(axis=(1, 3), dtype=np.int32)
    )
    return CoverageGrid(grid_w, grid_h, k, counts)
