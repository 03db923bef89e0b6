"""Time-evolving affine state and 2-D map composition.

The map from canonical shape coordinates to pixel coordinates is composed in
a fixed, documented order:

    world = R(theta) @ Sh(shx, shy) @ S(sx * base, sy * base) @ local + (tx, ty)

so rotation, shear and scale all act about the shape center (tx, ty), and each
parameter's visual effect is independent of translation. Axis convention:
x grows rightwards, y grows downwards (image rows); positive theta rotates
counter-clockwise in those axes, which renders as clockwise on screen.

Parameter evolution is semi-implicit Euler: the velocity update is applied
first, then the position update uses the new velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import SingularTransform

# Below this scale the map degenerates; Brownian scale walks are clamped here
# and their velocity zeroed instead of going singular or negative.
SCALE_MIN = 0.01

# |det| below this is treated as non-invertible.
DET_EPS = 1e-12

# Default Gaussian acceleration sigmas (per step^2) by transform block.
# Pure config defaults tuned for visibly sparse-to-moderate streams at 64x64.
SIGMA_TRANSLATE = 0.05
SIGMA_ROTATE = 0.005
SIGMA_SCALE = 0.001
SIGMA_SHEAR = 0.001


@dataclass(frozen=True)
class AffineState:
    """Current transform parameters plus their per-step velocities."""

    tx: float = 0.0
    ty: float = 0.0
    sx: float = 1.0
    sy: float = 1.0
    theta: float = 0.0
    shx: float = 0.0
    shy: float = 0.0
    vtx: float = 0.0
    vty: float = 0.0
    vsx: float = 0.0
    vsy: float = 0.0
    vtheta: float = 0.0
    vshx: float = 0.0
    vshy: float = 0.0


@dataclass(frozen=True)
class AffineMap:
    """2x3 matrix mapping local shape coordinates to world pixel coordinates."""

    matrix: np.ndarray  # shape (2, 3): [linear | translation]

    @property
    def linear(self) -> np.ndarray:
        return self.matrix[:, :2]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:, 2]

    def det(self) -> float:
        a, b = self.matrix[0, 0], self.matrix[0, 1]
        c, d = self.matrix[1, 0], self.matrix[1, 1]
        return float(a * d - b * c)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map local points, shape (..., 2), into world coordinates."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.translation

    def inverse_linear(self) -> np.ndarray:
        """Inverse of the linear part via the adjugate (no LAPACK, bit-stable)."""
        det = self.det()
        if abs(det) < DET_EPS:
            raise SingularTransform(f"affine map is singular (|det|={abs(det):.3e})")
        a, b = self.matrix[0, 0], self.matrix[0, 1]
        c, d = self.matrix[1, 0], self.matrix[1, 1]
        return np.array([[d, -b], [-c, a]]) / det


# A delta source is called as f(t, rng) and returns the per-step velocity
# increments for its block: a pair for translate/scale/shear, a float for
# rotate. t is the recorded-frame index (negative during warm-up).
DeltaFn = Callable[[int, np.random.Generator], object]


def gaussian_pair(sigma: float) -> DeltaFn:
    def draw(t: int, rng: np.random.Generator):
        d = rng.normal(0.0, sigma, size=2)
        return float(d[0]), float(d[1])

    return draw


def gaussian_scalar(sigma: float) -> DeltaFn:
    def draw(t: int, rng: np.random.Generator):
        return float(rng.normal(0.0, sigma))

    return draw


@dataclass(frozen=True)
class AccelerationProfile:
    """Per-block velocity-delta sources; None disables the block entirely.

    A disabled block leaves both its parameters and velocities untouched.
    Blocks draw in a fixed order (translate, scale, rotate, shear) so stream
    consumption is reproducible.
    """

    translate: DeltaFn | None = None
    scale: DeltaFn | None = None
    rotate: DeltaFn | None = None
    shear: DeltaFn | None = None

    @classmethod
    def brownian(
        cls,
        translate: float | None = SIGMA_TRANSLATE,
        scale: float | None = None,
        rotate: float | None = None,
        shear: float | None = None,
    ) -> "AccelerationProfile":
        """Gaussian acceleration with the given sigma per enabled block."""
        return cls(
            translate=None if translate is None else gaussian_pair(translate),
            scale=None if scale is None else gaussian_pair(scale),
            rotate=None if rotate is None else gaussian_scalar(rotate),
            shear=None if shear is None else gaussian_pair(shear),
        )


def step(
    state: AffineState,
    profile: AccelerationProfile,
    t: int,
    rng: np.random.Generator,
) -> AffineState:
    """Advance one timestep: v' = v + dv(t), then p' = p + v'.

    Scales are clamped to SCALE_MIN; on contact the scale velocity is zeroed
    so a Brownian walk cannot tunnel into negative scale.
    """
    updates = {}
    if profile.translate is not None:
        dvx, dvy = profile.translate(t, rng)
        vtx = state.vtx + dvx
        vty = state.vty + dvy
        updates.update(vtx=vtx, vty=vty, tx=state.tx + vtx, ty=state.ty + vty)
    if profile.scale is not None:
        dsx, dsy = profile.scale(t, rng)
        vsx = state.vsx + dsx
        vsy = state.vsy + dsy
        sx = state.sx + vsx
        sy = state.sy + vsy
        if sx < SCALE_MIN:
            sx, vsx = SCALE_MIN, 0.0
        if sy < SCALE_MIN:
            sy, vsy = SCALE_MIN, 0.0
        updates.update(vsx=vsx, vsy=vsy, sx=sx, sy=sy)
    if profile.rotate is not None:
        dth = profile.rotate(t, rng)
        vtheta = state.vtheta + dth
        updates.update(vtheta=vtheta, theta=state.theta + vtheta)
    if profile.shear is not None:
        dhx, dhy = profile.shear(t, rng)
        vshx = state.vshx + dhx
        vshy = state.vshy + dhy
        updates.update(vshx=vshx, vshy=vshy, shx=state.shx + vshx, shy=state.shy + vshy)
    return replace(state, **updates) if updates else state


def to_map(state: AffineState, base_size: float) -> AffineMap:
    """Compose the local-to-world map for the current state.

    base_size is the shape's edge/diameter in pixels at unit scale; the
    canonical templates live in [-0.5, 0.5]^2, so the identity state maps the
    unit box to an axis-aligned base_size box centered at (tx, ty).
    """
    b = float(base_size)
    cos = math.cos(state.theta)
    sin = math.sin(state.theta)
    ax, ay = state.sx * b, state.sy * b
    # R @ Sh @ S, expanded:  R=[[c,-s],[s,c]], Sh=[[1,shx],[shy,1]], S=diag(ax,ay)
    m00 = (cos - sin * state.shy) * ax
    m01 = (cos * state.shx - sin) * ay
    m10 = (sin + cos * state.shy) * ax
    m11 = (sin * state.shx + cos) * ay
    mat = np.array([[m00, m01, state.tx], [m10, m11, state.ty]], dtype=float)
    amap = AffineMap(mat)
    if abs(amap.det()) < DET_EPS:
        raise SingularTransform(
            f"degenerate linear part (sx={state.sx:g}, sy={state.sy:g}, "
            f"shx={state.shx:g}, shy={state.shy:g})"
        )
    return amap
