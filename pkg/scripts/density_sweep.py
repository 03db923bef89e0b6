#!/usr/bin/env python3
"""Sweep shrink rates and report how event density scales.

Renders a concentric shrinking circle at several per-step radius decrements
and prints a small table of event counts. Optionally writes the recordings
to disk for inspection with `evshape preview`.
"""

import argparse
from pathlib import Path

from evshape import (
    InitMode,
    RenderParameters,
    ShapeTemplate,
    TransformParams,
    generate,
    write_recording,
)


def shrink_config(rate_px: float, seed: int) -> RenderParameters:
    base = 60.0
    return RenderParameters(
        width=64,
        height=64,
        length=32,
        upsample=8,
        warmup=0,
        shape=ShapeTemplate.CIRCLE,
        base_size=base,
        seed=seed,
        integrator_init=InitMode.ZEROS,
        translate=TransformParams(start=(32.0, 32.0)),
        scale=TransformParams(
            enabled=True,
            velocity_start=(-2 * rate_px / base, -2 * rate_px / base),
            velocity_delta=0.0,
        ),
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rates", type=float, nargs="+", default=[0.125, 0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="write one recording directory per rate")
    args = ap.parse_args()

    print(f"{'rate px/step':>14} {'events':>8} {'events/frame':>13}")
    for rate in args.rates:
        rec = generate(shrink_config(rate, args.seed))
        print(f"{rate:>14.3f} {rec.event_count:>8d} {rec.event_count / 32:>13.1f}")
        if args.out:
            dest = Path(args.out) / f"shrink-{rate:g}"
            write_recording(rec, dest)
            print(f"{'':>14} -> {dest}")


if __name__ == "__main__":
    main()
