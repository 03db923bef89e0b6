"""Command-line front end.

Subcommands: generate, preview, validate, stats, export. Exit codes are
stable so scripts can branch on them: 0 success, 2 bad config or usage,
3 I/O failure, 4 validation failure (corrupt or inconsistent data).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import BatchError, BoundsError, ConfigError, CorruptFile, FormatError
from .io import (
    INDEX_NAME,
    MANIFEST_NAME,
    export_dense,
    read_index,
    read_recording,
    validate_recording,
    write_dense,
    write_index,
    write_pointcloud,
    write_recording,
)
from .pipeline import RenderParameters, generate, generate_batch

PARALLELISM_ENV = "EVSHAPE_PARALLELISM"


def _default_parallelism() -> int:
    raw = os.environ.get(PARALLELISM_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _load_config(args) -> RenderParameters:
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{args.config}: top level must be a JSON object")
    for item in args.set or []:
        _apply_override(doc, item)
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    return RenderParameters.from_dict(doc)


def _apply_override(doc: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings like shape=circle
    parts = key.split(".")
    cur = doc
    for part in parts[:-1]:
        nxt = cur.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"--set {key}: {part} is not a config section")
        cur = nxt
    cur[parts[-1]] = value


def _cmd_generate(args) -> int:
    params = _load_config(args)
    out = Path(args.out)
    parallelism = args.parallelism or _default_parallelism()
    if args.count is None:
        rec = generate(params)
        write_recording(rec, out)
        print(f"wrote {out} ({rec.event_count} events)")
        return 0
    if args.count < 1:
        raise ConfigError(f"--count must be >= 1, got {args.count}")
    batch = [dataclasses.replace(params, seed=params.seed + i) for i in range(args.count)]
    recordings = generate_batch(batch, parallelism=parallelism)
    names = []
    for i, rec in enumerate(recordings):
        name = f"rec-{i:05d}"
        write_recording(rec, out / name)
        names.append(name)
    write_index(out, names)
    total = sum(r.event_count for r in recordings)
    print(f"wrote {len(names)} recordings to {out} ({total} events)")
    return 0


def _frame_range(text: str, length: int) -> range:
    if ":" in text:
        lo, hi = text.split(":", 1)
        start = int(lo) if lo else 0
        stop = int(hi) if hi else length
    else:
        start = int(text)
        stop = start + 1
    if not (0 <= start < stop <= length):
        raise ConfigError(f"--frames {text!r} outside 0..{length}")
    return range(start, stop)


def _cmd_preview(args) -> int:
    if args.path:
        rec = read_recording(args.path)
    else:
        rec = generate(_load_config(args))
    p = rec.params
    dense = export_dense(rec.events, p.width, p.height, p.length)
    glyphs = {(0, 0): ".", (1, 0): "+", (0, 1): "-", (1, 1): "X"}
    for t in _frame_range(args.frames, p.length):
        pos, neg = dense[t]
        print(f"t={t} ({int(pos.sum())}+ {int(neg.sum())}-)")
        for row in range(p.height):
            print("".join(glyphs[(int(pos[row, c]), int(neg[row, c]))] for c in range(p.width)))
        print()
    return 0


def _recording_dirs(path: Path) -> list[Path]:
    if (path / INDEX_NAME).is_file():
        return [path / entry["name"] for entry in read_index(path)]
    if (path / MANIFEST_NAME).is_file():
        return [path]
    raise FileNotFoundError(f"{path}: no {MANIFEST_NAME} or {INDEX_NAME} found")


def _cmd_validate(args) -> int:
    failed = False
    for raw in args.paths:
        for rec_dir in _recording_dirs(Path(raw)):
            problems = validate_recording(rec_dir)
            if problems:
                failed = True
                for p in problems:
                    print(f"FAIL {rec_dir}: {p}")
            else:
                print(f"OK   {rec_dir}")
    return 4 if failed else 0


def _cmd_stats(args) -> int:
    rec = read_recording(args.path)
    p = rec.params
    ev = rec.events
    per_frame = np.bincount(ev["t"], minlength=p.length) if len(ev) else np.zeros(p.length, int)
    payload = {
        "width": p.width,
        "height": p.height,
        "length": p.length,
        "shape": p.shape.value,
        "seed": p.seed,
        "event_count": int(len(ev)),
        "positive": int((ev["p"] > 0).sum()),
        "negative": int((ev["p"] < 0).sum()),
        "events_per_frame": {
            "min": int(per_frame.min()),
            "max": int(per_frame.max()),
            "mean": float(per_frame.mean()),
        },
        "density": float(len(ev) / (p.width * p.height * p.length)),
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"{p.width}x{p.height}, {p.length} frames, shape={p.shape.value}, seed={p.seed}")
        print(
            f"{payload['event_count']} events "
            f"({payload['positive']}+ / {payload['negative']}-), "
            f"density {payload['density']:.5f}"
        )
        pf = payload["events_per_frame"]
        print(f"per frame: min {pf['min']}, mean {pf['mean']:.1f}, max {pf['max']}")
    return 0


def _cmd_export(args) -> int:
    rec = read_recording(args.path)
    p = rec.params
    out = Path(args.out) if args.out else None
    if args.format == "dense":
        out = out or Path(args.path) / "frames.npy"
        write_dense(out, rec.events, p.width, p.height, p.length)
    else:
        out = out or Path(args.path) / "events.csv"
        write_pointcloud(out, rec.events)
    print(f"wrote {out}")
    return 0


def _add_config_flags(sub) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a config key (dotted paths, JSON values)",
    )
    sub.add_argument("--seed", type=int, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evshape",
        description="Generate and inspect sparse event recordings of moving shapes.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="render recordings to disk")
    _add_config_flags(gen)
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--count", type=int, help="generate a dataset of N recordings")
    gen.add_argument(
        "--parallelism",
        type=int,
        help=f"worker threads for --count (default ${PARALLELISM_ENV} or 1)",
    )
    gen.set_defaults(func=_cmd_generate)

    pre = subs.add_parser("preview", help="print frames as ASCII art")
    _add_config_flags(pre)
    pre.add_argument("path", nargs="?", help="existing recording directory")
    pre.add_argument("--frames", default="0:4", help="frame or start:stop range")
    pre.set_defaults(func=_cmd_preview)

    val = subs.add_parser("validate", help="check recording or dataset integrity")
    val.add_argument("paths", nargs="+", help="recording or dataset directories")
    val.set_defaults(func=_cmd_validate)

    st = subs.add_parser("stats", help="summarize one recording")
    st.add_argument("path", help="recording directory")
    st.add_argument("--json", action="store_true", help="machine-readable output")
    st.set_defaults(func=_cmd_stats)

    exp = subs.add_parser("export", help="convert events to other layouts")
    exp.add_argument("path", help="recording directory")
    exp.add_argument("--format", choices=("dense", "pointcloud"), required=True)
    exp.add_argument("--out", help="output file")
    exp.set_defaults(func=_cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BatchError as exc:
        for i, failure in sorted(exc.failures.items()):
            print(f"recording {i}: {failure}", file=sys.stderr)
        all_config = all(isinstance(f, ConfigError) for f in exc.failures.values())
        return 2 if all_config else 3
    except (FormatError, CorruptFile, BoundsError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())
