"""On-disk layout for recordings.

A recording directory holds:

    events.gerd    binary event stream (format below)
    labels.jsonl   schema line, then one ground-truth record per frame
    params.json    the generating config, JSON-ready
    manifest.json  sha256 + byte size of the three files above, written last

The manifest is written atomically (temp file + rename) after everything
else, so a directory with a valid manifest is complete by construction.
Nothing here embeds timestamps: the same Recording always serializes to
byte-identical files.

GERD binary layout, all little-endian:

    header  '<4sHHHIQI'  magic b"GERD", version=1, width u16, height u16,
                         length u32, event_count u64, flags u32 (must be 0)
    record  '<IHHBB'     t u32, x u16, y u16, polarity u8 (1=on, 0=off),
                         reserved u8 (written 0, ignored on read)

Records are sorted by (t, y, x, polarity). Events are 10 bytes each; the
header is 26 bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import BoundsError, CorruptFile, FormatError
from .pipeline import EVENTS_DTYPE, LabelRecord, Recording, RenderParameters

MAGIC = b"GERD"
VERSION = 1
HEADER = struct.Struct("<4sHHHIQI")
RECORD_SIZE = 10

# Packed record layout as numpy sees it; itemsize must match RECORD_SIZE.
_FILE_DTYPE = np.dtype(
    [("t", "<u4"), ("x", "<u2"), ("y", "<u2"), ("p", "u1"), ("reserved", "u1")]
)
assert _FILE_DTYPE.itemsize == RECORD_SIZE

EVENTS_NAME = "events.gerd"
LABELS_NAME = "labels.jsonl"
PARAMS_NAME = "params.json"
MANIFEST_NAME = "manifest.json"
INDEX_NAME = "index.json"

LABELS_SCHEMA = {"schema": "evshape-labels", "version": 1}
MANIFEST_SCHEMA = "evshape-manifest"
INDEX_SCHEMA = "evshape-index"


def encode_gerd(events: np.ndarray, width: int, height: int, length: int) -> bytes:
    """Serialize an event table; sorts into canonical order first."""
    if events.dtype != EVENTS_DTYPE:
        raise ValueError(f"expected events dtype {EVENTS_DTYPE}, got {events.dtype}")
    _check_ranges(events, width, height, length)
    order = np.lexsort((events["p"], events["x"], events["y"], events["t"]))
    events = events[order]
    out = np.empty(len(events), dtype=_FILE_DTYPE)
    out["t"] = events["t"]
    out["x"] = events["x"]
    out["y"] = events["y"]
    out["p"] = (events["p"] > 0).astype(np.uint8)
    out["reserved"] = 0
    header = HEADER.pack(MAGIC, VERSION, width, height, length, len(events), 0)
    return header + out.tobytes()


def decode_gerd(data: bytes) -> tuple[np.ndarray, dict]:
    """Parse GERD bytes into (events, meta). Meta: width, height, length."""
    if len(data) < HEADER.size:
        raise CorruptFile(f"file is {len(data)} bytes, shorter than the {HEADER.size}-byte header")
    magic, version, width, height, length, count, flags = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    if flags != 0:
        raise FormatError(f"unknown flags 0x{flags:08x}")
    expected = HEADER.size + count * RECORD_SIZE
    if len(data) != expected:
        raise CorruptFile(
            f"payload size mismatch: header says {count} events "
            f"({expected} bytes total), file is {len(data)} bytes"
        )
    raw = np.frombuffer(data, dtype=_FILE_DTYPE, offset=HEADER.size, count=count)
    if count and raw["p"].max() > 1:
        raise CorruptFile("polarity byte outside {0, 1}")
    events = np.empty(count, dtype=EVENTS_DTYPE)
    events["t"] = raw["t"]
    events["x"] = raw["x"]
    events["y"] = raw["y"]
    events["p"] = np.where(raw["p"] == 1, 1, -1).astype(np.int8)
    _check_ranges(events, width, height, length)
    _check_sorted(events)
    return events, {"width": width, "height": height, "length": length}


def _check_ranges(events: np.ndarray, width: int, height: int, length: int) -> None:
    if len(events) == 0:
        return
    if events["x"].max(initial=0) >= width:
        raise BoundsError(f"event x {events['x'].max()} outside grid width {width}")
    if events["y"].max(initial=0) >= height:
        raise BoundsError(f"event y {events['y'].max()} outside grid height {height}")
    if events["t"].max(initial=0) >= length:
        raise BoundsError(f"event t {events['t'].max()} outside recording length {length}")
    if not np.isin(events["p"], (-1, 1)).all():
        raise BoundsError("event polarity outside {-1, +1}")


def _check_sorted(events: np.ndarray) -> None:
    if len(events) < 2:
        return
    order = np.lexsort((events["p"], events["x"], events["y"], events["t"]))
    if not np.array_equal(order, np.arange(len(events))):
        raise CorruptFile("events are not sorted by (t, y, x, polarity)")


def write_gerd(path: str | Path, events: np.ndarray, width: int, height: int, length: int) -> None:
    _atomic_write_bytes(Path(path), encode_gerd(events, width, height, length))


def read_gerd(path: str | Path) -> tuple[np.ndarray, dict]:
    return decode_gerd(Path(path).read_bytes())


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _labels_text(labels: list[LabelRecord]) -> str:
    lines = [json.dumps(LABELS_SCHEMA, separators=(",", ":"))]
    for rec in labels:
        lines.append(json.dumps(asdict(rec), separators=(",", ":")))
    return "\n".join(lines) + "\n"


def _parse_labels(text: str) -> list[LabelRecord]:
    lines = text.splitlines()
    if not lines:
        raise CorruptFile("labels file is empty")
    head = json.loads(lines[0])
    if head.get("schema") != LABELS_SCHEMA["schema"]:
        raise FormatError(f"unexpected labels schema {head.get('schema')!r}")
    if head.get("version") != LABELS_SCHEMA["version"]:
        raise FormatError(f"unsupported labels version {head.get('version')!r}")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            out.append(LabelRecord(**json.loads(line)))
        except (json.JSONDecodeError, TypeError) as exc:
            raise CorruptFile(f"bad label record on line {i}: {exc}") from exc
    return out


def write_recording(recording: Recording, outdir: str | Path) -> Path:
    """Write a complete recording directory; manifest goes last."""
    root = Path(outdir)
    root.mkdir(parents=True, exist_ok=True)
    p = recording.params
    write_gerd(root / EVENTS_NAME, recording.events, p.width, p.height, p.length)
    _atomic_write_text(root / LABELS_NAME, _labels_text(recording.labels))
    _atomic_write_text(
        root / PARAMS_NAME, json.dumps(p.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": 1,
        "event_count": recording.event_count,
        "files": {
            name: {
                "sha256": sha256_file(root / name),
                "bytes": (root / name).stat().st_size,
            }
            for name in (EVENTS_NAME, LABELS_NAME, PARAMS_NAME)
        },
    }
    _atomic_write_text(
        root / MANIFEST_NAME, json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return root


def read_recording(root: str | Path, verify: bool = True) -> Recording:
    """Load a recording directory back into memory.

    With verify=True (default) the manifest digests are checked first, so
    any bit flip in any file surfaces as CorruptFile rather than a silently
    wrong array.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a recording directory")
    if verify:
        problems = validate_recording(root)
        if problems:
            raise CorruptFile(f"{root}: " + "; ".join(problems))
    params = RenderParameters.from_dict(json.loads((root / PARAMS_NAME).read_text()))
    events, meta = read_gerd(root / EVENTS_NAME)
    if (meta["width"], meta["height"], meta["length"]) != (
        params.width,
        params.height,
        params.length,
    ):
        raise CorruptFile(
            f"header {meta} disagrees with params "
            f"{params.width}x{params.height}x{params.length}"
        )
    labels = _parse_labels((root / LABELS_NAME).read_text())
    return Recording(params=params, events=events, labels=labels)


def validate_recording(root: str | Path) -> list[str]:
    """Check one recording directory; returns problems, empty when clean."""
    root = Path(root)
    problems: list[str] = []
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        return [f"missing {MANIFEST_NAME}"]
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        return [f"unparseable {MANIFEST_NAME}: {exc}"]
    if manifest.get("schema") != MANIFEST_SCHEMA:
        problems.append(f"unexpected manifest schema {manifest.get('schema')!r}")
        return problems
    for name, entry in manifest.get("files", {}).items():
        path = root / name
        if not path.is_file():
            problems.append(f"missing {name}")
            continue
        size = path.stat().st_size
        if size != entry.get("bytes"):
            problems.append(f"{name}: {size} bytes on disk, manifest says {entry.get('bytes')}")
            continue
        digest = sha256_file(path)
        if digest != entry.get("sha256"):
            problems.append(f"{name}: sha256 mismatch")
    if problems:
        return problems

    # Digests are clean; now check internal consistency.
    try:
        params = RenderParameters.from_dict(json.loads((root / PARAMS_NAME).read_text()))
        events, meta = read_gerd(root / EVENTS_NAME)
        labels = _parse_labels((root / LABELS_NAME).read_text())
    except Exception as exc:  # noqa: BLE001 - any parse failure is a finding
        return [str(exc)]
    if len(events) != manifest.get("event_count"):
        problems.append(
            f"{len(events)} events on disk, manifest says {manifest.get('event_count')}"
        )
    if (meta["width"], meta["height"], meta["length"]) != (
        params.width,
        params.height,
        params.length,
    ):
        problems.append("header dims disagree with params.json")
    if len(labels) != params.length:
        problems.append(f"{len(labels)} labels for {params.length} frames")
    elif [rec.t for rec in labels] != list(range(params.length)):
        problems.append("label timesteps are not 0..length-1")
    return problems


def export_dense(events: np.ndarray, width: int, height: int, length: int) -> np.ndarray:
    """Event table -> (length, 2, height, width) uint8 frames.

    Channel 0 counts positive events, channel 1 negative; at most one event
    per (frame, pixel, polarity) exists, so values are 0 or 1.
    """
    dense = np.zeros((length, 2, height, width), dtype=np.uint8)
    if len(events):
        chan = (events["p"] < 0).astype(np.intp)
        np.add.at(dense, (events["t"], chan, events["y"], events["x"]), 1)
    return dense


def write_dense(path: str | Path, events: np.ndarray, width: int, height: int, length: int) -> None:
    """Save the dense view as a plain .npy file."""
    dense = export_dense(events, width, height, length)
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    np.save(tmp, dense)
    # np.save appends .npy when missing; the temp name keeps its suffix.
    saved = tmp if tmp.suffix == ".npy" else tmp.with_suffix(tmp.suffix + ".npy")
    os.replace(saved, path)


def pointcloud_csv(events: np.ndarray) -> str:
    """Event table -> 't,x,y,p' CSV text with +1/-1 polarity."""
    lines = ["t,x,y,p"]
    for t, x, y, p in zip(events["t"], events["x"], events["y"], events["p"]):
        lines.append(f"{t},{x},{y},{p}")
    return "\n".join(lines) + "\n"


def write_pointcloud(path: str | Path, events: np.ndarray) -> None:
    _atomic_write_text(Path(path), pointcloud_csv(events))


def write_index(root: str | Path, names: list[str]) -> Path:
    """Write a dataset index over recording subdirectories of root."""
    root = Path(root)
    entries = []
    for name in sorted(names):
        manifest = json.loads((root / name / MANIFEST_NAME).read_text())
        params = json.loads((root / name / PARAMS_NAME).read_text())
        entries.append(
            {
                "name": name,
                "seed": params["seed"],
                "shape": params["shape"],
                "length": params["length"],
                "event_count": manifest["event_count"],
            }
        )
    doc = {"schema": INDEX_SCHEMA, "version": 1, "recordings": entries}
    path = root / INDEX_NAME
    _atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_index(root: str | Path) -> list[dict]:
    doc = json.loads((Path(root) / INDEX_NAME).read_text())
    if doc.get("schema") != INDEX_SCHEMA:
        raise FormatError(f"unexpected index schema {doc.get('schema')!r}")
    return doc["recordings"]
