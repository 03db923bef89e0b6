"""Map-style loader for directories of GERD event recordings.

Everything here parses the on-disk format from scratch (struct header,
fixed 10-byte records, JSON sidecars). There is deliberately no import
of the generator package: a recording that round-trips through both
codebases has been checked against two independent readings of the
format.
"""

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"GERD"
VERSION = 1
HEADER = struct.Struct("<4sHHHIQI")
RECORD_SIZE = 10

EVENTS_NAME = "events.gerd"
LABELS_NAME = "labels.jsonl"
PARAMS_NAME = "params.json"
MANIFEST_NAME = "manifest.json"
INDEX_NAME = "index.json"

SPARSE = "sparse-events"
DENSE = "dense-frames"
MODES = (SPARSE, DENSE)

EVENT_DTYPE = np.dtype([("t", "<u4"), ("x", "<u2"), ("y", "<u2"), ("p", "i1")])
_RECORD_DTYPE = np.dtype(
    [("t", "<u4"), ("x", "<u2"), ("y", "<u2"), ("p", "u1"), ("reserved", "u1")]
)
assert _RECORD_DTYPE.itemsize == RECORD_SIZE

LABEL_FIELDS = (
    "tx", "ty", "sx", "sy", "theta", "shx", "shy",
    "vtx", "vty", "vsx", "vsy", "vtheta", "vshx", "vshy",
)
LABEL_DTYPE = np.dtype([("t", "<u4")] + [(name, "<f8") for name in LABEL_FIELDS])


class LoaderError(Exception):
    """Base for everything this package raises on bad input."""


class MissingIndex(LoaderError):
    """The dataset root has no index file."""


class CorruptRecording(LoaderError):
    """One recording failed validation; carries which one and why."""

    def __init__(self, name: str, reason: str):
        self.name = name
        self.reason = reason
        super().__init__(f"{name}: {reason}")


@dataclass(frozen=True)
class RecordingInfo:
    """Static facts about one validated recording directory."""

    name: str
    path: Path
    width: int
    height: int
    length: int
    shape: str
    seed: int
    event_count: int


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _is_sorted(records: np.ndarray) -> bool:
    # canonical order is (t, y, x, p), non-decreasing
    if len(records) < 2:
        return True
    a, b = records[:-1], records[1:]
    greater = np.zeros(len(a), dtype=bool)
    tied = np.ones(len(a), dtype=bool)
    for key in ("t", "y", "x", "p"):
        greater |= tied & (a[key] > b[key])
        tied &= a[key] == b[key]
    return not greater.any()


def read_events(path: str | Path) -> tuple[np.ndarray, dict]:
    """Decode one .gerd file into an event table plus its header fields.

    Checks everything the format promises: magic, version, zero flags,
    exact byte length, polarity codes, coordinate and timestep bounds,
    and canonical sort order.
    """
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise LoaderError(f"{path}: {len(raw)} bytes is shorter than the header")
    magic, version, width, height, length, count, flags = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise LoaderError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise LoaderError(f"{path}: unsupported version {version}")
    if flags != 0:
        raise LoaderError(f"{path}: unknown flags {flags:#x}")
    expected = HEADER.size + count * RECORD_SIZE
    if len(raw) != expected:
        raise LoaderError(f"{path}: {len(raw)} bytes, header implies {expected}")
    records = np.frombuffer(raw, dtype=_RECORD_DTYPE, offset=HEADER.size)
    if np.any(records["p"] > 1):
        raise LoaderError(f"{path}: polarity byte outside {{0, 1}}")
    if np.any(records["x"] >= width) or np.any(records["y"] >= height):
        raise LoaderError(f"{path}: event coordinates outside {width}x{height}")
    if np.any(records["t"] >= length):
        raise LoaderError(f"{path}: event timestep beyond length {length}")
    if not _is_sorted(records):
        raise LoaderError(f"{path}: records are not in canonical order")
    events = np.empty(count, dtype=EVENT_DTYPE)
    events["t"] = records["t"]
    events["x"] = records["x"]
    events["y"] = records["y"]
    events["p"] = np.where(records["p"] == 1, 1, -1).astype(np.int8)
    meta = {"width": width, "height": height, "length": length, "count": count}
    return events, meta


def read_labels(path: str | Path) -> tuple[np.ndarray, str]:
    """Parse a labels file into (structured array, shape name)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise LoaderError(f"{path}: empty labels file")
    head = json.loads(lines[0])
    if head.get("schema") != "evshape-labels" or head.get("version") != 1:
        raise LoaderError(f"{path}: unrecognized labels header {lines[0]!r}")
    body = [json.loads(line) for line in lines[1:] if line.strip()]
    out = np.zeros(len(body), dtype=LABEL_DTYPE)
    shapes = set()
    for i, rec in enumerate(body):
        try:
            out["t"][i] = rec["t"]
            shapes.add(rec["shape"])
            for field in LABEL_FIELDS:
                out[field][i] = rec[field]
        except KeyError as exc:
            raise LoaderError(f"{path}: label record {i} is missing {exc}") from exc
    if len(shapes) > 1:
        raise LoaderError(f"{path}: inconsistent shape names {sorted(shapes)}")
    shape = shapes.pop() if shapes else ""
    return out, shape


def to_dense(events: np.ndarray, width: int, height: int, length: int) -> np.ndarray:
    """Event table -> (length, 2, height, width) uint8, channel 0 positive."""
    dense = np.zeros((length, 2, height, width), dtype=np.uint8)
    if len(events):
        channel = np.where(events["p"] > 0, 0, 1)
        np.add.at(dense, (events["t"], channel, events["y"], events["x"]), 1)
    return dense


def _validate_recording(path: Path, name: str) -> RecordingInfo:
    if not path.is_dir():
        raise CorruptRecording(name, "recording directory is missing")
    manifest_path = path / MANIFEST_NAME
    if not manifest_path.is_file():
        raise CorruptRecording(name, f"missing {MANIFEST_NAME}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptRecording(name, f"unparseable {MANIFEST_NAME}: {exc}") from exc
    if manifest.get("schema") != "evshape-manifest":
        raise CorruptRecording(name, f"unexpected manifest schema {manifest.get('schema')!r}")
    for fname, entry in manifest.get("files", {}).items():
        fpath = path / fname
        if not fpath.is_file():
            raise CorruptRecording(name, f"missing {fname}")
        size = fpath.stat().st_size
        if size != entry.get("bytes"):
            raise CorruptRecording(
                name, f"{fname}: {size} bytes on disk, manifest says {entry.get('bytes')}"
            )
        if _sha256(fpath) != entry.get("sha256"):
            raise CorruptRecording(name, f"{fname}: sha256 mismatch")
    try:
        params = json.loads((path / PARAMS_NAME).read_text())
        events, meta = read_events(path / EVENTS_NAME)
        labels, label_shape = read_labels(path / LABELS_NAME)
    except LoaderError as exc:
        raise CorruptRecording(name, str(exc)) from exc
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise CorruptRecording(name, f"unreadable sidecar: {exc}") from exc
    dims = (params.get("width"), params.get("height"), params.get("length"))
    if (meta["width"], meta["height"], meta["length"]) != dims:
        raise CorruptRecording(name, f"header {meta} disagrees with {PARAMS_NAME} {dims}")
    if meta["count"] != manifest.get("event_count"):
        raise CorruptRecording(
            name,
            f"{meta['count']} events on disk, manifest says {manifest.get('event_count')}",
        )
    if len(labels) != meta["length"]:
        raise CorruptRecording(name, f"{len(labels)} labels for {meta['length']} frames")
    if not np.array_equal(labels["t"], np.arange(meta["length"], dtype=np.uint32)):
        raise CorruptRecording(name, "label timesteps are not 0..length-1")
    if label_shape and label_shape != params.get("shape"):
        raise CorruptRecording(
            name, f"labels say shape {label_shape!r}, params say {params.get('shape')!r}"
        )
    return RecordingInfo(
        name=name,
        path=path,
        width=meta["width"],
        height=meta["height"],
        length=meta["length"],
        shape=params.get("shape", ""),
        seed=params.get("seed", 0),
        event_count=meta["count"],
    )


class DatasetHandle:
    """Validated, ordered, read-only view over an indexed dataset.

    Supports len() and integer indexing, so it plugs straight into
    map-style consumers. Samples are re-read from disk on every access;
    the handle itself holds no file handles or mutable state, which
    makes concurrent reads from worker processes safe.
    """

    def __init__(self, root: Path, recordings: list[RecordingInfo], mode: str):
        self.root = root
        self.recordings = recordings
        self.mode = mode

    def __len__(self) -> int:
        return len(self.recordings)

    def __getitem__(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        if not isinstance(i, (int, np.integer)):
            raise TypeError(f"index must be an integer, got {type(i).__name__}")
        n = len(self.recordings)
        if i < -n or i >= n:
            raise IndexError(f"index {i} out of range for {n} recordings")
        info = self.recordings[i]
        events, _ = read_events(info.path / EVENTS_NAME)
        labels, _ = read_labels(info.path / LABELS_NAME)
        if self.mode == DENSE:
            sample = to_dense(events, info.width, info.height, info.length)
        else:
            sample = events
        return sample, labels

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self) -> str:
        return f"DatasetHandle({str(self.root)!r}, {len(self)} recordings, mode={self.mode!r})"


def open_dataset(root: str | Path, mode: str = SPARSE) -> DatasetHandle:
    """Open an indexed dataset directory and validate every recording in it.

    The index file fixes the iteration order. Each listed recording is
    checked up front (digests, header consistency, bounds, sort order);
    the first bad one raises CorruptRecording naming it. Event and label
    payloads are only read back when a sample is indexed.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    root = Path(root)
    index_path = root / INDEX_NAME
    if not index_path.is_file():
        raise MissingIndex(f"{root} has no {INDEX_NAME}")
    try:
        doc = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise LoaderError(f"{index_path}: unparseable index: {exc}") from exc
    if doc.get("schema") != "evshape-index":
        raise LoaderError(f"{index_path}: unexpected schema {doc.get('schema')!r}")
    infos = []
    for entry in doc.get("recordings", []):
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise LoaderError(f"{index_path}: index entry without a name: {entry}")
        info = _validate_recording(root / name, name)
        for key, got in (
            ("length", info.length),
            ("event_count", info.event_count),
            ("seed", info.seed),
            ("shape", info.shape),
        ):
            if key in entry and entry[key] != got:
                raise CorruptRecording(
                    name, f"index says {key}={entry[key]!r}, recording has {got!r}"
                )
        infos.append(info)
    return DatasetHandle(root, infos, mode)
