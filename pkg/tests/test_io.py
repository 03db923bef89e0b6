import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evshape.errors import BoundsError, CorruptFile, FormatError
from evshape.io import (
    EVENTS_NAME,
    HEADER,
    LABELS_NAME,
    MANIFEST_NAME,
    PARAMS_NAME,
    RECORD_SIZE,
    decode_gerd,
    encode_gerd,
    export_dense,
    pointcloud_csv,
    read_gerd,
    read_index,
    read_recording,
    validate_recording,
    write_gerd,
    write_index,
    write_recording,
)
from evshape.noise import NoiseConfig
from evshape.pipeline import EVENTS_DTYPE, RenderParameters, TransformParams, generate

W, H, L = 32, 24, 16


def make_events(rows):
    """rows: iterable of (t, x, y, p) tuples -> structured event array."""
    return np.array([tuple(r) for r in rows], dtype=EVENTS_DTYPE)


def canonical_order(events):
    return events[np.lexsort((events["p"], events["x"], events["y"], events["t"]))]


def small_recording(seed=0, **over):
    params = dict(
        width=W,
        height=H,
        length=L,
        upsample=2,
        warmup=2,
        seed=seed,
        translate=TransformParams(enabled=True, start=(12.0, 12.0),
                                  velocity_start=(0.7, 0.4), velocity_delta=0.0),
        noise=NoiseConfig(p_background=0.02),
    )
    params.update(over)
    return generate(RenderParameters(**params))


# --- binary layout ---


def test_header_layout():
    data = encode_gerd(make_events([]), W, H, L)
    assert len(data) == 26
    magic, version, w, h, length, count, flags = HEADER.unpack(data)
    assert magic == b"GERD"
    assert version == 1
    assert (w, h, length, count, flags) == (W, H, L, 0, 0)


def test_record_size():
    data = encode_gerd(make_events([(0, 1, 2, 1), (3, 4, 5, -1)]), W, H, L)
    assert len(data) == 26 + 2 * RECORD_SIZE
    assert RECORD_SIZE == 10


def test_record_field_layout():
    data = encode_gerd(make_events([(7, 3, 9, 1)]), W, H, L)
    t, x, y, p, reserved = struct.unpack("<IHHBB", data[26:])
    assert (t, x, y, p, reserved) == (7, 3, 9, 1, 0)
    data = encode_gerd(make_events([(7, 3, 9, -1)]), W, H, L)
    assert struct.unpack("<IHHBB", data[26:])[3] == 0  # off polarity stored as 0


def test_encode_sorts_canonically():
    ev = make_events([(5, 1, 1, 1), (0, 9, 9, -1), (0, 2, 1, 1), (0, 2, 1, -1)])
    out, _ = decode_gerd(encode_gerd(ev, W, H, L))
    assert np.array_equal(out, canonical_order(ev))


events_strategy = st.lists(
    st.tuples(
        st.integers(min_value=0, max_value=L - 1),
        st.integers(min_value=0, max_value=W - 1),
        st.integers(min_value=0, max_value=H - 1),
        st.sampled_from([-1, 1]),
    ),
    max_size=200,
)


@settings(max_examples=80)
@given(rows=events_strategy)
def test_round_trip_any_table(rows):
    ev = make_events(rows)
    out, meta = decode_gerd(encode_gerd(ev, W, H, L))
    assert meta == {"width": W, "height": H, "length": L}
    assert np.array_equal(out, canonical_order(ev))


def test_encode_validates_bounds():
    with pytest.raises(BoundsError):
        encode_gerd(make_events([(0, W, 0, 1)]), W, H, L)
    with pytest.raises(BoundsError):
        encode_gerd(make_events([(0, 0, H, 1)]), W, H, L)
    with pytest.raises(BoundsError):
        encode_gerd(make_events([(L, 0, 0, 1)]), W, H, L)


def test_encode_rejects_wrong_dtype():
    with pytest.raises(ValueError):
        encode_gerd(np.zeros(3, dtype=np.int64), W, H, L)


def test_decode_rejects_bad_magic():
    data = bytearray(encode_gerd(make_events([]), W, H, L))
    data[0:4] = b"NOPE"
    with pytest.raises(FormatError, match="magic"):
        decode_gerd(bytes(data))


def test_decode_rejects_bad_version():
    data = bytearray(encode_gerd(make_events([]), W, H, L))
    data[4:6] = struct.pack("<H", 9)
    with pytest.raises(FormatError, match="version"):
        decode_gerd(bytes(data))


def test_decode_rejects_unknown_flags():
    data = bytearray(encode_gerd(make_events([]), W, H, L))
    data[22:26] = struct.pack("<I", 1)
    with pytest.raises(FormatError, match="flags"):
        decode_gerd(bytes(data))


def test_decode_rejects_truncation():
    data = encode_gerd(make_events([(0, 1, 1, 1), (1, 2, 2, -1)]), W, H, L)
    with pytest.raises(CorruptFile):
        decode_gerd(data[:-3])
    with pytest.raises(CorruptFile):
        decode_gerd(data[:10])


def test_decode_rejects_trailing_garbage():
    data = encode_gerd(make_events([(0, 1, 1, 1)]), W, H, L)
    with pytest.raises(CorruptFile):
        decode_gerd(data + b"\x00")


def test_decode_rejects_count_mismatch():
    data = bytearray(encode_gerd(make_events([(0, 1, 1, 1)]), W, H, L))
    data[14:22] = struct.pack("<Q", 2)  # claims 2 events, carries 1
    with pytest.raises(CorruptFile):
        decode_gerd(bytes(data))


def test_decode_rejects_bad_polarity_byte():
    data = bytearray(encode_gerd(make_events([(0, 1, 1, 1)]), W, H, L))
    data[26 + 8] = 7
    with pytest.raises(CorruptFile, match="polarity"):
        decode_gerd(bytes(data))


def test_decode_rejects_out_of_bounds_coordinate():
    data = bytearray(encode_gerd(make_events([(0, 1, 1, 1)]), W, H, L))
    data[26 + 4 : 26 + 6] = struct.pack("<H", W + 5)
    with pytest.raises(BoundsError):
        decode_gerd(bytes(data))


def test_decode_rejects_unsorted_records():
    a = encode_gerd(make_events([(1, 0, 0, 1)]), W, H, L)
    b = encode_gerd(make_events([(0, 0, 0, 1)]), W, H, L)
    header = HEADER.pack(b"GERD", 1, W, H, L, 2, 0)
    data = header + a[26:] + b[26:]  # t=1 before t=0
    with pytest.raises(CorruptFile, match="sorted"):
        decode_gerd(data)


def test_file_round_trip(tmp_path):
    ev = make_events([(0, 3, 4, 1), (5, 6, 7, -1)])
    path = tmp_path / "x.gerd"
    write_gerd(path, ev, W, H, L)
    out, meta = read_gerd(path)
    assert np.array_equal(out, ev)
    assert meta["width"] == W


# --- recording directories ---


def test_write_recording_creates_all_files(tmp_path):
    rec = small_recording()
    root = write_recording(rec, tmp_path / "r")
    for name in (EVENTS_NAME, LABELS_NAME, PARAMS_NAME, MANIFEST_NAME):
        assert (root / name).is_file()
    assert validate_recording(root) == []


def test_recording_round_trip(tmp_path):
    rec = small_recording(seed=3)
    write_recording(rec, tmp_path / "r")
    assert read_recording(tmp_path / "r") == rec


def test_rewrite_is_byte_identical(tmp_path):
    rec = small_recording(seed=4)
    write_recording(rec, tmp_path / "a")
    write_recording(rec, tmp_path / "b")
    for name in (EVENTS_NAME, LABELS_NAME, PARAMS_NAME, MANIFEST_NAME):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("victim", [EVENTS_NAME, LABELS_NAME, PARAMS_NAME])
def test_single_flipped_byte_is_detected(tmp_path, victim):
    rec = small_recording(seed=5)
    root = write_recording(rec, tmp_path / "r")
    path = root / victim
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    path.write_bytes(bytes(raw))
    problems = validate_recording(root)
    assert problems and any(victim in p for p in problems)
    with pytest.raises(CorruptFile):
        read_recording(root)


def test_missing_file_is_detected(tmp_path):
    root = write_recording(small_recording(seed=6), tmp_path / "r")
    (root / LABELS_NAME).unlink()
    problems = validate_recording(root)
    assert any("labels" in p for p in problems)


def test_missing_manifest_is_detected(tmp_path):
    root = write_recording(small_recording(seed=7), tmp_path / "r")
    (root / MANIFEST_NAME).unlink()
    assert validate_recording(root) == [f"missing {MANIFEST_NAME}"]


def test_manifest_count_mismatch_detected(tmp_path):
    root = write_recording(small_recording(seed=8), tmp_path / "r")
    doc = json.loads((root / MANIFEST_NAME).read_text())
    doc["event_count"] += 1
    (root / MANIFEST_NAME).write_text(json.dumps(doc))
    assert any("manifest says" in p for p in validate_recording(root))


def test_read_skip_verify_still_parses(tmp_path):
    rec = small_recording(seed=9)
    root = write_recording(rec, tmp_path / "r")
    (root / MANIFEST_NAME).unlink()
    assert read_recording(root, verify=False) == rec


def test_labels_preserve_float_exactly(tmp_path):
    rec = small_recording(seed=10, translate=TransformParams(
        enabled=True, start=(11.0, 13.0), velocity_start=(1 / 3, 0.1)))
    back = read_recording(write_recording(rec, tmp_path / "r"))
    for a, b in zip(rec.labels, back.labels):
        assert a == b  # bit-exact float round trip through JSON repr


# --- exports ---


def test_export_dense_hand_case():
    ev = make_events([(0, 1, 2, 1), (0, 1, 2, -1), (3, 0, 0, -1)])
    dense = export_dense(ev, 4, 4, 5)
    assert dense.shape == (5, 2, 4, 4)
    assert dense[0, 0, 2, 1] == 1  # positive channel
    assert dense[0, 1, 2, 1] == 1  # negative channel
    assert dense[3, 1, 0, 0] == 1
    assert dense.sum() == 3


def test_export_dense_matches_loop():
    rec = small_recording(seed=11)
    dense = export_dense(rec.events, W, H, L)
    ref = np.zeros_like(dense)
    for e in rec.events:
        ref[e["t"], 0 if e["p"] > 0 else 1, e["y"], e["x"]] += 1
    assert np.array_equal(dense, ref)
    assert dense.max() <= 1  # one event per (frame, pixel, polarity)


def test_pointcloud_csv_golden():
    ev = make_events([(0, 3, 4, 1), (2, 5, 6, -1)])
    assert pointcloud_csv(ev) == "t,x,y,p\n0,3,4,1\n2,5,6,-1\n"


# --- dataset index ---


def test_index_round_trip(tmp_path):
    for i in range(3):
        write_recording(small_recording(seed=20 + i), tmp_path / f"rec-{i:05d}")
    write_index(tmp_path, [f"rec-{i:05d}" for i in range(3)])
    entries = read_index(tmp_path)
    assert [e["name"] for e in entries] == [f"rec-{i:05d}" for i in range(3)]
    assert all(e["length"] == L for e in entries)
    assert entries[0]["seed"] == 20


def test_params_json_is_loadable_config(tmp_path):
    rec = small_recording(seed=30)
    root = write_recording(rec, tmp_path / "r")
    doc = json.loads((root / PARAMS_NAME).read_text())
    assert RenderParameters.from_dict(doc) == rec.params
