"""GST1 tensor container and PPM image round trips."""

from __future__ import annotations

import numpy as np
import pytest

from gsfield.errors import (
    IoFailure,
    MalformedHeader,
    ShapeMismatch,
    TruncatedPayload,
    UnsupportedFormat,
)
from gsfield.tensor_io import (
    frame_path,
    load_tensor,
    read_frames,
    read_ppm,
    save_tensor,
    write_frames,
    write_ppm,
)


def test_tensor_roundtrip_f32_all_ranks(tmp_path):
    rng = np.random.default_rng(0)
    for shape in [(5,), (3, 4), (2, 3, 4), (2, 3, 4, 5)]:
        t = rng.standard_normal(shape).astype(np.float32)
        save_tensor(t, tmp_path / "t.gst")
        back = load_tensor(tmp_path / "t.gst")
        assert back.dtype == np.float32
        assert back.shape == t.shape
        assert np.array_equal(back, t)


def test_tensor_roundtrip_u8(tmp_path):
    t = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
    save_tensor(t, tmp_path / "t.gst")
    back = load_tensor(tmp_path / "t.gst")
    assert back.dtype == np.uint8
    assert np.array_equal(back, t)


def test_tensor_file_is_byte_stable(tmp_path):
    t = np.linspace(0.0, 1.0, 12, dtype=np.float32).reshape(3, 4)
    save_tensor(t, tmp_path / "a.gst")
    save_tensor(t, tmp_path / "b.gst")
    assert (tmp_path / "a.gst").read_bytes() == (tmp_path / "b.gst").read_bytes()


def test_tensor_rejects_float64(tmp_path):
    with pytest.raises(MalformedHeader):
        save_tensor(np.zeros(3, dtype=np.float64), tmp_path / "t.gst")


def test_tensor_rejects_rank_5(tmp_path):
    with pytest.raises(MalformedHeader):
        save_tensor(np.zeros((1, 1, 1, 1, 1), dtype=np.float32), tmp_path / "t.gst")


def test_tensor_bad_magic(tmp_path):
    p = tmp_path / "t.gst"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(MalformedHeader):
        load_tensor(p)


def test_tensor_bad_dtype_code(tmp_path):
    p = tmp_path / "t.gst"
    save_tensor(np.zeros((2, 2), dtype=np.float32), p)
    raw = bytearray(p.read_bytes())
    raw[16] = 9  # dtype code slot for rank 2
    p.write_bytes(bytes(raw))
    with pytest.raises(MalformedHeader):
        load_tensor(p)


def test_tensor_truncated_payload(tmp_path):
    p = tmp_path / "t.gst"
    save_tensor(np.zeros((4, 4), dtype=np.float32), p)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(TruncatedPayload):
        load_tensor(p)


def test_tensor_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_tensor(tmp_path / "absent.gst")


def test_ppm_roundtrip_byte_exact(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(7, 9, 3)).astype(np.uint8) / 255.0
    p = tmp_path / "img.ppm"
    write_ppm(img, p)
    first = p.read_bytes()
    write_ppm(read_ppm(p), p)
    assert p.read_bytes() == first


def test_ppm_values_scale_by_255(tmp_path):
    img = np.zeros((1, 2, 3))
    img[0, 1] = 1.0
    p = tmp_path / "img.ppm"
    write_ppm(img, p)
    back = read_ppm(p)
    assert np.array_equal(back[0, 0], [0.0, 0.0, 0.0])
    assert np.array_equal(back[0, 1], [1.0, 1.0, 1.0])


def test_ppm_comment_in_header(tmp_path):
    p = tmp_path / "img.ppm"
    payload = bytes(range(6))
    p.write_bytes(b"P6\n# a comment\n2 1\n255\n" + payload)
    img = read_ppm(p)
    assert img.shape == (1, 2, 3)
    want = np.frombuffer(payload, np.uint8).reshape(1, 2, 3) / 255.0
    assert np.allclose(img, want)


def test_ppm_rejects_wrong_maxval(tmp_path):
    p = tmp_path / "img.ppm"
    p.write_bytes(b"P6\n1 1\n65535\n" + b"\x00" * 6)
    with pytest.raises(UnsupportedFormat):
        read_ppm(p)


def test_ppm_rejects_non_p6(tmp_path):
    p = tmp_path / "img.ppm"
    p.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(UnsupportedFormat):
        read_ppm(p)


def test_ppm_rejects_short_payload(tmp_path):
    p = tmp_path / "img.ppm"
    p.write_bytes(b"P6\n2 2\n255\n" + b"\x00" * 5)
    with pytest.raises(UnsupportedFormat):
        read_ppm(p)


def test_write_ppm_rejects_bad_shape(tmp_path):
    with pytest.raises(ShapeMismatch):
        write_ppm(np.zeros((4, 4)), tmp_path / "x.ppm")


def test_frame_sequence_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    frames = rng.integers(0, 256, size=(3, 4, 5, 3)) / 255.0
    write_frames(frames, tmp_path / "seq")
    back = read_frames(tmp_path / "seq")
    assert back.shape == frames.shape
    assert np.allclose(back, frames)
    assert frame_path(tmp_path / "seq", 2).name == "frame_00002.ppm"


def test_read_frames_empty_dir(tmp_path):
    with pytest.raises(IoFailure):
        read_frames(tmp_path)
