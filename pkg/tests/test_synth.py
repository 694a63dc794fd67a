"""Synthetic scenes: analytic ground truth and bitwise determinism."""

from __future__ import annotations

import numpy as np
import pytest

from gsfield.camera import CameraPose, unproject
from gsfield.errors import InvalidSpec
from gsfield.synth import (
    SceneSpec,
    generate,
    sparse_subsample,
    texture_rgb,
    value_noise,
)
from gsfield.tracking import pixel_grid


@pytest.mark.parametrize("kind", ["translating_plane", "rotating_disc", "orbiting_points"])
def test_generate_bitwise_deterministic(kind):
    spec = SceneSpec(kind=kind, t_count=4, height=24, width=24, rate_deg=4.0, seed=2)
    a = generate(spec)
    b = generate(spec)
    assert np.array_equal(a.frames, b.frames)
    assert np.array_equal(a.depths, b.depths)
    assert np.array_equal(a.tracks.x, b.tracks.x)
    assert np.array_equal(a.tracks.d, b.tracks.d)
    assert np.array_equal(a.visibility, b.visibility)


def test_plane_tracks_are_linear(tiny_plane):
    scene = tiny_plane
    t_count, h, w = scene.depths.shape
    grid = pixel_grid(h, w)
    for t in range(t_count):
        assert np.array_equal(scene.tracks.x[t], grid + np.array([2.0, 0.0]) * t)
    assert np.all(scene.tracks.d == 2.0)


def test_plane_visibility_is_in_bounds(tiny_plane):
    scene = tiny_plane
    x = scene.tracks.x
    w, h = 32, 32
    inb = (
        (x[..., 0] >= 0) & (x[..., 0] <= w - 1) & (x[..., 1] >= 0) & (x[..., 1] <= h - 1)
    )
    assert np.array_equal(scene.visibility, inb)
    # 2 px/frame for 7 steps pushes the trailing 14 columns out of frame
    assert not scene.visibility[-1].all()
    assert scene.visibility[0].all()


def test_plane_frames_translate_frame0(tiny_plane):
    frames = tiny_plane.frames
    # integer velocity: the still-covered region of frame t is a pure
    # column shift of frame 0, sampled at identical texture coordinates
    for t in [1, 3]:
        shift = 2 * t
        assert np.array_equal(frames[t][:, shift:], frames[0][:, : 32 - shift])


def test_plane_revealed_band_is_static_backdrop(tiny_plane):
    frames = tiny_plane.frames
    depths = tiny_plane.depths
    assert np.array_equal(frames[1][:, :2], frames[2][:, :2])
    assert np.all(depths[1][:, :2] == 10.0)
    assert np.all(depths[0] == 2.0)


def test_plane_zero_velocity_is_static(tiny_static):
    scene = tiny_static
    for t in range(1, scene.frames.shape[0]):
        assert np.array_equal(scene.frames[t], scene.frames[0])
        assert np.array_equal(scene.tracks.x[t], scene.tracks.x[0])
    assert scene.visibility.all()


def test_disc_moved_points_rotate_rigidly():
    spec = SceneSpec(kind="rotating_disc", t_count=4, height=48, width=48,
                     rate_deg=10.0, seed=1)
    scene = generate(spec)
    grid = pixel_grid(48, 48)
    center = np.array([23.5, 23.5])
    moved = np.any(scene.tracks.x[3] != grid, axis=-1)
    assert moved.any()
    rel0 = scene.tracks.x[0][moved] - center
    rel3 = scene.tracks.x[3][moved] - center
    r0 = np.linalg.norm(rel0, axis=-1)
    r3 = np.linalg.norm(rel3, axis=-1)
    assert np.abs(r3 - r0).max() <= 1e-9
    ang = np.arctan2(rel3[:, 1], rel3[:, 0]) - np.arctan2(rel0[:, 1], rel0[:, 0])
    ang = (ang + np.pi) % (2.0 * np.pi) - np.pi
    assert np.abs(np.abs(ang) - np.deg2rad(30.0)).max() <= 1e-9


def test_disc_depth_layers_and_occlusion():
    spec = SceneSpec(kind="rotating_disc", t_count=12, height=48, width=48,
                     rate_deg=10.0, seed=0)
    scene = generate(spec)
    assert set(np.unique(scene.depths)) == {1.0, 2.0, 3.0}
    # some disc point must pass behind the occluder strip
    became_hidden = scene.visibility[0] & ~scene.visibility.all(axis=0)
    assert became_hidden.any()


def test_orbit_depth_varies_and_is_rigid():
    spec = SceneSpec(kind="orbiting_points", t_count=6, height=24, width=24,
                     rate_deg=4.0, seed=3)
    scene = generate(spec)
    assert np.all(scene.tracks.d[0] == 2.0)
    assert scene.tracks.d[5].std() > 1e-3
    pivot = np.array([0.0, 0.0, 2.0])
    identity = CameraPose.identity()
    k = scene.intrinsics
    p0 = unproject(scene.tracks.x[0], scene.tracks.d[0], identity, k)
    p5 = unproject(scene.tracks.x[5], scene.tracks.d[5], identity, k)
    d0 = np.linalg.norm(p0 - pivot, axis=-1)
    d5 = np.linalg.norm(p5 - pivot, axis=-1)
    assert np.abs(d5 - d0).max() <= 1e-9


def test_orbit_rejects_excessive_tilt():
    with pytest.raises(InvalidSpec):
        generate(SceneSpec(kind="orbiting_points", t_count=7, height=16, width=16,
                           rate_deg=10.0))


def test_value_noise_range_and_salts():
    xs, ys = np.meshgrid(np.linspace(0, 40, 50), np.linspace(0, 40, 50))
    a = value_noise(xs, ys, 7)
    b = value_noise(xs, ys, 7)
    c = value_noise(xs, ys, 8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= 0.0 and a.max() <= 1.0
    assert a.std() > 0.01


def test_texture_rgb_base_and_clip():
    xs, ys = np.meshgrid(np.arange(30.0), np.arange(30.0))
    tex = texture_rgb(xs, ys, 0, 0.2, base=0.5)
    assert tex.shape == (30, 30, 3)
    assert tex.min() >= 0.4 - 1e-12 and tex.max() <= 0.6 + 1e-12
    dark = texture_rgb(xs, ys, 0, 1.0, base=0.0)
    assert (dark == 0.0).any()  # clipped at the floor


def test_sparse_subsample(tiny_plane):
    sparse = sparse_subsample(tiny_plane, stride=8)
    assert sparse.positions.shape == (16, 8, 2)
    assert sparse.visibility.shape == (16, 8)
    qx = sparse.queries[:, 0].reshape(4, 4)
    assert np.array_equal(qx[0], [0.0, 8.0, 16.0, 24.0])
    with pytest.raises(InvalidSpec):
        sparse_subsample(tiny_plane, stride=0)


def test_scene_spec_validation():
    with pytest.raises(InvalidSpec):
        SceneSpec(kind="warp_field")
    with pytest.raises(InvalidSpec):
        SceneSpec(kind="translating_plane", t_count=0)
    with pytest.raises(InvalidSpec):
        SceneSpec(kind="translating_plane", height=4)
    with pytest.raises(InvalidSpec):
        SceneSpec(kind="translating_plane", contrast=0.0)
    with pytest.raises(InvalidSpec):
        generate(SceneSpec(kind="translating_plane", t_count=2, height=16, width=16,
                           velocity=(1.0, 2.0, 3.0)))


def test_scene_intrinsics():
    k = SceneSpec(kind="translating_plane", height=64, width=96).intrinsics()
    assert (k.fx, k.fy) == (96.0, 96.0)
    assert (k.cx, k.cy) == (47.5, 31.5)
    assert (k.width, k.height) == (96, 64)
