"""Pinhole projection, SE(3) poses, and pose interpolation."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from gsfield.camera import (
    CameraPose,
    Intrinsics,
    geodesic_angle,
    interpolate_pose,
    project,
    unproject,
)
from gsfield.errors import BehindCamera, NonPositiveDepth, ShapeMismatch

K = Intrinsics(100.0, 110.0, 32.0, 24.0, 64, 48)


def _random_pose(rng):
    r = Rotation.from_rotvec(rng.normal(size=3) * 0.5).as_matrix()
    return CameraPose(r, rng.normal(size=3))


def test_project_unproject_roundtrip():
    rng = np.random.default_rng(3)
    pose = _random_pose(rng)
    # points in front of the camera: sample in camera space, pull back
    cam = np.stack(
        [rng.uniform(-1, 1, 1000), rng.uniform(-1, 1, 1000), rng.uniform(0.5, 5.0, 1000)],
        axis=-1,
    )
    pts = (cam - pose.t) @ pose.R
    uv, z = project(pts, pose, K)
    back = unproject(uv, z, pose, K)
    assert np.abs(back - pts).max() <= 1e-9


def test_project_known_point():
    uv, z = project(np.array([[0.0, 0.0, 2.0]]), CameraPose.identity(), K)
    assert np.allclose(uv[0], [K.cx, K.cy])
    assert z[0] == 2.0
    uv, _ = project(np.array([[0.5, 0.0, 1.0]]), CameraPose.identity(), K)
    assert np.allclose(uv[0], [K.cx + 50.0, K.cy])


def test_project_strict_raises_behind():
    pts = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, -1.0]])
    with pytest.raises(BehindCamera):
        project(pts, CameraPose.identity(), K)


def test_project_nonstrict_marks_nan():
    pts = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, -1.0]])
    uv, z = project(pts, CameraPose.identity(), K, strict=False)
    assert np.isfinite(uv[0]).all()
    assert np.isnan(uv[1]).all()
    assert z[1] == -1.0


def test_unproject_rejects_nonpositive_depth():
    with pytest.raises(NonPositiveDepth):
        unproject(np.array([[1.0, 1.0]]), np.array([0.0]), CameraPose.identity(), K)


def test_pose_compose_and_inverse():
    rng = np.random.default_rng(4)
    a = _random_pose(rng)
    b = _random_pose(rng)
    pts = rng.normal(size=(50, 3))
    assert np.allclose(a.compose(b).apply(pts), a.apply(b.apply(pts)))
    ident = a.compose(a.inverse())
    assert np.abs(ident.R - np.eye(3)).max() <= 1e-12
    assert np.abs(ident.t).max() <= 1e-12
    assert np.allclose(a.apply(a.center()), 0.0)


def test_pose_rejects_non_rotation():
    with pytest.raises(ShapeMismatch):
        CameraPose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))  # det -1
    with pytest.raises(ShapeMismatch):
        CameraPose(np.eye(3) * 2.0, np.zeros(3))
    with pytest.raises(ShapeMismatch):
        CameraPose(np.eye(4), np.zeros(3))


def test_interpolate_pose_endpoints_exact():
    rng = np.random.default_rng(5)
    a = _random_pose(rng)
    b = _random_pose(rng)
    assert interpolate_pose(a, b, 0.0) is a
    assert interpolate_pose(a, b, 1.0) is b


def test_interpolate_pose_midpoint_rotation():
    a = CameraPose.identity()
    r = Rotation.from_rotvec([0.0, np.deg2rad(60.0), 0.0]).as_matrix()
    b = CameraPose(r, np.array([2.0, 0.0, -4.0]))
    mid = interpolate_pose(a, b, 0.5)
    assert abs(geodesic_angle(a, mid) - np.deg2rad(30.0)) <= 1e-12
    assert np.allclose(mid.t, [1.0, 0.0, -2.0])


def test_geodesic_angle_known():
    a = CameraPose.identity()
    r = Rotation.from_rotvec([np.deg2rad(45.0), 0.0, 0.0]).as_matrix()
    assert abs(geodesic_angle(a, CameraPose(r, np.zeros(3))) - np.deg2rad(45.0)) <= 1e-12
    assert geodesic_angle(a, a) == 0.0


def test_intrinsics_validation():
    with pytest.raises(ShapeMismatch):
        Intrinsics(0.0, 1.0, 1.0, 1.0, 4, 4)
    with pytest.raises(ShapeMismatch):
        Intrinsics(1.0, 1.0, 99.0, 1.0, 4, 4)


def test_intrinsics_matrix_and_scaled():
    m = K.as_matrix()
    assert m[0, 0] == K.fx and m[1, 1] == K.fy
    assert m[0, 2] == K.cx and m[1, 2] == K.cy
    s = K.scaled(2.0)
    assert (s.fx, s.fy) == (200.0, 220.0)
    assert (s.cx, s.cy, s.width, s.height) == (K.cx, K.cy, K.width, K.height)
