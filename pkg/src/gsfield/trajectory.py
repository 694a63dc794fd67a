"""Scheduled camera trajectories.

A schedule assigns every output frame a (intrinsics, pose) pair.  Three
generators are provided: an arcball orbit that swings the camera around a
pivot and back, a dolly zoom that trades focal length against distance so
the subject's projected size stays fixed, and generic keyframe
interpolation.  Schedules serialize to a small JSON format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .camera import CameraPose, Intrinsics, interpolate_pose
from .errors import (
    DegenerateDolly,
    InvalidSpec,
    IoFailure,
    MalformedHeader,
    MissingEndpoints,
    UnsortedKeys,
)

DIRECTION_NAMES = (
    "left",
    "right",
    "up",
    "down",
    "upper_left",
    "lower_left",
    "upper_right",
    "lower_right",
)


@dataclass(frozen=True)
class TrajectorySchedule:
    """Per-frame (Intrinsics, CameraPose) pairs."""

    frames: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.frames) < 1:
            raise InvalidSpec("schedule needs at least one frame")
        for k, pose in self.frames:
            if not isinstance(k, Intrinsics) or not isinstance(pose, CameraPose):
                raise InvalidSpec("schedule entries must be (Intrinsics, CameraPose)")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, t):
        return self.frames[t]

    def __iter__(self):
        return iter(self.frames)

    def frame(self, t: int):
        return self.frames[t]


def eight_directions() -> tuple:
    """The eight 45-degree screen directions as (dx, dy) unit vectors.

    dy is positive toward image-up, so "up" is (0, 1).  Order is fixed:
    left, right, up, down, upper left, lower left, upper right, lower right.
    """
    h = np.sqrt(2.0) / 2.0
    return (
        (-1.0, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (-h, h),
        (-h, -h),
        (h, h),
        (h, -h),
    )


def direction_vector(name: str):
    try:
        return eight_directions()[DIRECTION_NAMES.index(name)]
    except ValueError:
        raise InvalidSpec(
            f"unknown direction {name!r}, expected one of {DIRECTION_NAMES}"
        ) from None


@dataclass(frozen=True)
class ArcballSpec:
    direction: tuple  # (dx, dy) screen direction, dy positive up
    max_angle: float = 30.0  # degrees, peak orbit angle at the middle frame
    pivot: tuple = (0.0, 0.0, 2.0)
    num_frames: int = 49

    def __post_init__(self):
        if isinstance(self.direction, str):
            object.__setattr__(self, "direction", direction_vector(self.direction))
        d = np.asarray(self.direction, dtype=np.float64)
        if d.shape != (2,) or not np.linalg.norm(d) > 0.0:
            raise InvalidSpec(f"direction must be a nonzero 2-vector, got {self.direction}")
        if not 0.0 < self.max_angle < 90.0:
            raise InvalidSpec(f"max_angle must lie in (0, 90), got {self.max_angle}")
        if self.num_frames < 3:
            raise InvalidSpec(f"need at least 3 frames, got {self.num_frames}")


def _arcball_axis(direction) -> np.ndarray:
    """World-space orbit axis for a screen direction.

    Camera axes are +x right and +y down, so a screen motion (dx, dy-up)
    comes from rotating the world about (-dy, -dx, 0): e.g. "left" (-1, 0)
    maps to the +y axis, which swings the camera toward -x.
    """
    dx, dy = float(direction[0]), float(direction[1])
    axis = np.array([-dy, -dx, 0.0])
    return axis / np.linalg.norm(axis)


def arcball_schedule(spec: ArcballSpec, k: Intrinsics) -> TrajectorySchedule:
    """Orbit the camera about a pivot and back, keeping it aimed at the pivot.

    The orbit angle rises linearly from 0 to max_angle at frame
    (T-1)//2 and falls linearly back to 0, so pose[0] and pose[T-1] are the
    identity and odd-length schedules are mirror-symmetric.  Each pose
    rotates the world about the pivot: x_cam = Rᵀ (x_world - P) + P, which
    keeps the pivot at fixed camera coordinates (the look-at rule) and the
    camera center on a sphere of radius ‖P‖ around it.
    """
    t_count = spec.num_frames
    pivot = np.asarray(spec.pivot, dtype=np.float64).reshape(3)
    axis = _arcball_axis(spec.direction)
    mid = (t_count - 1) // 2
    peak = np.deg2rad(spec.max_angle)
    frames = []
    for i in range(t_count):
        if i <= mid:
            theta = peak * i / mid
        else:
            theta = peak * (t_count - 1 - i) / (t_count - 1 - mid)
        if theta == 0.0:
            pose = CameraPose.identity()
        else:
            r = Rotation.from_rotvec(axis * theta).as_matrix()
            pose = CameraPose(r.T, pivot - r.T @ pivot)
        frames.append((k, pose))
    return TrajectorySchedule(tuple(frames))


def dolly_zoom_schedule(
    t_count: int, k0: Intrinsics, z_target: float, zoom: float
) -> TrajectorySchedule:
    """Zoom the lens while dollying so a subject at z_target keeps its size.

    The focal multiplier m_t ramps linearly from 1 to `zoom`; the camera
    moves along its own +z by dz_t = z_target * (1 - m_t), which solves
    f_t / (z_target - dz_t) = f0 / z_target.  Zooming in (zoom > 1)
    therefore pulls the camera back, and zooming out pushes it forward.
    """
    if t_count < 1:
        raise InvalidSpec(f"need at least one frame, got {t_count}")
    if z_target <= 0.0:
        raise InvalidSpec(f"z_target must be positive, got {z_target}")
    if zoom <= 0.0:
        raise InvalidSpec(f"zoom must be positive, got {zoom}")
    frames = []
    for t in range(t_count):
        frac = t / (t_count - 1) if t_count > 1 else 0.0
        m = 1.0 + (zoom - 1.0) * frac
        dz = z_target * (1.0 - m)
        if dz >= z_target:
            raise DegenerateDolly(
                f"frame {t} needs dz = {dz} >= z_target = {z_target}"
            )
        pose = CameraPose(np.eye(3), np.array([0.0, 0.0, -dz]))
        frames.append((k0.scaled(m), pose))
    return TrajectorySchedule(tuple(frames))


def identity_schedule(t_count: int, k: Intrinsics) -> TrajectorySchedule:
    """T copies of (k, identity pose); renders the field from the source view."""
    if t_count < 1:
        raise InvalidSpec(f"need at least one frame, got {t_count}")
    return TrajectorySchedule(tuple((k, CameraPose.identity()) for _ in range(t_count)))


def _lerp_intrinsics(a: Intrinsics, b: Intrinsics, s: float) -> Intrinsics:
    if (a.width, a.height) != (b.width, b.height):
        raise InvalidSpec("keyframes disagree on image size")
    return Intrinsics(
        (1.0 - s) * a.fx + s * b.fx,
        (1.0 - s) * a.fy + s * b.fy,
        (1.0 - s) * a.cx + s * b.cx,
        (1.0 - s) * a.cy + s * b.cy,
        a.width,
        a.height,
    )


def keyframe_schedule(keys, t_count: int) -> TrajectorySchedule:
    """Interpolate (frame, intrinsics, pose) keys over t_count frames.

    Keys must be strictly increasing and span frames 0 .. t_count-1.
    Poses blend geodesically between bracketing keys, intrinsics
    componentwise; at a key frame the key is returned exactly.
    """
    keys = list(keys)
    if len(keys) < 1:
        raise MissingEndpoints("no keyframes given")
    idx = [int(key[0]) for key in keys]
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise UnsortedKeys(f"key frames must be strictly increasing, got {idx}")
    if idx[0] != 0 or idx[-1] != t_count - 1:
        raise MissingEndpoints(
            f"keys must span frames 0 and {t_count - 1}, got {idx[0]}..{idx[-1]}"
        )
    frames = []
    seg = 0
    for t in range(t_count):
        while idx[seg + 1] < t:
            seg += 1
        f0, k0, p0 = keys[seg]
        f1, k1, p1 = keys[seg + 1]
        if t == f0:
            frames.append((k0, p0))
        elif t == f1:
            frames.append((k1, p1))
        else:
            s = (t - f0) / (f1 - f0)
            frames.append((_lerp_intrinsics(k0, k1, s), interpolate_pose(p0, p1, s)))
    return TrajectorySchedule(tuple(frames))


def schedule_to_dict(schedule: TrajectorySchedule) -> dict:
    frames = []
    for k, pose in schedule:
        frames.append(
            {
                "fx": k.fx,
                "fy": k.fy,
                "cx": k.cx,
                "cy": k.cy,
                "width": k.width,
                "height": k.height,
                "R": [float(x) for x in pose.R.reshape(9)],
                "t": [float(x) for x in pose.t],
            }
        )
    return {"frames": frames}


def schedule_from_dict(data: dict) -> TrajectorySchedule:
    try:
        entries = data["frames"]
    except (TypeError, KeyError):
        raise MalformedHeader('trajectory JSON must contain a "frames" list') from None
    frames = []
    for i, e in enumerate(entries):
        try:
            # width/height default to the sizes implied by a centered
            # principal point, for files written by minimal producers
            w = int(e.get("width", round(2.0 * e["cx"])))
            h = int(e.get("height", round(2.0 * e["cy"])))
            k = Intrinsics(e["fx"], e["fy"], e["cx"], e["cy"], w, h)
            r = np.asarray(e["R"], dtype=np.float64).reshape(3, 3)
            pose = CameraPose(r, np.asarray(e["t"], dtype=np.float64))
        except (KeyError, TypeError, ValueError) as err:
            raise MalformedHeader(f"bad trajectory frame {i}: {err}") from None
        frames.append((k, pose))
    return TrajectorySchedule(tuple(frames))


def save_schedule(schedule: TrajectorySchedule, path) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(schedule), indent=1) + "\n")


def load_schedule(path) -> TrajectorySchedule:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"cannot read schedule {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedHeader(f"schedule {path} is not valid JSON: {e}") from None
    return schedule_from_dict(data)
