"""Command-line pipeline driver.

Subcommands: synth, track, build, render, traj, eval.  Machine-readable
JSON goes to stdout, diagnostics and per-frame timing to stderr.  Exit
codes: 0 success, 2 usage or validation error, 1 internal error.  The
GSFIELD_THREADS environment variable caps kernel parallelism (0 = auto).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .camera import CameraPose, Intrinsics, unproject
from .config import (
    load_config,
    load_intrinsics,
    merged_config,
    require,
    save_intrinsics,
)
from .errors import ConfigError, GsfieldError, LengthMismatch, ShapeMismatch
from .field import (
    build_field_from_depth,
    build_field_from_tracks,
    load_field,
    save_field,
)
from .metrics import (
    TrackEval,
    average_jaccard_2d,
    average_jaccard_3d,
    delta_avg_2d,
    delta_avg_3d,
    MetricReport,
    occlusion_accuracy,
    psnr,
    ssim,
)
from .renderer import render_frame
from .synth import SceneSpec, generate, sparse_subsample
from .tensor_io import (
    frame_path,
    load_tensor,
    read_frames,
    save_tensor,
    write_frames,
    write_ppm,
)
from .tracking import (
    ClassicalLooseOperator,
    ClassicalTightOperator,
    load_sparse_tracks,
    load_trackset,
    save_sparse_tracks,
    save_trackset,
    track_video,
)
from .trajectory import (
    ArcballSpec,
    arcball_schedule,
    dolly_zoom_schedule,
    identity_schedule,
    keyframe_schedule,
    load_schedule,
    schedule_from_dict,
    schedule_to_dict,
    save_schedule,
)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=1))


def _csv_floats(text: str, n: int, what: str):
    parts = text.split(",")
    if len(parts) != n:
        raise ConfigError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{what} is not numeric: {text!r}") from None


def _config_from(args, sections) -> dict:
    """Merge the optional --config file with per-flag overrides."""
    base = load_config(args.config) if getattr(args, "config", None) else None
    return merged_config(base, sections)


# --- synth ---------------------------------------------------------------

def cmd_synth(args) -> int:
    velocity = tuple(_csv_floats(args.velocity, 2, "--velocity"))
    spec = SceneSpec(
        kind=args.kind,
        t_count=args.frames,
        height=args.height,
        width=args.width,
        velocity=velocity,
        rate_deg=args.rate,
        seed=args.seed,
        contrast=args.contrast,
    )
    scene = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_frames(scene.frames, out / "frames")
    save_tensor(scene.depths.astype(np.float32), out / "depths.gst")
    save_trackset(scene.tracks, out / "gt")
    save_sparse_tracks(sparse_subsample(scene, args.stride), out / "sparse.gst")
    save_intrinsics(scene.intrinsics, out / "intrinsics.json")
    _emit(
        {
            "command": "synth",
            "kind": spec.kind,
            "frames": spec.t_count,
            "height": spec.height,
            "width": spec.width,
            "out": str(out),
        }
    )
    return 0


# --- track ---------------------------------------------------------------

def _make_operator(tracker_cfg: dict):
    cls = ClassicalTightOperator if tracker_cfg["coupling"] == "tight" else ClassicalLooseOperator
    return cls(radius=tracker_cfg["radius"], tau=tracker_cfg["tau"], lam=tracker_cfg["lam"])


def cmd_track(args) -> int:
    cfg = _config_from(
        args,
        {
            "paths": {"frames": args.frames, "depths": args.depths,
                      "sparse": args.sparse, "out": args.out},
            "tracker": {"iters": args.iters, "radius": args.radius, "tau": args.tau,
                        "lam": args.lam, "coupling": args.coupling},
        },
    )
    frames = read_frames(require(cfg, "paths", "frames"))
    depths = load_tensor(require(cfg, "paths", "depths")).astype(np.float64)
    sparse_path = cfg["paths"].get("sparse")
    sparse = load_sparse_tracks(sparse_path) if sparse_path else None
    out = Path(require(cfg, "paths", "out"))
    op = _make_operator(cfg["tracker"])

    seconds = []

    def on_frame(t, dt):
        seconds.append(dt)
        _log(f"frame {t}/{frames.shape[0] - 1}: {dt:.3f} s")

    start = time.perf_counter()
    tracks = track_video(frames, depths, sparse, op, cfg["tracker"]["iters"], on_frame)
    total = time.perf_counter() - start
    save_trackset(tracks, out)
    _emit(
        {
            "command": "track",
            "frames": int(frames.shape[0]),
            "points": int(frames.shape[1] * frames.shape[2]),
            "seconds_per_frame": total / max(len(seconds), 1),
            "backend": kernels.backend_name(),
            "out": str(out),
        }
    )
    return 0


# --- build ---------------------------------------------------------------

def cmd_build(args) -> int:
    cfg = _config_from(
        args,
        {
            "paths": {"frames": args.frames, "depths": args.depths,
                      "tracks": args.tracks, "intrinsics": args.intrinsics,
                      "out": args.out},
            "field": {"s": args.s, "alpha": args.alpha, "color_mode": args.color_mode},
        },
    )
    k = load_intrinsics(require(cfg, "paths", "intrinsics"))
    frames = read_frames(require(cfg, "paths", "frames"))
    fcfg = cfg.get("field", {})
    mode = fcfg.get("color_mode", "static")
    s = fcfg.get("s")
    alpha = fcfg.get("alpha", 0.95)
    if mode == "per_frame":
        depths = load_tensor(require(cfg, "paths", "depths")).astype(np.float64)
        field = build_field_from_depth(frames, depths, k, s, alpha)
    else:
        tracks = load_trackset(require(cfg, "paths", "tracks"))
        field = build_field_from_tracks(frames[0], tracks, k, s, alpha)
    out = Path(require(cfg, "paths", "out"))
    save_field(field, out)
    _emit(
        {
            "command": "build",
            "primitives": field.num_primitives,
            "frames": field.num_frames,
            "color_mode": field.color_mode,
            "s": field.s,
            "alpha": field.alpha,
            "out": str(out),
        }
    )
    return 0


# --- render --------------------------------------------------------------

def cmd_render(args) -> int:
    background = _csv_floats(args.background, 3, "--background")
    cfg = _config_from(
        args,
        {
            "paths": {"field": args.field, "trajectory": args.traj, "out": args.out},
            "render": {"tile": args.tile, "background": background,
                       "reference": args.reference or None,
                       "transmittance": args.transmittance or None},
        },
    )
    field = load_field(require(cfg, "paths", "field"))
    schedule = load_schedule(require(cfg, "paths", "trajectory"))
    if len(schedule) != field.num_frames:
        raise LengthMismatch(
            f"trajectory has {len(schedule)} frames, field has {field.num_frames}"
        )
    rcfg = cfg["render"]
    out = Path(require(cfg, "paths", "out"))
    out.mkdir(parents=True, exist_ok=True)
    for t in range(field.num_frames):
        k, pose = schedule.frame(t)
        start = time.perf_counter()
        buf = render_frame(
            field, t, pose, k, rcfg["background"],
            tile=rcfg["tile"], reference=rcfg["reference"],
        )
        _log(f"frame {t}/{field.num_frames - 1}: {time.perf_counter() - start:.3f} s")
        write_ppm(buf.color, frame_path(out, t))
        if rcfg["transmittance"]:
            save_tensor(
                buf.transmittance.astype(np.float32), out / f"trans_{t:05d}.gst"
            )
    k0, _ = schedule.frame(0)
    _emit(
        {
            "command": "render",
            "frames": field.num_frames,
            "height": k0.height,
            "width": k0.width,
            "backend": kernels.backend_name(),
            "out": str(out),
        }
    )
    return 0


# --- traj ----------------------------------------------------------------

def _load_keyframes(path):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read keyframes {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"keyframes {path} is not valid JSON: {e}") from None
    entries = data["keys"] if isinstance(data, dict) else data
    keys = []
    for e in entries:
        frame = int(e["frame"])
        sched = schedule_from_dict({"frames": [e]})
        k, pose = sched.frame(0)
        keys.append((frame, k, pose))
    return keys


def cmd_traj(args) -> int:
    if args.kind in ("arcball", "dolly_zoom", "identity") and not args.intrinsics:
        raise ConfigError(f"--intrinsics is required for kind {args.kind}")
    if args.kind == "arcball":
        k = load_intrinsics(args.intrinsics)
        pivot = tuple(_csv_floats(args.pivot, 3, "--pivot"))
        spec = ArcballSpec(
            direction=args.direction, max_angle=args.max_angle,
            pivot=pivot, num_frames=args.frames,
        )
        schedule = arcball_schedule(spec, k)
    elif args.kind == "dolly_zoom":
        k = load_intrinsics(args.intrinsics)
        schedule = dolly_zoom_schedule(args.frames, k, args.z_target, args.zoom)
    elif args.kind == "identity":
        schedule = identity_schedule(args.frames, load_intrinsics(args.intrinsics))
    else:
        if not args.keys:
            raise ConfigError("--keys is required for kind keyframe")
        schedule = keyframe_schedule(_load_keyframes(args.keys), args.frames)
    payload = schedule_to_dict(schedule)
    if args.out:
        save_schedule(schedule, args.out)
    _emit(payload)
    return 0


# --- eval ----------------------------------------------------------------

def _image_reports(pred: np.ndarray, gt: np.ndarray) -> dict:
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"frame stacks differ: {pred.shape} vs {gt.shape}")
    per_frame = []
    for t in range(pred.shape[0]):
        per_frame.append(
            {
                "frame": t,
                "psnr": MetricReport("psnr", psnr(pred[t], gt[t]), 1).to_dict(),
                "ssim": MetricReport("ssim", ssim(pred[t], gt[t]), 1).to_dict(),
            }
        )
    return {"per_frame": per_frame, "last_frame": per_frame[-1]}


def _track_reports(pred_dir, gt_dir, k: Intrinsics | None) -> list:
    pred = load_trackset(pred_dir)
    gt = load_trackset(gt_dir)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"track sets differ: {pred.shape} vs {gt.shape}")
    t_count, h, w = pred.shape
    n = h * w

    def flat(ts):
        return (
            ts.x.reshape(t_count, n, 2).transpose(1, 0, 2),
            ts.d.reshape(t_count, n).transpose(1, 0),
            ts.v.reshape(t_count, n).transpose(1, 0),
        )

    px, pd, pv = flat(pred)
    gx, gd, gv = flat(gt)
    ev2 = TrackEval(px, gx, pv, gv > 0.5)
    count = int(np.count_nonzero(ev2.mask))
    reports = [
        MetricReport("delta_avg_2d", delta_avg_2d(ev2), count),
        MetricReport("occlusion_accuracy", occlusion_accuracy(ev2), count),
        MetricReport("average_jaccard_2d", average_jaccard_2d(ev2), count),
    ]
    if k is not None:
        identity = CameraPose.identity()
        p3 = unproject(px, pd, identity, k)
        g3 = unproject(gx, gd, identity, k)
        ev3 = TrackEval(p3, g3, pv, gv > 0.5, focal=k.fx)
        reports.append(MetricReport("delta_avg_3d", delta_avg_3d(ev3), count))
        reports.append(MetricReport("average_jaccard_3d", average_jaccard_3d(ev3), count))
    return [r.to_dict() for r in reports]


def cmd_eval(args) -> int:
    have_frames = args.pred_frames and args.gt_frames
    have_tracks = args.pred_tracks and args.gt_tracks
    if not have_frames and not have_tracks:
        raise ConfigError("need --pred-frames/--gt-frames and/or --pred-tracks/--gt-tracks")
    payload = {"command": "eval"}
    if have_frames:
        payload["images"] = _image_reports(
            read_frames(args.pred_frames), read_frames(args.gt_frames)
        )
    if have_tracks:
        k = load_intrinsics(args.intrinsics) if args.intrinsics else None
        payload["tracking"] = _track_reports(args.pred_tracks, args.gt_tracks, k)
    _emit(payload)
    return 0


# --- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gsfield",
        description="RGB-D video -> dense tracks -> pseudo-4D Gaussian field -> re-rendered video",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic RGB-D scene with ground truth")
    sp.add_argument("--kind", required=True,
                    choices=["translating_plane", "rotating_disc", "orbiting_points"])
    sp.add_argument("--out", required=True)
    sp.add_argument("--frames", type=int, default=24)
    sp.add_argument("--height", type=int, default=128)
    sp.add_argument("--width", type=int, default=128)
    sp.add_argument("--velocity", default="5,0", help="px/frame as 'vx,vy'")
    sp.add_argument("--rate", type=float, default=10.0, help="deg/frame")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--contrast", type=float, default=0.5)
    sp.add_argument("--stride", type=int, default=16, help="sparse guide-track spacing")
    sp.set_defaults(func=cmd_synth)

    tp = sub.add_parser("track", help="dense-track every frame-0 pixel")
    tp.add_argument("--config")
    tp.add_argument("--frames", help="directory of frame_%%05d.ppm")
    tp.add_argument("--depths", help="GST1 (T,H,W) depth tensor")
    tp.add_argument("--sparse", help="GST1 [Nq,T,3] guide tracks")
    tp.add_argument("--out", help="output track directory")
    tp.add_argument("--iters", type=int)
    tp.add_argument("--radius", type=int)
    tp.add_argument("--tau", type=float)
    tp.add_argument("--lam", type=float)
    tp.add_argument("--coupling", choices=["loose", "tight"])
    tp.set_defaults(func=cmd_track)

    bp = sub.add_parser("build", help="lift tracks (or raw depth) to a Gaussian field")
    bp.add_argument("--config")
    bp.add_argument("--frames")
    bp.add_argument("--tracks")
    bp.add_argument("--depths")
    bp.add_argument("--intrinsics")
    bp.add_argument("--out")
    bp.add_argument("--s", type=float)
    bp.add_argument("--alpha", type=float)
    bp.add_argument("--color-mode", dest="color_mode", choices=["static", "per_frame"])
    bp.set_defaults(func=cmd_build)

    rp = sub.add_parser("render", help="render a field under a trajectory")
    rp.add_argument("--config")
    rp.add_argument("--field")
    rp.add_argument("--traj")
    rp.add_argument("--out")
    rp.add_argument("--tile", type=int)
    rp.add_argument("--background", default="0,0,0")
    rp.add_argument("--reference", action="store_true")
    rp.add_argument("--transmittance", action="store_true")
    rp.set_defaults(func=cmd_render)

    jp = sub.add_parser("traj", help="emit a camera schedule as JSON")
    jp.add_argument("--kind", required=True,
                    choices=["arcball", "dolly_zoom", "keyframe", "identity"])
    jp.add_argument("--out")
    jp.add_argument("--intrinsics")
    jp.add_argument("--frames", type=int, default=49)
    jp.add_argument("--direction", default="left")
    jp.add_argument("--max-angle", dest="max_angle", type=float, default=30.0)
    jp.add_argument("--pivot", default="0,0,2")
    jp.add_argument("--z-target", dest="z_target", type=float, default=2.0)
    jp.add_argument("--zoom", type=float, default=2.0)
    jp.add_argument("--keys", help="JSON keyframe list")
    jp.set_defaults(func=cmd_traj)

    ep = sub.add_parser("eval", help="image and tracking metrics")
    ep.add_argument("--pred-frames")
    ep.add_argument("--gt-frames")
    ep.add_argument("--pred-tracks")
    ep.add_argument("--gt-tracks")
    ep.add_argument("--intrinsics", help="enables the 3D tracking metrics")
    ep.set_defaults(func=cmd_eval)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GsfieldError as e:
        _log(f"error: {e}")
        return 2
    except Exception as e:  # pragma: no cover - internal failure path
        _log(f"internal error: {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
