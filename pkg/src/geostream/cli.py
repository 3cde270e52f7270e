"""Operator command surface.

Subcommands: simulate, calibrate, vectorize, serve, replay. Every command
prints a human summary, or a machine-readable JSON document with --json.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 pipeline
error, matching what CI scripts expect.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import (
    BudgetError,
    DomainError,
    GeostreamError,
    ParseError,
    PlanError,
    UnobservableError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PIPELINE = 4

DATA_DIR_ENV = "GEOSTREAM_DATA_DIR"


def _default_out(name: str) -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, ".")) / name


def _emit(args, summary: dict, human: str):
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(human)


def _load_json(path, what: str):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"{what} file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}")


class ConfigError(Exception):
    pass


def cmd_simulate(args) -> int:
    from .downlink.linksim import LinkProfile
    from .flightsim.mission import run_mission
    from .flightsim.plan import MissionPlan, desk_camera, required_scene_extent
    from .flightsim.scene import generate_scene

    plan_cfg = _load_json(args.plan, "plan")
    scene_cfg = _load_json(args.scene, "scene")
    try:
        plan = MissionPlan(**plan_cfg)
    except (TypeError, PlanError) as exc:
        raise ConfigError(f"bad plan config: {exc}")
    profile = (
        LinkProfile.from_json(args.link)
        if args.link
        else LinkProfile(bandwidth_bps=2e6, latency_ms=20.0)
    )
    cam = desk_camera(scale=args.camera_scale, pitch_forward_deg=plan.camera_pitch_deg)
    if "extent_e" not in scene_cfg or scene_cfg.get("extent_e") == "auto":
        ext_e, ext_n = required_scene_extent(plan, cam)
        scene_cfg["extent_e"] = ext_e
        scene_cfg["extent_n"] = ext_n
    scene_cfg.pop("seed", None)
    scene = generate_scene(seed=args.seed, **scene_cfg)
    out_dir = Path(args.out)
    summary = run_mission(
        plan,
        scene,
        profile,
        out_dir,
        cam,
        budget_bytes=args.budget,
        ins_noise=args.ins_noise,
        seed=args.seed,
    )
    _emit(
        args,
        summary,
        f"mission complete: {summary['frames']} frames, "
        f"{summary['analytics_committed']} analytics delivered, "
        f"coverage {summary['coverage_area_m2']:.0f} m^2, "
        f"hash {summary['summary_hash'][:12]}",
    )
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .calib import calibrate, read_sfm_poses, write_calibration_json
    from .pose import read_ins_csv

    sfm = read_sfm_poses(args.sfm, args.times)
    traj = read_ins_csv(args.ins)
    frame = traj.median_frame()
    result = calibrate(sfm, traj, frame, search_window_s=args.window)
    write_calibration_json(args.out, result)
    summary = {
        "out": str(args.out),
        "scale": result.similarity.scale,
        "time_offset_s": result.time_offset_s,
        "position_rms_m": result.position_rms_m,
        "attitude_rms_deg": result.attitude_rms_deg,
        "warnings": list(result.warnings),
    }
    _emit(
        args,
        summary,
        f"calibration written to {args.out}: offset {result.time_offset_s*1e3:.1f} ms, "
        f"attitude RMS {result.attitude_rms_deg:.4f} deg, "
        f"position RMS {result.position_rms_m:.3f} m",
    )
    return EXIT_OK


def cmd_vectorize(args) -> int:
    import numpy as np
    from PIL import Image

    from .analytics.segment import SegMask
    from .analytics.vectorize import vectorize

    if args.budget <= 0:
        raise ConfigError("budget must be positive")
    try:
        raster = np.asarray(Image.open(args.mask).convert("L"))
    except FileNotFoundError:
        raise ConfigError(f"mask file not found: {args.mask}")
    mask = SegMask(classes=raster.astype(np.uint8))
    result = vectorize(mask, args.budget)
    if args.out:
        Path(args.out).write_bytes(result.encoded)
    summary = {
        "encoded_bytes": result.encoded_bytes,
        "budget_bytes": args.budget,
        "tolerance_px": result.tolerance_px,
        "iou_per_class": {str(k): v for k, v in result.iou_per_class.items()},
        "rings": sum(len(cp.outers) + len(cp.holes) for cp in result.polygons),
    }
    _emit(
        args,
        summary,
        f"vectorized to {result.encoded_bytes} B (budget {args.budget}) at "
        f"{result.tolerance_px} px tolerance; IoU "
        + ", ".join(f"class {k}: {v:.4f}" for k, v in result.iou_per_class.items()),
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .station.api import create_app

    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bind address must be HOST:PORT, got {args.bind!r}")
    app = create_app(args.store)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .station.replay import replay_capture

    if not Path(args.capture).exists():
        raise ConfigError(f"capture file not found: {args.capture}")
    store, station = replay_capture(args.capture, args.store, speed=args.speed)
    summary = {
        "store": str(args.store),
        "frames": station.state.link["frames"],
        "analytics_committed": len(store.committed),
        "integrity_errors": station.state.link["integrity_errors"],
    }
    _emit(
        args,
        summary,
        f"replayed {summary['frames']} frames into {args.store}; "
        f"{summary['analytics_committed']} analytics records",
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geostream",
        description="Airborne survey payload data path: simulate, calibrate, vectorize, serve, replay.",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a full simulated mission")
    p.add_argument("--plan", required=True, help="mission plan JSON")
    p.add_argument("--scene", required=True, help="scene config JSON")
    p.add_argument("--link", help="link profile JSON (default: clean 2 Mbps)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=20_480, help="analytics byte budget per image")
    p.add_argument("--camera-scale", type=int, default=8, help="sensor downscale vs the full camera")
    p.add_argument("--ins-noise", action="store_true", help="enable INS noise defaults")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="solve similarity, boresight, and time offset")
    p.add_argument("--sfm", required=True, help="SfM pose export (image qw qx qy qz tx ty tz)")
    p.add_argument("--ins", required=True, help="INS trajectory CSV")
    p.add_argument("--times", required=True, help="image capture times CSV")
    p.add_argument("--window", type=float, default=0.5, help="offset search half-window, seconds")
    p.add_argument("--out", default=_default_out("calib.json"), help="output JSON path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("vectorize", help="vectorize a mask PNG under a byte budget")
    p.add_argument("--mask", required=True, help="8-bit PNG, class ids as pixel values")
    p.add_argument("--budget", type=int, default=20_480)
    p.add_argument("--out", help="write the encoded polygon bytes here")
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("serve", help="serve the station API over mission stores")
    p.add_argument("--store", required=True, help="missions root directory")
    p.add_argument("--bind", default="127.0.0.1:8340")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="re-drive a station from a downlink capture")
    p.add_argument("--capture", required=True, help="capture.log from a mission store")
    p.add_argument("--store", required=True, help="output store directory")
    p.add_argument("--speed", type=float, default=0.0, help="replay speed factor (0 = max)")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, DomainError, PlanError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BudgetError, UnobservableError) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except GeostreamError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
