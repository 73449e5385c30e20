"""Command line interface.

Subcommands:
  scan        cast one LiDAR frame through a scene, write PLY or CSV
  preprocess  run the perception pipeline on a saved frame, write CSVs
  rewards     evaluate the reward terms for a frame + state JSON
  bench       wall-clock benchmark (shared dynamic mesh vs per-env rebuild)
  validate    compare the accelerated pipeline against exhaustive casting

Exit status is 0 on success and 1 when validation fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import backend
from .bench import (
    REBUILD,
    SCENE_PRESETS,
    SHARED,
    BenchConfig,
    run_bench,
    run_validation_preset,
    write_bench_csv,
)
from .frame_io import load_frame, write_csv, write_ply
from .patterns import PRESETS, load_pattern
from .perception import PartitionConfig, SphericalPoints, average_downsample, farthest_point_sample, spherical_sort
from .rewards import (
    RewardWeights,
    RiskConfig,
    RobotStateSlice,
    auxiliary_rewards,
    avoidance_velocity,
    reward_rays,
    reward_vel_avoid,
    sector_min_distances,
)
from .scene import load_scene
from .sensor import ScanFrame, SensorConfig, apply_randomization, randomization_rng, simulate_scan
from .transforms import RigidTransform


def _parse_floats(text: str, n: int, what: str) -> np.ndarray:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != n:
        raise SystemExit(f"{what} needs {n} comma-separated numbers, got {len(parts)}")
    return np.asarray(parts)


def _add_backend_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto",
                   help="kernel backend (default: compiled when built)")


def _cmd_scan(args) -> int:
    backend.use(args.backend)
    world = load_scene(args.scene)
    pattern = load_pattern(args.pattern)
    pose = RigidTransform(rotation=_parse_floats(args.quat, 4, "--quat"),
                          translation=_parse_floats(args.pose, 3, "--pose"))
    config = SensorConfig(pattern=pattern, max_range=args.max_range,
                          min_range=args.min_range, mask_ratio=args.mask_ratio,
                          noise_ratio=args.noise_ratio, rng_seed=args.seed)
    frame = simulate_scan(world, args.env, pose, config, args.t)
    if args.randomize:
        frame_index = int(round(args.t / pattern.frame_period))
        rng = randomization_rng(config.rng_seed, args.env, frame_index)
        frame = apply_randomization(frame, config, rng)
    if args.out.endswith(".csv"):
        write_csv(args.out, frame)
    else:
        write_ply(args.out, frame)
    hits = int(frame.hit_flags.sum())
    print(f"wrote {args.out}: {frame.n_rays} rays, {hits} hits "
          f"({backend.current_name()} backend)")
    return 0


def _cmd_preprocess(args) -> int:
    points, ranges, hits = load_frame(args.frame)
    # the stored cloud is interpreted from the sensor origin
    norms = np.linalg.norm(points, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    dirs = np.where(norms[:, None] > 0, points / safe[:, None],
                    np.array([1.0, 0.0, 0.0]))
    frame = ScanFrame(env_id=0, t=0.0, directions=dirs, ranges=ranges,
                      hit_flags=hits, points_base=points)
    n_theta, n_phi = (int(v) for v in args.distal_bins.split(","))
    cfg = PartitionConfig(theta_threshold=args.theta_threshold,
                          k_proximal=args.k_proximal,
                          distal_bins=(n_theta, n_phi),
                          sentinel_range=args.sentinel)
    from .perception import partition

    prox, dist = partition(frame, cfg)
    prox_sorted = spherical_sort(farthest_point_sample(prox, cfg.k_proximal, cfg.fps_start))
    distal = average_downsample(dist, cfg.distal_bins, cfg.fov_theta, cfg.fov_phi,
                                cfg.sentinel_range)

    def dump(path, pts: SphericalPoints):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "phi", "range"])
            for th, ph, r in zip(pts.theta, pts.phi, pts.ranges):
                writer.writerow([repr(float(th)), repr(float(ph)), repr(float(r))])

    dump(f"{args.out_prefix}_proximal.csv", prox_sorted)
    dump(f"{args.out_prefix}_distal.csv", distal)
    print(f"wrote {args.out_prefix}_proximal.csv ({len(prox_sorted)} pts) and "
          f"{args.out_prefix}_distal.csv ({len(distal)} bins)")
    return 0


def _cmd_rewards(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    cfg = RiskConfig(**payload.get("config", {}))
    weights = RewardWeights(**payload.get("weights", {}))
    state = RobotStateSlice(**payload.get("state", {}))
    points = np.asarray(payload.get("points", []), dtype=float).reshape(-1, 3)
    ranges = np.asarray(payload.get("ranges", []), dtype=float)

    d = sector_min_distances(points, cfg)
    v_avoid = avoidance_velocity(d, cfg)
    r_va = reward_vel_avoid(state, v_avoid, cfg)
    r_ry = reward_rays(ranges, cfg) if ranges.size else None
    result = auxiliary_rewards(state, weights, r_vel_avoid=r_va, r_rays=r_ry)
    result["sector_distances"] = d.tolist()
    result["v_avoid"] = v_avoid.tolist()
    result["r_vel_avoid"] = r_va
    if r_ry is not None:
        result["r_rays"] = r_ry
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_bench(args) -> int:
    backend.use(args.backend)
    baselines = {"shared": (SHARED,), "rebuild": (REBUILD,), "both": (SHARED, REBUILD)}
    cfg = BenchConfig(
        env_counts=tuple(int(v) for v in args.envs.split(",")),
        rays_per_frame=tuple(int(v) for v in args.rays.split(",")),
        steps=args.steps,
        warmup=args.warmup,
        entities_per_env=args.entities,
        repetitions=args.repetitions,
        baselines=baselines[args.baseline],
        scene=args.scene,
        seed=args.seed,
    )

    def progress(rec):
        print(f"{rec.baseline:16s} envs={rec.n_envs:<5d} rays={rec.rays_per_frame:<6d} "
              f"mean={rec.mean_ms:9.2f} ms  std={rec.std_ms:7.2f} ms  "
              f"{rec.rays_per_second / 1e6:7.2f} Mray/s")

    records = run_bench(cfg, progress=progress)
    if args.out:
        write_bench_csv(records, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    backend.use(args.backend)
    report = run_validation_preset(args.scene, args.rays, args.seed,
                                   inject_stale=args.inject_stale)
    print(report.summary())
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="veclidar", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="simulate one LiDAR frame")
    p.add_argument("--scene", required=True, help="scene JSON file")
    p.add_argument("--pattern", default="grid",
                   help=f"preset ({', '.join(sorted(PRESETS))}) or pattern JSON file")
    p.add_argument("--pose", default="0,0,0.5", help="sensor base position x,y,z")
    p.add_argument("--quat", default="1,0,0,0", help="base orientation qw,qx,qy,qz")
    p.add_argument("--t", type=float, default=0.0, help="simulation time (s)")
    p.add_argument("--env", type=int, default=0)
    p.add_argument("--max-range", type=float, default=30.0)
    p.add_argument("--min-range", type=float, default=0.05)
    p.add_argument("--randomize", action="store_true", help="apply masking/noise")
    p.add_argument("--mask-ratio", type=float, default=0.1)
    p.add_argument("--noise-ratio", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output .ply or .csv")
    _add_backend_arg(p)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("preprocess", help="perception pipeline on a saved frame")
    p.add_argument("--frame", required=True, help="input .ply or .csv frame")
    p.add_argument("--out-prefix", default="preprocessed")
    p.add_argument("--theta-threshold", type=float, default=-0.15)
    p.add_argument("--k-proximal", type=int, default=64)
    p.add_argument("--distal-bins", default="8,16", help="n_theta,n_phi")
    p.add_argument("--sentinel", type=float, default=30.0)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("rewards", help="reward term breakdown for frame + state JSON")
    p.add_argument("--input", required=True, help="JSON with points/ranges/state/config/weights")
    p.add_argument("--out", default=None, help="also write the JSON here")
    p.set_defaults(func=_cmd_rewards)

    p = sub.add_parser("bench", help="shared vs per-env-rebuild wall-clock benchmark")
    p.add_argument("--envs", default="1,16,64")
    p.add_argument("--rays", default="1024,4096")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--entities", type=int, default=6)
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--baseline", choices=["shared", "rebuild", "both"], default="both")
    p.add_argument("--scene", default="obstacle-field", choices=list(SCENE_PRESETS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path")
    _add_backend_arg(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("validate", help="pipeline vs brute-force oracle")
    p.add_argument("--scene", default="obstacle-field",
                   help=f"preset ({', '.join(SCENE_PRESETS)}) or scene JSON file")
    p.add_argument("--rays", type=int, default=1000, help="rays per environment")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-stale", action="store_true",
                   help="negative control: skip the refit and expect failure")
    _add_backend_arg(p)
    p.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
