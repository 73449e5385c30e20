"""LiDAR frame simulation and measurement randomization.

simulate_scan casts one pattern bundle through the scene from
base_pose * mount_transform. Geometry is exact: every reported hit point
lies on a scene triangle; misses carry the max_range sentinel with
hit_flag False, which keeps downstream sorting and reward capping total.

apply_randomization implements the two LiDAR domain-randomization knobs:
a masked fraction of points is re-assigned short ranges drawn uniformly
from mask_value_range, and a disjoint fraction of the remaining hits gets
multiplicative uniform range noise. Randomness is counter-based (Philox,
keyed by seed/env/frame) so results never depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .patterns import PatternSpec, generate
from .scene import SceneWorld
from .transforms import RigidTransform


@dataclass(frozen=True)
class SensorConfig:
    pattern: PatternSpec
    max_range: float = 30.0
    min_range: float = 0.05
    mount_transform: RigidTransform = field(default_factory=RigidTransform.identity)
    mask_ratio: float = 0.0
    mask_value_range: tuple = (0.0, 0.3)
    noise_ratio: float = 0.0
    noise_rel_magnitude: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.min_range < self.max_range:
            raise ValueError("require 0 <= min_range < max_range")
        if not (0 <= self.mask_ratio <= 1 and 0 <= self.noise_ratio <= 1):
            raise ValueError("ratios must lie in [0, 1]")
        if self.mask_value_range[0] > self.mask_value_range[1]:
            raise ValueError("mask_value_range must be (lo, hi) with lo <= hi")


@dataclass
class ScanFrame:
    env_id: int
    t: float
    directions: np.ndarray      # (n, 3) unit, sensor frame
    ranges: np.ndarray          # (n,) meters; max_range sentinel on miss
    hit_flags: np.ndarray       # (n,) bool
    points_base: np.ndarray     # (n, 3) robot base frame

    @property
    def n_rays(self) -> int:
        return len(self.ranges)


def simulate_scan(world: SceneWorld, env_id: int, base_pose: RigidTransform,
                  config: SensorConfig, t: float) -> ScanFrame:
    """Cast the pattern bundle at time t and collect one frame.

    Self-occlusion needs no special handling: when the robot's own mesh is
    registered as a dynamic entity, body hits simply win the closest-hit
    race against the background.
    """
    bundle = generate(config.pattern, t)
    sensor_pose = base_pose.compose(config.mount_transform)
    dirs_world = sensor_pose.apply_vector(bundle.directions)
    origins = np.broadcast_to(sensor_pose.translation, dirs_world.shape)
    t_hit, _, _ = world.cast_batch(env_id, origins, dirs_world,
                                   config.min_range, config.max_range)
    hit_flags = np.isfinite(t_hit)
    ranges = np.where(hit_flags, t_hit, config.max_range)
    points_base = _points_from_ranges(bundle.directions, ranges, config.mount_transform)
    return ScanFrame(env_id=env_id, t=t, directions=bundle.directions,
                     ranges=ranges, hit_flags=hit_flags, points_base=points_base)


def _points_from_ranges(directions: np.ndarray, ranges: np.ndarray,
                        mount: RigidTransform) -> np.ndarray:
    return mount.apply(directions * ranges[:, None])


def randomization_rng(seed: int, env_id: int, frame_index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, env, frame): order-independent."""
    key = (np.uint64(seed), (np.uint64(env_id) << np.uint64(32)) ^ np.uint64(frame_index))
    return np.random.Generator(np.random.Philox(key=key))


def apply_randomization(frame: ScanFrame, config: SensorConfig,
                        rng: np.random.Generator) -> ScanFrame:
    """Masking + distance noise; returns a new frame, input untouched."""
    n = frame.n_rays
    ranges = frame.ranges.copy()
    hit_flags = frame.hit_flags.copy()
    if n == 0 or (config.mask_ratio == 0 and config.noise_ratio == 0):
        return replace(frame, ranges=ranges, hit_flags=hit_flags,
                       points_base=frame.points_base.copy())

    masked = rng.random(n) < config.mask_ratio
    lo, hi = config.mask_value_range
    mask_values = rng.uniform(lo, hi, size=n)  # drawn for all points: stable stream
    ranges[masked] = mask_values[masked]
    hit_flags[masked] = True

    noisy = (rng.random(n) < config.noise_ratio) & hit_flags & ~masked
    factors = 1.0 + rng.uniform(-config.noise_rel_magnitude,
                                config.noise_rel_magnitude, size=n)
    ranges[noisy] = ranges[noisy] * factors[noisy]

    np.clip(ranges, 0.0, config.max_range, out=ranges)
    points = _points_from_ranges(frame.directions, ranges, config.mount_transform)
    return replace(frame, ranges=ranges, hit_flags=hit_flags, points_base=points)
