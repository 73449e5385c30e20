"""Point-cloud preprocessing for learned perception.

A raw frame is split by ray elevation into a proximal subset (near-field,
dense, above the threshold angle) and a distal subset (far-field). The
proximal side is thinned with farthest-point sampling, the distal side
with fixed-grid average downsampling; both are ordered by spherical
coordinates (theta, then phi) and stacked into a fixed-shape history of
the latest n_hist frames, zero-padded before warm-up. Shapes never depend
on the raw point count, which is what downstream sequence models require.

Angles use theta = elevation from the sensor's horizontal plane (positive
up) and phi = azimuth in [-pi, pi).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .scene import SceneWorld
from .sensor import ScanFrame
from .transforms import RigidTransform

_BIN_EDGE_TOL = 1e-9


@dataclass
class SphericalPoints:
    """Point set in spherical + Cartesian form; arrays share one ordering."""

    theta: np.ndarray       # (n,) elevation rad
    phi: np.ndarray         # (n,) azimuth rad, [-pi, pi)
    ranges: np.ndarray      # (n,) meters
    xyz: np.ndarray         # (n, 3) Cartesian, base frame

    def __len__(self) -> int:
        return len(self.ranges)

    @staticmethod
    def empty() -> "SphericalPoints":
        return SphericalPoints(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros((0, 3)))

    def take(self, idx) -> "SphericalPoints":
        return SphericalPoints(self.theta[idx], self.phi[idx], self.ranges[idx], self.xyz[idx])


@dataclass(frozen=True)
class PartitionConfig:
    theta_threshold: float = -0.15          # rad; above = proximal
    k_proximal: int = 64                    # FPS sample count
    distal_bins: tuple = (8, 16)            # (n_theta, n_phi)
    n_hist: int = 10
    sentinel_range: float = 30.0            # fills empty bins and padding
    fov_theta: tuple = (-np.pi / 2, np.pi / 2)
    fov_phi: tuple = (-np.pi, np.pi)
    fps_start: str = "max_range"            # or "first"

    def __post_init__(self):
        if self.k_proximal < 1 or self.n_hist < 1:
            raise ValueError("k_proximal and n_hist must be >= 1")
        if self.distal_bins[0] < 1 or self.distal_bins[1] < 1:
            raise ValueError("distal_bins must be >= 1")
        if self.fps_start not in ("max_range", "first"):
            raise ValueError("fps_start must be 'max_range' or 'first'")

    @property
    def n_distal(self) -> int:
        return self.distal_bins[0] * self.distal_bins[1]


def _frame_angles(frame: ScanFrame) -> tuple[np.ndarray, np.ndarray]:
    d = frame.directions
    theta = np.arcsin(np.clip(d[:, 2], -1.0, 1.0))
    phi = np.arctan2(d[:, 1], d[:, 0])
    return theta, phi


def partition(frame: ScanFrame, cfg: PartitionConfig):
    """Split a frame into (proximal, distal) SphericalPoints.

    Hits go proximal iff their ray elevation exceeds the threshold.
    Misses never enter the proximal set; they fall to the distal set at
    the sentinel range, keeping the partition exhaustive.
    """
    theta, phi = _frame_angles(frame)
    prox_mask = (theta > cfg.theta_threshold) & frame.hit_flags
    dist_mask = ~prox_mask
    prox = SphericalPoints(theta[prox_mask], phi[prox_mask],
                           frame.ranges[prox_mask], frame.points_base[prox_mask])
    dist_ranges = np.where(frame.hit_flags[dist_mask],
                           frame.ranges[dist_mask], cfg.sentinel_range)
    dist = SphericalPoints(theta[dist_mask], phi[dist_mask],
                           dist_ranges, frame.points_base[dist_mask])
    return prox, dist


def farthest_point_sample(points: SphericalPoints, k: int,
                          start_rule: str = "max_range") -> SphericalPoints:
    """Greedy max-min Euclidean selection of min(k, n) points.

    Start point: the maximum-range point ("max_range", ties to the lowest
    index) or index 0 ("first"). Output is in selection order; callers sort
    afterwards.
    """
    n = len(points)
    if n == 0 or k <= 0:
        return points.take(np.zeros(0, dtype=np.int64))
    if k >= n:
        return points.take(np.arange(n))
    first = int(np.argmax(points.ranges)) if start_rule == "max_range" else 0
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = first
    dist = np.linalg.norm(points.xyz - points.xyz[first], axis=1)
    for i in range(1, k):
        nxt = int(np.argmax(dist))
        chosen[i] = nxt
        dist = np.minimum(dist, np.linalg.norm(points.xyz - points.xyz[nxt], axis=1))
    return points.take(chosen)


def spherical_sort(points: SphericalPoints) -> SphericalPoints:
    """Stable lexicographic order by (theta, then phi)."""
    return points.take(np.lexsort((points.phi, points.theta)))


def average_downsample(points: SphericalPoints, bins: tuple,
                       fov_theta=( -np.pi / 2, np.pi / 2),
                       fov_phi=(-np.pi, np.pi),
                       sentinel_range: float = 30.0) -> SphericalPoints:
    """Fixed (theta, phi) grid over the FOV; one output point per bin.

    Non-empty bins average their range values at the bin-center angles;
    empty bins emit the sentinel. Output length is always
    bins[0] * bins[1], ordered theta-major — already spherically sorted.
    Points outside the FOV box are dropped.
    """
    n_theta, n_phi = bins
    th_lo, th_hi = fov_theta
    ph_lo, ph_hi = fov_phi
    dth = (th_hi - th_lo) / n_theta
    dph = (ph_hi - ph_lo) / n_phi

    sums = np.zeros(n_theta * n_phi)
    counts = np.zeros(n_theta * n_phi, dtype=np.int64)
    if len(points):
        it = np.floor((points.theta - th_lo) / dth + _BIN_EDGE_TOL).astype(np.int64)
        ip = np.floor((points.phi - ph_lo) / dph + _BIN_EDGE_TOL).astype(np.int64)
        # angles at (or within rounding of) the top edge belong to the last bin
        it[(it == n_theta) & (points.theta <= th_hi + _BIN_EDGE_TOL)] = n_theta - 1
        ip[(ip == n_phi) & (points.phi <= ph_hi + _BIN_EDGE_TOL)] = n_phi - 1
        keep = (it >= 0) & (it < n_theta) & (ip >= 0) & (ip < n_phi)
        flat = it[keep] * n_phi + ip[keep]
        np.add.at(sums, flat, points.ranges[keep])
        np.add.at(counts, flat, 1)

    ranges = np.where(counts > 0, sums / np.maximum(counts, 1), sentinel_range)
    centers_t = th_lo + (np.arange(n_theta) + 0.5) * dth
    centers_p = ph_lo + (np.arange(n_phi) + 0.5) * dph
    theta = np.repeat(centers_t, n_phi)
    phi = np.tile(centers_p, n_theta)
    ce = np.cos(theta)
    xyz = np.stack([ce * np.cos(phi), ce * np.sin(phi), np.sin(theta)], axis=1) * ranges[:, None]
    return SphericalPoints(theta, phi, ranges, xyz)


class HistoryBuffer:
    """Ring of the latest n_hist processed frames, zero-padded before fill."""

    def __init__(self, cfg: PartitionConfig):
        self.cfg = cfg
        self._frames: deque = deque(maxlen=cfg.n_hist)

    @property
    def fill_count(self) -> int:
        return len(self._frames)

    def push_and_assemble(self, proximal: np.ndarray, distal: np.ndarray):
        """Append one processed frame; return (n_hist, k) and (n_hist, b) stacks.

        Rows run oldest to newest; the unfilled prefix holds zero frames.
        """
        proximal = np.asarray(proximal, dtype=np.float64).ravel()
        distal = np.asarray(distal, dtype=np.float64).ravel()
        if len(proximal) != self.cfg.k_proximal:
            raise ShapeMismatch(
                f"proximal length {len(proximal)} != k_proximal {self.cfg.k_proximal}")
        if len(distal) != self.cfg.n_distal:
            raise ShapeMismatch(
                f"distal length {len(distal)} != bin count {self.cfg.n_distal}")
        self._frames.append((proximal, distal))
        n_pad = self.cfg.n_hist - len(self._frames)
        prox_seq = np.zeros((self.cfg.n_hist, self.cfg.k_proximal))
        dist_seq = np.zeros((self.cfg.n_hist, self.cfg.n_distal))
        for i, (p, d) in enumerate(self._frames):
            prox_seq[n_pad + i] = p
            dist_seq[n_pad + i] = d
        return prox_seq, dist_seq


def preprocess_frame(frame: ScanFrame, cfg: PartitionConfig):
    """Full per-frame pipeline: partition, FPS + sort, grid-average.

    Returns fixed-length range vectors (k_proximal,) and (n_distal,);
    missing proximal samples pad with the sentinel so shapes never vary.
    """
    prox, dist = partition(frame, cfg)
    sampled = spherical_sort(farthest_point_sample(prox, cfg.k_proximal, cfg.fps_start))
    prox_ranges = np.full(cfg.k_proximal, cfg.sentinel_range)
    prox_ranges[:len(sampled)] = sampled.ranges
    distal = average_downsample(dist, cfg.distal_bins, cfg.fov_theta, cfg.fov_phi,
                                cfg.sentinel_range)
    return prox_ranges, distal.ranges


def sample_privileged_height(world: SceneWorld, env_id: int, base_pose: RigidTransform,
                             grid: tuple = (5, 5, 0.2),
                             probe_depth: float = 10.0,
                             miss_value: float = np.nan) -> np.ndarray:
    """Terrain height around the base, relative to base height.

    Casts straight down onto the environment's static mesh from above its
    highest point, over an (nx, ny) grid of `spacing` meters laid out along
    the base frame's x-y axes. Cells whose probe misses (holes, pits deeper
    than probe_depth below the base) hold miss_value.
    """
    nx, ny, spacing = grid
    xs = (np.arange(nx) - (nx - 1) / 2.0) * spacing
    ys = (np.arange(ny) - (ny - 1) / 2.0) * spacing
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    local = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)], axis=1)
    world_pts = base_pose.apply(local)

    static = world.static_meshes.get(env_id)
    top = static.bounds().max[2] + 1.0 if static is not None else base_pose.translation[2] + 1.0
    origins = world_pts.copy()
    origins[:, 2] = top
    dirs = np.broadcast_to(np.array([0.0, 0.0, -1.0]), origins.shape)
    t_max = top - (base_pose.translation[2] - probe_depth)
    t_hit, _ = world.cast_static_batch(env_id, origins, dirs, 0.0, max(t_max, 1e-6))
    ground_z = top - t_hit
    heights = np.where(np.isfinite(t_hit), ground_z - base_pose.translation[2], miss_value)
    return heights.reshape(nx, ny)
