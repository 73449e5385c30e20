"""Sector-based avoidance velocity and reward terms.

Everything here is a pure function of explicit state, so any training loop
can call these kernels directly. The 360-degree horizontal surroundings
split into n_sectors azimuth wedges; each wedge below the distance
threshold contributes a repulsive velocity exp(-d * alpha_avoid) pointing
away from its angular center. The tracking reward penalizes deviation from
command-plus-avoidance velocity, and the clearance reward is the mean of
range-capped distal ray distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRays, LengthMismatch


@dataclass(frozen=True)
class RiskConfig:
    n_sectors: int = 36
    d_thresh: float = 1.0            # meters; sectors beyond it contribute nothing
    alpha_avoid: float = 3.0         # 1/m, repulsion falloff
    beta_va: float = 4.0             # tracking reward sharpness
    d_max: float = 10.0              # ray capping distance
    n_rays: int = 64                 # distal rays feeding reward_rays
    v_avoid_max: float | None = 1.5  # m/s cap on the summed avoidance velocity

    def __post_init__(self):
        if self.n_sectors < 1:
            raise ValueError("n_sectors must be >= 1")
        if self.d_thresh <= 0 or self.d_max <= 0:
            raise ValueError("d_thresh and d_max must be positive")


@dataclass(frozen=True)
class RewardWeights:
    vel_avoid: float = 2.0
    rays: float = 1.5
    z_velocity: float = -3e-4
    foot_stumble: float = -2e-2
    link_collision: float = -0.02
    joint_limit: float = -0.2
    torque: float = -1e-6
    joint_velocity: float = -1e-6
    joint_acceleration: float = -2.5e-7
    action_smoothing: float = -5e-3
    action_smoothing_rate: float = -5e-3


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


@dataclass
class RobotStateSlice:
    """The slice of robot state the reward terms consume."""

    v: np.ndarray = field(default_factory=lambda: np.zeros(3))       # base lin vel m/s
    v_cmd: np.ndarray = field(default_factory=lambda: np.zeros(3))   # commanded m/s
    v_z: float = 0.0
    foot_forces_xy: np.ndarray = field(default_factory=lambda: np.zeros(0))  # |F_xy| per foot
    link_forces_xy: np.ndarray = field(default_factory=lambda: np.zeros(0))  # |F_xy| per penalized link
    q: np.ndarray = field(default_factory=lambda: np.zeros(0))
    q_min: np.ndarray = field(default_factory=lambda: np.zeros(0))
    q_max: np.ndarray = field(default_factory=lambda: np.zeros(0))
    q_dot: np.ndarray = field(default_factory=lambda: np.zeros(0))
    q_ddot: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tau: np.ndarray = field(default_factory=lambda: np.zeros(0))
    a_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    a_prev: np.ndarray = field(default_factory=lambda: np.zeros(0))
    a_prev2: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for name in ("v", "v_cmd", "foot_forces_xy", "link_forces_xy", "q", "q_min",
                     "q_max", "q_dot", "q_ddot", "tau", "a_t", "a_prev", "a_prev2"):
            setattr(self, name, _arr(getattr(self, name)))
        if self.q.size and (self.q_min.size != self.q.size or self.q_max.size != self.q.size):
            raise LengthMismatch("q_min/q_max must match q")
        if self.a_prev.size != self.a_t.size or self.a_prev2.size != self.a_t.size:
            raise LengthMismatch("action history arrays must share one length")


def sector_center(j: int | np.ndarray, cfg: RiskConfig) -> np.ndarray:
    """Angular center of sector j: sectors are centered on j * 2*pi/n_sectors,
    so sector 0 faces straight down base +x."""
    return np.asarray(j) * (2 * np.pi / cfg.n_sectors)


def sector_min_distances(points: np.ndarray, cfg: RiskConfig) -> np.ndarray:
    """Per-sector minimum horizontal distance, d_max where a sector is empty.

    Sector j covers the half-open azimuth wedge of width 2*pi/n_sectors
    centered on j * 2*pi/n_sectors, measured from base +x. Points with zero
    horizontal norm have no direction and are skipped.
    """
    d = np.full(cfg.n_sectors, cfg.d_max)
    points = _arr(points).reshape(-1, 3)
    if len(points) == 0:
        return d
    horiz = np.hypot(points[:, 0], points[:, 1])
    keep = horiz > 0.0
    if not keep.any():
        return d
    az = np.arctan2(points[keep, 1], points[keep, 0])  # (-pi, pi]
    width = 2 * np.pi / cfg.n_sectors
    sector = np.floor(np.mod(az + 0.5 * width, 2 * np.pi) / width).astype(np.int64) % cfg.n_sectors
    np.minimum.at(d, sector, horiz[keep])
    return np.minimum(d, cfg.d_max)


def avoidance_velocity(d: np.ndarray, cfg: RiskConfig) -> np.ndarray:
    """Summed repulsive velocity over near sectors; zero z component.

    Each sector with d[j] < d_thresh pushes away from its angular center
    with magnitude exp(-d[j] * alpha_avoid). The optional v_avoid_max cap
    rescales the sum; pass cfg with v_avoid_max=None for the raw formula.
    """
    d = _arr(d)
    if d.shape != (cfg.n_sectors,):
        raise LengthMismatch(f"expected {cfg.n_sectors} sector distances, got {d.shape}")
    near = d < cfg.d_thresh
    if not near.any():
        return np.zeros(3)
    centers = sector_center(np.flatnonzero(near), cfg)
    mags = np.exp(-d[near] * cfg.alpha_avoid)
    v = np.array([
        -(mags * np.cos(centers)).sum(),
        -(mags * np.sin(centers)).sum(),
        0.0,
    ])
    if cfg.v_avoid_max is not None:
        speed = np.linalg.norm(v)
        if speed > cfg.v_avoid_max:
            v = v * (cfg.v_avoid_max / speed)
    return v


def reward_vel_avoid(state: RobotStateSlice, v_avoid: np.ndarray, cfg: RiskConfig) -> float:
    """exp(-beta * ||v - (v_cmd + v_avoid)||^2); equals 1 only at the target."""
    dev = state.v - (state.v_cmd + _arr(v_avoid))
    return float(np.exp(-cfg.beta_va * float(dev @ dev)))


def reward_rays(ranges, cfg: RiskConfig) -> float:
    """Mean of min(d_i, d_max) / d_max over the distal rays."""
    ranges = _arr(ranges).ravel()
    if len(ranges) == 0:
        raise EmptyRays("reward_rays needs at least one ray distance")
    return float(np.minimum(ranges, cfg.d_max).sum() / (len(ranges) * cfg.d_max))


def auxiliary_rewards(state: RobotStateSlice, w: RewardWeights,
                      r_vel_avoid: float | None = None,
                      r_rays: float | None = None) -> dict:
    """Per-term breakdown plus the weighted total.

    Raw terms are the unweighted penalties (all >= 0); `weighted` maps each
    term to weight * term, and `total` sums the weighted terms, including
    the two primary rewards when supplied.
    """
    if state.q.size and state.q_min.size != state.q.size:
        raise LengthMismatch("q_min/q_max must match q")
    terms = {
        "z_velocity": float(state.v_z) ** 2,
        "foot_stumble": float((state.foot_forces_xy ** 2).sum()),
        "link_collision": float((state.link_forces_xy ** 2).sum()),
        "joint_limit": float(((state.q > state.q_max) | (state.q < state.q_min)).sum()),
        "torque": float((state.tau ** 2).sum()),
        "joint_velocity": float((state.q_dot ** 2).sum()),
        "joint_acceleration": float((state.q_ddot ** 2).sum()),
        "action_smoothing": float(((state.a_prev - state.a_t) ** 2).sum()),
        "action_smoothing_rate": float(((state.a_prev2 - 2 * state.a_prev + state.a_t) ** 2).sum()),
    }
    weighted = {name: getattr(w, name) * value for name, value in terms.items()}
    if r_vel_avoid is not None:
        weighted["vel_avoid"] = w.vel_avoid * r_vel_avoid
    if r_rays is not None:
        weighted["rays"] = w.rays * r_rays
    return {"terms": terms, "weighted": weighted, "total": float(sum(weighted.values()))}
