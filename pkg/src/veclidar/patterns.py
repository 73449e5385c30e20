"""Time-parameterized scan-pattern generators.

Three families:

* Rotating: fixed elevation channels swept in azimuth at `rpm`; the bundle
  at time t is a pure function of the wall-clock angle, so bundles one
  revolution apart are permutations of each other.
* NonRepetitive: dual-prism rosette. Two phasors rotating at incommensurate
  rates are summed and mapped affinely into the FOV box, so consecutive
  frames sample different directions and cumulative coverage keeps growing.
  Presets are "-like" models (datasheet FOVs), not replays of vendor tables.
* Grid: uniform az/el grid, time independent; the test workhorse.

Directions use x-forward, y-left, z-up; azimuth rotates about +z from +x,
elevation is positive up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSpec, SceneFormatError

ROTATING = "rotating"
NON_REPETITIVE = "non_repetitive"
GRID = "grid"


@dataclass(frozen=True)
class PatternSpec:
    kind: str
    rays_per_frame: int
    frame_period: float = 0.1                     # seconds
    # rotating
    channel_elevations: tuple = ()                # rad
    rpm: float = 600.0
    # non-repetitive
    prism_rate_ratio: float = 7294.0 / 4664.0     # |w2| / |w1|
    angular_speeds: tuple = (2 * np.pi * 4664.0 / 60.0, -2 * np.pi * 7294.0 / 60.0)
    fov_vertical: tuple = (-np.pi / 2, np.pi / 2)   # (min, max) rad
    fov_horizontal: tuple = (-np.pi, np.pi)
    # grid
    grid_shape: tuple = (64, 32)                  # (n_azimuth, n_elevation)

    def __post_init__(self):
        if self.kind not in (ROTATING, NON_REPETITIVE, GRID):
            raise InvalidSpec(f"unknown pattern kind {self.kind!r}")
        if self.rays_per_frame < 1:
            raise InvalidSpec("rays_per_frame must be >= 1")
        if self.frame_period <= 0:
            raise InvalidSpec("frame_period must be positive")
        if self.kind == ROTATING:
            if len(self.channel_elevations) < 1:
                raise InvalidSpec("rotating pattern needs at least one channel")
            if self.rays_per_frame % len(self.channel_elevations) != 0:
                raise InvalidSpec("rays_per_frame must be a multiple of the channel count")
        if self.kind == GRID and self.rays_per_frame != self.grid_shape[0] * self.grid_shape[1]:
            raise InvalidSpec("grid rays_per_frame must equal n_azimuth * n_elevation")
        if not (self.fov_vertical[0] < self.fov_vertical[1]):
            raise InvalidSpec("fov_vertical min must be < max")
        if not (self.fov_horizontal[0] < self.fov_horizontal[1]):
            raise InvalidSpec("fov_horizontal min must be < max")


@dataclass(frozen=True)
class RayBundle:
    directions: np.ndarray      # (n, 3) unit, sensor frame
    timestamps: np.ndarray      # (n,) seconds, within-frame offsets

    @property
    def azimuth(self) -> np.ndarray:
        return np.arctan2(self.directions[:, 1], self.directions[:, 0])

    @property
    def elevation(self) -> np.ndarray:
        return np.arcsin(np.clip(self.directions[:, 2], -1.0, 1.0))


def _dirs_from_angles(azimuth: np.ndarray, elevation: np.ndarray) -> np.ndarray:
    ce = np.cos(elevation)
    return np.stack([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)], axis=1)


def generate(spec: PatternSpec, t: float) -> RayBundle:
    """Ray directions for the frame starting at simulation time t >= 0."""
    if t < 0:
        raise InvalidSpec("t must be >= 0")
    n = spec.rays_per_frame
    if spec.kind == GRID:
        n_az, n_el = spec.grid_shape
        az = np.linspace(spec.fov_horizontal[0], spec.fov_horizontal[1], n_az, endpoint=False)
        el = np.linspace(spec.fov_vertical[0], spec.fov_vertical[1], n_el)
        azg, elg = np.meshgrid(az, el, indexing="ij")
        ts = np.arange(azg.size) * (spec.frame_period / azg.size)
        return RayBundle(_dirs_from_angles(azg.ravel(), elg.ravel()), ts)

    if spec.kind == ROTATING:
        channels = np.asarray(spec.channel_elevations, dtype=np.float64)
        n_ch = len(channels)
        n_steps = n // n_ch
        omega = 2 * np.pi * spec.rpm / 60.0
        step_ts = np.arange(n_steps) * (spec.frame_period / n_steps)
        az_steps = omega * (t + step_ts)
        az = np.repeat(az_steps, n_ch)
        el = np.tile(channels, n_steps)
        ts = np.repeat(step_ts, n_ch)
        return RayBundle(_dirs_from_angles(az, el), ts)

    # non-repetitive rosette
    w1, w2 = spec.angular_speeds
    ts = np.arange(n) * (spec.frame_period / n)
    tau = t + ts
    u = 0.5 * (np.cos(w1 * tau) + np.cos(w2 * tau))
    v = 0.5 * (np.sin(w1 * tau) + np.sin(w2 * tau))
    h_lo, h_hi = spec.fov_horizontal
    v_lo, v_hi = spec.fov_vertical
    az = 0.5 * (h_lo + h_hi) + u * 0.5 * (h_hi - h_lo)
    el = 0.5 * (v_lo + v_hi) + v * 0.5 * (v_hi - v_lo)
    return RayBundle(_dirs_from_angles(az, el), ts)


def _fov_box(spec: PatternSpec) -> tuple[float, float, float, float]:
    """(az_lo, az_hi, el_lo, el_hi) bounding every generated direction."""
    if spec.kind == ROTATING:
        els = np.asarray(spec.channel_elevations, dtype=float)
        return -np.pi, np.pi, float(els.min()), float(els.max())
    return (spec.fov_horizontal[0], spec.fov_horizontal[1],
            spec.fov_vertical[0], spec.fov_vertical[1])


_BIN_EDGE_TOL = 1e-9  # angles this close below a bin edge count as the upper bin


def _bin_count(span: float, bin_rad: float) -> int:
    return max(int(np.ceil(span / bin_rad - _BIN_EDGE_TOL)), 1)


def _bin_indices(values: np.ndarray, lo: float, bin_rad: float, n_bins: int,
                 circular: bool) -> np.ndarray:
    """Robust floor binning: edge-tolerant, wrapping on full-circle axes."""
    if circular:
        ratio = np.mod(values - lo, 2 * np.pi) / bin_rad + _BIN_EDGE_TOL
        return np.floor(ratio).astype(np.int64) % n_bins
    ratio = (values - lo) / bin_rad + _BIN_EDGE_TOL
    return np.clip(np.floor(ratio).astype(np.int64), 0, n_bins - 1)


def coverage_fraction(spec: PatternSpec, frames: int, bin_deg: float) -> float:
    """Fraction of FOV angular bins touched by `frames` consecutive bundles."""
    if frames < 1:
        raise InvalidSpec("frames must be >= 1")
    if bin_deg <= 0:
        raise InvalidSpec("bin_deg must be positive")
    az_lo, az_hi, el_lo, el_hi = _fov_box(spec)
    bin_rad = np.deg2rad(bin_deg)
    circular = (az_hi - az_lo) >= 2 * np.pi - _BIN_EDGE_TOL
    n_az = _bin_count(az_hi - az_lo, bin_rad)
    n_el = _bin_count(el_hi - el_lo, bin_rad)
    touched = np.zeros((n_az, n_el), dtype=bool)
    for f in range(frames):
        bundle = generate(spec, f * spec.frame_period)
        ia = _bin_indices(bundle.azimuth, az_lo, bin_rad, n_az, circular)
        ie = _bin_indices(bundle.elevation, el_lo, bin_rad, n_el, False)
        touched[ia, ie] = True
    return float(touched.sum()) / touched.size


# ---------------------------------------------------------------------------
# Presets: named after the commercial device class they approximate.
# ---------------------------------------------------------------------------

def _rotating_preset(n_channels, el_lo_deg, el_hi_deg, rpm, steps) -> PatternSpec:
    return PatternSpec(
        kind=ROTATING,
        rays_per_frame=n_channels * steps,
        frame_period=60.0 / rpm,
        channel_elevations=tuple(np.deg2rad(np.linspace(el_lo_deg, el_hi_deg, n_channels))),
        rpm=rpm,
        fov_vertical=(np.deg2rad(el_lo_deg), np.deg2rad(el_hi_deg)),
    )


PRESETS: dict[str, PatternSpec] = {
    "mid360-like": PatternSpec(
        kind=NON_REPETITIVE,
        rays_per_frame=2000,
        frame_period=0.1,
        fov_horizontal=(-np.pi, np.pi),
        fov_vertical=(np.deg2rad(-7.0), np.deg2rad(52.0)),
    ),
    "avia-like": PatternSpec(
        kind=NON_REPETITIVE,
        rays_per_frame=2400,
        frame_period=0.1,
        fov_horizontal=(np.deg2rad(-35.2), np.deg2rad(35.2)),
        fov_vertical=(np.deg2rad(-38.6), np.deg2rad(38.6)),
    ),
    "vlp32-like": _rotating_preset(32, -25.0, 15.0, 600.0, 360),
    "hdl64-like": _rotating_preset(64, -24.9, 2.0, 600.0, 360),
    "ouster64-like": _rotating_preset(64, -22.5, 22.5, 600.0, 512),
    "grid": PatternSpec(kind=GRID, rays_per_frame=64 * 32, grid_shape=(64, 32)),
}


PATTERN_SCHEMA = {
    "type": "object",
    "required": ["kind", "rays_per_frame"],
    "properties": {
        "kind": {"enum": [ROTATING, NON_REPETITIVE, GRID]},
        "rays_per_frame": {"type": "integer", "minimum": 1},
        "frame_period": {"type": "number", "exclusiveMinimum": 0},
        "channel_elevations_deg": {"type": "array", "items": {"type": "number"}},
        "rpm": {"type": "number", "exclusiveMinimum": 0},
        "prism_rate_ratio": {"type": "number"},
        "angular_speeds": {"type": "array", "items": {"type": "number"},
                           "minItems": 2, "maxItems": 2},
        "fov_vertical_deg": {"type": "array", "items": {"type": "number"},
                             "minItems": 2, "maxItems": 2},
        "fov_horizontal_deg": {"type": "array", "items": {"type": "number"},
                               "minItems": 2, "maxItems": 2},
        "grid_shape": {"type": "array", "items": {"type": "integer", "minimum": 1},
                       "minItems": 2, "maxItems": 2},
    },
}


def load_pattern(name_or_path: str) -> PatternSpec:
    """Resolve a preset name or a pattern JSON file (schema: PATTERN_SCHEMA)."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]
    path = Path(name_or_path)
    if not path.exists():
        raise SceneFormatError(
            f"{name_or_path!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a file")
    import jsonschema

    with open(path, "r", encoding="utf-8") as fh:
        desc = json.load(fh)
    try:
        jsonschema.validate(desc, PATTERN_SCHEMA)
    except jsonschema.ValidationError as err:
        raise SceneFormatError(str(err)) from err

    kwargs = dict(kind=desc["kind"], rays_per_frame=desc["rays_per_frame"])
    if "frame_period" in desc:
        kwargs["frame_period"] = desc["frame_period"]
    if "channel_elevations_deg" in desc:
        kwargs["channel_elevations"] = tuple(np.deg2rad(desc["channel_elevations_deg"]))
    if "rpm" in desc:
        kwargs["rpm"] = desc["rpm"]
    if "prism_rate_ratio" in desc:
        kwargs["prism_rate_ratio"] = desc["prism_rate_ratio"]
    if "angular_speeds" in desc:
        kwargs["angular_speeds"] = tuple(desc["angular_speeds"])
    if "fov_vertical_deg" in desc:
        kwargs["fov_vertical"] = tuple(np.deg2rad(desc["fov_vertical_deg"]))
    if "fov_horizontal_deg" in desc:
        kwargs["fov_horizontal"] = tuple(np.deg2rad(desc["fov_horizontal_deg"]))
    if "grid_shape" in desc:
        kwargs["grid_shape"] = tuple(desc["grid_shape"])
    return PatternSpec(**kwargs)
