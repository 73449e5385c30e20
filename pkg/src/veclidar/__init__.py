"""veclidar: deterministic, massively parallel LiDAR simulation.

Per-environment static meshes with a single shared dynamic mesh, BVH
raycasting with one-time build and per-step refit, commercial scan-pattern
models (rotating and non-repetitive), sensor masking/noise randomization,
point-cloud preprocessing for learned perception, and sector-based
risk/reward kernels.
"""

from . import backend
from .errors import (
    AlreadyRegistered,
    EmptyMesh,
    EmptyRays,
    InvalidEnv,
    InvalidSpec,
    LengthMismatch,
    SceneFormatError,
    ShapeMismatch,
    StaleDynamicBvh,
    TopologyChanged,
    UnknownEntity,
    UpdateInProgress,
    VeclidarError,
)
from .geometry import (
    Bvh,
    Hit,
    Ray,
    build_bvh,
    intersect_ray_triangle,
    query_closest_batch,
    query_closest_hit,
    refit_bvh,
)
from .meshes import (
    Aabb,
    TriangleMesh,
    load_obj,
    make_box,
    make_icosphere,
    make_plane,
    make_random_triangles,
    merge_meshes,
    save_obj,
)
from .patterns import (
    PRESETS,
    PatternSpec,
    RayBundle,
    coverage_fraction,
    generate,
    load_pattern,
)
from .perception import (
    HistoryBuffer,
    PartitionConfig,
    SphericalPoints,
    average_downsample,
    farthest_point_sample,
    partition,
    preprocess_frame,
    sample_privileged_height,
    spherical_sort,
)
from .rewards import (
    RewardWeights,
    RiskConfig,
    RobotStateSlice,
    auxiliary_rewards,
    avoidance_velocity,
    reward_rays,
    reward_vel_avoid,
    sector_center,
    sector_min_distances,
)
from .scene import SCENE_SCHEMA, DynamicEntity, SceneWorld, load_scene
from .sensor import (
    ScanFrame,
    SensorConfig,
    apply_randomization,
    randomization_rng,
    simulate_scan,
)
from .transforms import RigidTransform
from .validate import ValidationReport, brute_force_closest, validate_world

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "AlreadyRegistered",
    "Bvh",
    "DynamicEntity",
    "EmptyMesh",
    "EmptyRays",
    "HistoryBuffer",
    "Hit",
    "InvalidEnv",
    "InvalidSpec",
    "LengthMismatch",
    "PRESETS",
    "PartitionConfig",
    "PatternSpec",
    "Ray",
    "RayBundle",
    "RewardWeights",
    "RigidTransform",
    "RiskConfig",
    "RobotStateSlice",
    "SCENE_SCHEMA",
    "ScanFrame",
    "SceneFormatError",
    "SceneWorld",
    "SensorConfig",
    "ShapeMismatch",
    "SphericalPoints",
    "StaleDynamicBvh",
    "TopologyChanged",
    "TriangleMesh",
    "UnknownEntity",
    "UpdateInProgress",
    "ValidationReport",
    "VeclidarError",
    "apply_randomization",
    "auxiliary_rewards",
    "average_downsample",
    "avoidance_velocity",
    "backend",
    "brute_force_closest",
    "build_bvh",
    "coverage_fraction",
    "farthest_point_sample",
    "generate",
    "intersect_ray_triangle",
    "load_obj",
    "load_pattern",
    "load_scene",
    "make_box",
    "make_icosphere",
    "make_plane",
    "make_random_triangles",
    "merge_meshes",
    "partition",
    "preprocess_frame",
    "query_closest_batch",
    "query_closest_hit",
    "randomization_rng",
    "refit_bvh",
    "reward_rays",
    "reward_vel_avoid",
    "sample_privileged_height",
    "save_obj",
    "sector_center",
    "sector_min_distances",
    "simulate_scan",
    "spherical_sort",
    "validate_world",
    "__version__",
]
