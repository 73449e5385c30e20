"""Wall-clock benchmark: shared dynamic mesh vs per-environment rebuilds.

One step = one synchronized dynamic update plus a full scan of every
environment. The `shared_dynamic` baseline is this package's architecture
(one global mesh, one refit per step). The `per_env_rebuild` baseline is
the conventional alternative it replaces: each environment keeps its own
dynamic mesh whose BVH is rebuilt from scratch every step.

Absolute milliseconds are hardware-specific; the meaningful outputs are
the relative gap between baselines and monotone scaling in environments
and rays.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .geometry import build_bvh, query_closest_batch
from .meshes import TriangleMesh, make_box, make_icosphere, make_plane, merge_meshes
from .scene import SceneWorld, load_scene
from .transforms import RigidTransform
from .validate import validate_world

SHARED = "shared_dynamic"
REBUILD = "per_env_rebuild"

SCENE_PRESETS = ("obstacle-field", "demo-room")


@dataclass(frozen=True)
class BenchConfig:
    env_counts: tuple = (1, 16, 64, 256)
    rays_per_frame: tuple = (1024, 4096, 16384)
    steps: int = 20
    warmup: int = 3
    entities_per_env: int = 6
    repetitions: int = 3
    baselines: tuple = (SHARED, REBUILD)
    scene: str = "obstacle-field"
    seed: int = 0

    def __post_init__(self):
        if self.repetitions < 3:
            raise ValueError("repetitions must be >= 3")
        if min(self.env_counts) < 1 or min(self.rays_per_frame) < 1 or self.steps < 1:
            raise ValueError("counts must be positive")


@dataclass
class BenchRecord:
    baseline: str
    n_envs: int
    rays_per_frame: int
    entities_per_env: int
    steps: int
    repetitions: int
    backend: str
    mean_ms: float
    std_ms: float
    rays_per_second: float


# ---------------------------------------------------------------------------
# Scene presets
# ---------------------------------------------------------------------------

ENV_SPACING = 25.0  # meters between environment origins on the layout grid


def env_origin(env_id: int) -> np.ndarray:
    """Environments sit on a square grid, as parallel simulators lay them out.

    Isolation never depends on this spacing (triangle tags enforce it); the
    offsets keep the shared BVH spatially separable, which is the realistic
    regime for the benchmark.
    """
    side = 16
    return np.array([ENV_SPACING * (env_id % side), ENV_SPACING * (env_id // side), 0.0])


def _entity_mesh(j: int) -> TriangleMesh:
    # icospheres are deliberately non-trivial (320 tris) so that per-step
    # rebuild cost is visible, as in scenes with articulated robots
    return make_icosphere(radius=0.3 + 0.05 * (j % 3), subdivisions=2)


def _entity_orbit(env_id: int, j: int, t: float) -> RigidTransform:
    angle = 2 * np.pi * (0.13 * j + 0.21 * t)
    radius = 1.5 + 0.5 * (j % 4)
    center = env_origin(env_id) + np.array([
        radius * np.cos(angle), radius * np.sin(angle), 0.5 + 0.1 * np.sin(t + j)])
    return RigidTransform.from_axis_angle((0.0, 0.0, 1.0), angle, center)


def build_preset_world(preset: str, n_envs: int, entities_per_env: int = 6,
                       seed: int = 0) -> SceneWorld:
    """Construct a named benchmark/validation scene."""
    if preset not in SCENE_PRESETS:
        raise ValueError(f"unknown scene preset {preset!r}; choose from {SCENE_PRESETS}")
    world = SceneWorld(n_envs)
    for env in range(n_envs):
        ox, oy, _ = env_origin(env)
        if preset == "obstacle-field":
            plane = make_plane(size=20.0, cells=8)
            plane.vertices[:, 0] += ox
            plane.vertices[:, 1] += oy
            world.register_static_mesh(env, plane)
        else:  # demo-room: floor plus four walls
            floor = make_plane(size=10.0, cells=2)
            walls = [make_box(extents=(0.2 if sx else 10.0, 0.2 if sy else 10.0, 2.0),
                              center=(5.0 * sx, 5.0 * sy, 1.0))
                     for sx, sy in ((1, 0), (-1, 0), (0, 1), (0, -1))]
            room = merge_meshes([floor] + walls)
            room.vertices[:, 0] += ox
            room.vertices[:, 1] += oy
            world.register_static_mesh(env, room)
        for j in range(entities_per_env):
            world.register_dynamic_entity(env, _entity_mesh(j))
    transforms = {ent.entity_id: _entity_orbit(ent.env_id, ent.entity_id, 0.0)
                  for ent in world.entities}
    world.update_dynamic(transforms, t=0.0)
    return world


def _scan_dirs(rays: int, seed: int = 1) -> np.ndarray:
    """Fixed, well-spread ray directions for benchmarking."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(rays, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# per_env_rebuild baseline
# ---------------------------------------------------------------------------

class PerEnvRebuildWorld:
    """Conventional mesh management: independent per-env dynamic meshes,
    acceleration structure rebuilt from scratch at every step."""

    def __init__(self, world: SceneWorld):
        self.n_envs = world.n_envs
        self.static_meshes = world.static_meshes
        self.static_bvhs = world.static_bvhs
        self.env_entities = {env: [e for e in world.entities if e.env_id == env]
                             for env in range(world.n_envs)}
        self.dyn_meshes: dict[int, TriangleMesh] = {}
        self.dyn_bvhs: dict[int, object] = {}

    def update_dynamic(self, transforms: dict[int, RigidTransform], t: float) -> None:
        for env, ents in self.env_entities.items():
            if not ents:
                continue
            verts, tris, offset = [], [], 0
            for ent in ents:
                tf = transforms.get(ent.entity_id, ent.transform)
                ent.transform = tf
                verts.append(tf.apply(ent.local_mesh.vertices))
                tris.append(ent.local_mesh.indices + offset)
                offset += len(ent.local_mesh.vertices)
            mesh = TriangleMesh(np.vstack(verts), np.vstack(tris))
            self.dyn_meshes[env] = mesh
            self.dyn_bvhs[env] = build_bvh(mesh)   # the cost under test

    def cast_batch(self, env_id: int, origins, dirs, t_min: float, t_max: float):
        t_s, i_s = query_closest_batch(self.static_bvhs[env_id], self.static_meshes[env_id],
                                       origins, dirs, t_min, t_max)
        if env_id in self.dyn_bvhs:
            t_d, i_d = query_closest_batch(self.dyn_bvhs[env_id], self.dyn_meshes[env_id],
                                           origins, dirs, t_min, t_max)
            dyn = t_d < t_s
            return np.where(dyn, t_d, t_s), np.where(dyn, i_d, i_s), dyn & (i_d >= 0)
        return t_s, i_s, np.zeros(len(t_s), dtype=bool)


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------

def _measure(world, n_envs: int, dirs: np.ndarray, steps: int, warmup: int,
             seed: int) -> list[float]:
    """Per-step wall-clock seconds (update + all env scans), warmup excluded."""
    if isinstance(world, PerEnvRebuildWorld):
        entities = [(e.entity_id, e.env_id)
                    for ents in world.env_entities.values() for e in ents]
    else:
        entities = [(e.entity_id, e.env_id) for e in world.entities]
    env_sensor = {env: env_origin(env) + np.array([0.0, 0.0, 0.5])
                  for env in range(n_envs)}
    times = []
    for step in range(warmup + steps):
        t_sim = 0.02 * (step + 1 + seed)
        transforms = {eid: _entity_orbit(env, eid, t_sim) for eid, env in entities}
        tic = time.perf_counter()
        world.update_dynamic(transforms, t_sim)
        for env in range(n_envs):
            origins = np.broadcast_to(env_sensor[env], dirs.shape)
            world.cast_batch(env, origins, dirs, 0.01, 50.0)
        toc = time.perf_counter()
        if step >= warmup:
            times.append(toc - tic)
    return times


def run_single(baseline: str, n_envs: int, rays: int, cfg: BenchConfig) -> BenchRecord:
    dirs = _scan_dirs(rays)
    step_times: list[float] = []
    for rep in range(cfg.repetitions):
        world = build_preset_world(cfg.scene, n_envs, cfg.entities_per_env, cfg.seed)
        if baseline == REBUILD:
            world = PerEnvRebuildWorld(world)
        elif baseline != SHARED:
            raise ValueError(f"unknown baseline {baseline!r}")
        step_times += _measure(world, n_envs, dirs, cfg.steps, cfg.warmup, cfg.seed + rep)
    arr = np.asarray(step_times)
    mean_s = float(arr.mean())
    return BenchRecord(
        baseline=baseline, n_envs=n_envs, rays_per_frame=rays,
        entities_per_env=cfg.entities_per_env, steps=cfg.steps,
        repetitions=cfg.repetitions, backend=backend.current_name(),
        mean_ms=mean_s * 1e3, std_ms=float(arr.std()) * 1e3,
        rays_per_second=n_envs * rays / mean_s,
    )


def run_bench(cfg: BenchConfig, progress=None) -> list[BenchRecord]:
    records = []
    for n_envs in cfg.env_counts:
        for rays in cfg.rays_per_frame:
            for baseline in cfg.baselines:
                rec = run_single(baseline, n_envs, rays, cfg)
                records.append(rec)
                if progress is not None:
                    progress(rec)
    return records


CSV_FIELDS = ["baseline", "n_envs", "rays_per_frame", "entities_per_env", "steps",
              "repetitions", "backend", "mean_ms", "std_ms", "rays_per_second"]


def write_bench_csv(records: list[BenchRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow({k: getattr(rec, k) for k in CSV_FIELDS})


def run_validation_preset(scene: str, rays: int, seed: int,
                          inject_stale: bool = False):
    """Build a scene (preset name or JSON path) and validate it."""
    if scene in SCENE_PRESETS:
        world = build_preset_world(scene, n_envs=4, entities_per_env=4, seed=seed)
    elif Path(scene).exists():
        world = load_scene(scene)
    else:
        raise ValueError(f"scene {scene!r} is neither a preset nor a file")
    if inject_stale and world.entities:
        shove = {e.entity_id: _entity_orbit(e.env_id, e.entity_id, 7.7)
                 for e in world.entities}
        world.update_dynamic(shove, t=1.0, skip_refit=True)
    return validate_world(world, rays_per_env=rays, seed=seed)
