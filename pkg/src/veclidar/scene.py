"""Mesh management for many parallel environments.

Each environment owns a static mesh whose BVH is built exactly once. All
dynamic entities from all environments live in one global dynamic mesh;
per step only its vertex positions move, followed by a single BVH refit
shared by every environment. Environment isolation comes from per-triangle
env tags filtered during traversal, so overlapping scene layouts stay
correct.

Phases alternate: update_dynamic is exclusive, raycasts are concurrent.
Casting during an update raises UpdateInProgress rather than racing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AlreadyRegistered,
    InvalidEnv,
    SceneFormatError,
    StaleDynamicBvh,
    UnknownEntity,
    UpdateInProgress,
)
from .geometry import Bvh, Hit, Ray, build_bvh, query_closest_batch, refit_bvh
from .meshes import TriangleMesh, load_obj, make_box, make_icosphere, make_plane, make_random_triangles
from .transforms import RigidTransform

# refit-quality rebuild threshold: rebuild when the sum of node surface
# areas exceeds this multiple of its value at build time
REBUILD_DEGRADATION = 4.0


@dataclass
class DynamicEntity:
    entity_id: int
    env_id: int
    local_mesh: TriangleMesh                  # entity frame
    vertex_span: tuple[int, int]              # [start, stop) into global vertices
    transform: RigidTransform


class SceneWorld:
    """Per-environment static meshes plus one shared dynamic mesh."""

    def __init__(self, n_envs: int):
        if n_envs < 1:
            raise InvalidEnv("need at least one environment")
        self.n_envs = n_envs
        self.static_meshes: dict[int, TriangleMesh] = {}
        self.static_bvhs: dict[int, Bvh] = {}
        self.entities: list[DynamicEntity] = []
        self.global_dynamic_mesh: TriangleMesh | None = None
        self.global_dynamic_bvh: Bvh | None = None
        self.sim_time = 0.0
        self._dynamic_stale = False          # registration since last update
        self._updating = False
        self._quality_baseline = 0.0
        # instrumentation
        self.refit_count = 0
        self.rebuild_count = 0
        self.build_count = 0

    # -- registration (before first scan) ---------------------------------

    def _check_env(self, env_id: int) -> None:
        if not 0 <= env_id < self.n_envs:
            raise InvalidEnv(f"env_id {env_id} outside [0, {self.n_envs})")

    def register_static_mesh(self, env_id: int, mesh: TriangleMesh) -> None:
        self._check_env(env_id)
        if env_id in self.static_meshes:
            raise AlreadyRegistered(f"static mesh already registered for env {env_id}")
        tagged = mesh.with_tags(env_id)
        self.static_meshes[env_id] = tagged
        self.static_bvhs[env_id] = build_bvh(tagged)   # built exactly once

    def register_dynamic_entity(self, env_id: int, mesh: TriangleMesh) -> int:
        self._check_env(env_id)
        entity_id = len(self.entities)
        if self.global_dynamic_mesh is None:
            v_start = 0
            verts = mesh.vertices.copy()
            tris = mesh.indices.copy()
            tags = np.full(mesh.n_triangles, env_id, dtype=np.int32)
        else:
            g = self.global_dynamic_mesh
            v_start = len(g.vertices)
            verts = np.vstack([g.vertices, mesh.vertices])
            tris = np.vstack([g.indices, mesh.indices + v_start])
            tags = np.concatenate([g.tags, np.full(mesh.n_triangles, env_id, dtype=np.int32)])
        self.global_dynamic_mesh = TriangleMesh(verts, tris, tags)
        self.entities.append(DynamicEntity(
            entity_id=entity_id,
            env_id=env_id,
            local_mesh=mesh.copy(),
            vertex_span=(v_start, v_start + len(mesh.vertices)),
            transform=RigidTransform.identity(),
        ))
        self.global_dynamic_bvh = None
        self._dynamic_stale = True
        return entity_id

    # -- per-step update (exclusive phase) ---------------------------------

    def update_dynamic(self, transforms: dict[int, RigidTransform], t: float,
                       skip_refit: bool = False) -> None:
        """Apply entity transforms and refresh the single shared dynamic BVH.

        Exactly one maintenance operation (build on topology change, refit
        otherwise, rebuild on box-quality degradation) runs per call, no
        matter how many environments or entities exist. `skip_refit` is a
        validation hook that leaves boxes stale on purpose.
        """
        for entity_id in transforms:
            if not 0 <= entity_id < len(self.entities):
                raise UnknownEntity(f"entity {entity_id} was never registered")
        self._updating = True
        try:
            g = self.global_dynamic_mesh
            for entity_id, tf in transforms.items():
                ent = self.entities[entity_id]
                ent.transform = tf
                lo, hi = ent.vertex_span
                g.vertices[lo:hi] = tf.apply(ent.local_mesh.vertices)
            if g is not None and not skip_refit:
                if self.global_dynamic_bvh is None:
                    self.global_dynamic_bvh = build_bvh(g)
                    self.build_count += 1
                    self._quality_baseline = self.global_dynamic_bvh.surface_area_sum()
                else:
                    refit_bvh(self.global_dynamic_bvh, g)
                    self.refit_count += 1
                    if (self.global_dynamic_bvh.surface_area_sum()
                            > REBUILD_DEGRADATION * self._quality_baseline):
                        self.global_dynamic_bvh = build_bvh(g)
                        self.rebuild_count += 1
                        self._quality_baseline = self.global_dynamic_bvh.surface_area_sum()
                self._dynamic_stale = False
            self.sim_time = t
        finally:
            self._updating = False

    # -- queries (concurrent phase) ----------------------------------------

    def _check_queryable(self) -> None:
        if self._updating:
            raise UpdateInProgress("raycast during exclusive update phase")
        if self._dynamic_stale:
            raise StaleDynamicBvh("update_dynamic required after entity registration")

    def cast_batch(self, env_id: int, origins, dirs, t_min: float, t_max: float):
        """Closest hits for many rays in one environment.

        Returns (t, tri, from_dynamic): inf/-1/False on miss. Static geometry
        wins exact ties against dynamic geometry.
        """
        self._check_env(env_id)
        self._check_queryable()
        origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        t_s = np.full(len(origins), np.inf)
        i_s = np.full(len(origins), -1, dtype=np.int32)
        if env_id in self.static_bvhs:
            t_s, i_s = query_closest_batch(
                self.static_bvhs[env_id], self.static_meshes[env_id],
                origins, dirs, t_min, t_max)
        t_d = np.full(len(origins), np.inf)
        i_d = np.full(len(origins), -1, dtype=np.int32)
        if self.global_dynamic_bvh is not None:
            t_d, i_d = query_closest_batch(
                self.global_dynamic_bvh, self.global_dynamic_mesh,
                origins, dirs, t_min, t_max, tag_filter=env_id)
        dyn = t_d < t_s
        t = np.where(dyn, t_d, t_s)
        tri = np.where(dyn, i_d, i_s)
        return t, tri, dyn & (i_d >= 0)

    def cast(self, env_id: int, ray: Ray) -> Hit | None:
        """Closest hit among this env's static mesh and its dynamic triangles."""
        t, tri, dyn = self.cast_batch(env_id, ray.origin[None, :], ray.direction[None, :],
                                      ray.t_min, ray.t_max)
        if tri[0] < 0:
            return None
        mesh = self.global_dynamic_mesh if dyn[0] else self.static_meshes[env_id]
        return Hit(t=float(t[0]), triangle_index=int(tri[0]),
                   tag=int(mesh.tags[tri[0]]),
                   point=ray.origin + float(t[0]) * ray.direction)

    def cast_static_batch(self, env_id: int, origins, dirs, t_min: float, t_max: float):
        """Hits against the environment's static mesh only (terrain queries)."""
        self._check_env(env_id)
        if env_id not in self.static_bvhs:
            n = len(np.asarray(origins).reshape(-1, 3))
            return np.full(n, np.inf), np.full(n, -1, dtype=np.int32)
        return query_closest_batch(self.static_bvhs[env_id], self.static_meshes[env_id],
                                   origins, dirs, t_min, t_max)

    def env_triangles(self, env_id: int):
        """(vertices, indices) of everything env_id can hit, statics first.

        Reference view used by brute-force validation.
        """
        self._check_env(env_id)
        chunks_v, chunks_i, offset = [], [], 0
        if env_id in self.static_meshes:
            sm = self.static_meshes[env_id]
            chunks_v.append(sm.vertices)
            chunks_i.append(sm.indices)
            offset = len(sm.vertices)
        if self.global_dynamic_mesh is not None:
            g = self.global_dynamic_mesh
            keep = g.tags == env_id
            if keep.any():
                chunks_v.append(g.vertices)
                chunks_i.append(g.indices[keep] + offset)
        if not chunks_v:
            return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32)
        return np.vstack(chunks_v), np.vstack(chunks_i).astype(np.int32)


# ---------------------------------------------------------------------------
# Scene description files
# ---------------------------------------------------------------------------

SCENE_SCHEMA = {
    "type": "object",
    "required": ["n_envs"],
    "additionalProperties": False,
    "properties": {
        "n_envs": {"type": "integer", "minimum": 1},
        "environments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["env_id", "static_mesh"],
                "additionalProperties": False,
                "properties": {
                    "env_id": {"type": "integer", "minimum": 0},
                    "static_mesh": {"$ref": "#/$defs/mesh"},
                },
            },
        },
        "entities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["env_id", "mesh"],
                "additionalProperties": False,
                "properties": {
                    "env_id": {"type": "integer", "minimum": 0},
                    "mesh": {"$ref": "#/$defs/mesh"},
                    "translation": {"type": "array", "items": {"type": "number"},
                                    "minItems": 3, "maxItems": 3},
                    "rotation": {"type": "array", "items": {"type": "number"},
                                 "minItems": 4, "maxItems": 4},
                },
            },
        },
    },
    "$defs": {
        "mesh": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object",
                    "required": ["builtin"],
                    "properties": {
                        "builtin": {"enum": ["plane", "box", "icosphere", "random"]},
                    },
                },
            ]
        }
    },
}


def _resolve_mesh(spec, base_dir: Path) -> TriangleMesh:
    if isinstance(spec, str):
        return load_obj(base_dir / spec)
    kind = spec["builtin"]
    if kind == "plane":
        return make_plane(size=spec.get("size", 20.0), cells=spec.get("cells", 1),
                          z=spec.get("z", 0.0))
    if kind == "box":
        return make_box(extents=spec.get("extents", (1.0, 1.0, 1.0)),
                        center=spec.get("center", (0.0, 0.0, 0.0)))
    if kind == "icosphere":
        return make_icosphere(radius=spec.get("radius", 0.5),
                              subdivisions=spec.get("subdivisions", 1),
                              center=spec.get("center", (0.0, 0.0, 0.0)))
    if kind == "random":
        return make_random_triangles(spec.get("count", 1000),
                                     extent=spec.get("extent", 10.0),
                                     tri_size=spec.get("tri_size", 0.5),
                                     seed=spec.get("seed", 0))
    raise SceneFormatError(f"unknown builtin mesh {kind!r}")


def load_scene(path) -> SceneWorld:
    """Build a SceneWorld from a scene JSON file (schema: SCENE_SCHEMA).

    Registers all meshes and entities, applies initial entity transforms and
    runs the first update_dynamic so the world is immediately castable.
    """
    import jsonschema

    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        desc = json.load(fh)
    try:
        jsonschema.validate(desc, SCENE_SCHEMA)
    except jsonschema.ValidationError as err:
        raise SceneFormatError(str(err)) from err

    world = SceneWorld(desc["n_envs"])
    for env in desc.get("environments", []):
        world.register_static_mesh(env["env_id"], _resolve_mesh(env["static_mesh"], path.parent))
    initial: dict[int, RigidTransform] = {}
    for ent in desc.get("entities", []):
        eid = world.register_dynamic_entity(ent["env_id"], _resolve_mesh(ent["mesh"], path.parent))
        initial[eid] = RigidTransform(
            rotation=np.asarray(ent.get("rotation", [1.0, 0.0, 0.0, 0.0]), dtype=float),
            translation=np.asarray(ent.get("translation", [0.0, 0.0, 0.0]), dtype=float),
        )
    if world.global_dynamic_mesh is not None or initial:
        world.update_dynamic(initial, t=0.0)
    return world
