"""End-to-end raycast validation against exhaustive triangle casting.

The reference path below never touches the BVH: it tests every ray against
every triangle the environment can legally hit. A validation run compares
hit flags, hit triangles and distances between the accelerated pipeline
and this reference, and fails on any mismatch or |dt| > 1e-6 m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import SceneWorld

PASS_TOLERANCE = 1e-6  # meters

_DET_EPS = 1e-12
_BARY_EPS = 1e-9


def brute_force_closest(vertices: np.ndarray, indices: np.ndarray,
                        origins: np.ndarray, dirs: np.ndarray,
                        t_min: float, t_max: float, chunk: int = 64):
    """All-triangle closest hit: (t, tri) with inf/-1 misses.

    Vectorized Moller-Trumbore over ray chunks x all triangles; ties on t
    resolve to the lowest triangle index, matching the BVH contract.
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    n = len(origins)
    out_t = np.full(n, np.inf)
    out_i = np.full(n, -1, dtype=np.int64)
    if len(indices) == 0 or n == 0:
        return out_t, out_i
    tv = vertices[indices]
    a = tv[:, 0]
    e1 = tv[:, 1] - a
    e2 = tv[:, 2] - a
    for s in range(0, n, chunk):
        o = origins[s:s + chunk, None, :]
        d = dirs[s:s + chunk, None, :]
        px = d[..., 1] * e2[:, 2] - d[..., 2] * e2[:, 1]
        py = d[..., 2] * e2[:, 0] - d[..., 0] * e2[:, 2]
        pz = d[..., 0] * e2[:, 1] - d[..., 1] * e2[:, 0]
        det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
        ok = np.abs(det) >= _DET_EPS
        inv = 1.0 / np.where(ok, det, 1.0)
        tx = o[..., 0] - a[:, 0]
        ty = o[..., 1] - a[:, 1]
        tz = o[..., 2] - a[:, 2]
        u = (tx * px + ty * py + tz * pz) * inv
        qx = ty * e1[:, 2] - tz * e1[:, 1]
        qy = tz * e1[:, 0] - tx * e1[:, 2]
        qz = tx * e1[:, 1] - ty * e1[:, 0]
        v = (d[..., 0] * qx + d[..., 1] * qy + d[..., 2] * qz) * inv
        t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
        ok &= (u >= -_BARY_EPS) & (u <= 1.0 + _BARY_EPS)
        ok &= (v >= -_BARY_EPS) & (u + v <= 1.0 + _BARY_EPS)
        ok &= (t >= t_min) & (t <= t_max)
        t = np.where(ok, t, np.inf)
        best = t.argmin(axis=1)
        rows = np.arange(len(best))
        tb = t[rows, best]
        out_t[s:s + chunk] = tb
        out_i[s:s + chunk] = np.where(np.isfinite(tb), best, -1)
    return out_t, out_i


@dataclass
class ValidationReport:
    n_rays: int
    mismatches: int
    max_dt: float
    passed: bool

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}: {self.n_rays} rays, {self.mismatches} mismatches, "
                f"max |dt| = {self.max_dt:.3e} m (tolerance {PASS_TOLERANCE:.0e})")


def _map_reference_identity(world: SceneWorld, env_id: int, ref_idx: np.ndarray):
    """Map concatenated reference triangle ids to (source, triangle) pairs."""
    n_static = world.static_meshes[env_id].n_triangles if env_id in world.static_meshes else 0
    if world.global_dynamic_mesh is not None:
        dyn_ids = np.flatnonzero(world.global_dynamic_mesh.tags == env_id)
    else:
        dyn_ids = np.zeros(0, dtype=np.int64)
    is_dyn = (ref_idx >= n_static) & (ref_idx >= 0)
    tri = np.where(ref_idx < 0, -1, ref_idx)
    if len(dyn_ids):
        tri = np.where(is_dyn, dyn_ids[np.clip(ref_idx - n_static, 0, len(dyn_ids) - 1)], tri)
    return is_dyn, tri


def validate_world(world: SceneWorld, rays_per_env: int, seed: int,
                   t_min: float = 0.0, t_max: float = 100.0) -> ValidationReport:
    """Cast seeded random rays in every environment via both routes."""
    rng = np.random.default_rng(seed)
    total = 0
    mismatches = 0
    max_dt = 0.0
    for env_id in range(world.n_envs):
        lo, hi = _ray_box(world, env_id)
        origins = rng.uniform(lo, hi, size=(rays_per_env, 3))
        dirs = rng.normal(size=(rays_per_env, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

        t_fast, tri_fast, dyn_fast = world.cast_batch(env_id, origins, dirs, t_min, t_max)
        verts, tris = world.env_triangles(env_id)
        t_ref, idx_ref = brute_force_closest(verts, tris, origins, dirs, t_min, t_max)
        dyn_ref, tri_ref = _map_reference_identity(world, env_id, idx_ref)

        hit_fast = tri_fast >= 0
        hit_ref = idx_ref >= 0
        bad = hit_fast != hit_ref
        both = hit_fast & hit_ref
        dt = np.abs(t_fast[both] - t_ref[both])
        if dt.size:
            max_dt = max(max_dt, float(dt.max()))
        bad |= both & ((dyn_fast != dyn_ref) | (tri_fast != tri_ref))
        bad[both] |= dt > PASS_TOLERANCE
        mismatches += int(bad.sum())
        total += rays_per_env
    return ValidationReport(n_rays=total, mismatches=mismatches, max_dt=max_dt,
                            passed=(mismatches == 0 and max_dt <= PASS_TOLERANCE))


def _ray_box(world: SceneWorld, env_id: int):
    """Origin sampling box: scene bounds padded by one meter."""
    lo = np.full(3, -5.0)
    hi = np.full(3, 5.0)
    boxes = []
    if env_id in world.static_meshes:
        boxes.append(world.static_meshes[env_id].bounds())
    if world.global_dynamic_mesh is not None and world.global_dynamic_mesh.n_triangles:
        boxes.append(world.global_dynamic_mesh.bounds())
    if boxes:
        lo = np.min([b.min for b in boxes], axis=0) - 1.0
        hi = np.max([b.max for b in boxes], axis=0) + 1.0
    return lo, hi
