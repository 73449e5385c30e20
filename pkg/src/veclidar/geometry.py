"""Rays, hits and the bounding-volume hierarchy.

The BVH uses a fixed, deterministic construction: median split along the
longest axis of the centroid bounds, at most `leaf_size` triangles per
leaf, nodes stored in preorder so children always follow their parent.
Build happens once; per-step motion is absorbed by `refit_bvh`, which only
re-tightens boxes. Degenerate (zero-area) triangles stay in the tree but
can never be hit.

Queries run on the active kernel backend (compiled or numpy); results are
identical across backends and bit-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import EmptyMesh, TopologyChanged
from .meshes import Aabb, TriangleMesh

DEFAULT_LEAF_SIZE = 4


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray          # unit norm within 1e-6
    t_min: float = 0.0
    t_max: float = np.inf

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.direction = np.asarray(self.direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(self.direction)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"ray direction norm {norm} not unit")
        if self.t_min < 0 or not self.t_min < self.t_max:
            raise ValueError("require 0 <= t_min < t_max")


@dataclass(frozen=True)
class Hit:
    t: float
    triangle_index: int
    tag: int
    point: np.ndarray


@dataclass
class Bvh:
    """Binary AABB tree over triangles; preorder node layout.

    Leaf nodes have left == -1 and reference prim_order[start:start+count].
    Every triangle appears in exactly one leaf, and leaf ranges tile
    prim_order in ascending node order.
    """

    bounds_min: np.ndarray            # (n_nodes, 3)
    bounds_max: np.ndarray            # (n_nodes, 3)
    left: np.ndarray                  # (n_nodes,) int32, -1 marks a leaf
    right: np.ndarray                 # (n_nodes,) int32
    start: np.ndarray                 # (n_nodes,) int32 into prim_order
    count: np.ndarray                 # (n_nodes,) int32
    prim_order: np.ndarray            # (n_triangles,) int32
    n_triangles: int
    leaf_size: int
    leaf_nodes: np.ndarray = field(repr=False)         # ascending leaf ids
    internal_levels: tuple = field(repr=False)         # deepest level first

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def root_bounds(self) -> Aabb:
        return Aabb(self.bounds_min[0].copy(), self.bounds_max[0].copy())

    def surface_area_sum(self) -> float:
        """Sum of node box surface areas: the refit-degradation metric."""
        ext = self.bounds_max - self.bounds_min
        return float(2.0 * (ext[:, 0] * ext[:, 1] + ext[:, 1] * ext[:, 2]
                            + ext[:, 0] * ext[:, 2]).sum())


def build_bvh(mesh: TriangleMesh, leaf_size: int = DEFAULT_LEAF_SIZE) -> Bvh:
    """Deterministic one-time construction (stable median splits)."""
    m = mesh.n_triangles
    if m == 0:
        raise EmptyMesh("cannot build a BVH over zero triangles")
    tv = mesh.triangle_vertices()
    tb_min = tv.min(axis=1)
    tb_max = tv.max(axis=1)
    centroids = tv.mean(axis=1)

    b_min, b_max = [], []
    left, right, start, count, depth = [], [], [], [], []
    order: list[int] = []

    def add_node(idx: np.ndarray, level: int) -> int:
        node = len(left)
        b_min.append(tb_min[idx].min(axis=0))
        b_max.append(tb_max[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        depth.append(level)
        if len(idx) <= leaf_size:
            start[node] = len(order)
            count[node] = len(idx)
            order.extend(idx.tolist())
        else:
            cen = centroids[idx]
            axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
            srt = idx[np.argsort(cen[:, axis], kind="stable")]
            mid = len(srt) // 2
            left[node] = add_node(srt[:mid], level + 1)
            right[node] = add_node(srt[mid:], level + 1)
        return node

    add_node(np.arange(m, dtype=np.int64), 0)

    left_arr = np.asarray(left, dtype=np.int32)
    depth_arr = np.asarray(depth, dtype=np.int32)
    internal = np.flatnonzero(left_arr >= 0)
    levels = tuple(
        internal[depth_arr[internal] == d]
        for d in range(depth_arr.max(initial=0), -1, -1)
        if np.any(depth_arr[internal] == d)
    )
    return Bvh(
        bounds_min=np.ascontiguousarray(b_min, dtype=np.float64).reshape(-1, 3),
        bounds_max=np.ascontiguousarray(b_max, dtype=np.float64).reshape(-1, 3),
        left=left_arr,
        right=np.asarray(right, dtype=np.int32),
        start=np.asarray(start, dtype=np.int32),
        count=np.asarray(count, dtype=np.int32),
        prim_order=np.asarray(order, dtype=np.int32),
        n_triangles=m,
        leaf_size=leaf_size,
        leaf_nodes=np.flatnonzero(left_arr < 0).astype(np.int32),
        internal_levels=levels,
    )


def refit_bvh(bvh: Bvh, mesh: TriangleMesh) -> Bvh:
    """Bottom-up box re-tightening; topology must be unchanged since build."""
    if mesh.n_triangles != bvh.n_triangles:
        raise TopologyChanged(
            f"BVH built over {bvh.n_triangles} triangles, mesh has {mesh.n_triangles}")
    backend.current().refit(bvh, mesh.indices, mesh.vertices)
    return bvh


def query_closest_batch(bvh: Bvh, mesh: TriangleMesh, origins, dirs,
                        t_min: float, t_max: float, tag_filter: int | None = None):
    """Minimum-t hits for a ray batch: (t, triangle) arrays, inf/-1 on miss."""
    return backend.current().query_closest(
        bvh, mesh.indices, mesh.vertices, mesh.tags,
        origins, dirs, t_min, t_max, tag_filter)


def query_closest_hit(bvh: Bvh, mesh: TriangleMesh, ray: Ray,
                      tag_filter: int | None = None) -> Hit | None:
    t, idx = query_closest_batch(bvh, mesh, ray.origin[None, :], ray.direction[None, :],
                                 ray.t_min, ray.t_max, tag_filter)
    if idx[0] < 0:
        return None
    return Hit(
        t=float(t[0]),
        triangle_index=int(idx[0]),
        tag=int(mesh.tags[idx[0]]),
        point=ray.origin + float(t[0]) * ray.direction,
    )


def intersect_ray_triangle(ray: Ray, v0, v1, v2) -> float | None:
    """Smallest t where the ray meets the triangle, edge-inclusive; None if no hit."""
    t = backend.current().ray_triangle(ray.origin, ray.direction, v0, v1, v2,
                                       ray.t_min, ray.t_max)
    return None if np.isinf(t) else float(t)
