"""Triangle meshes: container type, OBJ loading, procedural primitives.

A mesh is an indexed triangle soup. Vertices are float64 (n, 3) arrays in
meters, indices int32 (m, 3), and every triangle carries an int32 tag used
by the scene layer for environment isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyMesh


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64))
        if np.any(self.min > self.max):
            raise ValueError("Aabb min must not exceed max")

    def contains(self, other: "Aabb", tol: float = 0.0) -> bool:
        return bool(np.all(self.min <= other.min + tol) and np.all(self.max >= other.max - tol))

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.min, other.min), np.maximum(self.max, other.max))


@dataclass
class TriangleMesh:
    vertices: np.ndarray                       # (n_vertices, 3) float64, meters
    indices: np.ndarray                        # (n_triangles, 3) int32
    tags: np.ndarray = field(default=None)     # (n_triangles,) int32

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int32).reshape(-1, 3)
        if self.tags is None:
            self.tags = np.zeros(len(self.indices), dtype=np.int32)
        self.tags = np.ascontiguousarray(self.tags, dtype=np.int32)
        if len(self.tags) != len(self.indices):
            raise ValueError("tags length must equal triangle count")
        if self.indices.size and self.indices.max() >= len(self.vertices):
            raise ValueError("triangle index out of range")
        if self.indices.size and self.indices.min() < 0:
            raise ValueError("negative triangle index")

    @property
    def n_triangles(self) -> int:
        return len(self.indices)

    def bounds(self) -> Aabb:
        if len(self.vertices) == 0:
            raise EmptyMesh("mesh has no vertices")
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def triangle_vertices(self) -> np.ndarray:
        """Gathered (n_triangles, 3, 3) corner array."""
        return self.vertices[self.indices]

    def with_tags(self, tag: int) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.indices, np.full(self.n_triangles, tag, dtype=np.int32))

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices.copy(), self.indices.copy(), self.tags.copy())


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    """Concatenate meshes into one soup, offsetting indices; tags preserved."""
    if not meshes:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32))
    verts, tris, tags = [], [], []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.indices + offset)
        tags.append(m.tags)
        offset += len(m.vertices)
    return TriangleMesh(np.vstack(verts), np.vstack(tris), np.concatenate(tags))


# ---------------------------------------------------------------------------
# OBJ loading: ASCII `v`/`f` records only, polygon faces fan-triangulated.
# ---------------------------------------------------------------------------

def load_obj(path) -> TriangleMesh:
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif parts[0] == "f":
                # `f v`, `f v/vt`, `f v/vt/vn`, `f v//vn`; 1-based, negative = relative
                idx = []
                for tok in parts[1:]:
                    raw = int(tok.split("/")[0])
                    idx.append(raw - 1 if raw > 0 else len(vertices) + raw)
                for k in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[k], idx[k + 1]))
            # every other record type is ignored
    return TriangleMesh(
        np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
        np.asarray(faces, dtype=np.int32).reshape(-1, 3),
    )


def save_obj(path, mesh: TriangleMesh) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]} {v[1]} {v[2]}\n")
        for f in mesh.indices:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


# ---------------------------------------------------------------------------
# Procedural primitives used by scene builtins, presets and tests.
# ---------------------------------------------------------------------------

def make_plane(size: float = 20.0, cells: int = 1, z: float = 0.0) -> TriangleMesh:
    """Square grid of `cells` x `cells` quads, centered at origin."""
    xs = np.linspace(-size / 2, size / 2, cells + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, float(z))], axis=1)
    tris = []
    for i in range(cells):
        for j in range(cells):
            a = i * (cells + 1) + j
            b = a + 1
            c = a + (cells + 1)
            d = c + 1
            tris.append((a, b, c))
            tris.append((b, d, c))
    return TriangleMesh(verts, np.asarray(tris, dtype=np.int32))


def make_box(extents=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    ex, ey, ez = (float(e) / 2 for e in extents)
    cx, cy, cz = center
    corners = np.array([
        [cx - ex, cy - ey, cz - ez], [cx + ex, cy - ey, cz - ez],
        [cx + ex, cy + ey, cz - ez], [cx - ex, cy + ey, cz - ez],
        [cx - ex, cy - ey, cz + ez], [cx + ex, cy - ey, cz + ez],
        [cx + ex, cy + ey, cz + ez], [cx - ex, cy + ey, cz + ez],
    ])
    quads = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
             (2, 3, 7, 6), (1, 2, 6, 5), (3, 0, 4, 7)]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return TriangleMesh(corners, np.asarray(tris, dtype=np.int32))


def make_icosphere(radius: float = 0.5, subdivisions: int = 1, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts[0])
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple, int] = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.asarray(verts[i]) + np.asarray(verts[j])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    pts = np.asarray(verts, dtype=np.float64) * radius + np.asarray(center, dtype=float)
    return TriangleMesh(pts, np.asarray(faces, dtype=np.int32))


def make_random_triangles(n: int, extent: float = 10.0, tri_size: float = 0.5,
                          seed: int = 0) -> TriangleMesh:
    """Soup of n independent triangles scattered in a cube of half-width extent."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-extent, extent, size=(n, 1, 3))
    offsets = rng.uniform(-tri_size, tri_size, size=(n, 3, 3))
    verts = (centers + offsets).reshape(-1, 3)
    tris = np.arange(3 * n, dtype=np.int32).reshape(-1, 3)
    return TriangleMesh(verts, tris)
