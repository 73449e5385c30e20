"""Independent reference implementations used only by the tests.

Deliberately written with different machinery than the package kernels
(np.cross/einsum here, hand-expanded components there; plain greedy loops
here, vectorized selection there) so that agreement is meaningful.
"""

from __future__ import annotations

import numpy as np


def brute_force_hits(vertices, indices, origins, dirs, t_min, t_max, chunk=128):
    """Exhaustive closest-hit scan over every triangle.

    Returns (t, tri): inf/-1 for misses. Ties on t go to the lowest
    triangle index (argmin picks the first minimum).
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    indices = np.asarray(indices)
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    n = len(origins)
    best_t = np.full(n, np.inf)
    best_i = np.full(n, -1, dtype=np.int64)
    if len(indices) == 0:
        return best_t, best_i
    tv = vertices[indices]
    v0 = tv[:, 0]
    e1 = tv[:, 1] - v0
    e2 = tv[:, 2] - v0
    for s in range(0, n, chunk):
        o = origins[s:s + chunk]
        d = dirs[s:s + chunk]
        p = np.cross(d[:, None, :], e2[None, :, :])
        det = np.einsum("tk,rtk->rt", e1, p)
        good = np.abs(det) >= 1e-12
        inv = np.where(good, 1.0 / np.where(good, det, 1.0), 0.0)
        tvec = o[:, None, :] - v0[None, :, :]
        u = np.einsum("rtk,rtk->rt", tvec, p) * inv
        q = np.cross(tvec, e1[None, :, :])
        v = np.einsum("rk,rtk->rt", d, q) * inv
        t = np.einsum("tk,rtk->rt", e2, q) * inv
        good &= (u >= -1e-9) & (u <= 1 + 1e-9) & (v >= -1e-9) & (u + v <= 1 + 1e-9)
        good &= (t >= t_min) & (t <= t_max)
        t = np.where(good, t, np.inf)
        pick = t.argmin(axis=1)
        rows = np.arange(len(pick))
        tmin_row = t[rows, pick]
        best_t[s:s + chunk] = tmin_row
        best_i[s:s + chunk] = np.where(np.isfinite(tmin_row), pick, -1)
    return best_t, best_i


def greedy_fps_indices(xyz, ranges, k, start_rule="max_range"):
    """Plain-loop farthest point sampling; returns selected indices in order."""
    xyz = np.asarray(xyz, dtype=np.float64)
    n = len(xyz)
    if n == 0 or k <= 0:
        return []
    if k >= n:
        return list(range(n))
    if start_rule == "max_range":
        current = 0
        for i in range(1, n):
            if ranges[i] > ranges[current]:
                current = i
    else:
        current = 0
    chosen = [current]
    dist = [float(np.linalg.norm(xyz[i] - xyz[current])) for i in range(n)]
    while len(chosen) < k:
        far, far_d = 0, -1.0
        for i in range(n):
            if dist[i] > far_d:
                far, far_d = i, dist[i]
        chosen.append(far)
        for i in range(n):
            d = float(np.linalg.norm(xyz[i] - xyz[far]))
            if d < dist[i]:
                dist[i] = d
    return chosen


def point_triangle_distance(p, a, b, c) -> float:
    """Euclidean distance from a point to a triangle (closest-point method)."""
    p, a, b, c = (np.asarray(x, dtype=np.float64) for x in (p, a, b, c))
    ab = b - a
    ac = c - a
    ap = p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(p - a))
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(p - b))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        v = d1 / (d1 - d3)
        return float(np.linalg.norm(p - (a + v * ab)))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(p - c))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        w = d2 / (d2 - d6)
        return float(np.linalg.norm(p - (a + w * ac)))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + w * (c - b))))
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return float(np.linalg.norm(p - (a + ab * v + ac * w)))


def min_distance_to_mesh(p, vertices, indices) -> float:
    tv = np.asarray(vertices)[np.asarray(indices)]
    return min(point_triangle_distance(p, *tri) for tri in tv)
