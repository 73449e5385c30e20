"""Pure-numpy raycasting kernels.

Fallback used when the compiled extension is unavailable (or forced via
VECLIDAR_BACKEND=python). Semantics match `_kernels_c` exactly: same
epsilons, same first-index tie break, same edge-inclusive triangle test.
Traversal is vectorized over rays: a node stack carries the subset of rays
whose slab test survived, so each BVH node is visited at most once per batch.
"""

from __future__ import annotations

import numpy as np

DET_EPS = 1e-12      # below this |det| a triangle is parallel or degenerate
BARY_EPS = 1e-9      # edge-inclusive barycentric tolerance
PRUNE_SLACK = 1e-9   # node culling slack so exact-tie hits are never pruned

IS_COMPILED = False


def ray_triangle(origin, direction, a, b, c, t_min, t_max):
    """Smallest t in [t_min, t_max] where the ray meets triangle abc, else inf."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    e1 = np.asarray(b, dtype=np.float64) - a
    e2 = np.asarray(c, dtype=np.float64) - a
    t = _mt_single_triangle(a, e1, e2, o[None, :], d[None, :], t_min, t_max)
    return float(t[0])


def _mt_single_triangle(a, e1, e2, o, d, t_min, t_max):
    """Moller-Trumbore for one triangle against (r, 3) ray arrays; inf = miss."""
    px = d[:, 1] * e2[2] - d[:, 2] * e2[1]
    py = d[:, 2] * e2[0] - d[:, 0] * e2[2]
    pz = d[:, 0] * e2[1] - d[:, 1] * e2[0]
    det = e1[0] * px + e1[1] * py + e1[2] * pz
    ok = np.abs(det) >= DET_EPS
    inv = 1.0 / np.where(ok, det, 1.0)
    tx = o[:, 0] - a[0]
    ty = o[:, 1] - a[1]
    tz = o[:, 2] - a[2]
    u = (tx * px + ty * py + tz * pz) * inv
    qx = ty * e1[2] - tz * e1[1]
    qy = tz * e1[0] - tx * e1[2]
    qz = tx * e1[1] - ty * e1[0]
    v = (d[:, 0] * qx + d[:, 1] * qy + d[:, 2] * qz) * inv
    t = (e2[0] * qx + e2[1] * qy + e2[2] * qz) * inv
    ok &= (u >= -BARY_EPS) & (u <= 1.0 + BARY_EPS)
    ok &= (v >= -BARY_EPS) & (u + v <= 1.0 + BARY_EPS)
    ok &= (t >= t_min) & (t <= t_max)
    return np.where(ok, t, np.inf)


def refit(bvh, indices, vertices):
    """Re-tighten node boxes bottom-up after vertex motion. In place."""
    tv = vertices[indices]
    tb_min = tv.min(axis=1)
    tb_max = tv.max(axis=1)
    bmin, bmax = bvh.bounds_min, bvh.bounds_max

    leaves = bvh.leaf_nodes
    ordered_min = tb_min[bvh.prim_order]
    ordered_max = tb_max[bvh.prim_order]
    # leaf ranges tile prim_order in ascending node order (preorder build)
    starts = bvh.start[leaves]
    bmin[leaves] = np.minimum.reduceat(ordered_min, starts, axis=0)
    bmax[leaves] = np.maximum.reduceat(ordered_max, starts, axis=0)

    left, right = bvh.left, bvh.right
    for nodes in bvh.internal_levels:  # deepest level first
        bmin[nodes] = np.minimum(bmin[left[nodes]], bmin[right[nodes]])
        bmax[nodes] = np.maximum(bmax[left[nodes]], bmax[right[nodes]])


def query_closest(bvh, indices, vertices, tags, origins, dirs, t_min, t_max,
                  tag_filter=None):
    """Closest-hit query for a ray batch.

    Returns (t, tri) arrays; misses hold t=inf, tri=-1. Ties on t resolve to
    the lowest triangle index, independent of traversal order.
    """
    origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    n_rays = len(origins)
    best_t = np.full(n_rays, np.inf)
    best_i = np.full(n_rays, -1, dtype=np.int32)
    if bvh is None or n_rays == 0:
        return best_t, best_i

    tv = vertices[indices]
    apex = np.ascontiguousarray(tv[:, 0])
    e1 = tv[:, 1] - apex
    e2 = tv[:, 2] - apex

    with np.errstate(divide="ignore"):
        inv_d = 1.0 / dirs
    zero = dirs == 0.0

    bmin, bmax = bvh.bounds_min, bvh.bounds_max
    left, right = bvh.left, bvh.right
    start, count, order = bvh.start, bvh.count, bvh.prim_order

    stack = [(0, np.arange(n_rays))]
    while stack:
        node, rays = stack.pop()
        o = origins[rays]
        iv = inv_d[rays]
        with np.errstate(invalid="ignore"):
            t1 = (bmin[node] - o) * iv
            t2 = (bmax[node] - o) * iv
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        z = zero[rays]
        if z.any():
            inside = (o >= bmin[node]) & (o <= bmax[node])
            lo = np.where(z, np.where(inside, -np.inf, np.inf), lo)
            hi = np.where(z, np.where(inside, np.inf, -np.inf), hi)
        near = lo.max(axis=1)
        far = hi.min(axis=1)
        bt = best_t[rays]
        limit = np.minimum(t_max, bt + PRUNE_SLACK * (1.0 + np.abs(bt)))
        alive = (near <= far) & (far >= t_min) & (near <= limit)
        rays = rays[alive]
        if rays.size == 0:
            continue
        if left[node] < 0:  # leaf
            o = origins[rays]
            d = dirs[rays]
            s = start[node]
            for k in range(count[node]):
                tri = int(order[s + k])
                if tag_filter is not None and tags[tri] != tag_filter:
                    continue
                t = _mt_single_triangle(apex[tri], e1[tri], e2[tri], o, d, t_min, t_max)
                bt = best_t[rays]
                better = (t < bt) | ((t == bt) & (tri < best_i[rays]))
                if better.any():
                    upd = rays[better]
                    best_t[upd] = t[better]
                    best_i[upd] = tri
        else:
            stack.append((right[node], rays))
            stack.append((left[node], rays))
    return best_t, best_i
