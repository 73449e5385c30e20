# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled raycasting kernels.

Same contracts as `_kernels_np`: identical epsilons, identical first-index
tie break. Traversal here is a per-ray stack walk; the numpy twin batches
rays instead. Both must return the same (t, triangle) for every query.
"""

from libc.math cimport INFINITY, fabs

DET_EPS = 1e-12
BARY_EPS = 1e-9
PRUNE_SLACK = 1e-9

IS_COMPILED = True

cdef double C_DET_EPS = 1e-12
cdef double C_BARY_EPS = 1e-9
cdef double C_PRUNE_SLACK = 1e-9

import numpy as np


cdef inline double _tri_t(double ox, double oy, double oz,
                          double dx, double dy, double dz,
                          double ax, double ay, double az,
                          double e1x, double e1y, double e1z,
                          double e2x, double e2y, double e2z,
                          double t_min, double t_max) nogil:
    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    if fabs(det) < C_DET_EPS:
        return INFINITY
    cdef double inv = 1.0 / det
    cdef double tx = ox - ax
    cdef double ty = oy - ay
    cdef double tz = oz - az
    cdef double u = (tx * px + ty * py + tz * pz) * inv
    if u < -C_BARY_EPS or u > 1.0 + C_BARY_EPS:
        return INFINITY
    cdef double qx = ty * e1z - tz * e1y
    cdef double qy = tz * e1x - tx * e1z
    cdef double qz = tx * e1y - ty * e1x
    cdef double v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -C_BARY_EPS or u + v > 1.0 + C_BARY_EPS:
        return INFINITY
    cdef double t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t < t_min or t > t_max:
        return INFINITY
    return t


def ray_triangle(origin, direction, a, b, c, double t_min, double t_max):
    """Smallest t in [t_min, t_max] where the ray meets triangle abc, else inf."""
    cdef double[::1] o = np.ascontiguousarray(origin, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(direction, dtype=np.float64)
    cdef double[::1] va = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] vb = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] vc = np.ascontiguousarray(c, dtype=np.float64)
    return _tri_t(o[0], o[1], o[2], d[0], d[1], d[2],
                  va[0], va[1], va[2],
                  vb[0] - va[0], vb[1] - va[1], vb[2] - va[2],
                  vc[0] - va[0], vc[1] - va[1], vc[2] - va[2],
                  t_min, t_max)


def refit(bvh, indices, vertices):
    """Re-tighten node boxes bottom-up after vertex motion. In place."""
    cdef double[:, ::1] bmin = bvh.bounds_min
    cdef double[:, ::1] bmax = bvh.bounds_max
    cdef int[::1] left = bvh.left
    cdef int[::1] start = bvh.start
    cdef int[::1] count = bvh.count
    cdef int[::1] order = bvh.prim_order
    cdef int[::1] right = bvh.right
    cdef int[:, ::1] tris = indices
    cdef double[:, ::1] verts = vertices
    cdef Py_ssize_t i, k, j, tri, vi
    cdef double lo0, lo1, lo2, hi0, hi1, hi2, x, y, z
    cdef Py_ssize_t n = bmin.shape[0]
    with nogil:
        for i in range(n - 1, -1, -1):
            if left[i] < 0:
                lo0 = lo1 = lo2 = INFINITY
                hi0 = hi1 = hi2 = -INFINITY
                for k in range(count[i]):
                    tri = order[start[i] + k]
                    for j in range(3):
                        vi = tris[tri, j]
                        x = verts[vi, 0]
                        y = verts[vi, 1]
                        z = verts[vi, 2]
                        if x < lo0: lo0 = x
                        if x > hi0: hi0 = x
                        if y < lo1: lo1 = y
                        if y > hi1: hi1 = y
                        if z < lo2: lo2 = z
                        if z > hi2: hi2 = z
                bmin[i, 0] = lo0; bmin[i, 1] = lo1; bmin[i, 2] = lo2
                bmax[i, 0] = hi0; bmax[i, 1] = hi1; bmax[i, 2] = hi2
            else:
                # preorder layout: children already refit (higher index)
                bmin[i, 0] = min(bmin[left[i], 0], bmin[right[i], 0])
                bmin[i, 1] = min(bmin[left[i], 1], bmin[right[i], 1])
                bmin[i, 2] = min(bmin[left[i], 2], bmin[right[i], 2])
                bmax[i, 0] = max(bmax[left[i], 0], bmax[right[i], 0])
                bmax[i, 1] = max(bmax[left[i], 1], bmax[right[i], 1])
                bmax[i, 2] = max(bmax[left[i], 2], bmax[right[i], 2])


cdef inline bint _slab_hit(double[:, ::1] bmin, double[:, ::1] bmax, Py_ssize_t node,
                           double ox, double oy, double oz,
                           double dx, double dy, double dz,
                           double ix, double iy, double iz,
                           double t_min, double limit) nogil:
    cdef double near = -INFINITY
    cdef double far = INFINITY
    cdef double t1, t2, tmp
    if dx != 0.0:
        t1 = (bmin[node, 0] - ox) * ix
        t2 = (bmax[node, 0] - ox) * ix
        if t1 > t2: tmp = t1; t1 = t2; t2 = tmp
        if t1 > near: near = t1
        if t2 < far: far = t2
    elif ox < bmin[node, 0] or ox > bmax[node, 0]:
        return False
    if dy != 0.0:
        t1 = (bmin[node, 1] - oy) * iy
        t2 = (bmax[node, 1] - oy) * iy
        if t1 > t2: tmp = t1; t1 = t2; t2 = tmp
        if t1 > near: near = t1
        if t2 < far: far = t2
    elif oy < bmin[node, 1] or oy > bmax[node, 1]:
        return False
    if dz != 0.0:
        t1 = (bmin[node, 2] - oz) * iz
        t2 = (bmax[node, 2] - oz) * iz
        if t1 > t2: tmp = t1; t1 = t2; t2 = tmp
        if t1 > near: near = t1
        if t2 < far: far = t2
    elif oz < bmin[node, 2] or oz > bmax[node, 2]:
        return False
    return near <= far and far >= t_min and near <= limit


def query_closest(bvh, indices, vertices, tags, origins, dirs,
                  double t_min, double t_max, tag_filter=None):
    """Closest-hit query for a ray batch.

    Returns (t, tri) arrays; misses hold t=inf, tri=-1. Ties on t resolve to
    the lowest triangle index, independent of traversal order.
    """
    origins_arr = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs_arr = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n_rays = origins_arr.shape[0]
    out_t = np.full(n_rays, np.inf)
    out_i = np.full(n_rays, -1, dtype=np.int32)
    if bvh is None or n_rays == 0:
        return out_t, out_i

    cdef double[:, ::1] o_v = origins_arr
    cdef double[:, ::1] d_v = dirs_arr
    cdef double[::1] t_v = out_t
    cdef int[::1] i_v = out_i
    cdef double[:, ::1] bmin = bvh.bounds_min
    cdef double[:, ::1] bmax = bvh.bounds_max
    cdef int[::1] left = bvh.left
    cdef int[::1] right = bvh.right
    cdef int[::1] start = bvh.start
    cdef int[::1] count = bvh.count
    cdef int[::1] order = bvh.prim_order
    cdef int[:, ::1] tris = indices
    cdef double[:, ::1] verts = vertices
    cdef int[::1] tags_v = tags
    cdef bint use_filter = tag_filter is not None
    cdef int want_tag = tag_filter if use_filter else 0

    cdef int node_stack[128]
    cdef Py_ssize_t r, sp, node, k, tri, v0, v1, v2
    cdef double ox, oy, oz, dx, dy, dz, ix, iy, iz
    cdef double best, limit, t
    cdef int best_i

    with nogil:
        for r in range(n_rays):
            ox = o_v[r, 0]; oy = o_v[r, 1]; oz = o_v[r, 2]
            dx = d_v[r, 0]; dy = d_v[r, 1]; dz = d_v[r, 2]
            ix = 1.0 / dx if dx != 0.0 else 0.0
            iy = 1.0 / dy if dy != 0.0 else 0.0
            iz = 1.0 / dz if dz != 0.0 else 0.0
            best = INFINITY
            best_i = -1
            sp = 0
            node_stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = node_stack[sp]
                limit = t_max
                if best < INFINITY:
                    t = best + C_PRUNE_SLACK * (1.0 + fabs(best))
                    if t < limit:
                        limit = t
                if not _slab_hit(bmin, bmax, node, ox, oy, oz, dx, dy, dz,
                                 ix, iy, iz, t_min, limit):
                    continue
                if left[node] < 0:
                    for k in range(count[node]):
                        tri = order[start[node] + k]
                        if use_filter and tags_v[tri] != want_tag:
                            continue
                        v0 = tris[tri, 0]; v1 = tris[tri, 1]; v2 = tris[tri, 2]
                        t = _tri_t(ox, oy, oz, dx, dy, dz,
                                   verts[v0, 0], verts[v0, 1], verts[v0, 2],
                                   verts[v1, 0] - verts[v0, 0],
                                   verts[v1, 1] - verts[v0, 1],
                                   verts[v1, 2] - verts[v0, 2],
                                   verts[v2, 0] - verts[v0, 0],
                                   verts[v2, 1] - verts[v0, 1],
                                   verts[v2, 2] - verts[v0, 2],
                                   t_min, t_max)
                        if t < best or (t == best and tri < best_i):
                            best = t
                            best_i = <int>tri
                else:
                    node_stack[sp] = right[node]
                    sp += 1
                    node_stack[sp] = left[node]
                    sp += 1
            t_v[r] = best
            i_v[r] = best_i
    return out_t, out_i
