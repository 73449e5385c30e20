import numpy as np
import pytest

import veclidar as vl
from veclidar import backend

from oracles import brute_force_hits

TRI = (np.array([-1.0, -1.0, 1.0]), np.array([1.0, -1.0, 1.0]), np.array([0.0, 1.0, 1.0]))


def ray(origin, direction, t_min=0.0, t_max=np.inf):
    d = np.asarray(direction, dtype=float)
    return vl.Ray(np.asarray(origin, dtype=float), d / np.linalg.norm(d), t_min, t_max)


class TestRayTriangle:
    def test_axis_aligned_plane_hit(self, kernel_backend):
        assert vl.intersect_ray_triangle(ray((0, 0, 0), (0, 0, 1)), *TRI) == 1.0

    def test_triangle_behind_ray(self, kernel_backend):
        assert vl.intersect_ray_triangle(ray((0, 0, 0), (0, 0, -1)), *TRI) is None

    def test_through_exact_vertex_is_edge_inclusive(self, kernel_backend):
        r = ray((0, 1, 0), (0, 0, 1))  # passes through vertex (0, 1, 1)
        assert vl.intersect_ray_triangle(r, *TRI) == pytest.approx(1.0, abs=1e-12)

    def test_through_exact_edge_midpoint(self, kernel_backend):
        r = ray((0, -1, 0), (0, 0, 1))  # midpoint of edge v0-v1
        assert vl.intersect_ray_triangle(r, *TRI) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_triangle_never_hits(self, kernel_backend):
        a = np.array([0.0, 0.0, 1.0])
        assert vl.intersect_ray_triangle(ray((0, 0, 0), (0, 0, 1)), a, a, a) is None
        b = np.array([1.0, 0.0, 1.0])  # zero-area sliver: three collinear points
        c = np.array([2.0, 0.0, 1.0])
        assert vl.intersect_ray_triangle(ray((0.5, 0, 0), (0, 0, 1)), a, b, c) is None

    def test_t_range_is_inclusive(self, kernel_backend):
        r = ray((0, 0, 0), (0, 0, 1), t_min=1.0, t_max=1.0 + 1e-9)
        assert vl.intersect_ray_triangle(r, *TRI) == 1.0
        r2 = ray((0, 0, 0), (0, 0, 1), t_min=1.0 + 1e-6, t_max=2.0)
        assert vl.intersect_ray_triangle(r2, *TRI) is None

    def test_miss_outside_triangle(self, kernel_backend):
        assert vl.intersect_ray_triangle(ray((5, 5, 0), (0, 0, 1)), *TRI) is None


class TestBuild:
    def test_single_triangle_single_leaf(self):
        mesh = vl.TriangleMesh(np.stack(TRI), np.array([[0, 1, 2]], np.int32))
        bvh = vl.build_bvh(mesh)
        assert bvh.n_nodes == 1
        assert bvh.left[0] == -1
        np.testing.assert_array_equal(bvh.bounds_min[0], [-1, -1, 1])
        np.testing.assert_array_equal(bvh.bounds_max[0], [1, 1, 1])

    def test_two_distant_triangles_disjoint_children(self):
        verts = np.vstack([np.stack(TRI), np.stack(TRI) + np.array([100.0, 0, 0])])
        mesh = vl.TriangleMesh(verts, np.array([[0, 1, 2], [3, 4, 5]], np.int32))
        bvh = vl.build_bvh(mesh, leaf_size=1)
        assert bvh.n_nodes == 3
        l, r = bvh.left[0], bvh.right[0]
        assert bvh.bounds_max[l][0] < bvh.bounds_min[r][0]

    def test_empty_mesh_rejected(self):
        mesh = vl.TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), np.int32))
        with pytest.raises(vl.EmptyMesh):
            vl.build_bvh(mesh)

    def test_build_is_deterministic(self):
        mesh = vl.make_random_triangles(500, seed=3)
        a = vl.build_bvh(mesh)
        b = vl.build_bvh(mesh)
        assert a.bounds_min.tobytes() == b.bounds_min.tobytes()
        assert a.bounds_max.tobytes() == b.bounds_max.tobytes()
        assert a.prim_order.tobytes() == b.prim_order.tobytes()
        assert a.left.tobytes() == b.left.tobytes()

    def test_every_triangle_in_exactly_one_leaf(self):
        mesh = vl.make_random_triangles(777, seed=5)
        bvh = vl.build_bvh(mesh)
        assert sorted(bvh.prim_order.tolist()) == list(range(777))
        spans = [(bvh.start[i], bvh.start[i] + bvh.count[i]) for i in bvh.leaf_nodes]
        assert sorted(spans) == spans
        assert sum(b - a for a, b in spans) == 777

    def test_node_boxes_contain_children(self):
        mesh = vl.make_random_triangles(300, seed=9)
        bvh = vl.build_bvh(mesh)
        for i in range(bvh.n_nodes):
            if bvh.left[i] >= 0:
                for child in (bvh.left[i], bvh.right[i]):
                    assert np.all(bvh.bounds_min[i] <= bvh.bounds_min[child])
                    assert np.all(bvh.bounds_max[i] >= bvh.bounds_max[child])


class TestQueries:
    def test_closest_of_two_walls(self, kernel_backend):
        verts = np.array([[-5, -5, 1], [5, -5, 1], [0, 5, 1],
                          [-5, -5, 2], [5, -5, 2], [0, 5, 2]], dtype=float)
        mesh = vl.TriangleMesh(verts, np.array([[0, 1, 2], [3, 4, 5]], np.int32),
                               tags=np.array([7, 8], np.int32))
        bvh = vl.build_bvh(mesh)
        hit = vl.query_closest_hit(bvh, mesh, ray((0, 0, 0), (0, 0, 1)))
        assert hit.t == 1.0 and hit.triangle_index == 0 and hit.tag == 7

        filtered = vl.query_closest_hit(bvh, mesh, ray((0, 0, 0), (0, 0, 1)), tag_filter=8)
        assert filtered.t == 2.0 and filtered.triangle_index == 1

    def test_hit_point_on_ray(self, kernel_backend):
        mesh = vl.make_random_triangles(50, extent=3.0, seed=2)
        bvh = vl.build_bvh(mesh)
        r = ray((0, 0, -10), (0, 0, 1))
        hit = vl.query_closest_hit(bvh, mesh, r)
        if hit is not None:
            np.testing.assert_allclose(hit.point, r.origin + hit.t * r.direction, atol=1e-12)

    def test_oracle_equivalence_10k(self, kernel_backend, rng):
        mesh = vl.make_random_triangles(10_000, extent=8.0, seed=7)
        bvh = vl.build_bvh(mesh)
        origins = rng.uniform(-9, 9, (500, 3))
        dirs = rng.normal(size=(500, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        t_fast, i_fast = vl.query_closest_batch(bvh, mesh, origins, dirs, 0.0, 60.0)
        t_ref, i_ref = brute_force_hits(mesh.vertices, mesh.indices, origins, dirs, 0.0, 60.0)
        np.testing.assert_array_equal(i_fast, i_ref)
        both = i_ref >= 0
        assert both.sum() > 50
        np.testing.assert_allclose(t_fast[both], t_ref[both], rtol=1e-9)

    def test_queries_deterministic_across_runs(self, kernel_backend, rng):
        mesh = vl.make_random_triangles(800, seed=4)
        bvh = vl.build_bvh(mesh)
        origins = rng.uniform(-5, 5, (100, 3))
        dirs = rng.normal(size=(100, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        t1, i1 = vl.query_closest_batch(bvh, mesh, origins, dirs, 0.0, 100.0)
        t2, i2 = vl.query_closest_batch(bvh, mesh, origins, dirs, 0.0, 100.0)
        assert t1.tobytes() == t2.tobytes()
        assert i1.tobytes() == i2.tobytes()


class TestRefit:
    def test_translation_translates_all_boxes(self):
        mesh = vl.make_random_triangles(200, seed=1)
        bvh = vl.build_bvh(mesh)
        before_min = bvh.bounds_min.copy()
        before_max = bvh.bounds_max.copy()
        mesh.vertices += np.array([1.0, 0.0, 0.0])
        vl.refit_bvh(bvh, mesh)
        np.testing.assert_allclose(bvh.bounds_min, before_min + [1, 0, 0], atol=1e-12)
        np.testing.assert_allclose(bvh.bounds_max, before_max + [1, 0, 0], atol=1e-12)

    def test_identity_refit_bitwise_unchanged(self, kernel_backend):
        mesh = vl.make_random_triangles(200, seed=1)
        bvh = vl.build_bvh(mesh)
        before_min = bvh.bounds_min.tobytes()
        before_max = bvh.bounds_max.tobytes()
        vl.refit_bvh(bvh, mesh)
        assert bvh.bounds_min.tobytes() == before_min
        assert bvh.bounds_max.tobytes() == before_max

    def test_topology_change_rejected(self):
        mesh = vl.make_random_triangles(20, seed=1)
        bvh = vl.build_bvh(mesh)
        smaller = vl.make_random_triangles(19, seed=1)
        with pytest.raises(vl.TopologyChanged):
            vl.refit_bvh(bvh, smaller)

    def test_rigid_motion_oracle_equivalence(self, kernel_backend, rng):
        mesh = vl.make_random_triangles(2000, extent=4.0, seed=13)
        bvh = vl.build_bvh(mesh)
        tf = vl.RigidTransform.from_axis_angle((0.3, 0.5, 0.8), 1.1, (0.5, -0.2, 0.9))
        mesh.vertices[:] = tf.apply(mesh.vertices)
        vl.refit_bvh(bvh, mesh)
        origins = rng.uniform(-5, 5, (300, 3))
        dirs = rng.normal(size=(300, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        t_fast, i_fast = vl.query_closest_batch(bvh, mesh, origins, dirs, 0.0, 50.0)
        t_ref, i_ref = brute_force_hits(mesh.vertices, mesh.indices, origins, dirs, 0.0, 50.0)
        np.testing.assert_array_equal(i_fast, i_ref)
        hit = i_ref >= 0
        np.testing.assert_allclose(t_fast[hit], t_ref[hit], rtol=1e-9)


class TestBackendsAgree:
    def test_identical_results(self, rng):
        if not backend.has_compiled():
            pytest.skip("compiled extension not built")
        mesh = vl.make_random_triangles(3000, extent=5.0, seed=21)
        bvh = vl.build_bvh(mesh)
        origins = rng.uniform(-6, 6, (400, 3))
        dirs = rng.normal(size=(400, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        backend.use("compiled")
        t_c, i_c = vl.query_closest_batch(bvh, mesh, origins, dirs, 0.0, 80.0)
        backend.use("python")
        t_p, i_p = vl.query_closest_batch(bvh, mesh, origins, dirs, 0.0, 80.0)
        np.testing.assert_array_equal(i_c, i_p)
        hit = i_c >= 0
        np.testing.assert_allclose(t_c[hit], t_p[hit], rtol=1e-14)


class TestObjLoader:
    def test_roundtrip_and_fan_triangulation(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text(
            "# comment\n"
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
            "vn 0 0 1\n"
            "f 1/1/1 2/2/1 3/3/1 4/4/1\n"
        )
        mesh = vl.load_obj(path)
        assert mesh.n_triangles == 2
        np.testing.assert_array_equal(mesh.indices, [[0, 1, 2], [0, 2, 3]])

        out = tmp_path / "roundtrip.obj"
        vl.save_obj(out, mesh)
        again = vl.load_obj(out)
        np.testing.assert_array_equal(again.indices, mesh.indices)
        np.testing.assert_allclose(again.vertices, mesh.vertices)

    def test_negative_indices(self, tmp_path):
        path = tmp_path / "neg.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
        mesh = vl.load_obj(path)
        np.testing.assert_array_equal(mesh.indices, [[0, 1, 2]])
