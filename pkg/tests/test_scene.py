import json

import numpy as np
import pytest

import veclidar as vl

from oracles import brute_force_hits


def down_ray(x=0.0, y=0.0, z=5.0):
    return vl.Ray(np.array([x, y, z]), np.array([0.0, 0.0, -1.0]))


def make_world_with_box(n_envs=2):
    world = vl.SceneWorld(n_envs)
    for env in range(n_envs):
        world.register_static_mesh(env, vl.make_plane(size=10.0, z=-float(env)))
    eid = world.register_dynamic_entity(0, vl.make_box(extents=(1, 1, 1)))
    world.update_dynamic({eid: vl.RigidTransform.from_translation((0, 0, 2))}, t=0.0)
    return world, eid


class TestRegistration:
    def test_static_registration_is_per_env(self):
        world = vl.SceneWorld(2)
        world.register_static_mesh(0, vl.make_plane(size=10.0))
        world.update_dynamic({}, t=0.0)
        assert world.cast(0, down_ray()).t == 5.0
        assert world.cast(1, down_ray()) is None  # env 1 has no geometry

    def test_duplicate_static_rejected(self):
        world = vl.SceneWorld(1)
        world.register_static_mesh(0, vl.make_plane())
        with pytest.raises(vl.AlreadyRegistered):
            world.register_static_mesh(0, vl.make_plane())

    def test_invalid_env_rejected(self):
        world = vl.SceneWorld(2)
        with pytest.raises(vl.InvalidEnv):
            world.register_static_mesh(2, vl.make_plane())
        with pytest.raises(vl.InvalidEnv):
            world.register_dynamic_entity(-1, vl.make_box())

    def test_many_distinct_terrains(self):
        n = 64
        world = vl.SceneWorld(n)
        for env in range(n):
            world.register_static_mesh(env, vl.make_plane(size=10.0, z=-0.01 * env))
        world.update_dynamic({}, t=0.0)
        for env in range(0, n, 7):
            assert world.cast(env, down_ray()).t == pytest.approx(5.0 + 0.01 * env, abs=1e-12)

    def test_single_global_dynamic_bvh(self):
        world = vl.SceneWorld(8)
        for env in range(8):
            world.register_static_mesh(env, vl.make_plane())
            for _ in range(3):
                world.register_dynamic_entity(env, vl.make_box(extents=(0.5, 0.5, 0.5)))
        world.update_dynamic({}, t=0.0)
        assert world.global_dynamic_bvh is not None
        assert world.global_dynamic_mesh.n_triangles == 8 * 3 * 12
        assert world.build_count == 1

    def test_cube_tagged_with_env(self):
        world = vl.SceneWorld(2)
        world.register_dynamic_entity(0, vl.make_box())
        g = world.global_dynamic_mesh
        assert g.n_triangles == 12
        assert (g.tags == 0).all()


class TestUpdateDynamic:
    def test_identity_transform_keeps_vertices(self):
        world, eid = make_world_with_box()
        world.update_dynamic({eid: vl.RigidTransform.from_translation((0, 0, 2))}, t=1.0)
        before = world.global_dynamic_mesh.vertices.copy()
        world.update_dynamic({eid: vl.RigidTransform.from_translation((0, 0, 2))}, t=2.0)
        np.testing.assert_array_equal(world.global_dynamic_mesh.vertices, before)

    def test_only_target_span_changes(self):
        world = vl.SceneWorld(1)
        world.register_static_mesh(0, vl.make_plane())
        e0 = world.register_dynamic_entity(0, vl.make_box())
        e1 = world.register_dynamic_entity(0, vl.make_box())
        world.update_dynamic({}, t=0.0)
        before = world.global_dynamic_mesh.vertices.copy()
        world.update_dynamic({e1: vl.RigidTransform.from_translation((0, 0, 5))}, t=1.0)
        after = world.global_dynamic_mesh.vertices
        lo0, hi0 = world.entities[e0].vertex_span
        lo1, hi1 = world.entities[e1].vertex_span
        np.testing.assert_array_equal(after[lo0:hi0], before[lo0:hi0])
        assert np.abs(after[lo1:hi1] - before[lo1:hi1]).max() == 5.0

    def test_unknown_entity_rejected(self):
        world, eid = make_world_with_box()
        with pytest.raises(vl.UnknownEntity):
            world.update_dynamic({eid + 99: vl.RigidTransform.identity()}, t=0.5)

    def test_exactly_one_refit_per_update(self):
        world = vl.SceneWorld(16)
        eids = []
        for env in range(16):
            world.register_static_mesh(env, vl.make_plane())
            eids.append(world.register_dynamic_entity(env, vl.make_box()))
        world.update_dynamic({}, t=0.0)   # first maintenance op is the build
        assert (world.build_count, world.refit_count) == (1, 0)
        for k in range(1, 6):
            moves = {e: vl.RigidTransform.from_translation((0.1 * k, 0, 1)) for e in eids}
            world.update_dynamic(moves, t=float(k))
            assert world.refit_count == k  # one refit per call, independent of N_envs
        assert world.rebuild_count == 0

    def test_sim_time_tracked(self):
        world, eid = make_world_with_box()
        world.update_dynamic({}, t=3.25)
        assert world.sim_time == 3.25

    def test_random_walk_matches_brute_force(self, rng):
        world = vl.SceneWorld(2)
        for env in range(2):
            world.register_static_mesh(env, vl.make_plane(size=12.0, z=-0.5 * env))
        eids = [world.register_dynamic_entity(env, vl.make_icosphere(radius=0.4))
                for env in range(2) for _ in range(3)]
        world.update_dynamic({}, t=0.0)
        origins = rng.uniform(-4, 4, (60, 3)) + np.array([0, 0, 3.0])
        dirs = rng.normal(size=(60, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        for step in range(12):
            moves = {}
            for e in eids:
                axis = rng.normal(size=3)
                moves[e] = vl.RigidTransform.from_axis_angle(
                    axis, rng.uniform(0, np.pi), rng.uniform(-3, 3, 3))
            world.update_dynamic(moves, t=0.1 * step)
            for env in range(2):
                t_fast, tri_fast, _ = world.cast_batch(env, origins, dirs, 0.0, 40.0)
                verts, tris = world.env_triangles(env)
                t_ref, i_ref = brute_force_hits(verts, tris, origins, dirs, 0.0, 40.0)
                np.testing.assert_array_equal(tri_fast >= 0, i_ref >= 0)
                hit = i_ref >= 0
                np.testing.assert_allclose(t_fast[hit], t_ref[hit], rtol=1e-9, atol=1e-12)


class TestCast:
    def test_dynamic_closer_than_static(self):
        world = vl.SceneWorld(1)
        world.register_static_mesh(0, vl.make_plane(size=10.0, z=-3.0))
        eid = world.register_dynamic_entity(0, vl.make_box(extents=(1, 1, 1)))
        world.update_dynamic({eid: vl.RigidTransform.from_translation((0, 0, -2))}, t=0.0)
        hit = world.cast(0, down_ray(z=0.0))
        assert hit.t == pytest.approx(1.5, abs=1e-12)  # box top at -1.5

    def test_env_isolation_of_dynamic_geometry(self):
        world = vl.SceneWorld(2)
        for env in range(2):
            world.register_static_mesh(env, vl.make_plane(size=10.0, z=-3.0))
        eid = world.register_dynamic_entity(1, vl.make_box(extents=(1, 1, 1)))
        world.update_dynamic({eid: vl.RigidTransform.from_translation((0, 0, -2))}, t=0.0)
        assert world.cast(0, down_ray(z=0.0)).t == 3.0       # env 0 sees only the plane
        assert world.cast(1, down_ray(z=0.0)).t == pytest.approx(1.5)

    def test_stale_after_registration(self):
        world, eid = make_world_with_box()
        world.register_dynamic_entity(1, vl.make_box())
        with pytest.raises(vl.StaleDynamicBvh):
            world.cast(0, down_ray())
        world.update_dynamic({}, t=1.0)
        assert world.cast(0, down_ray()) is not None

    def test_cast_during_update_detected(self):
        world, eid = make_world_with_box()

        class Sneaky(vl.RigidTransform):
            def apply(self_inner, pts):
                with pytest.raises(vl.UpdateInProgress):
                    world.cast(0, down_ray())
                return super().apply(pts)

        world.update_dynamic({eid: Sneaky()}, t=1.0)

    def test_cross_env_replication_identical(self, rng):
        n = 4
        world = vl.SceneWorld(n)
        for env in range(n):
            world.register_static_mesh(env, vl.make_plane(size=14.0))
        eids = {env: world.register_dynamic_entity(env, vl.make_icosphere(radius=0.5))
                for env in range(n)}
        tf = vl.RigidTransform.from_axis_angle((0, 1, 0), 0.3, (1.0, -0.5, 1.2))
        world.update_dynamic({e: tf for e in eids.values()}, t=0.0)
        origins = rng.uniform(-3, 3, (80, 3)) + np.array([0, 0, 2.0])
        dirs = rng.normal(size=(80, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        base_t, base_i, _ = world.cast_batch(0, origins, dirs, 0.0, 30.0)
        for env in range(1, n):
            t, i, _ = world.cast_batch(env, origins, dirs, 0.0, 30.0)
            np.testing.assert_array_equal(t, base_t)

    def test_time_coherence_no_transform_mixture(self):
        world = vl.SceneWorld(1)
        world.register_static_mesh(0, vl.make_plane(size=10.0, z=-5.0))
        e0 = world.register_dynamic_entity(0, vl.make_box())
        e1 = world.register_dynamic_entity(0, vl.make_box())
        for step in range(5):
            z = -1.0 - 0.25 * step
            world.update_dynamic({
                e0: vl.RigidTransform.from_translation((1.5, 0, z)),
                e1: vl.RigidTransform.from_translation((-1.5, 0, z)),
            }, t=float(step))
            h0 = world.cast(0, down_ray(x=1.5, z=0.0))
            h1 = world.cast(0, down_ray(x=-1.5, z=0.0))
            assert h0.t == pytest.approx(-z - 0.5, abs=1e-12)
            assert h1.t == pytest.approx(-z - 0.5, abs=1e-12)


class TestSceneFiles:
    def test_load_validates_schema(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"environments": []}))  # n_envs missing
        with pytest.raises(vl.SceneFormatError):
            vl.load_scene(bad)

    def test_load_builtin_and_obj(self, tmp_path):
        obj = tmp_path / "tri.obj"
        obj.write_text("v -5 -5 1\nv 5 -5 1\nv 0 5 1\nf 1 2 3\n")
        scene = {
            "n_envs": 1,
            "environments": [{"env_id": 0, "static_mesh": "tri.obj"}],
            "entities": [{"env_id": 0, "mesh": {"builtin": "box"},
                          "translation": [0, 0, 3],
                          "rotation": [1, 0, 0, 0]}],
        }
        path = tmp_path / "scene.json"
        path.write_text(json.dumps(scene))
        world = vl.load_scene(path)
        up = vl.Ray(np.zeros(3), np.array([0.0, 0.0, 1.0]))
        assert world.cast(0, up).t == 1.0          # obj triangle overhead
        assert world.cast(0, down_ray(z=6.0)).t == pytest.approx(2.5)  # box top at 3.5

    def test_rebuild_on_quality_degradation(self):
        world = vl.SceneWorld(1)
        world.register_static_mesh(0, vl.make_plane())
        eids = [world.register_dynamic_entity(0, vl.make_box(extents=(0.3, 0.3, 0.3)))
                for _ in range(16)]
        world.update_dynamic({}, t=0.0)
        # fling entities far apart: refit boxes balloon, quality degrades
        moves = {e: vl.RigidTransform.from_translation((100.0 * i, -70.0 * i, 40.0 * i))
                 for i, e in enumerate(eids)}
        world.update_dynamic(moves, t=1.0)
        assert world.rebuild_count >= 1
