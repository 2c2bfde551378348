"""
Tests for the vector ray tracer used as ground truth.
"""
import math

import numpy as np
import pytest

from exceptions import DegenerateInput
from services.line_space import xi_to_dir
from services.oracle import (
    Ray3,
    RigidMotion,
    find_specular_points,
    foot_params,
    intersect,
    oracle_T,
    oracle_V,
    oracle_W,
    reflect_vec,
    specular_residual,
    t_condition,
    v_condition,
)
from services.surfaces import ParameterDomain, ParametricSurface, Plane

SQRT2 = math.sqrt(2.0)


def test_ray_normalises_direction():
    ray = Ray3((0, 0, 1), (3, 0, -4))
    assert np.allclose(ray.dir, [0.6, 0, -0.8])
    assert np.allclose(ray.at(5.0), [3, 0, -3])


def test_ray_rejects_zero_direction():
    with pytest.raises(DegenerateInput):
        Ray3((0, 0, 0), (0, 0, 0))


def test_intersect_plane(plane):
    hits = intersect(plane, Ray3((0, 0, 1), (0, 0, -1)))
    assert len(hits) == 1
    assert abs(hits[0].arclength - 1.0) < 1e-12
    assert np.allclose(hits[0].point, [0, 0, 0], atol=1e-12)
    assert np.allclose(hits[0].normal, [0, 0, 1])


def test_intersect_plane_behind_ray(plane):
    assert intersect(plane, Ray3((0, 0, 1), (0, 0, 1))) == []


def test_intersect_sphere_sorted(unit_sphere):
    """Test the x-axis ray from (2, 0, 0) meets (1, 0, 0) first and (-1, 0, 0) second."""
    hits = intersect(unit_sphere, Ray3((2, 0, 0), (-1, 0, 0)))
    assert [round(h.arclength, 12) for h in hits] == [1.0, 3.0]
    assert np.allclose(hits[0].point, [1, 0, 0])
    assert np.allclose(hits[1].point, [-1, 0, 0])
    assert np.allclose(hits[0].normal, [1, 0, 0])


def test_intersect_parametric_patch():
    """Test the least-squares intersection on a surface without a quadric."""

    def cap(mu):
        mu = np.asarray(mu, dtype=complex)
        x, y = mu.real, mu.imag
        return np.stack([x, y, np.sqrt(1 - x ** 2 - y ** 2)], axis=-1)

    patch = ParametricSurface(cap, ParameterDomain.square(0.5))
    hits = intersect(patch, Ray3((0.1, 0.2, 3.0), (0, 0, -1)), resolution=32)
    assert len(hits) == 1
    assert abs(hits[0].point[2] - math.sqrt(0.95)) < 1e-9
    assert abs(hits[0].arclength - (3.0 - math.sqrt(0.95))) < 1e-9


def test_reflect_vec_examples():
    assert np.allclose(reflect_vec((1 / SQRT2, 0, -1 / SQRT2), (0, 0, 1)), [1 / SQRT2, 0, 1 / SQRT2])
    assert np.allclose(reflect_vec((0, 0, -1), (0, 0, 1)), [0, 0, 1])
    # the normal's sign does not matter
    assert np.allclose(reflect_vec((0.6, 0, -0.8), (0, 0, -1)), [0.6, 0, 0.8])


def test_foot_params():
    q, r_of = foot_params(Ray3((0, 0, 1), (1, 0, -1)))
    assert np.allclose(q, [0.5, 0, 0.5])
    assert abs(r_of((1, 0, 0)) - 1 / SQRT2) < 1e-12


def test_specular_points_obey_reflection_law(off_center_sphere):
    """Test incident and reflected angles agree at every specular point found."""
    p1, p2 = np.array([2.5, 0.5, 1.0]), np.array([-1.0, 2.0, 2.5])
    points = find_specular_points(off_center_sphere, v_condition(p1, p2), lambda x: x - p1, resolution=64)
    assert points
    for sp in points:
        u1 = (sp.point - p1) / np.linalg.norm(sp.point - p1)
        u2 = (p2 - sp.point) / np.linalg.norm(p2 - sp.point)
        assert abs(abs(u1 @ sp.normal) - abs(u2 @ sp.normal)) < 1e-9
        assert specular_residual(sp.point, sp.normal, p1, p2) < 1e-9


def test_oracle_V_plane_mirror_image(plane):
    """Test the plane path length equals the distance from the mirror image of p1 to p2."""
    p1, p2 = np.array([0.3, -0.5, 2.0]), np.array([-1.0, 0.7, 1.2])
    values = oracle_V(plane, p1, p2)
    image = p1 * np.array([1, 1, -1])
    assert len(values) == 1
    assert abs(values[0] - np.linalg.norm(p2 - image)) < 1e-9


def test_oracle_T_sphere(unit_sphere):
    values = oracle_T(unit_sphere, (-1 / SQRT2, 0, -1 / SQRT2), (1 / SQRT2, 0, -1 / SQRT2))
    assert len(values) == 2
    assert np.allclose(values, SQRT2, atol=1e-9)


def test_t_condition_rejects_equal_directions():
    with pytest.raises(DegenerateInput):
        t_condition((0, 0, 1), (0, 0, 1))


def test_oracle_W_plane(plane):
    values = oracle_W(plane, (0, 0, 1), (1 / SQRT2, 0, 1 / SQRT2))
    assert len(values) == 1
    assert abs(values[0] - 1 / SQRT2) < 1e-10


def test_oracle_W_sphere_center(unit_sphere):
    values = oracle_W(unit_sphere, (0, 0, 0), xi_to_dir(0.8 + 0.3j))
    assert len(values) == 2
    assert np.allclose(values, 2.0, atol=1e-9)


def test_oracle_V_plane(plane):
    values = oracle_V(plane, (0, 0, 1), (2, 0, 1))
    assert len(values) == 1
    assert abs(values[0] - 2 * SQRT2) < 1e-10


def test_rigid_motion_rejects_reflection():
    with pytest.raises(DegenerateInput):
        RigidMotion(np.diag([1.0, 1.0, -1.0]))


def test_rigid_motion_keeps_oracle_values(rng):
    """Test path lengths are unchanged when the whole scene is moved."""
    plane = Plane((0, 0, 0), (0, 0, 1), ParameterDomain.square(4.0))
    p1, p2 = np.array([0.3, -0.5, 2.0]), np.array([-1.0, 0.7, 1.2])
    expected = oracle_V(plane, p1, p2)
    for _ in range(5):
        motion = RigidMotion.random(rng)
        moved = motion.apply_surface(plane)
        values = oracle_V(moved, motion.apply_point(p1), motion.apply_point(p2))
        assert len(values) == 1
        assert abs(values[0] - expected[0]) < 1e-9


def test_rigid_motion_ray(rng):
    motion = RigidMotion.random(rng)
    ray = Ray3((1, 2, 3), (0, 0, 1))
    moved = motion.apply_ray(ray)
    assert np.allclose(moved.at(2.0), motion.apply_point(ray.at(2.0)))


def _cap(mu):
    mu = np.asarray(mu, dtype=complex)
    x, y = mu.real, mu.imag
    return np.stack([x, y, np.sqrt(1 - x ** 2 - y ** 2)], axis=-1)


@pytest.mark.parametrize("analytic_normals", [False, True])
def test_rigid_motion_moves_parametric_patch(rng, analytic_normals):
    """Test a moved patch has the moved points and normals, and rays still hit it at the moved point."""
    patch = ParametricSurface(_cap, ParameterDomain.square(0.5), normal_fn=_cap if analytic_normals else None)
    motion = RigidMotion.random(rng)
    moved = motion.apply_surface(patch)
    assert isinstance(moved, ParametricSurface)
    mu = np.array([0.1 + 0.2j, -0.3 + 0.05j, 0.4 - 0.4j])
    points, normals = patch.point_normal(mu)
    moved_points, moved_normals = moved.point_normal(mu)
    assert np.allclose(moved_points, motion.apply_point(points), atol=1e-12)
    assert np.allclose(moved_normals, motion.apply_direction(normals), atol=1e-8)

    ray = Ray3((0.1, 0.2, 3.0), (0, 0, -1))
    hits = intersect(moved, motion.apply_ray(ray), resolution=32)
    assert len(hits) == 1
    assert np.allclose(hits[0].point, motion.apply_point((0.1, 0.2, math.sqrt(0.95))), atol=1e-9)
