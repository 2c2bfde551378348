"""
Tests for the angle, mixed and point characteristic functions.
"""
import math

import numpy as np
import pytest

from exceptions import DegenerateInput
from models.characteristic import CharQueryT, CharQueryV, CharQueryW
from models.lines import Point3
from services.characteristics import (
    char_T,
    char_V,
    char_W,
    domain_T,
    domain_V,
    domain_W,
    domain_w_residual,
    w_system,
)
from services.line_space import chordal_distance, dir_to_xi, stereographic, xi_to_dir
from services.oracle import oracle_T, oracle_V, oracle_W, reflect_vec, specular_residual
from services.reflection import reflect_direction
from services.solver import newton_solve
from services.surfaces import frame_at

SQRT2 = math.sqrt(2.0)


# --- T -------------------------------------------------------------------------

def test_domain_T_plane_45_degrees(plane):
    frames = domain_T(plane, CharQueryT(xi1=SQRT2 + 1, xi2=SQRT2 - 1))
    assert len(frames) == 1


def test_domain_T_plane_tilted_normal_is_empty(plane):
    """Test directions needing a non-vertical normal are outside the plane's domain."""
    assert domain_T(plane, CharQueryT(xi1=1.0, xi2=1j)) == []


def test_domain_T_equal_directions(unit_sphere):
    with pytest.raises(DegenerateInput):
        domain_T(unit_sphere, CharQueryT(xi1=0.3j, xi2=0.3j))


def test_char_T_unit_sphere_45_degrees(unit_sphere):
    """Test |T| = sqrt2 for the 45 degree reflection at (1, 0, 0)."""
    results = char_T(unit_sphere, CharQueryT(xi1=-(SQRT2 + 1), xi2=SQRT2 + 1))
    assert len(results) == 2
    for result in results:
        assert abs(result.value - SQRT2) < 1e-9
        assert abs(reflect_direction(result.xi0, result.xi1) - result.xi2) < 1e-10
    assert any(np.allclose(r.foot.as_vector(), [1, 0, 0], atol=1e-12) for r in results)


def test_char_T_plane_is_zero(plane):
    results = char_T(plane, CharQueryT(xi1=0.4 + 0.2j, xi2=1 / np.conj(0.4 + 0.2j)))
    assert len(results) == 1
    assert results[0].value < 1e-12


def test_char_T_sphere_two_r_cos_alpha(unit_sphere, directions, rng):
    """Test |T| = 2R cos(alpha) on 100 random incidence configurations."""
    checked = 0
    for d1 in directions(400):
        n = xi_to_dir(complex(*rng.uniform(-1.8, 1.8, 2)))
        cos_alpha = abs(d1 @ n)
        d2 = reflect_vec(d1, n)
        if cos_alpha < 0.05 or d2[2] < -0.9:
            continue
        results = char_T(unit_sphere, CharQueryT(xi1=dir_to_xi(d1), xi2=dir_to_xi(d2)))
        assert results
        for result in results:
            assert abs(result.value - 2 * cos_alpha) < 1e-9
        checked += 1
        if checked == 100:
            break
    assert checked == 100


def test_char_T_vanishes_toward_equal_directions(off_center_sphere):
    """Test T -> 0 as xi2 -> xi1 along in-domain queries."""
    d1 = np.array([1.0, 0.0, 0.0])
    values = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        n = np.array([eps, 0.0, 1.0])
        n /= np.linalg.norm(n)
        d2 = reflect_vec(d1, n)
        results = char_T(off_center_sphere, CharQueryT(xi1=dir_to_xi(d1), xi2=dir_to_xi(d2)))
        assert results
        values.append(max(r.value for r in results))
        assert chordal_distance(dir_to_xi(d1), dir_to_xi(d2)) < 3 * eps
    assert values == sorted(values, reverse=True)
    assert values[-1] < 1e-3


# --- W -------------------------------------------------------------------------

def test_char_W_plane(plane):
    """Test the 45 degree plane path: one root, foot (1, 0, 0), W = 1/sqrt2."""
    q = CharQueryW(p1=Point3.from_xyz(0, 0, 1), xi2=SQRT2 - 1)
    roots = domain_W(plane, q)
    assert len(roots) == 1
    assert np.allclose(roots[0].frame.foot.as_vector(), [1, 0, 0], atol=1e-9)
    assert abs(roots[0].xi1 - (SQRT2 + 1)) < 1e-9

    results = char_W(plane, q)
    assert abs(results[0].value - 1 / SQRT2) < 1e-10
    assert results[0].residual < 1e-10
    # r0 = 0 on this plane, so W reduces to |s1|
    assert abs(results[0].value - abs(results[0].s1)) < 1e-12


def test_newton_on_plane_W_equation(plane):
    """Test a single Newton solve of the plane W equation from a grid seed."""
    q = CharQueryW(p1=Point3.from_xyz(0, 0, 1), xi2=SQRT2 - 1)
    root = newton_solve(w_system(plane, q), [0.5, 0.5])
    assert abs(complex(root[0], root[1]) - 1) < 1e-10
    assert domain_w_residual(plane, q, complex(root[0], root[1])) < 1e-10


def test_domain_W_outside_rectangle(plane):
    """Test near-horizontal outgoing directions put the foot outside the patch."""
    for phi in np.linspace(0, 2 * np.pi, 50, endpoint=False):
        d2 = np.array([np.cos(phi), np.sin(phi), 0.02])
        d2 /= np.linalg.norm(d2)
        q = CharQueryW(p1=Point3.from_xyz(0, 0, 1), xi2=dir_to_xi(d2))
        assert domain_W(plane, q) == []


def test_domain_W_from_sphere_center(unit_sphere):
    """Test from the center only radial lines reflect: two roots, both with W = 2R."""
    xi2 = 0.8 + 0.3j
    q = CharQueryW(p1=Point3.from_xyz(0, 0, 0), xi2=xi2)
    results = char_W(unit_sphere, q)
    assert len(results) == 2
    for result in results:
        assert abs(result.xi1 - (-1 / np.conj(xi2))) < 1e-8
        assert abs(result.value - 2.0) < 1e-9


def test_char_W_point_at_outgoing_closest_point(off_center_sphere):
    """Test W against dot products along a constructed path off the sphere."""
    frame = frame_at(off_center_sphere, 0.2 - 0.1j)
    n = xi_to_dir(frame.xi0)
    d1 = np.array([0.3, 0.2, -1.0])
    d1 /= np.linalg.norm(d1)
    d2 = reflect_vec(d1, n)
    foot = frame.foot.as_vector()
    p1 = foot - 2.0 * d1
    results = char_W(off_center_sphere, CharQueryW(p1=Point3.from_vector(p1), xi2=dir_to_xi(d2)))
    match = [r for r in results if abs(r.mu - frame.mu) < 1e-7]
    assert len(match) == 1
    expected = abs((foot - p1) @ d1 - foot @ d2)
    assert abs(match[0].value - expected) < 1e-9


# --- V -------------------------------------------------------------------------

def test_char_V_plane(plane):
    """Test the classic plane mirror: V = 2 sqrt2 with s1 = -1/sqrt2, s2 = 3/sqrt2."""
    q = CharQueryV(p1=Point3.from_xyz(0, 0, 1), p2=Point3.from_xyz(2, 0, 1))
    roots = domain_V(plane, q)
    assert len(roots) == 1
    assert np.allclose(roots[0].frame.foot.as_vector(), [1, 0, 0], atol=1e-9)
    assert abs(roots[0].xi1 - (SQRT2 + 1)) < 1e-9

    result = char_V(plane, q)[0]
    assert abs(result.value - 2 * SQRT2) < 1e-10
    assert abs(result.s1 + 1 / SQRT2) < 1e-10
    assert abs(result.s2 - 3 / SQRT2) < 1e-10
    assert result.residual < 1e-10


def test_char_V_sphere_retroreflection(unit_sphere):
    """Test p1 = p2 = (2, 0, 0): normal incidence at (1, 0, 0) gives V = 2."""
    p = Point3.from_xyz(2, 0, 0)
    results = char_V(unit_sphere, CharQueryV(p1=p, p2=p))
    front = [r for r in results if np.allclose(r.foot.as_vector(), [1, 0, 0], atol=1e-8)]
    assert len(front) == 1
    assert abs(front[0].value - 2.0) < 1e-9
    assert abs(front[0].xi1 - (-1.0)) < 1e-8
    back = [r for r in results if np.allclose(r.foot.as_vector(), [-1, 0, 0], atol=1e-8)]
    assert len(back) == 1 and abs(back[0].value - 6.0) < 1e-9


def test_char_V_ellipsoid_focal_property(focal_ellipsoid):
    """Test every specular point between the foci gives V = 2a = 4."""
    q = CharQueryV(p1=Point3.from_xyz(1, 0, 0), p2=Point3.from_xyz(-1, 0, 0))
    results = char_V(focal_ellipsoid, q)
    assert len(results) >= 8
    mus = np.array([r.mu for r in results])
    assert np.min(np.abs(mus[:, None] - mus[None, :]) + np.eye(len(mus))) > 1e-6
    for result in results:
        assert abs(result.value - 4.0) < 1e-7
        point = result.foot.as_vector()
        normal = xi_to_dir(result.xi0)
        assert specular_residual(point, normal, np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])) < 1e-9


def test_V_roots_induce_W_roots(off_center_sphere, paraboloid):
    """Test each V solution also solves the W equation with p1 and the derived xi2."""
    cases = [
        (off_center_sphere, Point3.from_xyz(2.5, 0.5, 1.0), Point3.from_xyz(-1.0, 2.0, 2.5)),
        (paraboloid, Point3.from_xyz(0.2, 0.1, 2.0), Point3.from_xyz(-0.3, 0.4, 1.5)),
    ]
    for surface, p1, p2 in cases:
        results = char_V(surface, CharQueryV(p1=p1, p2=p2))
        assert results
        for result in results:
            q = CharQueryW(p1=p1, xi2=result.xi2)
            assert domain_w_residual(surface, q, result.mu) < 1e-8


def test_char_V_paraboloid_focus_to_infinity(paraboloid):
    """Test rays from the focus leave parallel to the axis."""
    focus = Point3.from_xyz(0, 0, 1)
    far = Point3.from_xyz(0.1, -0.2, 50.0)
    results = char_V(paraboloid, CharQueryV(p1=focus, p2=far))
    assert results
    for result in results:
        assert abs(result.xi2) < 0.01


# --- oracle agreement ---------------------------------------------------------

def _random_path(surface, rng, directions):
    """A reflection point, incoming and outgoing directions with a comfortable angle."""
    domain = surface.domain
    while True:
        mu = complex(rng.uniform(0.8 * domain.umin, 0.8 * domain.umax),
                     rng.uniform(0.8 * domain.vmin, 0.8 * domain.vmax))
        frame = frame_at(surface, mu)
        n = xi_to_dir(frame.xi0)
        d1 = directions(1)[0]
        d2 = reflect_vec(d1, n)
        if abs(d1 @ n) > 0.2 and d2[2] > -0.85:
            return frame, d1, d2


@pytest.mark.parametrize("name", ["sphere", "off_center_sphere", "ellipsoid", "paraboloid"])
def test_char_T_agrees_with_oracle(catalog, name, rng, directions):
    """Test random in-domain T queries: every value is an oracle path length."""
    surface = catalog[name]
    for _ in range(50):
        frame, d1, d2 = _random_path(surface, rng, directions)
        results = char_T(surface, CharQueryT(xi1=dir_to_xi(d1), xi2=dir_to_xi(d2)))
        assert any(abs(r.mu - frame.mu) < 1e-7 for r in results)
        expected = oracle_T(surface, d1, d2, resolution=64)
        for result in results:
            assert min(abs(v - result.value) for v in expected) < 1e-7


@pytest.mark.parametrize("name", ["plane", "sphere", "off_center_sphere", "ellipsoid", "paraboloid"])
def test_char_W_agrees_with_oracle(catalog, name, rng, directions):
    """Test random in-domain W queries: certified roots that match oracle paths."""
    surface = catalog[name]
    for _ in range(40):
        frame, d1, d2 = _random_path(surface, rng, directions)
        foot = frame.foot.as_vector()
        p1 = foot - rng.uniform(0.5, 3.0) * d1
        results = char_W(surface, CharQueryW(p1=Point3.from_vector(p1), xi2=dir_to_xi(d2)))
        assert any(abs(r.mu - frame.mu) < 1e-7 for r in results)
        expected = oracle_W(surface, p1, d2, resolution=64)
        for result in results:
            assert result.residual < 1e-10
            assert min(abs(v - result.value) for v in expected) < 1e-7


@pytest.mark.parametrize("name", ["plane", "sphere", "off_center_sphere", "ellipsoid", "paraboloid"])
def test_char_V_agrees_with_oracle(catalog, name, rng, directions):
    """Test random in-domain V queries: certified roots that match oracle paths."""
    surface = catalog[name]
    for _ in range(40):
        frame, d1, d2 = _random_path(surface, rng, directions)
        foot = frame.foot.as_vector()
        p1 = foot - rng.uniform(0.5, 3.0) * d1
        p2 = foot + rng.uniform(0.5, 3.0) * d2
        results = char_V(surface, CharQueryV(p1=Point3.from_vector(p1), p2=Point3.from_vector(p2)))
        constructed = [r for r in results if abs(r.mu - frame.mu) < 1e-7]
        assert len(constructed) == 1
        assert abs(constructed[0].value - np.linalg.norm(foot - p1) - np.linalg.norm(p2 - foot)) < 1e-9
        expected = oracle_V(surface, p1, p2, resolution=64)
        for result in results:
            assert result.residual < 1e-10
            assert abs(reflect_direction(result.xi0, result.xi1) - result.xi2) < 1e-10 * max(1, abs(result.xi2))
            assert min(abs(v - result.value) for v in expected) < 1e-7


def test_char_V_results_are_sorted(focal_ellipsoid):
    q = CharQueryV(p1=Point3.from_xyz(1, 0, 0), p2=Point3.from_xyz(-1, 0, 0))
    mus = [(r.mu.real, r.mu.imag) for r in char_V(focal_ellipsoid, q)]
    assert mus == sorted(mus)


def test_char_results_use_chart_directions(unit_sphere):
    q = CharQueryV(p1=Point3.from_xyz(0.5, 0.2, 2.0), p2=Point3.from_xyz(-0.4, 0.3, 2.5))
    results = char_V(unit_sphere, q)
    assert results
    for result in results:
        d1 = xi_to_dir(result.xi1)
        foot = result.foot.as_vector()
        assert abs(result.r1 - foot @ d1) < 1e-10
        assert abs(complex(stereographic(reflect_vec(d1, xi_to_dir(result.xi0)))) - result.xi2) < 1e-9


def test_grid_size_from_environment(settings_override, plane):
    """Test HERON_GRID_SIZE reaches the solver and a coarse grid still finds the plane path."""
    settings = settings_override(grid_size=4, grazing_tol=1e-6)
    assert settings.grid_size == 4
    q = CharQueryV(p1=Point3.from_xyz(0, 0, 1), p2=Point3.from_xyz(2, 0, 1))
    results = char_V(plane, q)
    assert len(results) == 1
    assert abs(results[0].value - 2 * SQRT2) < 1e-10


@pytest.mark.filterwarnings("error")
def test_char_V_runs_without_numpy_warnings(catalog, rng, directions):
    """Test wandering Newton iterates on the V system do not leak overflow warnings."""
    for surface in catalog.values():
        for _ in range(3):
            frame, d1, d2 = _random_path(surface, rng, directions)
            foot = frame.foot.as_vector()
            q = CharQueryV(p1=Point3.from_vector(foot - 2.0 * d1), p2=Point3.from_vector(foot + 2.0 * d2))
            assert char_V(surface, q)
