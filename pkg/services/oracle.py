"""
Vector-geometry ray tracer used as ground truth for the chart formulas.

Everything here works on plain 3-vectors: rays are (origin, unit direction),
reflection is d - 2 (d.n) n and path quantities are dot products. Surfaces are
only sampled through ``point_normal`` (and ``quadric`` with ``contains_point``
for closed-form intersections); no stereographic or (xi, eta) arithmetic is involved.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from exceptions import DegenerateInput
from settings import get_settings

logger = logging.getLogger(__name__)

# Oracle acceptance on |sin| of the specular misalignment.
SPECULAR_TOL = 1e-9
# Points already this close to specular are accepted without polishing.
EXACT_TOL = 1e-13
# Upper bound on polished local minima per search.
MAX_POLISH = 64

SpecularCondition = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return v / norm


@dataclass(frozen=True)
class Ray3:
    """Ray with origin and unit direction."""

    origin: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        direction = np.asarray(self.dir, dtype=float).reshape(3)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            raise DegenerateInput("ray direction must be non-zero")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dir", direction / norm)

    def at(self, s: float) -> np.ndarray:
        return self.origin + s * self.dir


@dataclass(frozen=True)
class Hit:
    """A ray/surface intersection: point, oriented unit normal and arclength."""

    point: np.ndarray
    normal: np.ndarray
    arclength: float


@dataclass(frozen=True)
class SpecularPoint:
    """A surface point meeting a specular condition, with its parameter."""

    mu: complex
    point: np.ndarray
    normal: np.ndarray
    residual: float


class RigidMotion:
    """Proper rigid motion X -> R X + t."""

    def __init__(self, rotation=None, translation=None):
        self.rotation = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float).reshape(3, 3)
        self.translation = np.zeros(3) if translation is None else np.asarray(translation, dtype=float).reshape(3)
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(3), atol=1e-10) or np.linalg.det(self.rotation) < 0:
            raise DegenerateInput("rotation must be a proper orthogonal matrix")

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 1.0) -> "RigidMotion":
        rotation = Rotation.random(random_state=rng).as_matrix()
        return cls(rotation, rng.uniform(-scale, scale, size=3))

    def apply_point(self, point) -> np.ndarray:
        return np.asarray(point, dtype=float) @ self.rotation.T + self.translation

    def apply_direction(self, direction) -> np.ndarray:
        return np.asarray(direction, dtype=float) @ self.rotation.T

    def apply_ray(self, ray: Ray3) -> Ray3:
        return Ray3(self.apply_point(ray.origin), self.apply_direction(ray.dir))

    def apply_surface(self, surface):
        return surface.moved(self)

    def __repr__(self):
        return f"<RigidMotion(translation={self.translation.tolist()})>"


# --- elementary operations ------------------------------------------------------

def reflect_vec(d, n) -> np.ndarray:
    """Specular reflection of direction d in a mirror with unit normal n."""
    d = np.asarray(d, dtype=float)
    n = np.asarray(n, dtype=float)
    out = d - 2.0 * np.sum(d * n, axis=-1, keepdims=True) * n
    return _unit(out)


def foot_params(ray: Ray3) -> Tuple[np.ndarray, Callable[[np.ndarray], float]]:
    """Closest point of the ray's line to the origin, and the signed parameter map."""
    q = ray.origin - (ray.origin @ ray.dir) * ray.dir

    def r_of(point) -> float:
        return float(np.asarray(point, dtype=float) @ ray.dir)

    return q, r_of


# --- intersection ----------------------------------------------------------------

def _quadric_roots(surface, ray: Ray3) -> List[float]:
    q, b, c = surface.quadric()
    o, d = ray.origin, ray.dir
    a2 = float(d @ q @ d)
    a1 = float(d @ (q @ o + b))
    a0 = float(o @ q @ o + 2.0 * b @ o + c)
    scale = max(1.0, abs(a1), abs(a0))
    if abs(a2) < 1e-14 * scale:
        return [] if abs(a1) < 1e-14 * scale else [-a0 / (2.0 * a1)]
    disc = a1 * a1 - a2 * a0
    if disc < 0:
        return []
    root = np.sqrt(disc)
    # stable pair of roots
    k = -(a1 + np.copysign(root, a1))
    roots = [k / a2]
    if k != 0:
        roots.append(a0 / k)
    return roots


def _quadric_normal(surface, point: np.ndarray) -> np.ndarray:
    q, b, _ = surface.quadric()
    return _unit(q @ point + b)


def _parametric_roots(surface, ray: Ray3, resolution: int) -> List[Tuple[complex, float]]:
    """(mu, s) with point(mu) = origin + s dir, seeded from grid points near the line."""
    domain = surface.domain
    grid = domain.grid(resolution)
    points, _ = surface.point_normal(grid)
    rel = points - ray.origin
    distance = np.linalg.norm(np.cross(rel, ray.dir), axis=-1)
    distance = np.where(np.isfinite(distance), distance, np.inf).reshape(resolution, resolution)
    minima = (distance == minimum_filter(distance, size=3, mode="nearest")) & np.isfinite(distance)
    candidates = np.flatnonzero(minima.ravel())
    candidates = candidates[np.argsort(distance.ravel()[candidates])][:MAX_POLISH]

    def fun(x):
        p, _ = surface.point_normal(np.array([complex(x[0], x[1])]))
        return np.nan_to_num(np.asarray(p, dtype=float)[0] - ray.at(x[2]), nan=1e6)

    lower = [domain.umin, domain.vmin, -np.inf]
    upper = [domain.umax, domain.vmax, np.inf]
    found = []
    for idx in candidates:
        mu0 = grid[idx]
        s0 = float(rel[idx] @ ray.dir)
        result = least_squares(fun, [mu0.real, mu0.imag, s0], bounds=(lower, upper),
                               xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
        scale = max(1.0, float(np.linalg.norm(ray.origin)), abs(result.x[2]))
        if np.max(np.abs(result.fun)) < 1e-10 * scale:
            mu = complex(result.x[0], result.x[1])
            if all(abs(mu - m) > 1e-6 or abs(result.x[2] - s) > 1e-6 * scale for m, s in found):
                found.append((mu, float(result.x[2])))
    return found


def intersect(surface, ray: Ray3, resolution: Optional[int] = None) -> List[Hit]:
    """Forward intersections of a ray with a surface patch, sorted by arclength."""
    hits = []
    if surface.quadric() is not None:
        for s in _quadric_roots(surface, ray):
            if s <= -1e-9:
                continue
            point = ray.at(s)
            if surface.contains_point(point):
                hits.append(Hit(point, _quadric_normal(surface, point), float(s)))
    else:
        resolution = resolution or get_settings().oracle_resolution
        for mu, s in _parametric_roots(surface, ray, resolution):
            if s <= -1e-9:
                continue
            point, normal = surface.point_normal(np.array([mu]))
            hits.append(Hit(np.asarray(point, dtype=float)[0], np.asarray(normal, dtype=float)[0], s))
    hits.sort(key=lambda h: h.arclength)
    return hits


# --- specular search -------------------------------------------------------------

def specular_residual(point, normal, p1, p2) -> np.ndarray:
    """|sin| of the angle between reflect(p1 -> point) and (point -> p2), vectorised."""
    u1 = _unit(np.asarray(point, dtype=float) - p1)
    u2 = _unit(np.asarray(p2, dtype=float) - point)
    return np.linalg.norm(np.cross(reflect_vec(u1, normal), u2), axis=-1)


def t_condition(d1, d2) -> SpecularCondition:
    """Normal parallel to d1 - d2 (either sign)."""
    target = _unit(np.asarray(d1, dtype=float) - np.asarray(d2, dtype=float))
    if not np.all(np.isfinite(target)):
        raise DegenerateInput("incoming and outgoing directions coincide")
    return lambda points, normals: np.cross(normals, target)


def w_condition(p1, d2) -> SpecularCondition:
    """The line through p1 and the point reflects into direction d2."""
    p1 = np.asarray(p1, dtype=float)
    d2 = _unit(d2)
    return lambda points, normals: np.cross(_unit(points - p1), reflect_vec(d2, normals))


def v_condition(p1, p2) -> SpecularCondition:
    """The line through p1 and the point reflects through p2."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    return lambda points, normals: np.cross(reflect_vec(_unit(points - p1), normals), _unit(p2 - points))


def find_specular_points(surface, condition: SpecularCondition, incoming: Callable[[np.ndarray], np.ndarray],
                         resolution: Optional[int] = None) -> List[SpecularPoint]:
    """Dense parameter-grid search for zeros of a specular condition, polished with least squares.

    Args:
        surface: patch to search over its parameter rectangle
        condition: (points, normals) -> vector that vanishes at specular points
        incoming: points -> incoming unit direction, used to drop grazing points
        resolution: grid points per side

    Returns:
        Distinct specular points ordered by parameter
    """
    n = resolution or get_settings().oracle_resolution
    domain = surface.domain
    grid = domain.grid(n)
    points, normals = surface.point_normal(grid)
    residual = np.linalg.norm(condition(points, normals), axis=-1)
    residual = np.where(np.isfinite(residual), residual, np.inf)

    exact = residual < EXACT_TOL
    field = residual.reshape(n, n)
    minima = ((field == minimum_filter(field, size=3, mode="nearest")) & np.isfinite(field)).ravel() & ~exact
    candidates = np.flatnonzero(minima)
    candidates = candidates[np.argsort(residual[candidates])][:MAX_POLISH]

    def fun(x):
        p, nrm = surface.point_normal(np.array([complex(x[0], x[1])]))
        return np.nan_to_num(condition(p, nrm)[0], nan=1e3)

    found = list(grid[exact])
    lower, upper = [domain.umin, domain.vmin], [domain.umax, domain.vmax]
    for idx in candidates:
        result = least_squares(fun, [grid[idx].real, grid[idx].imag], bounds=(lower, upper),
                               xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
        if np.linalg.norm(result.fun) >= SPECULAR_TOL:
            continue
        mu = complex(result.x[0], result.x[1])
        if not found or np.min(np.abs(np.asarray(found) - mu)) >= 1e-6:
            found.append(mu)

    if not found:
        return []
    mus = np.array(sorted(found, key=lambda m: (m.real, m.imag)), dtype=complex)
    points, normals = surface.point_normal(mus)
    incidence = np.abs(np.sum(incoming(points) * normals, axis=-1))
    residual = np.linalg.norm(condition(points, normals), axis=-1)
    keep = np.isfinite(incidence) & (incidence >= get_settings().grazing_tol)
    logger.debug(f"oracle: {int(exact.sum())} exact grid points, {len(candidates)} polished, {int(keep.sum())} specular")
    return [SpecularPoint(mu=complex(mus[i]), point=points[i], normal=normals[i], residual=float(residual[i]))
            for i in np.flatnonzero(keep)]


# --- characteristic values -------------------------------------------------------

def oracle_T(surface, d1, d2, resolution: Optional[int] = None) -> List[float]:
    """|r1 - r2| for each reflection point sending direction d1 into d2."""
    d1, d2 = _unit(d1), _unit(d2)
    paths = find_specular_points(surface, t_condition(d1, d2), lambda points: np.broadcast_to(d1, points.shape),
                                 resolution)
    return [abs(float(sp.point @ d1 - sp.point @ d2)) for sp in paths]


def oracle_W(surface, p1, d2, resolution: Optional[int] = None) -> List[float]:
    """|r1 - r2 - s1| for each path from p1 leaving the mirror along d2."""
    p1, d2 = np.asarray(p1, dtype=float), _unit(d2)
    paths = find_specular_points(surface, w_condition(p1, d2), lambda points: _unit(points - p1), resolution)
    values = []
    for sp in paths:
        d1 = reflect_vec(d2, sp.normal)
        values.append(abs(float((sp.point - p1) @ d1 - sp.point @ d2)))
    return values


def oracle_V(surface, p1, p2, resolution: Optional[int] = None) -> List[float]:
    """|r1 - r2 - s1 + s2| for each single-reflection path joining the lines through p1 and p2."""
    p1, p2 = np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)
    paths = find_specular_points(surface, v_condition(p1, p2), lambda points: _unit(points - p1), resolution)
    values = []
    for sp in paths:
        d1 = _unit(sp.point - p1)
        d2 = reflect_vec(d1, sp.normal)
        values.append(abs(float((sp.point - p1) @ d1 + (p2 - sp.point) @ d2)))
    return values
