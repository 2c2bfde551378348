"""
Catalog of oriented mirror surfaces and their normal congruences.

Each surface is a patch parameterised by a complex parameter mu over a
rectangle. Evaluating the patch gives foot points and oriented unit normals;
the normal congruence (xi0, eta0, r0) follows from the line-space charts.
Surfaces whose Gauss map is injective (sphere, paraboloid, ellipsoid) use the
chart value of the oriented normal itself as mu; the plane uses the in-plane
coordinate of the foot point.
"""
import logging
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from exceptions import ChartExcluded, DegenerateInput, OutOfDomain
from models.frames import SurfaceFrame
from models.lines import OrientedLine, Point3
from services.line_space import chordal, eta_r, in_chart, inverse_stereographic, stereographic
from services.solver import multistart
from settings import get_settings

logger = logging.getLogger(__name__)

Quadric = Tuple[np.ndarray, np.ndarray, float]


class ParameterDomain(BaseModel):
    """Closed rectangle umin <= Re mu <= umax, vmin <= Im mu <= vmax."""

    model_config = ConfigDict(frozen=True)

    umin: float
    umax: float
    vmin: float
    vmax: float

    @model_validator(mode="after")
    def _non_empty(self):
        if not (self.umin < self.umax and self.vmin < self.vmax):
            raise ValueError("parameter rectangle must be non-empty")
        return self

    @classmethod
    def square(cls, half_width: float, center: complex = 0j) -> "ParameterDomain":
        return cls(umin=center.real - half_width, umax=center.real + half_width,
                   vmin=center.imag - half_width, vmax=center.imag + half_width)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.umin + self.umax), 0.5 * (self.vmin + self.vmax))

    def contains(self, mu, margin: float = 0.0) -> np.ndarray:
        mu = np.asarray(mu, dtype=complex)
        return ((mu.real >= self.umin + margin) & (mu.real <= self.umax - margin)
                & (mu.imag >= self.vmin + margin) & (mu.imag <= self.vmax - margin))

    def contains_direction(self, normal) -> np.ndarray:
        """contains() for parameters that are chart values of unit vectors, tested on the vectors.

        Re xi >= umin is x >= umin (1 + z) on the sphere, and likewise for the
        other three edges, so the rectangle is an intersection of half-spaces.
        """
        n = np.asarray(normal, dtype=float)
        x, y, lift = n[..., 0], n[..., 1], 1.0 + n[..., 2]
        return ((lift > 0) & (x >= self.umin * lift) & (x <= self.umax * lift)
                & (y >= self.vmin * lift) & (y <= self.vmax * lift))

    def grid(self, n: int, margin: float = 0.0) -> np.ndarray:
        """Cell centres of an n x n subdivision, flattened."""
        du = (self.umax - self.umin - 2 * margin) / n
        dv = (self.vmax - self.vmin - 2 * margin) / n
        u = self.umin + margin + du * (np.arange(n) + 0.5)
        v = self.vmin + margin + dv * (np.arange(n) + 0.5)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        return (uu + 1j * vv).ravel()


class LineCongruence(Protocol):
    """Anything that yields a two-parameter family of lines with a distance function."""

    domain: ParameterDomain

    def congruence(self, mu) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        ...


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise DegenerateInput("zero vector where a direction was expected")
    return v / norm


def _orientation(value: int) -> int:
    if value not in (1, -1):
        raise DegenerateInput("orientation must be +1 or -1")
    return value


class MirrorSurface(ABC):
    """An oriented C^1 surface patch over a rectangle in the mu-plane."""

    kind: str = "surface"

    def __init__(self, domain: ParameterDomain, orientation: int = 1):
        self.domain = domain
        self.orientation = _orientation(orientation)

    @abstractmethod
    def point_normal(self, mu) -> Tuple[np.ndarray, np.ndarray]:
        """Foot points (..., 3) and oriented unit normals (..., 3); NaN where undefined."""

    def quadric(self) -> Optional[Quadric]:
        """(Q, b, c) with F(X) = X.Q.X + 2 b.X + c and grad F along the oriented normal."""
        return None

    def parameter_of(self, point) -> Optional[complex]:
        """Parameter of a point known to lie on the surface, when available in closed form."""
        return None

    def contains_point(self, point) -> bool:
        """Whether a point on the surface lies over the parameter rectangle (vector arithmetic only)."""
        mu = self.parameter_of(point)
        return mu is not None and bool(self.domain.contains(mu))

    def moved(self, motion) -> "MirrorSurface":
        raise NotImplementedError(f"{self.kind} surfaces cannot be moved")

    # --- normal congruence ------------------------------------------------------

    def congruence(self, mu) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(xi0, eta0, r0) of the normal lines at mu."""
        points, normals = self.point_normal(mu)
        xi0 = stereographic(normals)
        eta0, r0 = eta_r(xi0, points[..., 0] + 1j * points[..., 1], points[..., 2])
        return xi0, eta0, r0

    def frame_at(self, mu: complex) -> SurfaceFrame:
        """Normal congruence sample at mu.

        Raises:
            OutOfDomain: mu outside the rectangle, or the patch is undefined there
            ChartExcluded: the normal falls in the south cap
        """
        mu = complex(mu)
        if not self.domain.contains(mu):
            raise OutOfDomain(f"mu={mu:.6g} outside the parameter rectangle of the {self.kind}")
        points, normals = self.point_normal(mu)
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(normals)):
            raise OutOfDomain(f"{self.kind} is undefined at mu={mu:.6g}")
        xi0 = complex(stereographic(normals))
        if not in_chart(xi0):
            raise ChartExcluded(f"normal at mu={mu:.6g} lies in the excluded south cap")
        foot = Point3.from_vector(points)
        eta0, r0 = eta_r(xi0, foot.z, foot.t)
        return SurfaceFrame(mu=mu, xi0=xi0, eta0=complex(eta0), r0=float(r0), foot=foot)

    def gauss_preimage(self, xi0: complex, grid_size: Optional[int] = None) -> List[SurfaceFrame]:
        """Frames whose normal has chart value xi0, by multistart over the rectangle."""
        target = complex(xi0)
        n = grid_size or get_settings().grid_size

        def system(x: np.ndarray) -> np.ndarray:
            mu = x[:, 0] + 1j * x[:, 1]
            _, normals = self.point_normal(mu)
            diff = (stereographic(normals) - target) / (1.0 + abs(target))
            return np.stack([diff.real, diff.imag], axis=-1)

        seeds = _as_real(self.domain.grid(n))
        roots = multistart(system, seeds, admissible=lambda x: self.domain.contains(x[:, 0] + 1j * x[:, 1]))
        return _frames_for(self, [complex(r.x[0], r.x[1]) for r in roots])

    def __repr__(self):
        return f"<{type(self).__name__}(orientation={self.orientation:+d}, domain={self.domain})>"


def _as_real(mu: np.ndarray) -> np.ndarray:
    return np.stack([mu.real, mu.imag], axis=-1)


def _frames_for(surface: MirrorSurface, mus) -> List[SurfaceFrame]:
    frames = []
    for mu in mus:
        try:
            frames.append(surface.frame_at(mu))
        except (OutOfDomain, ChartExcluded) as e:
            logger.debug(f"dropping root mu={mu:.6g}: {e}")
    return frames


class Plane(MirrorSurface):
    """Plane through ``point`` with unit normal ``normal``; mu is the in-plane coordinate."""

    kind = "plane"

    def __init__(self, point, normal, domain: ParameterDomain, orientation: int = 1):
        super().__init__(domain, orientation)
        self.point = np.asarray(point, dtype=float).reshape(3)
        self.normal = _unit(normal)
        seed = np.array([1.0, 0.0, 0.0]) if abs(self.normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        self.e1 = _unit(seed - (seed @ self.normal) * self.normal)
        self.e2 = np.cross(self.normal, self.e1)

    def point_normal(self, mu):
        mu = np.asarray(mu, dtype=complex)
        points = self.point + mu.real[..., None] * self.e1 + mu.imag[..., None] * self.e2
        normals = np.broadcast_to(self.orientation * self.normal, points.shape).copy()
        return points, normals

    def quadric(self):
        n = self.orientation * self.normal
        return np.zeros((3, 3)), 0.5 * n, float(-n @ self.point)

    def parameter_of(self, point):
        d = np.asarray(point, dtype=float) - self.point
        return complex(d @ self.e1, d @ self.e2)

    def gauss_preimage(self, xi0, grid_size=None):
        # the whole plane shares one normal: report a single representative frame
        own = complex(stereographic(self.orientation * self.normal))
        if not in_chart(own):
            return []
        if float(chordal(own, xi0)) > 1e-10:
            return []
        return [self.frame_at(self.domain.center)]

    def moved(self, motion):
        return Plane(motion.apply_point(self.point), motion.apply_direction(self.normal),
                     self.domain, self.orientation)


class NormalChartSurface(MirrorSurface):
    """Surface parameterised by the chart value of its oriented normal (mu = xi0)."""

    @abstractmethod
    def point_for_normal(self, normals: np.ndarray) -> np.ndarray:
        """Surface points whose geometric normal is ``normals``; NaN where not attained."""

    @abstractmethod
    def geometric_normal(self, point) -> np.ndarray:
        """Unit geometric (orientation +1) normal at a surface point."""

    def point_normal(self, mu):
        normals = inverse_stereographic(mu)
        points = self.point_for_normal(self.orientation * normals)
        return points, normals

    def contains_point(self, point) -> bool:
        return bool(self.domain.contains_direction(self.orientation * self.geometric_normal(point)))

    def gauss_preimage(self, xi0, grid_size=None):
        xi0 = complex(xi0)
        if not self.domain.contains(xi0):
            return []
        return _frames_for(self, [xi0])


class Sphere(NormalChartSurface):
    """Sphere; orientation +1 means outward normals."""

    kind = "sphere"

    def __init__(self, center, radius: float, domain: ParameterDomain, orientation: int = 1):
        if not radius > 0:
            raise DegenerateInput("sphere radius must be positive")
        super().__init__(domain, orientation)
        self.center = np.asarray(center, dtype=float).reshape(3)
        self.radius = float(radius)

    def point_for_normal(self, normals):
        return self.center + self.radius * normals

    def geometric_normal(self, point):
        return _unit(np.asarray(point, dtype=float) - self.center)

    def quadric(self):
        s = self.orientation
        c = self.center
        return s * np.eye(3), -s * c, float(s * (c @ c - self.radius ** 2))

    def moved(self, motion):
        return Sphere(motion.apply_point(self.center), self.radius, self.domain, self.orientation)


class Ellipsoid(NormalChartSurface):
    """Ellipsoid with semi-axes (a, b, c) along the columns of ``rotation``."""

    kind = "ellipsoid"

    def __init__(self, center, semi_axes, domain: ParameterDomain, orientation: int = 1,
                 rotation=None):
        semi_axes = np.asarray(semi_axes, dtype=float).reshape(3)
        if not np.all(semi_axes > 0):
            raise DegenerateInput("ellipsoid semi-axes must be positive")
        super().__init__(domain, orientation)
        self.center = np.asarray(center, dtype=float).reshape(3)
        self.semi_axes = semi_axes
        self.rotation = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)

    def point_for_normal(self, normals):
        body = normals @ self.rotation
        scaled = body * self.semi_axes ** 2
        lam = np.sqrt(np.sum(body * scaled, axis=-1))
        return self.center + (scaled / lam[..., None]) @ self.rotation.T

    def geometric_normal(self, point):
        body = (np.asarray(point, dtype=float) - self.center) @ self.rotation
        return _unit(self.rotation @ (body / self.semi_axes ** 2))

    def quadric(self):
        s = self.orientation
        q = self.rotation @ np.diag(1.0 / self.semi_axes ** 2) @ self.rotation.T
        c = self.center
        return s * q, -s * (q @ c), float(s * (c @ q @ c - 1.0))

    def moved(self, motion):
        return Ellipsoid(motion.apply_point(self.center), self.semi_axes, self.domain,
                         self.orientation, motion.rotation @ self.rotation)


class Paraboloid(NormalChartSurface):
    """Paraboloid of revolution with vertex, axis and focal length.

    Orientation +1 points the normals toward the focus (the concave side).
    """

    kind = "paraboloid"

    def __init__(self, focal_length: float, domain: ParameterDomain, axis=(0.0, 0.0, 1.0),
                 vertex=(0.0, 0.0, 0.0), orientation: int = 1):
        if not focal_length > 0:
            raise DegenerateInput("focal length must be positive")
        super().__init__(domain, orientation)
        self.focal_length = float(focal_length)
        self.axis = _unit(axis)
        self.vertex = np.asarray(vertex, dtype=float).reshape(3)

    def point_for_normal(self, normals):
        f, a = self.focal_length, self.axis
        along = normals @ a
        with np.errstate(divide="ignore", invalid="ignore"):
            offset = -2.0 * f * (normals - along[..., None] * a) / along[..., None]
        height = np.sum(offset * offset, axis=-1) / (4.0 * f)
        points = self.vertex + offset + height[..., None] * a
        return np.where((along > 0)[..., None], points, np.nan)

    def geometric_normal(self, point):
        d = np.asarray(point, dtype=float) - self.vertex
        perpendicular = d - (d @ self.axis) * self.axis
        return _unit(self.axis - perpendicular / (2.0 * self.focal_length))

    def quadric(self):
        s = self.orientation
        f, a, v = self.focal_length, self.axis, self.vertex
        p = np.eye(3) - np.outer(a, a)
        return -s * p, s * (p @ v + 2.0 * f * a), float(s * (-(v @ p @ v) - 4.0 * f * (a @ v)))

    def moved(self, motion):
        return Paraboloid(self.focal_length, self.domain, motion.apply_direction(self.axis),
                          motion.apply_point(self.vertex), self.orientation)


class ParametricSurface(MirrorSurface):
    """User-supplied patch mu -> point; normals analytic or by central differences."""

    kind = "parametric"

    def __init__(self, point_fn: Callable[[np.ndarray], np.ndarray], domain: ParameterDomain,
                 normal_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 orientation: int = 1, step: Optional[float] = None):
        super().__init__(domain, orientation)
        self.point_fn = point_fn
        self.normal_fn = normal_fn
        self.step = step or get_settings().fd_step

    def point_normal(self, mu):
        mu = np.asarray(mu, dtype=complex)
        points = np.asarray(self.point_fn(mu), dtype=float)
        if self.normal_fn is not None:
            normals = np.asarray(self.normal_fn(mu), dtype=float)
        else:
            h = self.step
            du = (np.asarray(self.point_fn(mu + h)) - np.asarray(self.point_fn(mu - h))) / (2 * h)
            dv = (np.asarray(self.point_fn(mu + 1j * h)) - np.asarray(self.point_fn(mu - 1j * h))) / (2 * h)
            normals = np.cross(du, dv)
        normals = normals / np.linalg.norm(normals, axis=-1, keepdims=True)
        return points, self.orientation * normals

    def moved(self, motion):
        point_fn, normal_fn = self.point_fn, self.normal_fn

        def moved_point(mu):
            return motion.apply_point(point_fn(mu))

        moved_normal = None if normal_fn is None else (lambda mu: motion.apply_direction(normal_fn(mu)))
        return ParametricSurface(moved_point, self.domain, moved_normal, self.orientation, self.step)


class OffsetSurface(MirrorSurface):
    """Parallel surface at signed distance ``distance`` along the base normals.

    Shares the base's normal lines; only r0 shifts by the distance.
    """

    kind = "offset"

    def __init__(self, base: MirrorSurface, distance: float):
        super().__init__(base.domain, base.orientation)
        self.base = base
        self.distance = float(distance)

    def point_normal(self, mu):
        points, normals = self.base.point_normal(mu)
        return points + self.distance * normals, normals

    def quadric(self):
        if isinstance(self.base, Sphere):
            grown = self.base.radius + self.orientation * self.distance
            return Sphere(self.base.center, grown, self.domain, self.orientation).quadric()
        return None

    def contains_point(self, point) -> bool:
        if isinstance(self.base, (Sphere, Plane)):
            n = self.orientation * (self.base.normal if isinstance(self.base, Plane)
                                    else self.base.geometric_normal(point))
            return self.base.contains_point(np.asarray(point, dtype=float) - self.distance * n)
        return False

    def moved(self, motion):
        return OffsetSurface(self.base.moved(motion), self.distance)


# --- operations on frames --------------------------------------------------------

def us_eta_values(xi0, eta0, r0, xi):
    """eta of the line with direction xi through the foot point of (xi0, eta0, r0)."""
    xi0 = np.asarray(xi0, dtype=complex)
    eta0 = np.asarray(eta0, dtype=complex)
    r0 = np.asarray(r0, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    m = 1.0 + (xi0 * np.conj(xi0)).real
    a = 1.0 + np.conj(xi0) * xi
    b = xi0 - xi
    return (a ** 2 * eta0 - b ** 2 * np.conj(eta0)) / m ** 2 + b * a * r0 / m


def us_eta(surface_frame: SurfaceFrame, xi: complex) -> complex:
    """eta such that the line (xi, eta) passes through the frame's foot point."""
    f = surface_frame
    return complex(us_eta_values(f.xi0, f.eta0, f.r0, xi))


def frame_at(surface: MirrorSurface, mu: complex) -> SurfaceFrame:
    return surface.frame_at(mu)


def integrability_residual(surface: LineCongruence, mu: complex, h: Optional[float] = None) -> complex:
    """Residual of the normal-congruence condition at mu, by central differences.

    d r - (2 conj(eta) d xi + 2 eta d conj(xi)) / (1 + |xi|^2)^2 with d = d/d mu.
    Vanishes (up to O(h^2)) exactly when the congruence is normal.
    """
    h = h or get_settings().fd_step
    mu = complex(mu)
    if not surface.domain.contains(mu, margin=h):
        raise OutOfDomain(f"mu={mu:.6g} is closer than {h:g} to the edge of the parameter rectangle")

    samples = np.array([mu, mu + h, mu - h, mu + 1j * h, mu - 1j * h])
    xi, eta, r = (np.asarray(a) for a in surface.congruence(samples))

    def d_mu(values):
        d_u = (values[1] - values[2]) / (2 * h)
        d_v = (values[3] - values[4]) / (2 * h)
        return 0.5 * (d_u - 1j * d_v)

    d_xi = d_mu(xi)
    d_xi_bar = d_mu(np.conj(xi))
    d_r = d_mu(r.astype(complex))
    xi_c, eta_c = xi[0], eta[0]
    rhs = (2 * np.conj(eta_c) * d_xi + 2 * eta_c * d_xi_bar) / (1 + abs(xi_c) ** 2) ** 2
    return complex(d_r - rhs)


def line_hits_surface(surface: MirrorSurface, line: OrientedLine,
                      grid_size: Optional[int] = None) -> List[SurfaceFrame]:
    """All frames whose foot point lies on the line, sorted by mu.

    Raises:
        SolverFailure: seeds stalled near a root without converging
    """
    if not in_chart(line.xi):
        raise ChartExcluded(f"line direction xi={line.xi:.6g} lies in the excluded south cap")
    n = grid_size or get_settings().grid_size
    xi, eta = line.xi, line.eta

    def system(x: np.ndarray) -> np.ndarray:
        mu = x[:, 0] + 1j * x[:, 1]
        xi0, eta0, r0 = surface.congruence(mu)
        through = us_eta_values(xi0, eta0, r0, xi)
        scale = np.maximum.reduce([np.ones_like(r0), np.abs(through), np.full_like(r0, abs(eta)), np.abs(r0)])
        diff = (through - eta) / scale
        return np.stack([diff.real, diff.imag], axis=-1)

    seeds = _as_real(surface.domain.grid(n))
    roots = multistart(system, seeds, admissible=lambda x: surface.domain.contains(x[:, 0] + 1j * x[:, 1]))
    frames = _frames_for(surface, [complex(r.x[0], r.x[1]) for r in roots])
    logger.debug(f"line {line!r} meets the {surface.kind} at {len(frames)} points")
    return frames
