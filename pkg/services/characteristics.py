"""
Angle (T), mixed (W) and point (V) characteristic functions for reflection.

Each function first solves for its domain (which surface points can reflect
the requested data) and then evaluates the distance along the ray pair at
every solution. Values are unsigned; the signed pieces are returned with them:

    T = |r1 - r2|,  W = |r1 - r2 - s1|,  V = |r1 - r2 - s1 + s2|

where r1, r2 are the affine parameters of the reflection point on the
incoming and outgoing rays and s1, s2 those of the query points.
"""
import logging
from typing import Callable, List, Optional

import numpy as np

from exceptions import ChartExcluded, OutOfDomain
from models.characteristic import (
    CharQueryT,
    CharQueryV,
    CharQueryW,
    CharacteristicResult,
    DomainRoot,
)
from models.frames import SurfaceFrame
from models.lines import AT_INFINITY, Point3
from services.line_space import antipode, check_chart, chordal, eta_r, in_chart, stereographic
from services.reflection import (
    inverse_reflect_direction,
    mirror_normal,
    path_increment,
    reflect_direction,
    reflected_xi,
)
from services.solver import multistart
from services.surfaces import MirrorSurface
from settings import get_settings

logger = logging.getLogger(__name__)


def _scaled(terms: List[np.ndarray]) -> np.ndarray:
    """Sum of complex monomials divided by the largest monomial magnitude (at least 1)."""
    total = sum(terms)
    scale = np.maximum.reduce([np.ones(np.shape(total))] + [np.abs(t) for t in terms])
    return total / scale


def _split(values: List[np.ndarray]) -> np.ndarray:
    parts = []
    for v in values:
        parts.extend([v.real, v.imag])
    return np.stack(parts, axis=-1)


def outgoing_terms(xi0, eta0, r0, xi, p: Point3) -> List[np.ndarray]:
    """Monomials of: the line through the surface point with direction reflect(xi0, xi) passes through p.

    With xi = xi2 and p = p1 this is the W domain equation; with xi = xi1 and
    p = p2 it is the outgoing half of the V system.
    """
    m = (xi0 * np.conj(xi0)).real
    n = 2.0 * xi0 * np.conj(xi) + 1.0 - m
    d = (1.0 - m) * np.conj(xi) - 2.0 * np.conj(xi0)
    a = np.conj(xi0) - np.conj(xi)
    b = 1.0 + xi0 * np.conj(xi)
    return [
        p.z * d ** 2,
        -2.0 * p.t * d * n,
        -np.conj(p.z) * n ** 2,
        -2.0 * a ** 2 * eta0,
        2.0 * b ** 2 * np.conj(eta0),
        -2.0 * a * b * (1.0 + m) * r0,
    ]


def incoming_terms(xi0, eta0, r0, xi1, p: Point3) -> List[np.ndarray]:
    """Monomials of: the line through p with direction xi1 meets the surface point."""
    m = (xi0 * np.conj(xi0)).real
    a = 1.0 + np.conj(xi0) * xi1
    b = xi0 - xi1
    return [
        (1.0 + m) ** 2 * p.z,
        -2.0 * (1.0 + m) ** 2 * p.t * xi1,
        -(1.0 + m) ** 2 * np.conj(p.z) * xi1 ** 2,
        -2.0 * a ** 2 * eta0,
        2.0 * b ** 2 * np.conj(eta0),
        -2.0 * b * a * (1.0 + m) * r0,
    ]


def w_system(surface: MirrorSurface, q: CharQueryW) -> Callable[[np.ndarray], np.ndarray]:
    """Residual map (Re mu, Im mu) -> normalised W domain equation."""
    xi2 = q.xi2

    def system(x: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            xi0, eta0, r0 = surface.congruence(x[:, 0] + 1j * x[:, 1])
            return _split([_scaled(outgoing_terms(xi0, eta0, r0, xi2, q.p1))])

    return system


def v_system(surface: MirrorSurface, q: CharQueryV) -> Callable[[np.ndarray], np.ndarray]:
    """Residual map (Re mu, Im mu, Re xi1, Im xi1) -> the two normalised V domain equations."""

    def system(x: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            xi0, eta0, r0 = surface.congruence(x[:, 0] + 1j * x[:, 1])
            xi1 = x[:, 2] + 1j * x[:, 3]
            first = _scaled(incoming_terms(xi0, eta0, r0, xi1, q.p1))
            second = _scaled(outgoing_terms(xi0, eta0, r0, xi1, q.p2))
            return _split([first, second])

    return system


def domain_w_residual(surface: MirrorSurface, q: CharQueryW, mu: complex) -> float:
    values = w_system(surface, q)(np.array([[mu.real, mu.imag]]))
    return float(np.max(np.abs(values)))


def domain_v_residual(surface: MirrorSurface, q: CharQueryV, mu: complex, xi1: complex) -> float:
    values = v_system(surface, q)(np.array([[mu.real, mu.imag, xi1.real, xi1.imag]]))
    return float(np.max(np.abs(values)))


def _is_grazing(xi1: complex, xi2: complex) -> bool:
    return float(chordal(xi1, xi2)) < get_settings().grazing_tol


def _sort_key(item):
    return (item.mu.real, item.mu.imag, item.xi1.real, item.xi1.imag)


# --- T -------------------------------------------------------------------------

def domain_T(surface: MirrorSurface, q: CharQueryT, grid_size: Optional[int] = None) -> List[SurfaceFrame]:
    """Frames whose normal (either orientation) reflects xi1 into xi2.

    Raises:
        DegenerateInput: xi1 == xi2
    """
    xi1, xi2 = check_chart(q.xi1), check_chart(q.xi2)
    normal = mirror_normal(xi1, xi2)
    if normal is AT_INFINITY:
        targets = [0j]
    else:
        flipped = antipode(normal)
        targets = [normal] + ([flipped] if flipped is not AT_INFINITY else [])

    frames: List[SurfaceFrame] = []
    for target in targets:
        if in_chart(target):
            frames.extend(surface.gauss_preimage(target, grid_size))
    frames.sort(key=lambda f: (f.mu.real, f.mu.imag))
    logger.debug(f"Dom T: {len(frames)} frames for xi1={xi1:.6g}, xi2={xi2:.6g}")
    return frames


def char_T(surface: MirrorSurface, q: CharQueryT, grid_size: Optional[int] = None) -> List[CharacteristicResult]:
    """Angle characteristic: distance along the rays between their closest points to the origin."""
    xi1, xi2 = q.xi1, q.xi2
    results = []
    for frame in domain_T(surface, q, grid_size):
        increment = float(path_increment(frame.xi0, xi1, frame.r0))
        _, r1 = eta_r(xi1, frame.foot.z, frame.foot.t)
        residual = abs(complex(reflected_xi(frame.xi0, xi1)) - xi2) / (1.0 + abs(xi2))
        results.append(CharacteristicResult(
            function="T", value=abs(increment), mu=frame.mu, xi0=frame.xi0, xi1=xi1, xi2=xi2,
            r1=float(r1), r2=float(r1) - increment, residual=residual, foot=frame.foot,
        ))
    return results


# --- W -------------------------------------------------------------------------

def domain_W(surface: MirrorSurface, q: CharQueryW, grid_size: Optional[int] = None,
             accept_tol: Optional[float] = None) -> List[DomainRoot]:
    """Surface parameters mu at which a line through p1 reflects into direction xi2.

    Raises:
        SolverFailure: seeds stalled near a root without converging
    """
    check_chart(q.xi2)
    n = grid_size or get_settings().grid_size
    mu_seeds = surface.domain.grid(n)
    seeds = np.stack([mu_seeds.real, mu_seeds.imag], axis=-1)

    def admissible(x: np.ndarray) -> np.ndarray:
        return surface.domain.contains(x[:, 0] + 1j * x[:, 1])

    roots = multistart(w_system(surface, q), seeds, admissible=admissible, accept_tol=accept_tol)
    solved = []
    for root in roots:
        mu = complex(root.x[0], root.x[1])
        try:
            frame = surface.frame_at(mu)
            xi1 = inverse_reflect_direction(frame.xi0, q.xi2)
        except (ChartExcluded, OutOfDomain) as e:
            logger.debug(f"Dom W: dropping mu={mu:.6g}: {e}")
            continue
        if _is_grazing(xi1, q.xi2):
            logger.debug(f"Dom W: dropping grazing root mu={mu:.6g}")
            continue
        solved.append(DomainRoot(mu=mu, xi1=xi1, frame=frame, residual=root.residual))
    solved.sort(key=_sort_key)
    return solved


def char_W(surface: MirrorSurface, q: CharQueryW, grid_size: Optional[int] = None,
           accept_tol: Optional[float] = None) -> List[CharacteristicResult]:
    """Mixed characteristic: distance along the rays from p1 to the outgoing ray's closest point."""
    results = []
    for root in domain_W(surface, q, grid_size, accept_tol):
        frame = root.frame
        _, s1 = eta_r(root.xi1, q.p1.z, q.p1.t)
        _, r1 = eta_r(root.xi1, frame.foot.z, frame.foot.t)
        increment = float(path_increment(frame.xi0, root.xi1, frame.r0))
        results.append(CharacteristicResult(
            function="W", value=abs(increment - float(s1)), mu=root.mu, xi0=frame.xi0,
            xi1=root.xi1, xi2=q.xi2, s1=float(s1), r1=float(r1), r2=float(r1) - increment,
            residual=root.residual, foot=frame.foot,
        ))
    return results


# --- V -------------------------------------------------------------------------

def _v_seeds(surface: MirrorSurface, p1: Point3, n: int) -> np.ndarray:
    """Grid seeds for mu, each paired with the direction from p1 to the seed's foot point."""
    mu = surface.domain.grid(n)
    points, _ = surface.point_normal(mu)
    offset = points - p1.as_vector()
    length = np.linalg.norm(offset, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi1 = stereographic(offset / length[:, None])
    usable = np.isfinite(points).all(axis=-1) & (length > 1e-9) & in_chart(xi1)
    seeds = np.stack([mu.real, mu.imag, xi1.real, xi1.imag], axis=-1)
    return seeds[usable]


def domain_V(surface: MirrorSurface, q: CharQueryV, grid_size: Optional[int] = None,
             accept_tol: Optional[float] = None) -> List[DomainRoot]:
    """Pairs (mu, xi1): a line from p1 with direction xi1 reflects at mu through p2.

    Raises:
        SolverFailure: seeds stalled near a root without converging
    """
    n = grid_size or get_settings().grid_size
    seeds = _v_seeds(surface, q.p1, n)
    if len(seeds) == 0:
        return []

    def admissible(x: np.ndarray) -> np.ndarray:
        return surface.domain.contains(x[:, 0] + 1j * x[:, 1]) & in_chart(x[:, 2] + 1j * x[:, 3])

    roots = multistart(v_system(surface, q), seeds, admissible=admissible, accept_tol=accept_tol)
    radius = get_settings().dedup_radius
    solved = []
    for root in roots:
        mu, xi1 = complex(root.x[0], root.x[1]), complex(root.x[2], root.x[3])
        try:
            frame = surface.frame_at(mu)
            xi2 = reflect_direction(frame.xi0, xi1)
        except (ChartExcluded, OutOfDomain) as e:
            logger.debug(f"Dom V: dropping mu={mu:.6g}: {e}")
            continue
        if _is_grazing(xi1, xi2):
            logger.debug(f"Dom V: dropping grazing root mu={mu:.6g}")
            continue
        residual = root.residual
        _, s1 = eta_r(xi1, q.p1.z, q.p1.t)
        _, r1 = eta_r(xi1, frame.foot.z, frame.foot.t)
        flipped = antipode(xi1)
        if r1 < s1 and flipped is not AT_INFINITY and in_chart(flipped):
            # report the orientation running from p1 toward the mirror
            try:
                reflect_direction(frame.xi0, flipped)
                xi1 = flipped
                residual = domain_v_residual(surface, q, mu, xi1)
            except ChartExcluded:
                pass
        if any(abs(mu - other.mu) < radius and abs(xi1 - other.xi1) < radius for other in solved):
            continue
        solved.append(DomainRoot(mu=mu, xi1=xi1, frame=frame, residual=residual))
    solved.sort(key=_sort_key)
    return solved


def char_V(surface: MirrorSurface, q: CharQueryV, grid_size: Optional[int] = None,
           accept_tol: Optional[float] = None) -> List[CharacteristicResult]:
    """Point characteristic: optical path length from p1 to p2 via one reflection."""
    results = []
    for root in domain_V(surface, q, grid_size, accept_tol):
        frame = root.frame
        xi2 = reflect_direction(frame.xi0, root.xi1)
        _, s1 = eta_r(root.xi1, q.p1.z, q.p1.t)
        _, s2 = eta_r(xi2, q.p2.z, q.p2.t)
        _, r1 = eta_r(root.xi1, frame.foot.z, frame.foot.t)
        increment = float(path_increment(frame.xi0, root.xi1, frame.r0))
        value = abs(increment - float(s1) + float(s2))
        results.append(CharacteristicResult(
            function="V", value=value, mu=root.mu, xi0=frame.xi0, xi1=root.xi1, xi2=xi2,
            s1=float(s1), s2=float(s2), r1=float(r1), r2=float(r1) - increment,
            residual=root.residual, foot=frame.foot,
        ))
    return results
