"""
Charts on the space of oriented lines.

A direction is encoded by its stereographic coordinate xi (projection from the
south pole, xi = tan(theta/2) e^{i phi}); an oriented line by (xi, eta) where
eta encodes the perpendicular displacement of the line from the origin. Only
the chart that omits the south direction is used: directions with
|xi| > 1/chart_cap_epsilon are rejected with ChartExcluded.

The lower-case array helpers (``stereographic``, ``incidence_point``, ...) are
unchecked and accept numpy arrays of any shape; the public operations validate
their inputs and work on scalars and model types.
"""
import logging
from typing import Tuple, Union

import numpy as np

from exceptions import ChartExcluded, DegenerateInput
from models.lines import AT_INFINITY, AtInfinity, LinePointParam, OrientedLine, Point3
from settings import get_settings

logger = logging.getLogger(__name__)

# Inputs whose norm is off by less than this are renormalised silently.
RENORMALIZE_TOL = 1e-8


# --- vectorised, unchecked ---------------------------------------------------

def stereographic(vectors: np.ndarray) -> np.ndarray:
    """Chart value xi of unit vectors with shape (..., 3)."""
    v = np.asarray(vectors, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    upper = z >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        # (1 - z)/(x - iy) is the same value, computed without the 1 + z cancellation
        north = (x + 1j * y) / (1.0 + z)
        south = (1.0 - z) / (x - 1j * y)
    return np.where(upper, north, south)


def inverse_stereographic(xi) -> np.ndarray:
    """Unit vectors (..., 3) for chart values xi."""
    xi = np.asarray(xi, dtype=complex)
    modulus2 = (xi * np.conj(xi)).real
    large = modulus2 > 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(large, 1.0 / np.where(large, xi, 1.0), 0.0)
    w2 = (w * np.conj(w)).real
    horizontal = np.where(large, 2.0 * np.conj(w) / (w2 + 1.0), 2.0 * xi / (1.0 + modulus2))
    vertical = np.where(large, (w2 - 1.0) / (w2 + 1.0), (1.0 - modulus2) / (1.0 + modulus2))
    return np.stack([horizontal.real, horizontal.imag, vertical], axis=-1)


def incidence_point(xi, eta, r) -> Tuple[np.ndarray, np.ndarray]:
    """(z, t) of the point at affine parameter r on the line (xi, eta)."""
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    r = np.asarray(r, dtype=float)
    modulus2 = (xi * np.conj(xi)).real
    denominator = (1.0 + modulus2) ** 2
    z = (2.0 * (eta - np.conj(eta) * xi ** 2) + 2.0 * xi * (1.0 + modulus2) * r) / denominator
    t = (-2.0 * (eta * np.conj(xi) + np.conj(eta) * xi).real + (1.0 - modulus2 ** 2) * r) / denominator
    return z, t


def eta_r(xi, z, t) -> Tuple[np.ndarray, np.ndarray]:
    """(eta, r) of the line with direction xi through the point (z, t)."""
    xi = np.asarray(xi, dtype=complex)
    z = np.asarray(z, dtype=complex)
    t = np.asarray(t, dtype=float)
    modulus2 = (xi * np.conj(xi)).real
    eta = 0.5 * (z - 2.0 * t * xi - np.conj(z) * xi ** 2)
    r = ((xi * np.conj(z) + np.conj(xi) * z).real + (1.0 - modulus2) * t) / (1.0 + modulus2)
    return eta, r


def chordal(xi1, xi2) -> np.ndarray:
    """|d1 - d2| for directions given by chart values."""
    xi1 = np.asarray(xi1, dtype=complex)
    xi2 = np.asarray(xi2, dtype=complex)
    return 2.0 * np.abs(xi1 - xi2) / np.sqrt((1.0 + np.abs(xi1) ** 2) * (1.0 + np.abs(xi2) ** 2))


def cap_radius() -> float:
    return 1.0 / get_settings().chart_cap_epsilon


def in_chart(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=complex)
    return np.isfinite(xi) & (np.abs(xi) <= cap_radius())


# --- checked operations --------------------------------------------------------

def check_chart(xi: complex) -> complex:
    """Return xi unchanged, or raise ChartExcluded inside the south cap."""
    xi = complex(xi)
    if not in_chart(xi):
        raise ChartExcluded(f"direction xi={xi:.6g} lies in the excluded south cap")
    return xi


def normalized(vector) -> np.ndarray:
    """Unit vector, renormalising small drift and rejecting anything larger."""
    v = np.asarray(vector, dtype=float).reshape(3)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > RENORMALIZE_TOL:
        raise DegenerateInput(f"direction has norm {norm:.12g}, expected 1")
    return v / norm


def dir_to_xi(unit3) -> complex:
    """Stereographic coordinate of a unit direction."""
    v = normalized(unit3)
    return check_chart(complex(stereographic(v)))


def xi_to_dir(xi: complex) -> np.ndarray:
    """Unit direction for a finite chart value."""
    xi = complex(xi)
    if not np.isfinite(xi):
        raise DegenerateInput("xi must be finite")
    return inverse_stereographic(xi)


def direction_of(line: OrientedLine) -> np.ndarray:
    """The canonical projection of a line to its direction."""
    return xi_to_dir(line.xi)


def antipode(xi: complex) -> Union[complex, AtInfinity]:
    """Chart value of the opposite direction, -1/conj(xi)."""
    xi = complex(xi)
    if xi == 0:
        return AT_INFINITY
    return -1.0 / xi.conjugate()


def chordal_distance(xi1: complex, xi2: complex) -> float:
    return float(chordal(xi1, xi2))


def phi(lp: LinePointParam) -> Point3:
    """The point of R^3 at affine distance r from the line's closest point to the origin."""
    check_chart(lp.line.xi)
    z, t = incidence_point(lp.line.xi, lp.line.eta, lp.r)
    return Point3(z=complex(z), t=float(t))


def eta_r_of_point(xi: complex, p: Point3) -> Tuple[complex, float]:
    """Displacement eta and parameter r of the line with direction xi through p."""
    xi = complex(xi)
    if not np.isfinite(xi):
        raise DegenerateInput("xi must be finite")
    eta, r = eta_r(xi, p.z, p.t)
    return complex(eta), float(r)


def line_through(xi: complex, p: Point3) -> LinePointParam:
    """The line with direction xi through p, with p's parameter."""
    eta, r = eta_r_of_point(check_chart(xi), p)
    return LinePointParam(line=OrientedLine(xi=xi, eta=eta), r=r)


def line_through_points(p: Point3, q: Point3) -> Tuple[LinePointParam, LinePointParam]:
    """Oriented line from p toward q, with the affine parameters of both points."""
    delta = q.as_vector() - p.as_vector()
    length = float(np.linalg.norm(delta))
    if length < 1e-12:
        raise DegenerateInput("points coincide; the line through them is undetermined")
    xi = dir_to_xi(delta / length)
    first = line_through(xi, p)
    _, r_q = eta_r_of_point(xi, q)
    return first, LinePointParam(line=first.line, r=r_q)


def line_to_vectors(line: OrientedLine) -> Tuple[np.ndarray, np.ndarray]:
    """(U, V): closest point to the origin and unit direction."""
    check_chart(line.xi)
    z, t = incidence_point(line.xi, line.eta, 0.0)
    closest = np.array([complex(z).real, complex(z).imag, float(t)])
    return closest, xi_to_dir(line.xi)


def line_from_vectors(closest, direction) -> OrientedLine:
    """Inverse of line_to_vectors; U must be perpendicular to V."""
    u = np.asarray(closest, dtype=float).reshape(3)
    v = normalized(direction)
    scale = max(1.0, float(np.linalg.norm(u)))
    if abs(float(u @ v)) > 1e-9 * scale:
        raise DegenerateInput("closest-point vector is not perpendicular to the direction")
    xi = dir_to_xi(v)
    eta, _ = eta_r_of_point(xi, Point3.from_vector(u))
    return OrientedLine(xi=xi, eta=eta)
