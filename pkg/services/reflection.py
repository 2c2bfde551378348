"""
Reflection of oriented lines in a mirror, in chart coordinates.

With N = 2 xi0 conj(xi1) + 1 - |xi0|^2 and D = (1 - |xi0|^2) conj(xi1) - 2 conj(xi0),
the reflected direction is xi2 = N / D. The law is an involution in xi1 for a
fixed normal xi0, and is unchanged when xi0 is replaced by its antipode.
"""
import logging
from typing import Union

import numpy as np

from exceptions import ChartExcluded, DegenerateInput, NotIncident
from models.frames import ReflectionEvent, SurfaceFrame
from models.lines import AT_INFINITY, AtInfinity, LinePointParam, OrientedLine
from services.line_space import cap_radius, check_chart, incidence_point, line_through
from settings import get_settings

logger = logging.getLogger(__name__)

DENOMINATOR_TOL = 1e-12


def reflection_terms(xi0, xi1):
    """Numerator and denominator of the reflection law (vectorised)."""
    xi0 = np.asarray(xi0, dtype=complex)
    xi1 = np.asarray(xi1, dtype=complex)
    m = (xi0 * np.conj(xi0)).real
    numerator = 2.0 * xi0 * np.conj(xi1) + 1.0 - m
    denominator = (1.0 - m) * np.conj(xi1) - 2.0 * np.conj(xi0)
    return numerator, denominator


def reflected_xi(xi0, xi1) -> np.ndarray:
    """Unchecked, vectorised reflection law."""
    numerator, denominator = reflection_terms(xi0, xi1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return numerator / denominator


def path_increment(xi0, xi1, r0):
    """Signed r1 - r2 at a reflection point (vectorised).

    2 (|1 + conj(xi0) xi1|^2 - |xi0 - xi1|^2) / ((1 + |xi0|^2)(1 + |xi1|^2)) * r0,
    whose magnitude is the chordal distance between incoming and outgoing
    directions times |r0|.
    """
    xi0 = np.asarray(xi0, dtype=complex)
    xi1 = np.asarray(xi1, dtype=complex)
    near = np.abs(1.0 + np.conj(xi0) * xi1) ** 2
    far = np.abs(xi0 - xi1) ** 2
    return 2.0 * (near - far) / ((1.0 + np.abs(xi0) ** 2) * (1.0 + np.abs(xi1) ** 2)) * np.asarray(r0, dtype=float)


def reflect_direction(xi0: complex, xi1: complex) -> complex:
    """Chart value of the direction xi1 reflected in a mirror with normal xi0.

    Raises:
        ChartExcluded: the reflected direction is (or is within the cap of) the south pole
    """
    numerator, denominator = (complex(v) for v in reflection_terms(complex(xi0), complex(xi1)))
    if abs(denominator) < DENOMINATOR_TOL or abs(numerator) > cap_radius() * abs(denominator):
        raise ChartExcluded("reflected direction is the excluded south pole")
    return numerator / denominator


def inverse_reflect_direction(xi0: complex, xi2: complex) -> complex:
    """Incoming direction that the mirror with normal xi0 sends to xi2.

    The reflection law is an involution, so this is the same map applied to xi2.
    """
    return reflect_direction(xi0, xi2)


def reflect_line(frame: SurfaceFrame, incoming: OrientedLine, r1: float) -> ReflectionEvent:
    """Reflect an incoming line at the frame's foot point.

    Args:
        frame: normal congruence sample (xi0, eta0, r0) at the reflection point
        incoming: the incoming oriented line
        r1: affine parameter of the foot point on the incoming line

    Raises:
        NotIncident: the incoming line misses the foot point at r1
        ChartExcluded: the outgoing direction is excluded
    """
    xi0, eta0, r0 = frame.xi0, frame.eta0, frame.r0
    xi1 = check_chart(incoming.xi)
    z, t = incidence_point(xi1, incoming.eta, r1)
    gap = abs(complex(z) - frame.foot.z) + abs(float(t) - frame.foot.t)
    scale = max(1.0, abs(frame.foot.z), abs(frame.foot.t))
    if gap > get_settings().incidence_tol * scale:
        raise NotIncident(f"incoming line is {gap:.3g} away from the reflection point at r1={r1:.6g}")

    xi2 = reflect_direction(xi0, xi1)
    denominator2 = complex(reflection_terms(xi0, xi1)[1]) ** 2
    a = xi0.conjugate() - xi1.conjugate()
    b = 1.0 + xi0 * xi1.conjugate()
    eta2 = (a ** 2 * eta0 - b ** 2 * eta0.conjugate() + a * b * (1.0 + abs(xi0) ** 2) * r0) / denominator2
    r2 = r1 - float(path_increment(xi0, xi1, r0))

    outgoing = OrientedLine(xi=xi2, eta=eta2)
    return ReflectionEvent(incoming=incoming, outgoing=outgoing, frame=frame, r1=r1, r2=r2)


def reflect_at(frame: SurfaceFrame, xi1: complex) -> ReflectionEvent:
    """Reflect the line with direction xi1 that passes through the frame's foot point."""
    lp: LinePointParam = line_through(xi1, frame.foot)
    return reflect_line(frame, lp.line, lp.r)


def mirror_normal(xi1: complex, xi2: complex) -> Union[complex, AtInfinity]:
    """Normal direction xi0 of a mirror that reflects xi1 into xi2.

    Either orientation of the normal may come back; the reflection law does
    not distinguish them. AT_INFINITY means the normal is vertical with the
    south-pointing representative selected.

    Raises:
        DegenerateInput: xi1 == xi2 leaves the normal undetermined
    """
    xi1, xi2 = complex(xi1), complex(xi2)
    if abs(xi1 - xi2) < 1e-12:
        raise DegenerateInput("incoming and outgoing directions coincide")
    m1, m2 = abs(xi1) ** 2, abs(xi2) ** 2
    numerator = m1 - m2 + abs(xi1 - xi2) * np.sqrt((1.0 + m1) * (1.0 + m2))
    denominator = xi1.conjugate() * (1.0 + m2) - xi2.conjugate() * (1.0 + m1)
    if abs(denominator) <= DENOMINATOR_TOL * max(1.0, abs(numerator)):
        return AT_INFINITY
    return complex(numerator / denominator)
