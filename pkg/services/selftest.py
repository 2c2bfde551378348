"""
Built-in fixture table for ``heron.py selftest``.

Each fixture returns an error measure that must stay below its tolerance.
"""
import logging
import math
import sys
from dataclasses import dataclass
from typing import Callable, List, TextIO, Type

import numpy as np

from exceptions import ChartExcluded, DegenerateInput, HeronError
from models.characteristic import CharQueryT, CharQueryV, CharQueryW
from models.lines import Point3
from services import oracle
from services.characteristics import char_T, char_V, char_W, domain_T
from services.line_space import dir_to_xi, xi_to_dir
from services.reflection import reflect_direction
from services.solver import newton_solve
from services.surfaces import Ellipsoid, Paraboloid, ParameterDomain, Plane, Sphere, integrability_residual

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Fixture:
    name: str
    error: Callable[[], float]
    tol: float


def _raises(exc: Type[Exception], fn: Callable[[], object]) -> float:
    try:
        fn()
    except exc:
        return 0.0
    return math.inf


def _worst(values: List[float], expected: float) -> float:
    if not values:
        return math.inf
    return max(abs(v - expected) for v in values)


def _plane() -> Plane:
    return Plane((0, 0, 0), (0, 0, 1), ParameterDomain.square(4.0))


def _unit_sphere() -> Sphere:
    return Sphere((0, 0, 0), 1.0, ParameterDomain.square(2.0))


def _focal_ellipsoid() -> Ellipsoid:
    return Ellipsoid((0, 0, 0), (2.0, math.sqrt(3.0), math.sqrt(3.0)), ParameterDomain.square(2.0))


def _sphere_retroreflection() -> float:
    p = Point3.from_xyz(2, 0, 0)
    results = char_V(_unit_sphere(), CharQueryV(p1=p, p2=p))
    near = [r for r in results if abs(r.foot.z - 1) < 1e-8 and abs(r.foot.t) < 1e-8]
    return _worst([r.value for r in near], 2.0)


def _ellipsoid_focal() -> float:
    results = char_V(_focal_ellipsoid(), CharQueryV(p1=Point3.from_xyz(1, 0, 0), p2=Point3.from_xyz(-1, 0, 0)))
    if len(results) < 8:
        return math.inf
    return _worst([r.value for r in results], 4.0)


def _oracle_plane_V() -> float:
    return _worst(oracle.oracle_V(_plane(), (0, 0, 1), (2, 0, 1)), 2.0 * SQRT2)


FIXTURES = [
    Fixture("chart: 45 degree downward direction",
            lambda: abs(dir_to_xi((1 / SQRT2, 0, -1 / SQRT2)) - (SQRT2 + 1)), 1e-12),
    Fixture("chart: south pole is excluded", lambda: _raises(ChartExcluded, lambda: dir_to_xi((0, 0, -1))), 0.5),
    Fixture("chart: inverse of xi = 1",
            lambda: float(np.max(np.abs(xi_to_dir(1.0) - np.array([1.0, 0.0, 0.0])))), 1e-12),
    Fixture("surfaces: plane frame eta0 = mu / 2",
            lambda: abs(_plane().frame_at(1 + 1j).eta0 - (0.5 + 0.5j)), 1e-12),
    Fixture("surfaces: unit sphere frame at mu = 1",
            lambda: abs(_unit_sphere().frame_at(1.0).r0 - 1.0) + abs(_unit_sphere().frame_at(1.0).eta0), 1e-12),
    Fixture("surfaces: paraboloid vertex frame",
            lambda: abs(Paraboloid(1.0, ParameterDomain.square(0.5)).frame_at(0j).r0), 1e-12),
    Fixture("surfaces: sphere congruence is normal",
            lambda: abs(integrability_residual(_unit_sphere(), 0.3 + 0.2j)), 1e-6),
    Fixture("reflection: plane mirror xi2 = 1 / conj(xi1)",
            lambda: abs(reflect_direction(0j, SQRT2 + 1) - (SQRT2 - 1)), 1e-12),
    Fixture("reflection: oblique mirror sends 1 to i",
            lambda: abs(reflect_direction((1 - 1j) / SQRT2, 1.0) - 1j), 1e-12),
    Fixture("reflection: equal directions are degenerate",
            lambda: _raises(DegenerateInput, lambda: domain_T(_plane(), CharQueryT(xi1=1.0, xi2=1.0))), 0.5),
    Fixture("solver: Newton on x^2 - 2",
            lambda: abs(newton_solve(lambda x: x ** 2 - 2.0, [1.0])[0] - SQRT2), 1e-12),
    Fixture("T: unit sphere at 45 degrees",
            lambda: _worst([r.value for r in char_T(_unit_sphere(), CharQueryT(xi1=-(SQRT2 + 1), xi2=SQRT2 + 1))],
                           SQRT2), 1e-9),
    Fixture("W: plane mirror",
            lambda: _worst([r.value for r in char_W(_plane(), CharQueryW(p1=Point3.from_xyz(0, 0, 1),
                                                                           xi2=SQRT2 - 1))], 1 / SQRT2), 1e-10),
    Fixture("V: plane mirror",
            lambda: _worst([r.value for r in char_V(_plane(), CharQueryV(p1=Point3.from_xyz(0, 0, 1),
                                                                           p2=Point3.from_xyz(2, 0, 1)))],
                           2.0 * SQRT2), 1e-10),
    Fixture("V: sphere retroreflection", _sphere_retroreflection, 1e-9),
    Fixture("V: ellipsoid focal property", _ellipsoid_focal, 1e-7),
    Fixture("oracle: plane mirror image distance", _oracle_plane_V, 1e-10),
]


def run_selftest(stream: TextIO = sys.stderr) -> int:
    """Evaluate every fixture, print PASS/FAIL lines and return the exit code."""
    failures = 0
    for fixture in FIXTURES:
        try:
            error = float(fixture.error())
        except HeronError as e:
            logger.warning(f"Fixture '{fixture.name}' raised {type(e).__name__}: {e}")
            error = math.inf
        passed = error < fixture.tol
        failures += not passed
        verdict = "PASS" if passed else "FAIL"
        stream.write(f"{verdict} {fixture.name} (error {error:.3g}, tol {fixture.tol:.0e})\n")
    stream.write(f"{len(FIXTURES) - failures}/{len(FIXTURES)} fixtures passed\n")
    return 0 if failures == 0 else 1
