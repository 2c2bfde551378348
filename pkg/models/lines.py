"""Value types for points of R^3 and oriented lines in chart coordinates."""
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


def _finite_complex(value: complex) -> complex:
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError("complex coordinate must be finite")
    return value


class Point3(BaseModel):
    """A point of R^3 split as z = x1 + i x2, t = x3."""

    model_config = ConfigDict(frozen=True)

    z: complex
    t: float

    @field_validator("z")
    @classmethod
    def _check_z(cls, value: complex) -> complex:
        return _finite_complex(value)

    @field_validator("t")
    @classmethod
    def _check_t(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("t must be finite")
        return value

    @classmethod
    def from_xyz(cls, x: float, y: float, t: float) -> "Point3":
        return cls(z=complex(x, y), t=t)

    @classmethod
    def from_vector(cls, vector) -> "Point3":
        x, y, t = (float(c) for c in vector)
        return cls(z=complex(x, y), t=t)

    def as_vector(self) -> np.ndarray:
        return np.array([self.z.real, self.z.imag, self.t])

    def __repr__(self):
        return f"<Point3(z={self.z:.6g}, t={self.t:.6g})>"


class OrientedLine(BaseModel):
    """An oriented line (xi, eta) in the chart that omits the south direction.

    xi fixes the direction, eta the perpendicular displacement from the origin
    (length units).
    """

    model_config = ConfigDict(frozen=True)

    xi: complex
    eta: complex

    @field_validator("xi", "eta")
    @classmethod
    def _check_finite(cls, value: complex) -> complex:
        return _finite_complex(value)

    def __repr__(self):
        return f"<OrientedLine(xi={self.xi:.6g}, eta={self.eta:.6g})>"


class LinePointParam(BaseModel):
    """A line together with an affine parameter along it."""

    model_config = ConfigDict(frozen=True)

    line: OrientedLine
    r: float


class AtInfinity:
    """The chart point at infinity, i.e. the excluded south direction (0, 0, -1)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "AT_INFINITY"

    def __reduce__(self):
        return (AtInfinity, ())


AT_INFINITY = AtInfinity()
