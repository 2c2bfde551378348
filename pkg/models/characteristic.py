"""Queries and results for the angle, mixed and point characteristic functions."""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict

from models.frames import SurfaceFrame
from models.lines import Point3

CharacteristicName = Literal["T", "W", "V"]


class CharQueryT(BaseModel):
    """Angle characteristic query: incoming and outgoing directions."""

    model_config = ConfigDict(frozen=True)

    xi1: complex
    xi2: complex


class CharQueryW(BaseModel):
    """Mixed characteristic query: source point and outgoing direction."""

    model_config = ConfigDict(frozen=True)

    p1: Point3
    xi2: complex


class CharQueryV(BaseModel):
    """Point characteristic query: source and target points."""

    model_config = ConfigDict(frozen=True)

    p1: Point3
    p2: Point3


class DomainRoot(BaseModel):
    """A certified solution (mu, xi1) of a domain equation system."""

    model_config = ConfigDict(frozen=True)

    mu: complex
    xi1: complex
    frame: SurfaceFrame
    residual: float


class CharacteristicResult(BaseModel):
    """One branch of T, W or V with the unknowns it was computed from.

    ``value`` is the unsigned distance along the ray pair; the signed pieces
    (s1, s2, r1, r2) are kept so callers can apply their own sign convention.
    """

    model_config = ConfigDict(frozen=True)

    function: CharacteristicName
    value: float
    mu: complex
    xi0: complex
    xi1: complex
    xi2: complex
    s1: Optional[float] = None
    s2: Optional[float] = None
    r1: float
    r2: float
    residual: float
    foot: Point3
