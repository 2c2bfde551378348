"""Validated scene description: one mirror surface, a list of queries and run options."""
import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vector3 = Tuple[float, float, float]

QueryKind = Literal["convert", "reflect", "domain", "char"]


def _numbers(value, count: int):
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",")]
        if len(parts) != count or not all(parts):
            raise ValueError(f"expected {count} comma-separated numbers")
        numbers = tuple(float(p) for p in parts)
        if not all(math.isfinite(x) for x in numbers):
            raise ValueError("values must be finite")
        return numbers
    return value


def _complex(value):
    if isinstance(value, str):
        re, im = _numbers(value, 2)
        return complex(re, im)
    return value


class SurfaceSpec(BaseModel):
    """The ``[surface]`` section."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    kind: Literal["plane", "sphere", "ellipsoid", "paraboloid"]
    orientation: int = 1
    domain: Tuple[float, float, float, float]
    point: Optional[Vector3] = None
    normal: Optional[Vector3] = None
    center: Optional[Vector3] = None
    radius: Optional[float] = Field(default=None, gt=0)
    vertex: Optional[Vector3] = None
    axis: Optional[Vector3] = None
    focal_length: Optional[float] = Field(default=None, gt=0)
    semi_axes: Optional[Vector3] = None

    @field_validator("orientation")
    @classmethod
    def _check_orientation(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        return value

    @field_validator("domain", mode="before")
    @classmethod
    def _parse_domain(cls, value):
        return _numbers(value, 4)

    @field_validator("point", "normal", "center", "vertex", "axis", "semi_axes", mode="before")
    @classmethod
    def _parse_vector(cls, value):
        return _numbers(value, 3)

    @field_validator("normal", "axis")
    @classmethod
    def _check_direction(cls, value):
        if value is not None and not np.any(value):
            raise ValueError("direction must be non-zero")
        return value

    @model_validator(mode="after")
    def _check_kind_fields(self):
        required = {
            "plane": ("point", "normal"),
            "sphere": ("center", "radius"),
            "ellipsoid": ("center", "semi_axes"),
            "paraboloid": ("focal_length",),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} needs {', '.join(missing)}")
        umin, umax, vmin, vmax = self.domain
        if not (umin < umax and vmin < vmax):
            raise ValueError("domain must be a non-empty rectangle umin,umax,vmin,vmax")
        if self.semi_axes is not None and min(self.semi_axes) <= 0:
            raise ValueError("semi-axes must be positive")
        return self


class QuerySpec(BaseModel):
    """A ``[query.N]`` section."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    name: str
    kind: QueryKind
    function: Optional[Literal["T", "W", "V"]] = None
    xi1: Optional[complex] = None
    xi2: Optional[complex] = None
    mu: Optional[complex] = None
    p1: Optional[Vector3] = None
    p2: Optional[Vector3] = None
    point: Optional[Vector3] = None
    direction: Optional[Vector3] = None

    @field_validator("xi1", "xi2", "mu", mode="before")
    @classmethod
    def _parse_complex(cls, value):
        return _complex(value)

    @field_validator("p1", "p2", "point", "direction", mode="before")
    @classmethod
    def _parse_vector(cls, value):
        return _numbers(value, 3)

    @model_validator(mode="after")
    def _check_inputs(self):
        if self.kind == "convert":
            required = ("direction",)
        elif self.kind == "reflect":
            required = ("mu", "xi1")
        else:
            if self.function is None:
                raise ValueError(f"{self.kind} query needs a function (T, W or V)")
            required = {"T": ("xi1", "xi2"), "W": ("p1", "xi2"), "V": ("p1", "p2")}[self.function]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} query needs {', '.join(missing)}")
        return self


class Options(BaseModel):
    """The ``[options]`` section."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    grid: Optional[int] = Field(default=None, gt=0)
    tol: Optional[float] = Field(default=None, gt=0)
    verify: bool = False


class Scene(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    surface: SurfaceSpec
    queries: List[QuerySpec] = Field(default_factory=list)
    options: Options = Field(default_factory=Options)

    def __repr__(self):
        return f"<Scene(surface={self.surface.kind}, queries={len(self.queries)})>"
