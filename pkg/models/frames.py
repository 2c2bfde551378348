"""Samples of a surface's normal congruence and reflection events."""
from pydantic import BaseModel, ConfigDict

from models.lines import OrientedLine, Point3


class SurfaceFrame(BaseModel):
    """One normal line of a surface: (xi0, eta0) plus the foot point at r0."""

    model_config = ConfigDict(frozen=True)

    mu: complex
    xi0: complex
    eta0: complex
    r0: float
    foot: Point3

    @property
    def normal_line(self) -> OrientedLine:
        return OrientedLine(xi=self.xi0, eta=self.eta0)

    def __repr__(self):
        return f"<SurfaceFrame(mu={self.mu:.6g}, xi0={self.xi0:.6g}, r0={self.r0:.6g})>"


class ReflectionEvent(BaseModel):
    """An incoming line, its reflection and the reflection point parameters."""

    model_config = ConfigDict(frozen=True)

    incoming: OrientedLine
    outgoing: OrientedLine
    frame: SurfaceFrame
    r1: float
    r2: float
