"""
Scene file parsing.

Format (UTF-8, line oriented)::

    # comment
    [surface]
    kind = plane
    point = 0,0,0
    normal = 0,0,1
    domain = -4,4,-4,4

    [query.1]
    kind = char
    function = V
    p1 = 0,0,1
    p2 = 2,0,1

    [options]
    verify = true

Complex numbers are ``re,im`` pairs and points ``x,y,z`` triples.
"""
import logging
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from exceptions import DegenerateInput, ParseError
from models.scene import Options, QuerySpec, Scene, SurfaceSpec
from services.surfaces import Ellipsoid, MirrorSurface, Paraboloid, ParameterDomain, Plane, Sphere

logger = logging.getLogger(__name__)

Section = Tuple[int, Dict[str, Tuple[str, int]]]


def _sections(text: str) -> List[Tuple[str, Section]]:
    sections: List[Tuple[str, Section]] = []
    seen = set()
    current: Optional[Dict[str, Tuple[str, int]]] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", line=number)
            name = line[1:-1].strip()
            if name in seen:
                raise ParseError(f"duplicate section [{name}]", line=number)
            if name not in ("surface", "options") and not (name.startswith("query.") and len(name) > 6):
                raise ParseError(f"unknown section [{name}]", line=number)
            seen.add(name)
            current = {}
            sections.append((name, (number, current)))
            continue
        if current is None:
            raise ParseError("key outside of any section", line=number)
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", line=number)
        if key in current:
            raise ParseError("duplicate key", line=number, field=key)
        current[key] = (value, number)
    return sections


def _validate(model, section: Section, extra: Optional[dict] = None):
    header, fields = section
    data = {key: value for key, (value, _) in fields.items()}
    data.update(extra or {})
    try:
        return model.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else None
        line = fields[field][1] if field in fields else header
        raise ParseError(error["msg"], line=line, field=field) from e


def parse_scene(text: str) -> Scene:
    """Parse and validate a scene document.

    Raises:
        ParseError: malformed syntax, unknown sections or keys, invalid values
    """
    surface = None
    options = Options()
    queries: List[QuerySpec] = []
    for name, section in _sections(text):
        if name == "surface":
            surface = _validate(SurfaceSpec, section)
        elif name == "options":
            options = _validate(Options, section)
        else:
            if "name" in section[1]:
                raise ParseError("unknown key", line=section[1]["name"][1], field="name")
            queries.append(_validate(QuerySpec, section, {"name": name.split(".", 1)[1]}))
    if surface is None:
        raise ParseError("missing [surface] section")
    scene = Scene(surface=surface, queries=queries, options=options)
    logger.debug(f"Parsed {scene!r}")
    return scene


def build_surface(spec: SurfaceSpec) -> MirrorSurface:
    """Instantiate the catalog surface described by a ``[surface]`` section.

    Raises:
        ParseError: the description is geometrically degenerate
    """
    umin, umax, vmin, vmax = spec.domain
    domain = ParameterDomain(umin=umin, umax=umax, vmin=vmin, vmax=vmax)
    try:
        if spec.kind == "plane":
            return Plane(spec.point, spec.normal, domain, spec.orientation)
        if spec.kind == "sphere":
            return Sphere(spec.center, spec.radius, domain, spec.orientation)
        if spec.kind == "ellipsoid":
            return Ellipsoid(spec.center, spec.semi_axes, domain, spec.orientation)
        return Paraboloid(spec.focal_length, domain, axis=spec.axis or (0.0, 0.0, 1.0),
                          vertex=spec.vertex or (0.0, 0.0, 0.0), orientation=spec.orientation)
    except DegenerateInput as e:
        raise ParseError(str(e), field="kind") from e
