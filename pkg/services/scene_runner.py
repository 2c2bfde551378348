"""
Scene execution: evaluate each query and write one CSV row per result.

Library errors become per-query error rows; the batch always runs to the end.
"""
import csv
import logging
from typing import Dict, List, Optional, TextIO

import numpy as np
from pydantic import ValidationError

from exceptions import DegenerateInput, HeronError, SolverFailure
from models.characteristic import CharQueryT, CharQueryV, CharQueryW, CharacteristicResult
from models.lines import Point3
from models.scene import QuerySpec, Scene
from services import oracle
from services.characteristics import char_T, char_V, char_W, domain_T, domain_V, domain_W
from services.line_space import dir_to_xi, eta_r_of_point, xi_to_dir
from services.reflection import reflect_at, reflect_direction
from services.scene_parser import build_surface
from settings import Settings, get_settings

logger = logging.getLogger(__name__)

COLUMNS = ["query", "function", "status", "value", "mu", "xi0", "xi1", "xi2", "eta1", "eta2",
           "s1", "s2", "r1", "r2", "residual", "oracle", "delta"]

EMPTY_DOMAIN = "empty-domain"


def format_real(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{float(value) + 0.0:.12g}"


def format_complex(value: Optional[complex]) -> str:
    if value is None:
        return ""
    value = complex(value)
    return f"{value.real + 0.0:.12g}{value.imag + 0.0:+.12g}j"


def _point(vector) -> Point3:
    return Point3.from_vector(vector)


class SceneRunner:
    """Runs every query of a scene and streams CSV rows.

    Args:
        scene: validated scene
        out: text stream for the CSV table
        settings: run settings (scene options and CLI flags already merged in)
        verify: compare characteristic values against the vector oracle
    """

    def __init__(self, scene: Scene, out: TextIO, settings: Optional[Settings] = None,
                 verify: Optional[bool] = None):
        self.scene = scene
        self.settings = settings or get_settings()
        self.verify = scene.options.verify if verify is None else verify
        self.surface = build_surface(scene.surface)
        self.writer = csv.writer(out, lineterminator="\n")
        self.solver_failures = 0
        self.error_rows = 0

    def run(self) -> int:
        """Evaluate all queries; exit code 0 unless a solver failure occurred."""
        self.writer.writerow(COLUMNS)
        for query in self.scene.queries:
            try:
                rows = self._evaluate(query)
            except HeronError as e:
                if isinstance(e, SolverFailure):
                    self.solver_failures += 1
                self.error_rows += 1
                logger.warning(f"Query {query.name} failed: {e}")
                rows = [self._row(query, status=e.status)]
            except ValidationError as e:
                self.error_rows += 1
                logger.warning(f"Query {query.name} produced an invalid value: {e.errors()[0]['msg']}")
                rows = [self._row(query, status=DegenerateInput.status)]
            for row in rows:
                self.writer.writerow([row.get(column, "") for column in COLUMNS])
        logger.info(f"Ran {len(self.scene.queries)} queries: {self.error_rows} error rows, "
                    f"{self.solver_failures} solver failures")
        return 1 if self.solver_failures else 0

    # --- per-kind evaluation ------------------------------------------------------

    def _row(self, query: QuerySpec, status: str = "ok", **cells) -> Dict[str, str]:
        row = {"query": query.name, "function": query.function or query.kind, "status": status}
        row.update(cells)
        return row

    def _evaluate(self, query: QuerySpec) -> List[Dict[str, str]]:
        if query.kind == "convert":
            return self._convert(query)
        if query.kind == "reflect":
            return self._reflect(query)
        if query.kind == "domain":
            return self._domain(query)
        return self._characteristic(query)

    def _convert(self, query: QuerySpec):
        xi = dir_to_xi(query.direction)
        cells = {"xi1": format_complex(xi)}
        if query.point is not None:
            eta, r = eta_r_of_point(xi, _point(query.point))
            cells.update(eta1=format_complex(eta), r1=format_real(r))
        return [self._row(query, **cells)]

    def _reflect(self, query: QuerySpec):
        frame = self.surface.frame_at(query.mu)
        event = reflect_at(frame, query.xi1)
        cells = dict(
            value=format_real(abs(event.r1 - event.r2)), mu=format_complex(frame.mu),
            xi0=format_complex(frame.xi0), xi1=format_complex(event.incoming.xi),
            xi2=format_complex(event.outgoing.xi), eta1=format_complex(event.incoming.eta),
            eta2=format_complex(event.outgoing.eta), r1=format_real(event.r1), r2=format_real(event.r2),
            residual=format_real(abs(reflect_direction(frame.xi0, event.outgoing.xi) - event.incoming.xi)),
        )
        if self.verify:
            foot = frame.foot.as_vector()
            d1 = xi_to_dir(event.incoming.xi)
            d2 = oracle.reflect_vec(d1, xi_to_dir(frame.xi0))
            expected = abs(float(foot @ d1 - foot @ d2))
            delta = max(abs(expected - abs(event.r1 - event.r2)),
                        float(np.linalg.norm(d2 - xi_to_dir(event.outgoing.xi))))
            cells.update(oracle=format_real(expected), delta=format_real(delta))
        return [self._row(query, **cells)]

    def _domain(self, query: QuerySpec):
        grid, tol = self.settings.grid_size, self.settings.accept_tol
        if query.function == "T":
            frames = domain_T(self.surface, CharQueryT(xi1=query.xi1, xi2=query.xi2), grid)
            rows = [self._row(query, mu=format_complex(f.mu), xi0=format_complex(f.xi0),
                              xi1=format_complex(query.xi1), xi2=format_complex(query.xi2))
                    for f in frames]
        else:
            if query.function == "W":
                roots = domain_W(self.surface, CharQueryW(p1=_point(query.p1), xi2=query.xi2), grid, tol)
            else:
                roots = domain_V(self.surface, CharQueryV(p1=_point(query.p1), p2=_point(query.p2)), grid, tol)
            rows = [self._row(query, mu=format_complex(r.mu), xi0=format_complex(r.frame.xi0),
                              xi1=format_complex(r.xi1),
                              xi2=format_complex(reflect_direction(r.frame.xi0, r.xi1)),
                              residual=format_real(r.residual))
                    for r in roots]
        return rows or [self._row(query, status=EMPTY_DOMAIN)]

    def _characteristic(self, query: QuerySpec):
        grid, tol = self.settings.grid_size, self.settings.accept_tol
        resolution = self.settings.oracle_resolution
        if query.function == "T":
            results = char_T(self.surface, CharQueryT(xi1=query.xi1, xi2=query.xi2), grid)
            reference = (lambda: oracle.oracle_T(self.surface, xi_to_dir(query.xi1), xi_to_dir(query.xi2),
                                                 resolution))
        elif query.function == "W":
            results = char_W(self.surface, CharQueryW(p1=_point(query.p1), xi2=query.xi2), grid, tol)
            reference = lambda: oracle.oracle_W(self.surface, query.p1, xi_to_dir(query.xi2), resolution)
        else:
            results = char_V(self.surface, CharQueryV(p1=_point(query.p1), p2=_point(query.p2)), grid, tol)
            reference = lambda: oracle.oracle_V(self.surface, query.p1, query.p2, resolution)
        if not results:
            return [self._row(query, status=EMPTY_DOMAIN)]

        expected = reference() if self.verify else None
        return [self._result_row(query, result, expected) for result in results]

    def _result_row(self, query: QuerySpec, result: CharacteristicResult, expected: Optional[List[float]]):
        cells = dict(
            value=format_real(result.value), mu=format_complex(result.mu), xi0=format_complex(result.xi0),
            xi1=format_complex(result.xi1), xi2=format_complex(result.xi2), s1=format_real(result.s1),
            s2=format_real(result.s2), r1=format_real(result.r1), r2=format_real(result.r2),
            residual=format_real(result.residual),
        )
        if expected:
            nearest = min(expected, key=lambda v: abs(v - result.value))
            cells.update(oracle=format_real(nearest), delta=format_real(abs(nearest - result.value)))
        return self._row(query, **cells)


def run_scene(scene: Scene, out: TextIO, settings: Optional[Settings] = None,
              verify: Optional[bool] = None) -> int:
    """Convenience wrapper around SceneRunner.run()."""
    return SceneRunner(scene, out, settings, verify).run()
