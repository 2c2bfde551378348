"""
Multistart Newton root finding for small real systems (n = 2 or 4).

Systems are vectorised: a residual map takes an (m, n) array of iterates and
returns an (m, n) array of (already normalised) residuals, so a whole seed grid
advances together. Jacobians come from central differences; steps use the
pseudo-inverse so that non-isolated root sets still converge to a nearby root.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from exceptions import SolverFailure
from settings import get_settings

logger = logging.getLogger(__name__)

ResidualMap = Callable[[np.ndarray], np.ndarray]

# Step halvings tried before an iterate is declared stalled.
MAX_BACKTRACK = 8


@dataclass(frozen=True)
class Root:
    """A converged iterate and its residual (max-norm)."""

    x: np.ndarray
    residual: float


def _residual_norm(values: np.ndarray) -> np.ndarray:
    norms = np.max(np.abs(values), axis=-1)
    return np.where(np.isfinite(norms), norms, np.inf)


def _evaluate(system: ResidualMap, x: np.ndarray) -> np.ndarray:
    # iterates far from a root may overflow; those residuals are screened by _residual_norm
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return system(x)


def _jacobian(system: ResidualMap, x: np.ndarray, step: float) -> np.ndarray:
    m, n = x.shape
    jac = np.empty((m, n, n))
    for j in range(n):
        h = step * np.maximum(1.0, np.abs(x[:, j]))
        offset = np.zeros_like(x)
        offset[:, j] = h
        forward = _evaluate(system, x + offset)
        backward = _evaluate(system, x - offset)
        with np.errstate(over="ignore", invalid="ignore"):
            jac[:, :, j] = (forward - backward) / (2.0 * h)[:, None]
    return jac


def newton_batch(system: ResidualMap, seeds: np.ndarray, tol: Optional[float] = None,
                 max_iter: Optional[int] = None, jacobian_step: Optional[float] = None):
    """Run damped Newton from every seed at once.

    Args:
        system: vectorised residual map R^n -> R^n
        seeds: (m, n) starting points
        tol: stop an iterate once its residual drops below this
        max_iter: iteration cap per seed
        jacobian_step: relative finite-difference step

    Returns:
        (iterates, residuals) after the final iteration
    """
    settings = get_settings()
    tol = settings.newton_tol if tol is None else tol
    max_iter = settings.max_iter if max_iter is None else max_iter
    step = settings.jacobian_step if jacobian_step is None else jacobian_step

    x = np.array(seeds, dtype=float, ndmin=2)
    values = _evaluate(system, x)
    residual = _residual_norm(values)
    active = np.isfinite(residual) & (residual >= tol)

    for iteration in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        xa, fa, ra = x[idx], values[idx], residual[idx]
        jac = _jacobian(system, xa, step)
        jac = np.where(np.isfinite(jac), jac, 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            delta = -np.einsum("mij,mj->mi", np.linalg.pinv(jac), fa)

        alpha = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        trial_x, trial_f, trial_r = xa.copy(), fa.copy(), ra.copy()
        for _ in range(MAX_BACKTRACK):
            pending = ~accepted
            if not pending.any():
                break
            candidate = xa[pending] + alpha[pending, None] * delta[pending]
            cf = _evaluate(system, candidate)
            cr = _residual_norm(cf)
            better = cr < ra[pending]
            where = np.flatnonzero(pending)[better]
            trial_x[where], trial_f[where], trial_r[where] = candidate[better], cf[better], cr[better]
            accepted[where] = True
            alpha[pending] *= 0.5

        x[idx], values[idx], residual[idx] = trial_x, trial_f, trial_r
        # stalled iterates stop; converged ones too
        still = accepted & (trial_r >= tol)
        active[idx] = still

    return x, residual


def newton_solve(system: ResidualMap, seed, tol: Optional[float] = None,
                 max_iter: Optional[int] = None) -> np.ndarray:
    """Newton's method from a single seed.

    Raises:
        SolverFailure: residual still above the acceptance tolerance at the end
    """
    seed = np.atleast_1d(np.asarray(seed, dtype=float))
    n = seed.shape[0]

    def batched(x: np.ndarray) -> np.ndarray:
        return np.atleast_2d(system(x.reshape(-1, n)))

    x, residual = newton_batch(batched, seed[None, :], tol=tol, max_iter=max_iter)
    accept = max(get_settings().accept_tol, tol or 0.0)
    if not residual[0] < accept:
        raise SolverFailure(f"Newton stalled with residual {residual[0]:.3g}")
    return x[0]


def deduplicate(roots: List[Root], radius: float) -> List[Root]:
    """Merge roots closer than radius, keeping the smaller residual; sorted lexicographically."""
    kept: List[Root] = []
    for root in sorted(roots, key=lambda r: r.residual):
        if all(np.max(np.abs(root.x - other.x)) >= radius for other in kept):
            kept.append(root)
    kept.sort(key=lambda r: tuple(r.x))
    return kept


def multistart(system: ResidualMap, seeds: np.ndarray, *, admissible: Optional[Callable[[np.ndarray], np.ndarray]] = None,
               accept_tol: Optional[float] = None, dedup_radius: Optional[float] = None,
               miss_threshold: Optional[float] = None) -> List[Root]:
    """Polish every seed with Newton and return the distinct admissible roots.

    An empty list means every seed ended far from a root (residual at or above
    miss_threshold) or converged outside the admissible set.

    Raises:
        SolverFailure: nothing converged but some iterate stalled close to zero
    """
    settings = get_settings()
    accept_tol = settings.accept_tol if accept_tol is None else accept_tol
    dedup_radius = settings.dedup_radius if dedup_radius is None else dedup_radius
    miss_threshold = settings.miss_threshold if miss_threshold is None else miss_threshold

    x, residual = newton_batch(system, seeds)
    converged = residual < accept_tol
    inside = admissible(x) if admissible is not None else np.ones(len(x), dtype=bool)

    roots = [Root(x=x[i], residual=float(residual[i])) for i in np.flatnonzero(converged & inside)]
    roots = deduplicate(roots, dedup_radius)
    logger.debug(f"multistart: {len(seeds)} seeds, {int(converged.sum())} converged, {len(roots)} distinct roots")

    if not roots:
        stalled = (~converged) & (residual < miss_threshold)
        if stalled.any():
            best = float(residual[stalled].min())
            raise SolverFailure(
                f"{int(stalled.sum())} seeds stalled near a root (best residual {best:.3g}) without converging"
            )
    return roots
