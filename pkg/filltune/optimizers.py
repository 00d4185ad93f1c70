"""
Local and global minimization on surfaces.

- local_minimize: limited-memory quasi-Newton with Armijo backtracking,
  iterates clipped to the box.
- steepest_descent_path: small downhill steps that follow the path into the
  basin the start belongs to, polished by local_minimize.
- basin_hopping: Metropolis chain over local minima.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import InvalidArgumentError
from .geometry import euclidean_distance
from .surfaces import checked_value_and_gradient

logger = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
LINE_SEARCH_SHRINK = 0.5
MAX_BACKTRACKS = 60
CURVATURE_EPS = 1e-10
# a stalled line search still counts as converged within this factor of the tolerance
STALL_FACTOR = 1e3


class MinimizerConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    gradient_tolerance: float = Field(default=1e-6, gt=0)
    max_iterations: int = Field(default=2000, ge=1)
    history_size: int = Field(default=10, ge=1)
    bound_handling: str = Field(default='clip', pattern='^clip$')


class BasinHoppingConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    n_steps: int = Field(default=200, ge=0)
    # None: 10% of the smallest bound width
    step_size: Optional[float] = Field(default=None, gt=0)
    temperature: float = Field(default=1.0, gt=0)
    n_chains: int = Field(default=4, ge=1)
    dedup_position_tol: float = Field(default=1e-3, gt=0)
    dedup_value_tol: float = Field(default=1e-6, gt=0)


@dataclass(frozen=True, eq=False)
class LocalMinimum:
    position: np.ndarray
    value: float
    gradient_norm: float
    converged: bool
    iterations: int = 0

    def to_dict(self):
        return {
            'position': self.position.tolist(),
            'value': self.value,
            'gradient_norm': self.gradient_norm,
            'converged': self.converged,
        }


def active_bounds(x, grad, bounds):
    """Coordinates sitting on a bound whose descent direction points out of the box"""
    return ((x <= bounds.lower) & (grad > 0)) | ((x >= bounds.upper) & (grad < 0))


def projected_gradient(x, grad, bounds):
    """Zero the components that push against an active bound"""
    return np.where(active_bounds(x, grad, bounds), 0.0, grad)


def gradient_tolerance(surface, cfg):
    """cfg.gradient_tolerance in units of the surface's own scale"""
    return cfg.gradient_tolerance * surface.scale


def _two_loop(grad, history):
    """L-BFGS inverse-Hessian product -H g from (s, y, rho) history"""
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(history):
        alpha = rho * (s @ q)
        alphas.append(alpha)
        q -= alpha * y
    if history:
        s, y, _ = history[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), alpha in zip(history, reversed(alphas)):
        beta = rho * (y @ q)
        q += (alpha - beta) * s
    return -q


def lbfgs_descent(surface, start, cfg, project=None, max_iterations=None):
    """
    Core quasi-Newton loop shared by local_minimize and the tangent-space
    minimization of eigenvector following. `project` maps a vector onto the
    allowed subspace; steps are clipped to the surface bounds and coordinates
    held at a bound are frozen until the gradient lets them go.

    A steepest-descent step that cannot lower the value at any length means
    the value is flat to working precision; that ends the run, and counts as
    converged when the gradient is within STALL_FACTOR of the tolerance.
    """
    bounds = surface.bounds
    project = project or (lambda v: v)
    max_iterations = max_iterations or cfg.max_iterations
    tolerance = gradient_tolerance(surface, cfg)
    x = bounds.clip(np.asarray(start, dtype=float))
    f, g = checked_value_and_gradient(surface, x)
    history = deque(maxlen=cfg.history_size)
    active = active_bounds(x, g, bounds)
    stalled = False
    iterations = 0

    for iterations in range(max_iterations + 1):
        now_active = active_bounds(x, g, bounds)
        if not np.array_equal(now_active, active):
            # curvature pairs were collected on another face
            history.clear()
            active = now_active
        pg = project(np.where(active, 0.0, g))
        gnorm = float(np.linalg.norm(pg))
        if gnorm < tolerance or iterations == max_iterations:
            break

        direction = project(np.where(active, 0.0, _two_loop(pg, history)))
        if direction @ pg >= 0:
            history.clear()
            direction = -pg

        step = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            x_new = bounds.clip(x + step * direction)
            f_new, g_new = checked_value_and_gradient(surface, x_new)
            # clipping can turn a descent step into a non-descent displacement
            if f_new <= f + ARMIJO_C1 * min(0.0, g @ (x_new - x)):
                accepted = True
                break
            step *= LINE_SEARCH_SHRINK
        if not accepted or np.array_equal(x_new, x):
            if history:
                history.clear()
                continue
            stalled = True
            break

        s = np.where(active, 0.0, x_new - x)
        y = project(np.where(active, 0.0, g_new - g))
        if s @ y > CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(y):
            history.append((s, y, 1.0 / (s @ y)))
        x, f, g = x_new, f_new, g_new

    pg = project(projected_gradient(x, g, bounds))
    gnorm = float(np.linalg.norm(pg))
    converged = gnorm < tolerance
    if stalled:
        logger.debug('line search stalled at %s with gradient norm %.3g', x.tolist(), gnorm)
        converged = converged or gnorm < STALL_FACTOR * tolerance
    return LocalMinimum(
        position=x, value=f, gradient_norm=gnorm, converged=converged, iterations=iterations,
    )


def local_minimize(surface, start, cfg=None):
    cfg = cfg or MinimizerConfig()
    return lbfgs_descent(surface, start, cfg)


def steepest_descent_path(surface, start, step=1e-3, cfg=None):
    """
    Fixed-length downhill steps along -g/|g|; a step that raises the value is
    retried at half length. Ends when the gradient is below tolerance or the
    step collapses, then hands over to local_minimize.
    """
    if step <= 0:
        raise InvalidArgumentError(f'step must be positive, got {step}')
    cfg = cfg or MinimizerConfig()
    bounds = surface.bounds
    x = bounds.clip(np.asarray(start, dtype=float))
    f, g = checked_value_and_gradient(surface, x)
    tolerance = gradient_tolerance(surface, cfg)
    length = step
    max_steps = 10 * cfg.max_iterations

    for _ in range(max_steps):
        pg = projected_gradient(x, g, bounds)
        gnorm = np.linalg.norm(pg)
        if gnorm < tolerance or length < 1e-14:
            break
        x_new = bounds.clip(x - length * pg / gnorm)
        f_new, g_new = checked_value_and_gradient(surface, x_new)
        if f_new > f:
            length *= 0.5
            continue
        x, f, g = x_new, f_new, g_new
        length = min(step, 2.0 * length)

    return local_minimize(surface, x, cfg)


# ============================================
# BASIN-HOPPING
# ============================================
def dedup_minima(minima, position_tol=1e-3, value_tol=1e-6):
    """Keep the first of every group within both tolerances"""
    kept = []
    for candidate in minima:
        duplicate = any(
            euclidean_distance(candidate.position, other.position) < position_tol
            and abs(candidate.value - other.value) < value_tol
            for other in kept
        )
        if not duplicate:
            kept.append(candidate)
    return kept


def sort_minima(minima):
    return sorted(minima, key=lambda m: (m.value, tuple(m.position)))


def basin_hopping(surface, bounds, n_steps, step_size=None, temperature=1.0, rng=None,
                  cfg=None, start=None, position_tol=1e-3, value_tol=1e-6):
    """
    Perturb the current minimum uniformly in [-step_size, step_size] per
    coordinate, minimize, and accept with probability exp(-delta / T).
    Every minimum visited (accepted or not) is recorded; the result is the
    distinct converged ones, ascending by value.
    """
    if n_steps < 0:
        raise InvalidArgumentError(f'n_steps must be non-negative, got {n_steps}')
    if temperature <= 0:
        raise InvalidArgumentError(f'temperature must be positive, got {temperature}')
    cfg = cfg or MinimizerConfig()
    gen = rng.generator
    if step_size is None:
        step_size = 0.1 * float(np.min(bounds.widths))
    if start is None:
        start = gen.uniform(bounds.lower, bounds.upper)

    current = local_minimize(surface, bounds.clip(np.asarray(start, dtype=float)), cfg)
    visited = [current]
    best = current.value

    for step in range(n_steps):
        trial = bounds.clip(current.position + gen.uniform(-step_size, step_size, bounds.dimension))
        candidate = local_minimize(surface, trial, cfg)
        visited.append(candidate)
        delta = candidate.value - current.value
        if delta <= 0 or gen.random() < math.exp(-delta / temperature):
            current = candidate
        if candidate.value < best:
            best = candidate.value
            logger.debug('basin-hopping step %d: new best %.10g', step, best)

    converged = [m for m in visited if m.converged]
    if len(converged) < len(visited):
        logger.debug('basin-hopping dropped %d unconverged minima', len(visited) - len(converged))
    return sort_minima(dedup_minima(converged, position_tol, value_tol))


def basin_hopping_chains(surface, bounds, bh_config, rng, cfg=None, starts=None):
    """Independent chains from labeled child streams, merged with the same dedup rule"""
    results = []
    for chain in range(bh_config.n_chains):
        chain_rng = rng.child(f'chain-{chain}')
        start = None if starts is None else starts[chain % len(starts)]
        results.extend(basin_hopping(
            surface, bounds, bh_config.n_steps, bh_config.step_size, bh_config.temperature,
            chain_rng, cfg, start=start,
            position_tol=bh_config.dedup_position_tol, value_tol=bh_config.dedup_value_tol,
        ))
    merged = dedup_minima(sort_minima(results), bh_config.dedup_position_tol, bh_config.dedup_value_tol)
    return sort_minima(merged)
