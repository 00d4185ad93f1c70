"""
Transition-state search: nudged elastic band candidates, hybrid eigenvector
following refinement, and steepest-descent connection to the two minima.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from .exceptions import InvalidArgumentError, NonConvergenceError, NotASaddleError
from .geometry import as_point
from .optimizers import MinimizerConfig, gradient_tolerance, lbfgs_descent, steepest_descent_path
from .surfaces import checked_value_and_gradient, fd_hessian

logger = logging.getLogger(__name__)


class NebConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    n_images: int = Field(default=11, ge=3)
    spring_constant: float = Field(default=10.0, gt=0)
    max_force_calls: int = Field(default=1000, ge=1)
    force_tolerance: float = Field(default=1e-3, gt=0)
    climbing_image: bool = True
    step_size: float = Field(default=0.01, gt=0)


@dataclass(frozen=True, eq=False)
class TransitionState:
    position: np.ndarray
    value: float
    smallest_eigenvalue: float
    downhill_eigenvector: np.ndarray
    gradient_norm: float


def _unit(vector):
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else vector


def _sign_convention(vector):
    """Largest-magnitude component positive"""
    return vector if vector[np.argmax(np.abs(vector))] >= 0 else -vector


# ============================================
# NUDGED ELASTIC BAND
# ============================================
def _tangent(chain, values, i):
    """Energy-weighted upwind tangent of image i"""
    forward = chain[i + 1] - chain[i]
    backward = chain[i] - chain[i - 1]
    v_prev, v, v_next = values[i - 1], values[i], values[i + 1]
    if v_next > v > v_prev:
        tangent = forward
    elif v_next < v < v_prev:
        tangent = backward
    else:
        d_max = max(abs(v_next - v), abs(v_prev - v))
        d_min = min(abs(v_next - v), abs(v_prev - v))
        if v_next > v_prev:
            tangent = forward * d_max + backward * d_min
        else:
            tangent = forward * d_min + backward * d_max
    if np.linalg.norm(tangent) == 0:
        tangent = chain[i + 1] - chain[i - 1]
    return _unit(tangent)


def _interior_maxima(values):
    maxima = []
    for i in range(1, len(values) - 1):
        margin = 1e-12 * (1.0 + abs(values[i]))
        if values[i] > values[i - 1] + margin and values[i] > values[i + 1] + margin:
            maxima.append(i)
    return maxima


def relax_band(surface, a, b, cfg):
    """Relax a linear chain of images between a and b; returns (chain, values)"""
    bounds = surface.bounds
    chain = np.linspace(a, b, cfg.n_images)
    spacing = np.linalg.norm(b - a) / (cfg.n_images - 1)
    max_move = 0.2 * spacing
    interior = range(1, cfg.n_images - 1)
    values = np.array([checked_value_and_gradient(surface, x)[0] for x in chain])

    for call in range(cfg.max_force_calls):
        grads = {}
        for i in interior:
            values[i], grads[i] = checked_value_and_gradient(surface, chain[i])
        climber = max(interior, key=lambda i: values[i]) if cfg.climbing_image else None

        forces = np.zeros_like(chain)
        for i in interior:
            tangent = _tangent(chain, values, i)
            g = grads[i]
            if i == climber:
                forces[i] = -g + 2.0 * (g @ tangent) * tangent
            else:
                spring = cfg.spring_constant * (
                    np.linalg.norm(chain[i + 1] - chain[i]) - np.linalg.norm(chain[i] - chain[i - 1])
                )
                forces[i] = -g + (g @ tangent) * tangent + spring * tangent

        max_force = max(np.linalg.norm(forces[i]) for i in interior)
        if max_force < cfg.force_tolerance:
            logger.debug('band converged after %d force calls', call)
            break
        for i in interior:
            move = cfg.step_size * forces[i]
            norm = np.linalg.norm(move)
            if norm > max_move:
                move *= max_move / norm
            chain[i] = bounds.clip(chain[i] + move)
    else:
        logger.debug('band hit the force-call budget (max force %.3g)', max_force)

    for i in interior:
        values[i] = checked_value_and_gradient(surface, chain[i])[0]
    return chain, values


def neb_candidates(surface, a, b, cfg=None):
    """Interior images that are local maxima along the relaxed band, highest first"""
    cfg = cfg or NebConfig()
    a = as_point(a, surface.dimension)
    b = as_point(b, surface.dimension)
    if np.array_equal(a, b):
        raise InvalidArgumentError('band endpoints must differ')
    chain, values = relax_band(surface, a, b, cfg)
    maxima = sorted(_interior_maxima(values), key=lambda i: (-values[i], i))
    return [chain[i].copy() for i in maxima]


# ============================================
# EIGENVECTOR FOLLOWING
# ============================================
def hessian_vector_product(surface, x, u, eps=1e-4):
    """H u from central differences of the gradient"""
    norm = np.linalg.norm(u)
    if norm == 0:
        return np.zeros_like(u)
    unit = u / norm
    forward = checked_value_and_gradient(surface, x + eps * unit)[1]
    backward = checked_value_and_gradient(surface, x - eps * unit)[1]
    return norm * (forward - backward) / (2.0 * eps)


def smallest_eigenpair(surface, x, guess, eps=1e-4):
    """Minimize the Rayleigh quotient u.Hu / u.u using Hessian-vector products"""
    def rayleigh(v):
        norm = np.linalg.norm(v)
        u = v / norm
        hu = hessian_vector_product(surface, x, u, eps)
        quotient = u @ hu
        return quotient, 2.0 * (hu - quotient * u) / norm

    result = minimize(rayleigh, _unit(guess), jac=True, method='L-BFGS-B',
                      options={'maxiter': 100, 'gtol': 1e-8})
    return float(result.fun), _unit(result.x)


def default_guess(dimension):
    return _unit(np.linspace(1.0, 2.0, dimension))


def validate_index_one(surface, position, h=1e-4):
    """Full-spectrum check; returns (eigenvalues, eigenvectors) of the Hessian"""
    eigenvalues, eigenvectors = np.linalg.eigh(fd_hessian(surface, position, h))
    if eigenvalues[0] >= 0:
        raise NotASaddleError(
            f'no negative curvature at {position.tolist()} (smallest eigenvalue {eigenvalues[0]:.3g})'
        )
    if eigenvalues.size > 1 and eigenvalues[1] <= 0:
        raise NotASaddleError(
            f'higher-index stationary point at {position.tolist()} '
            f'(eigenvalues {eigenvalues[0]:.3g}, {eigenvalues[1]:.3g})'
        )
    return eigenvalues, eigenvectors


def eigenvector_following_refine(surface, start, cfg=None, guess=None, trust_radius=0.05,
                                 max_steps=200, tangent_steps=10):
    """
    Hybrid eigenvector following: step uphill along the smallest-eigenvalue
    direction, minimize in the orthogonal complement, repeat until the full
    gradient is below tolerance. The result is validated as index-1.
    """
    cfg = cfg or MinimizerConfig()
    bounds = surface.bounds
    x = bounds.clip(as_point(start, surface.dimension))
    v = _unit(np.asarray(guess, dtype=float)) if guess is not None else default_guess(x.size)
    if not np.any(v):
        v = default_guess(x.size)

    for step in range(max_steps):
        f, g = checked_value_and_gradient(surface, x)
        eigenvalue, v = smallest_eigenpair(surface, x, v)
        gnorm = float(np.linalg.norm(g))
        if gnorm < gradient_tolerance(surface, cfg):
            break

        along = g @ v
        if eigenvalue < 0:
            shift = 2.0 * along / (abs(eigenvalue) * (1.0 + math.sqrt(1.0 + 4.0 * along ** 2 / eigenvalue ** 2)))
        else:
            shift = math.copysign(trust_radius, along)
        shift = max(-trust_radius, min(trust_radius, shift))
        x = bounds.clip(x + shift * v)

        axis = v.copy()
        tangent = lbfgs_descent(surface, x, cfg, project=lambda w: w - (w @ axis) * axis,
                                max_iterations=tangent_steps)
        x = tangent.position
    else:
        raise NonConvergenceError(
            f'eigenvector following did not converge in {max_steps} steps '
            f'(gradient norm {gnorm:.3g} at {x.tolist()})'
        )

    eigenvalues, eigenvectors = validate_index_one(surface, x)
    logger.debug('transition state at %s, value %.10g, eigenvalue %.4g', x.tolist(), f, eigenvalues[0])
    return TransitionState(
        position=x, value=f, smallest_eigenvalue=float(eigenvalues[0]),
        downhill_eigenvector=_sign_convention(eigenvectors[:, 0]), gradient_norm=gnorm,
    )


def connect_transition_state(surface, ts, displacement=1e-2, cfg=None, step=1e-3):
    """Steepest descent from ts -/+ displacement * eigenvector; returns (minus, plus)"""
    if displacement <= 0:
        raise InvalidArgumentError(f'displacement must be positive, got {displacement}')
    cfg = cfg or MinimizerConfig()
    bounds = surface.bounds
    offset = displacement * ts.downhill_eigenvector
    minus = steepest_descent_path(surface, bounds.clip(ts.position - offset), step, cfg)
    plus = steepest_descent_path(surface, bounds.clip(ts.position + offset), step, cfg)
    return minus, plus
