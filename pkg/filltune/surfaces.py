"""
Scalar surfaces over a latent box: Gaussian mixtures, thin-plate RBF fits of
sampled fields, and finite-difference derivatives for any surface.
"""
import logging
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist
from scipy.special import xlogy

from .exceptions import (
    ArtifactParseError, InvalidArgumentError, RBFFitError, SurfaceEvaluationError,
)
from .geometry import Bounds, as_point
from .utils import float_list, require_key, require_number, require_vector

logger = logging.getLogger(__name__)


class Surface(ABC):
    """Anything that maps a point of the box to a scalar, with a gradient"""

    def __init__(self, bounds):
        self.bounds = bounds

    @property
    def dimension(self):
        return self.bounds.dimension

    @property
    def scale(self):
        """Typical magnitude of the values; gradient tolerances are taken relative to it"""
        return 1.0

    def _check(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dimension,):
            raise InvalidArgumentError(
                f'{type(self).__name__} is {self.dimension}-D, got a point of shape {p.shape}'
            )
        return p

    @abstractmethod
    def value(self, p):
        ...

    @abstractmethod
    def gradient(self, p):
        ...

    def value_and_gradient(self, p):
        return self.value(p), self.gradient(p)


class NegatedSurface(Surface):
    """-f, so that minimizers find maxima"""

    def __init__(self, surface):
        super().__init__(surface.bounds)
        self.surface = surface

    @property
    def scale(self):
        return self.surface.scale

    def value(self, p):
        return -self.surface.value(p)

    def gradient(self, p):
        return -self.surface.gradient(p)

    def value_and_gradient(self, p):
        value, grad = self.surface.value_and_gradient(p)
        return -value, -grad


def checked_value_and_gradient(surface, p):
    """Evaluate and reject non-finite results"""
    value, grad = surface.value_and_gradient(p)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise SurfaceEvaluationError(
            f'non-finite surface evaluation at {np.asarray(p).tolist()}', point=np.asarray(p)
        )
    return float(value), np.asarray(grad, dtype=float)


# ============================================
# GAUSSIAN MIXTURES
# ============================================
@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean: tuple
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgumentError(f'mixture widths must be positive, got {self.width}')


class AnalyticMixtureSurface(Surface):
    """value(p) = sum weight * exp(-|p - mean|^2 / (2 width^2))"""

    def __init__(self, components, bounds):
        super().__init__(bounds)
        self.components = tuple(components)
        for component in self.components:
            as_point(component.mean, self.dimension)
        if self.components:
            self._weights = np.array([c.weight for c in self.components], dtype=float)
            self._means = np.array([c.mean for c in self.components], dtype=float)
            self._widths = np.array([c.width for c in self.components], dtype=float)

    def _terms(self, p):
        diff = p - self._means
        exponent = np.einsum('ij,ij->i', diff, diff) / (2.0 * self._widths ** 2)
        return diff, self._weights * np.exp(-exponent)

    def value(self, p):
        p = self._check(p)
        if not self.components:
            return 0.0
        return float(np.sum(self._terms(p)[1]))

    def gradient(self, p):
        return self.value_and_gradient(p)[1]

    def value_and_gradient(self, p):
        p = self._check(p)
        if not self.components:
            return 0.0, np.zeros(self.dimension)
        diff, terms = self._terms(p)
        grad = -np.sum((terms / self._widths ** 2)[:, None] * diff, axis=0)
        return float(np.sum(terms)), grad

    def to_dict(self):
        return {
            'kind': 'mixture',
            'dimension': self.dimension,
            'bounds': self.bounds.to_dict(),
            'components': [
                {'weight': float(c.weight), 'mean': float_list(c.mean), 'width': float(c.width)}
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, document):
        bounds = bounds_from_document(document)
        components = []
        for i, item in enumerate(require_key(document, 'components')):
            path = f'$.components[{i}]'
            components.append(MixtureComponent(
                weight=require_number(require_key(item, 'weight', path), f'{path}.weight'),
                mean=tuple(require_vector(require_key(item, 'mean', path), f'{path}.mean',
                                          bounds.dimension)),
                width=require_number(require_key(item, 'width', path), f'{path}.width'),
            ))
        return cls(components, bounds)


def mixture_eval(surface, p):
    return surface.value(p)


def demo_mixture_surface():
    """
    Five negated Gaussian wells on [-3, 3]^2: a small landscape with several
    minima and saddles, used for demonstrations and landscape-recovery checks.
    """
    wells = [
        (-1.0, (-1.5, -1.2), 0.6),
        (-0.8, (1.4, -1.0), 0.55),
        (-1.2, (0.0, 1.3), 0.7),
        (-0.6, (-1.8, 1.2), 0.5),
        (-0.9, (1.6, 1.5), 0.6),
    ]
    components = [MixtureComponent(weight=w, mean=m, width=s) for w, m, s in wells]
    return AnalyticMixtureSurface(components, Bounds([-3.0, -3.0], [3.0, 3.0]))


# ============================================
# THIN-PLATE RBF
# ============================================
def thin_plate(r):
    """phi(r) = r^2 ln r with phi(0) = 0"""
    return xlogy(np.square(r), r)


def thin_plate_derivative(r):
    """phi'(r) = 2 r ln r + r, defined as 0 at r = 0"""
    r = np.asarray(r, dtype=float)
    return np.where(r > 0, xlogy(2.0 * r, r) + r, 0.0)


class RBFSurface(Surface):
    """Thin-plate expansion with a linear polynomial tail"""

    def __init__(self, centers, rbf_weights, poly_coeffs, smoothing, bounds):
        super().__init__(bounds)
        self.centers = np.array(centers, dtype=float).reshape(-1, bounds.dimension)
        self.rbf_weights = np.array(rbf_weights, dtype=float)
        self.poly_coeffs = np.array(poly_coeffs, dtype=float)
        self.smoothing = float(smoothing)
        if self.rbf_weights.shape != (self.centers.shape[0],):
            raise InvalidArgumentError('one rbf weight per center is required')
        if self.poly_coeffs.shape != (self.dimension + 1,):
            raise InvalidArgumentError(f'linear tail needs {self.dimension + 1} coefficients')

    def value(self, p):
        p = self._check(p)
        r = cdist(p[None, :], self.centers)[0]
        tail = self.poly_coeffs[0] + self.poly_coeffs[1:] @ p
        return float(self.rbf_weights @ thin_plate(r) + tail)

    def gradient(self, p):
        return self.value_and_gradient(p)[1]

    def value_and_gradient(self, p):
        p = self._check(p)
        diff = p - self.centers
        r = np.sqrt(np.einsum('ij,ij->i', diff, diff))
        value = self.rbf_weights @ thin_plate(r) + self.poly_coeffs[0] + self.poly_coeffs[1:] @ p
        # phi'(r)/r = 2 ln r + 1; the r = 0 term contributes nothing
        scale = np.where(r > 0, 2.0 * np.log(np.where(r > 0, r, 1.0)) + 1.0, 0.0)
        grad = (self.rbf_weights * scale) @ diff + self.poly_coeffs[1:]
        return float(value), grad

    def side_conditions(self):
        """(sum w, sum w * center); both vanish for a valid thin-plate fit"""
        return float(np.sum(self.rbf_weights)), self.rbf_weights @ self.centers

    def node_residuals(self, values):
        fitted = np.array([self.value(c) for c in self.centers])
        return fitted - np.asarray(values, dtype=float)

    def to_dict(self):
        return {
            'kind': 'rbf',
            'dimension': self.dimension,
            'bounds': self.bounds.to_dict(),
            'centers': self.centers.tolist(),
            'weights': self.rbf_weights.tolist(),
            'poly_coeffs': self.poly_coeffs.tolist(),
            'smoothing': self.smoothing,
        }

    @classmethod
    def from_dict(cls, document):
        bounds = bounds_from_document(document)
        dimension = bounds.dimension
        centers = [
            require_vector(c, f'$.centers[{i}]', dimension)
            for i, c in enumerate(require_key(document, 'centers'))
        ]
        weights = require_vector(require_key(document, 'weights'), '$.weights', len(centers))
        poly = require_vector(require_key(document, 'poly_coeffs'), '$.poly_coeffs', dimension + 1)
        smoothing = require_number(require_key(document, 'smoothing'), '$.smoothing')
        return cls(np.array(centers).reshape(-1, dimension), weights, poly, smoothing, bounds)


def rbf_fit(points, values, smoothing, bounds=None):
    """
    Solve the thin-plate system

        [K + s I   P] [w]   [f]
        [P^T       0] [c] = [0]

    with K_ij = phi(|x_i - x_j|) and P = [1, x]. The zero block enforces
    sum w = 0 and sum w x = 0.
    """
    points = np.array(points, dtype=float)
    values = np.array(values, dtype=float)
    if points.ndim != 2:
        raise InvalidArgumentError('points must be a sequence of equal-length coordinate lists')
    n, dimension = points.shape
    if values.shape != (n,):
        raise InvalidArgumentError(f'{n} points but {values.size} values')
    if n < dimension + 2:
        raise InvalidArgumentError(f'a {dimension}-D thin-plate fit needs at least {dimension + 2} points')
    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(points)):
        raise InvalidArgumentError('fit inputs must be finite')
    if smoothing < 0:
        raise InvalidArgumentError(f'smoothing must be non-negative, got {smoothing}')
    if bounds is None:
        bounds = Bounds(points.min(axis=0) - 1e-9, points.max(axis=0) + 1e-9)

    if np.all(values == values[0]):
        # constant data: the affine tail alone interpolates it exactly
        logger.debug('thin-plate fit: constant data at %d centers', n)
        return RBFSurface(points, np.zeros(n), [values[0]] + [0.0] * dimension, smoothing, bounds)

    kernel = thin_plate(cdist(points, points)) + smoothing * np.eye(n)
    poly = np.hstack([np.ones((n, 1)), points])
    system = np.block([[kernel, poly], [poly.T, np.zeros((dimension + 1, dimension + 1))]])
    rhs = np.concatenate([values, np.zeros(dimension + 1)])

    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', linalg.LinAlgWarning)
            solution = linalg.solve(system, rhs, assume_a='sym')
    except (linalg.LinAlgError, linalg.LinAlgWarning) as exc:
        condition = float(np.linalg.cond(system))
        raise RBFFitError(
            f'thin-plate system is singular or degenerate (condition ~ {condition:.3e}): {exc}',
            condition_estimate=condition,
        ) from exc

    logger.debug('thin-plate fit: %d centers, %d-D, smoothing %g', n, dimension, smoothing)
    return RBFSurface(points, solution[:n], solution[n:], smoothing, bounds)


def rbf_eval(surface, p):
    return surface.value(p)


# ============================================
# FINITE DIFFERENCES
# ============================================
def _finite_value(surface, p, axis):
    value = surface.value(p)
    if not np.isfinite(value):
        raise SurfaceEvaluationError(
            f'non-finite value at {p.tolist()} (stencil along coordinate {axis})',
            point=p, coordinate=axis,
        )
    return value


def fd_gradient(surface, p, h=1e-5):
    """Central differences along each coordinate"""
    if h <= 0:
        raise InvalidArgumentError(f'step must be positive, got {h}')
    p = np.asarray(p, dtype=float)
    grad = np.empty(p.size)
    for i in range(p.size):
        step = np.zeros(p.size)
        step[i] = h
        grad[i] = (_finite_value(surface, p + step, i) - _finite_value(surface, p - step, i)) / (2 * h)
    return grad


def fd_hessian(surface, p, h=1e-4):
    """Second-order central stencil, symmetrized as (H + H^T) / 2"""
    if h <= 0:
        raise InvalidArgumentError(f'step must be positive, got {h}')
    p = np.asarray(p, dtype=float)
    d = p.size
    eye = np.eye(d) * h
    hessian = np.empty((d, d))
    center = _finite_value(surface, p, None)
    for i in range(d):
        forward = _finite_value(surface, p + eye[i], i)
        backward = _finite_value(surface, p - eye[i], i)
        hessian[i, i] = (forward - 2.0 * center + backward) / h ** 2
        for j in range(i + 1, d):
            pp = _finite_value(surface, p + eye[i] + eye[j], j)
            pm = _finite_value(surface, p + eye[i] - eye[j], j)
            mp = _finite_value(surface, p - eye[i] + eye[j], j)
            mm = _finite_value(surface, p - eye[i] - eye[j], j)
            hessian[i, j] = hessian[j, i] = (pp - pm - mp + mm) / (4.0 * h ** 2)
    return 0.5 * (hessian + hessian.T)


# ============================================
# PERSISTENCE
# ============================================
def bounds_from_document(document):
    dimension = int(require_number(require_key(document, 'dimension'), '$.dimension'))
    raw = require_key(document, 'bounds')
    lower = require_vector(require_key(raw, 'lower', '$.bounds'), '$.bounds.lower', dimension)
    upper = require_vector(require_key(raw, 'upper', '$.bounds'), '$.bounds.upper', dimension)
    return Bounds(lower, upper)


def surface_from_dict(document):
    kind = require_key(document, 'kind')
    if kind == 'rbf':
        return RBFSurface.from_dict(document)
    if kind == 'mixture':
        return AnalyticMixtureSurface.from_dict(document)
    raise ArtifactParseError(f'unknown surface kind "{kind}"', '$.kind')
