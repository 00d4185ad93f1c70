"""
Frustration of kinetic transition network edges and the roughness surface
built from it.

Each direction minimum -> transition state scores

    F = exp(-d^2 / (2 l^2)) * (f_ts - f_min)

and contributes one anisotropic Gaussian to the roughness surface, centred
three quarters of the way from the minimum to the transition state, with
variance sigma along that direction and delta across it.
"""
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import (
    ArtifactParseError, EmptyNetworkError, EmptySurfaceError, InvalidArgumentError,
)
from .geometry import as_point, euclidean_distance
from .optimizers import BasinHoppingConfig, MinimizerConfig, basin_hopping_chains
from .surfaces import NegatedSurface, Surface, bounds_from_document, fd_hessian
from .utils import float_list, require_key, require_number, require_vector

logger = logging.getLogger(__name__)

DEFAULT_LENGTHSCALE = 80.0
DEFAULT_SIGMA = 0.99
DEFAULT_DELTA = 0.25
MEAN_FRACTION = 0.75

# 'box' measures sigma and delta in squared units of 1/BOX_DIVISIONS of the smallest box width
BOX_DIVISIONS = 32

VarianceScaling = Literal['absolute', 'edge_length', 'box']
VARIANCE_SCALINGS = ('absolute', 'edge_length', 'box')


@dataclass(frozen=True, eq=False)
class FrustrationVector:
    edge_id: int
    min_id: int
    min_position: np.ndarray
    ts_position: np.ndarray
    f_min: float
    f_ts: float
    lengthscale: float
    frustration: float

    @property
    def distance(self):
        return euclidean_distance(self.min_position, self.ts_position)

    def to_dict(self):
        return {
            'edge_id': self.edge_id,
            'min_id': self.min_id,
            'min_position': float_list(self.min_position),
            'ts_position': float_list(self.ts_position),
            'f_min': self.f_min,
            'f_ts': self.f_ts,
            'lengthscale': self.lengthscale,
            'frustration': self.frustration,
        }


def frustration_value(distance, barrier, lengthscale):
    return float(np.exp(-distance ** 2 / (2.0 * lengthscale ** 2)) * barrier)


def edge_frustration(net, edge_id, lengthscale=DEFAULT_LENGTHSCALE):
    """One vector per distinct minimum of the edge (one for a self-loop)"""
    if lengthscale <= 0:
        raise InvalidArgumentError(f'lengthscale must be positive, got {lengthscale}')
    edge = net.edge(edge_id)
    min_ids = [edge.min_a] if edge.degenerate else [edge.min_a, edge.min_b]
    vectors = []
    for min_id in min_ids:
        minimum = net.minimum(min_id)
        distance = euclidean_distance(minimum.position, edge.ts_position)
        vectors.append(FrustrationVector(
            edge_id=edge.id,
            min_id=min_id,
            min_position=minimum.position,
            ts_position=edge.ts_position,
            f_min=minimum.value,
            f_ts=edge.ts_value,
            lengthscale=lengthscale,
            frustration=frustration_value(distance, edge.ts_value - minimum.value, lengthscale),
        ))
    return vectors


def all_frustration_vectors(net, lengthscale=DEFAULT_LENGTHSCALE):
    vectors = []
    for edge in net.edges():
        vectors.extend(edge_frustration(net, edge.id, lengthscale))
    return vectors


def overall_frustration(net, lengthscale=DEFAULT_LENGTHSCALE):
    """Mean frustration over every direction of every edge"""
    if net.n_edges == 0:
        raise EmptyNetworkError('overall frustration needs at least one transition state')
    vectors = all_frustration_vectors(net, lengthscale)
    return float(np.mean([v.frustration for v in vectors]))


# ============================================
# ROTATIONS
# ============================================
def rotation_to_axis(v):
    """
    Orthogonal R with R e1 = v/|v|.

    R = H S where S flips e1 and H reflects about u = (e1 + v)/|e1 + v|;
    v = e1 gives the identity. When v is (almost) -e1, u is undefined and
    R is the identity with its first axis flipped.
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if v.ndim != 1 or norm == 0:
        raise InvalidArgumentError('rotation axis must be a non-zero vector')
    unit = v / norm
    d = unit.size
    flip = np.eye(d)
    flip[0, 0] = -1.0
    u = unit.copy()
    u[0] += 1.0
    u_norm = np.linalg.norm(u)
    if u_norm < 1e-8:
        return flip
    u /= u_norm
    reflection = np.eye(d) - 2.0 * np.outer(u, u)
    return reflection @ flip


# ============================================
# ROUGHNESS SURFACE
# ============================================
@dataclass(frozen=True, eq=False)
class RoughnessComponent:
    weight: float
    mean: np.ndarray
    rotation: np.ndarray
    axial_variance: float
    orthogonal_variance: float

    @property
    def axis(self):
        return self.rotation[:, 0]

    @property
    def covariance(self):
        variances = np.full(self.mean.size, self.orthogonal_variance)
        variances[0] = self.axial_variance
        return self.rotation @ np.diag(variances) @ self.rotation.T

    def kernel(self, p):
        """Unnormalized Gaussian via the rotated frame: y = R^T (p - mu)"""
        y = self.rotation.T @ (np.asarray(p, dtype=float) - self.mean)
        q = y[0] ** 2 / self.axial_variance + np.sum(y[1:] ** 2) / self.orthogonal_variance
        return float(self.weight * np.exp(-0.5 * q))


class RoughnessSurface(Surface):
    """Sum of weighted, rotated, unnormalized Gaussians"""

    def __init__(self, components, bounds, lengthscale=DEFAULT_LENGTHSCALE, sigma=DEFAULT_SIGMA,
                 delta=DEFAULT_DELTA, variance_scaling='absolute'):
        super().__init__(bounds)
        self.components = tuple(components)
        self.lengthscale = lengthscale
        self.sigma = sigma
        self.delta = delta
        self.variance_scaling = variance_scaling
        if self.components:
            self._weights = np.array([c.weight for c in self.components])
            self._means = np.array([c.mean for c in self.components])
            self._axes = np.array([c.axis for c in self.components])
            self._axial = np.array([c.axial_variance for c in self.components])
            self._orthogonal = np.array([c.orthogonal_variance for c in self.components])

    @property
    def scale(self):
        if not self.components:
            return 1.0
        return float(np.max(np.abs(self._weights)))

    def _terms(self, p):
        # All orthogonal directions share one variance, so the rotated quadratic
        # form only needs the projection on the axis
        diff = p - self._means
        along = np.einsum('ij,ij->i', diff, self._axes)
        radial = np.maximum(np.einsum('ij,ij->i', diff, diff) - along ** 2, 0.0)
        q = along ** 2 / self._axial + radial / self._orthogonal
        return diff, along, self._weights * np.exp(-0.5 * q)

    def value(self, p):
        p = self._check(p)
        if not self.components:
            return 0.0
        return float(np.sum(self._terms(p)[2]))

    def gradient(self, p):
        return self.value_and_gradient(p)[1]

    def value_and_gradient(self, p):
        p = self._check(p)
        if not self.components:
            return 0.0, np.zeros(self.dimension)
        diff, along, terms = self._terms(p)
        axial_part = (along / self._axial)[:, None] * self._axes
        orthogonal_part = (diff - along[:, None] * self._axes) / self._orthogonal[:, None]
        grad = -np.sum(terms[:, None] * (axial_part + orthogonal_part), axis=0)
        return float(np.sum(terms)), grad

    def rescaled(self, factor):
        """Same surface with every weight multiplied by `factor`"""
        components = [
            RoughnessComponent(c.weight * factor, c.mean, c.rotation, c.axial_variance,
                               c.orthogonal_variance)
            for c in self.components
        ]
        return RoughnessSurface(components, self.bounds, self.lengthscale, self.sigma, self.delta,
                                self.variance_scaling)

    def to_dict(self):
        return {
            'kind': 'roughness',
            'dimension': self.dimension,
            'bounds': self.bounds.to_dict(),
            'lengthscale': self.lengthscale,
            'sigma': self.sigma,
            'delta': self.delta,
            'variance_scaling': self.variance_scaling,
            'components': [
                {
                    'weight': c.weight,
                    'mean': float_list(c.mean),
                    'axis_unit_vector': float_list(c.axis),
                    'axial_variance': c.axial_variance,
                    'orthogonal_variance': c.orthogonal_variance,
                }
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, document):
        bounds = bounds_from_document(document)
        dimension = bounds.dimension
        sigma = require_number(require_key(document, 'sigma'), '$.sigma')
        delta = require_number(require_key(document, 'delta'), '$.delta')
        components = []
        for i, item in enumerate(require_key(document, 'components')):
            path = f'$.components[{i}]'
            axis = require_vector(require_key(item, 'axis_unit_vector', path),
                                  f'{path}.axis_unit_vector', dimension)
            components.append(RoughnessComponent(
                weight=require_number(require_key(item, 'weight', path), f'{path}.weight'),
                mean=np.array(require_vector(require_key(item, 'mean', path), f'{path}.mean', dimension)),
                rotation=rotation_to_axis(axis),
                axial_variance=require_number(item.get('axial_variance', sigma), f'{path}.axial_variance'),
                orthogonal_variance=require_number(item.get('orthogonal_variance', delta),
                                                   f'{path}.orthogonal_variance'),
            ))
        scaling = document.get('variance_scaling', 'absolute')
        if scaling not in VARIANCE_SCALINGS:
            raise ArtifactParseError(f'unknown variance scaling "{scaling}"', '$.variance_scaling')
        return cls(components, bounds,
                   require_number(require_key(document, 'lengthscale'), '$.lengthscale'),
                   sigma, delta, scaling)


def build_roughness_surface(net, bounds, lengthscale=DEFAULT_LENGTHSCALE, axial_variance=DEFAULT_SIGMA,
                            orthogonal_variance=DEFAULT_DELTA, weight_floor=0.0,
                            variance_scaling='absolute'):
    """
    One component per frustration vector with weight above `weight_floor`.
    With `edge_length` scaling the axial variance is sigma * d^2, so the
    Gaussian stretches with the minimum-to-transition-state distance. With
    `box` scaling both variances are multiplied by h^2, h being the smallest
    box width over BOX_DIVISIONS.
    """
    if axial_variance <= 0 or orthogonal_variance <= 0:
        raise InvalidArgumentError('roughness variances must be positive')
    if variance_scaling not in VARIANCE_SCALINGS:
        raise InvalidArgumentError(f'unknown variance scaling "{variance_scaling}"')
    unit = 1.0
    if variance_scaling == 'box':
        unit = (float(np.min(bounds.widths)) / BOX_DIVISIONS) ** 2
    components = []
    dropped = 0
    for vector in all_frustration_vectors(net, lengthscale):
        direction = vector.ts_position - vector.min_position
        distance = float(np.linalg.norm(direction))
        if distance == 0:
            logger.warning('skipping degenerate edge %d: transition state coincides with minimum %d',
                           vector.edge_id, vector.min_id)
            continue
        if vector.frustration <= weight_floor:
            dropped += 1
            continue
        axial = axial_variance * distance ** 2 if variance_scaling == 'edge_length' else axial_variance * unit
        components.append(RoughnessComponent(
            weight=vector.frustration,
            mean=vector.min_position + MEAN_FRACTION * direction,
            rotation=rotation_to_axis(direction),
            axial_variance=axial,
            orthogonal_variance=orthogonal_variance * unit,
        ))
    if dropped:
        logger.info('dropped %d frustration vectors at or below the weight floor %g', dropped, weight_floor)
    return RoughnessSurface(components, bounds, lengthscale, axial_variance, orthogonal_variance,
                            variance_scaling)


def roughness_eval(surface, p):
    return surface.value_and_gradient(as_point(p))


# ============================================
# FILL-POINT SELECTION
# ============================================
@dataclass(frozen=True)
class FillPointSelection:
    points: tuple
    values: tuple
    requested: int

    @property
    def shortfall(self):
        return self.requested - len(self.points)

    def __len__(self):
        return len(self.points)


def is_local_maximum(surface, bounds, p):
    """Negative-definite Hessian over the coordinates not pinned to a bound"""
    p = np.asarray(p, dtype=float)
    free = (p > bounds.lower) & (p < bounds.upper)
    if not np.any(free):
        return True
    hessian = fd_hessian(surface, p)[np.ix_(free, free)]
    return bool(np.max(np.linalg.eigvalsh(hessian)) < 0.0)


def select_fill_points(surface, bounds, k, rng, bh_config=None, minimizer=None,
                       min_relative_roughness=1e-6):
    """
    Basin-hopping on -roughness; the distinct maxima found, roughest first,
    truncated to k. Flat far-field points (roughness below
    `min_relative_roughness` times the largest weight) are not maxima, and
    neither are flank points where the Hessian is not negative definite.
    """
    if k < 1:
        raise InvalidArgumentError(f'k must be at least 1, got {k}')
    if not surface.components:
        raise EmptySurfaceError('roughness surface has no components')
    bh_config = bh_config or BasinHoppingConfig()
    minimizer = minimizer or MinimizerConfig()

    found = basin_hopping_chains(NegatedSurface(surface), bounds, bh_config, rng, minimizer)
    floor = min_relative_roughness * surface.scale
    maxima = [m for m in found if -m.value > floor and is_local_maximum(surface, bounds, m.position)]
    if len(maxima) < len(found):
        logger.debug('dropped %d stationary points that are not roughness maxima', len(found) - len(maxima))
    maxima.sort(key=lambda m: (m.value, tuple(m.position)))
    chosen = maxima[:k]

    selection = FillPointSelection(
        points=tuple(m.position for m in chosen),
        values=tuple(-m.value for m in chosen),
        requested=k,
    )
    if selection.shortfall > 0:
        logger.warning('found %d distinct roughness maxima, %d requested', len(selection), k)
    return selection
