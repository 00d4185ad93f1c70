"""
Points, bounds, distances and the two samplers used by every search.

Points are plain 1-D float arrays; ``as_point`` is the single place where
coordinates are validated.
"""
import hashlib
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError


def as_point(coords, dimension=None):
    """Validate coordinates and return them as a 1-D float array"""
    point = np.array(coords, dtype=float)
    if point.ndim != 1 or point.size < 1:
        raise InvalidArgumentError(f'a point needs a 1-D coordinate list, got shape {point.shape}')
    if not np.all(np.isfinite(point)):
        raise InvalidArgumentError(f'point has non-finite coordinates: {point.tolist()}')
    if dimension is not None and point.size != dimension:
        raise InvalidArgumentError(f'expected a {dimension}-D point, got {point.size}-D')
    return point


@dataclass(frozen=True, eq=False)
class Bounds:
    """Per-dimension box constraints"""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = as_point(self.lower)
        upper = as_point(self.upper)
        if lower.size != upper.size:
            raise InvalidArgumentError(
                f'bounds dimension mismatch: {lower.size} lower vs {upper.size} upper'
            )
        if not np.all(lower < upper):
            raise InvalidArgumentError('every lower bound must be strictly below its upper bound')
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def unit(cls, dimension):
        return cls(np.zeros(dimension), np.ones(dimension))

    @property
    def dimension(self):
        return self.lower.size

    @property
    def widths(self):
        return self.upper - self.lower

    @property
    def diagonal(self):
        return float(np.linalg.norm(self.widths))

    def contains(self, point, tol=0.0):
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= self.lower - tol) and np.all(point <= self.upper + tol))

    def clip(self, point):
        return np.clip(point, self.lower, self.upper)

    def to_dict(self):
        return {'lower': self.lower.tolist(), 'upper': self.upper.tolist()}

    def __eq__(self, other):
        if not isinstance(other, Bounds):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((tuple(self.lower), tuple(self.upper)))


# ============================================
# RANDOM STREAMS
# ============================================
def derive_seed(seed, label):
    """Child seed = hash(parent seed, label), 64-bit"""
    digest = hashlib.blake2b(f'{seed}/{label}'.encode('utf-8'), digest_size=8).digest()
    return int.from_bytes(digest, 'big')


class RandomSource:
    """
    A seeded draw stream with labeled splitting.

    ``child(label)`` depends only on this source's seed and the label, never on
    how many draws were taken, so work split across workers draws exactly what
    a serial run draws.
    """

    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed < 2 ** 64:
            raise InvalidArgumentError(f'seed must be an unsigned 64-bit integer, got {seed}')
        self.seed = seed
        self.generator = np.random.Generator(np.random.PCG64(seed))

    def child(self, label):
        return RandomSource(derive_seed(self.seed, label))

    def __repr__(self):
        return f'RandomSource(seed={self.seed})'


# ============================================
# DISTANCES AND SAMPLERS
# ============================================
def euclidean_distance(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError(f'dimension mismatch: {a.shape} vs {b.shape}')
    return float(np.linalg.norm(a - b))


def sample_sphere_shell(center, radius, n, rng):
    """n points at exactly `radius` from `center`, directions uniform on the sphere"""
    center = as_point(center)
    if radius <= 0:
        raise InvalidArgumentError(f'radius must be positive, got {radius}')
    if n < 0:
        raise InvalidArgumentError(f'n must be non-negative, got {n}')
    directions = rng.generator.standard_normal((n, center.size))
    norms = np.linalg.norm(directions, axis=1)
    # A zero draw has no direction; redraw it
    while n and np.any(norms == 0.0):
        zero = norms == 0.0
        directions[zero] = rng.generator.standard_normal((int(zero.sum()), center.size))
        norms = np.linalg.norm(directions, axis=1)
    if n == 0:
        return []
    directions /= norms[:, None]
    return [center + radius * direction for direction in directions]


def latin_hypercube(bounds, n, rng):
    """
    Stratified sample: each axis is cut into n equal strata and every stratum
    holds exactly one coordinate, placed uniformly inside it. Strata are matched
    to samples by an independent permutation per axis.
    """
    if n < 1:
        raise InvalidArgumentError(f'latin hypercube needs at least one sample, got {n}')
    gen = rng.generator
    unit = np.empty((n, bounds.dimension))
    for axis in range(bounds.dimension):
        strata = gen.permutation(n)
        unit[:, axis] = (strata + gen.random(n)) / n
    points = bounds.lower + unit * bounds.widths
    return [bounds.clip(p) for p in points]
