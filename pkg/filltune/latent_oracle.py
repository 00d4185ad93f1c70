"""
Latent oracles: decode latent points to token sequences and compare them.

The similarity field is the mean Tanimoto similarity between the n-gram set
of a point's decode and those of a few random neighbours on a small sphere
around it, sampled over a Latin hypercube of the latent box.
"""
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import ArtifactParseError, FilltuneError, InvalidArgumentError, OracleError
from .geometry import as_point, latin_hypercube, sample_sphere_shell
from .utils import read_csv, write_csv

logger = logging.getLogger(__name__)

DEFAULT_NEIGHBORS = 10
DEFAULT_RADIUS = 0.05
DEFAULT_NGRAM = 2


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple
    valid: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'tokens', tuple(self.tokens))
        if self.valid and not self.tokens:
            raise InvalidArgumentError('a valid token sequence cannot be empty')

    @classmethod
    def invalid(cls):
        return cls((), valid=False)

    def __len__(self):
        return len(self.tokens)

    def __str__(self):
        return ''.join(self.tokens) if self.valid else '<invalid>'


# ============================================
# SET SIMILARITY
# ============================================
def tanimoto(set_a, set_b):
    """|A & B| / |A | B|; two empty sets are identical, so 1.0"""
    set_a, set_b = set(set_a), set(set_b)
    union = len(set_a | set_b)
    if union == 0:
        return 1.0
    return len(set_a & set_b) / union


def ngram_set(sequence, n=DEFAULT_NGRAM):
    """Contiguous length-n windows; a sequence shorter than n is its own single gram"""
    if n < 1:
        raise InvalidArgumentError(f'n-gram length must be at least 1, got {n}')
    if not sequence.valid:
        return frozenset()
    tokens = sequence.tokens
    if len(tokens) < n:
        return frozenset([tokens])
    return frozenset(tokens[i:i + n] for i in range(len(tokens) - n + 1))


# ============================================
# ORACLES
# ============================================
class LatentOracle(ABC):
    """Decoder plus similarity measure over one latent space"""

    ngram_n = DEFAULT_NGRAM

    @property
    @abstractmethod
    def dimension(self):
        ...

    @abstractmethod
    def decode(self, p):
        ...

    def similarity(self, a, b):
        return tanimoto(ngram_set(a, self.ngram_n), ngram_set(b, self.ngram_n))

    def safe_decode(self, p):
        """decode, with any failure reported as an OracleError naming the point"""
        try:
            return self.decode(p)
        except OracleError:
            raise
        except Exception as exc:
            raise OracleError(f'decode failed at {np.asarray(p).tolist()}: {exc}', point=p) from exc


def default_vocabulary(size):
    return tuple(f'[T{i}]' for i in range(size))


class QuantizedDecoder(LatentOracle):
    """
    Token i is the symbol of the bin holding coordinate i. Bins are half-open
    [lo, hi) with the top bin closed; coordinates outside the box fall into
    the edge bins, so every point decodes validly.
    """

    def __init__(self, bounds, bins=4, vocabulary=None, ngram_n=DEFAULT_NGRAM):
        if bins < 2:
            raise InvalidArgumentError(f'a quantized decoder needs at least 2 bins, got {bins}')
        vocabulary = tuple(vocabulary) if vocabulary is not None else default_vocabulary(bins)
        if len(vocabulary) != bins:
            raise InvalidArgumentError(f'{bins} bins need {bins} symbols, got {len(vocabulary)}')
        if len(set(vocabulary)) != bins:
            raise InvalidArgumentError('vocabulary symbols must be distinct')
        if ngram_n < 1:
            raise InvalidArgumentError(f'n-gram length must be at least 1, got {ngram_n}')
        self.bounds = bounds
        self.bins = bins
        self.vocabulary = vocabulary
        self.ngram_n = ngram_n

    @property
    def dimension(self):
        return self.bounds.dimension

    def bin_indices(self, p):
        p = as_point(p, self.dimension)
        scaled = (p - self.bounds.lower) / self.bounds.widths * self.bins
        return np.clip(np.floor(scaled).astype(int), 0, self.bins - 1).tolist()

    def decode(self, p):
        return TokenSequence(self.vocabulary[i] for i in self.bin_indices(p))


def decode_quantized(decoder, p):
    return decoder.decode(p)


class ConstantOracle(LatentOracle):
    """Every point decodes to the same sequence: a perfectly flat field"""

    def __init__(self, dimension, tokens=('[C]',), ngram_n=DEFAULT_NGRAM):
        self._dimension = int(dimension)
        self.sequence = TokenSequence(tokens)
        self.ngram_n = ngram_n

    @property
    def dimension(self):
        return self._dimension

    def decode(self, p):
        as_point(p, self._dimension)
        return self.sequence


# ============================================
# SIMILARITY FIELD
# ============================================
def neighborhood_similarity(oracle, p, rng, n_neighbors=DEFAULT_NEIGHBORS, radius=DEFAULT_RADIUS,
                            ngram_n=None):
    """
    Mean Tanimoto similarity between the decode of p and the decodes of
    n_neighbors points at distance `radius`. Invalid neighbours are left out
    of the mean; an invalid target or no valid neighbour scores 0.
    """
    p = as_point(p, oracle.dimension)
    ngram_n = ngram_n or oracle.ngram_n
    neighbors = sample_sphere_shell(p, radius, n_neighbors, rng)
    target = oracle.safe_decode(p)
    if not target.valid:
        return 0.0
    target_grams = ngram_set(target, ngram_n)
    scores = []
    for neighbor in neighbors:
        decoded = oracle.safe_decode(neighbor)
        if decoded.valid:
            scores.append(tanimoto(target_grams, ngram_set(decoded, ngram_n)))
    if not scores:
        return 0.0
    return float(np.mean(scores))


def build_similarity_field(oracle, bounds, rng, n_samples=5000, n_neighbors=DEFAULT_NEIGHBORS,
                           radius=DEFAULT_RADIUS, ngram_n=None, workers=1):
    """
    Latin-hypercube samples over `bounds` with their neighbourhood similarity.
    Sample i draws its neighbours from its own labeled stream, so the field
    does not depend on the worker count.
    """
    if oracle.dimension != bounds.dimension:
        raise InvalidArgumentError(
            f'oracle is {oracle.dimension}-D but bounds are {bounds.dimension}-D'
        )
    if n_samples < bounds.dimension + 2:
        raise InvalidArgumentError(
            f'need at least {bounds.dimension + 2} samples for a {bounds.dimension}-D fit, got {n_samples}'
        )
    points = latin_hypercube(bounds, n_samples, rng.child('lhs'))

    def evaluate(index):
        try:
            return neighborhood_similarity(oracle, points[index], rng.child(f'sample-{index}'),
                                           n_neighbors, radius, ngram_n)
        except FilltuneError as exc:
            raise OracleError(f'sample {index}: {exc}', point=points[index]) from exc

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        values = list(pool.map(evaluate, range(n_samples)))
    logger.info('similarity field: %d samples, mean similarity %.4f', n_samples, float(np.mean(values)))
    return points, values


def valid_fraction(oracle, points):
    """Share of points whose decode is valid; None without points"""
    if not points:
        return None
    return sum(oracle.safe_decode(p).valid for p in points) / len(points)


# ============================================
# CSV
# ============================================
def field_header(dimension):
    return [f'x{i}' for i in range(dimension)] + ['similarity']


def write_similarity_field(path, points, values, config_hash=None):
    dimension = len(points[0]) if points else 0
    rows = (list(p) + [v] for p, v in zip(points, values))
    write_csv(path, field_header(dimension), rows, config_hash)


def read_similarity_field(path, dimension=None):
    """Return (config_hash or None, points, values)"""
    config_hash, header, rows = read_csv(path)
    if not header or header[-1] != 'similarity':
        raise ArtifactParseError('last column must be "similarity"', f'{path}:header')
    found = len(header) - 1
    if header != field_header(found):
        raise ArtifactParseError(f'expected header {",".join(field_header(found))}', f'{path}:header')
    if dimension is not None and found != dimension:
        raise ArtifactParseError(f'expected a {dimension}-D field, got {found}-D', f'{path}:header')
    points = [np.array(row[:-1]) for row in rows]
    values = [row[-1] for row in rows]
    return config_hash, points, values
