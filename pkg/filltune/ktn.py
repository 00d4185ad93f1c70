"""
Kinetic transition network: minima as nodes, transition states as edges of a
multigraph, plus the exploration driver that fills one from a surface.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from .exceptions import ArtifactParseError, FilltuneError, InvalidArgumentError
from .geometry import euclidean_distance, latin_hypercube
from .optimizers import MinimizerConfig, local_minimize
from .transition_search import (
    NebConfig, connect_transition_state, eigenvector_following_refine, neb_candidates,
)
from .utils import float_list, require_key, require_number, require_vector

logger = logging.getLogger(__name__)


class ExploreConfig(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    n_starts: int = Field(default=200, ge=1)
    pair_strategy: Literal['all-pairs', 'k-nearest'] = 'k-nearest'
    k_nearest: int = Field(default=5, ge=1)
    dedup_position_tol: float = Field(default=1e-3, gt=0)
    dedup_value_tol: float = Field(default=1e-6, gt=0)
    connect_displacement: float = Field(default=1e-2, gt=0)
    neb: NebConfig = NebConfig()


@dataclass(frozen=True, eq=False)
class MinimumRecord:
    id: int
    position: np.ndarray
    value: float


@dataclass(frozen=True, eq=False)
class EdgeRecord:
    id: int
    ts_position: np.ndarray
    ts_value: float
    min_a: int
    min_b: int
    eigenvector: np.ndarray

    @property
    def degenerate(self):
        """Self-loop: both descent paths end in the same minimum"""
        return self.min_a == self.min_b


class KineticTransitionNetwork:
    """
    Multigraph of minima and transition states.

    Minima closer than both dedup tolerances to a stored minimum are merged
    into it; the same rule applies to transition states.
    """

    def __init__(self, dimension, position_tol=1e-3, value_tol=1e-6):
        if dimension < 1:
            raise InvalidArgumentError(f'dimension must be at least 1, got {dimension}')
        self.dimension = int(dimension)
        self.position_tol = position_tol
        self.value_tol = value_tol
        self.graph = nx.MultiGraph()
        self._edges = {}

    # ---- queries ----
    @property
    def n_minima(self):
        return self.graph.number_of_nodes()

    @property
    def n_edges(self):
        return len(self._edges)

    def minimum(self, min_id):
        if min_id not in self.graph:
            raise InvalidArgumentError(f'unknown minimum id {min_id}')
        data = self.graph.nodes[min_id]
        return MinimumRecord(min_id, data['position'], data['value'])

    def minima(self):
        return [self.minimum(i) for i in sorted(self.graph.nodes)]

    def edge(self, edge_id):
        try:
            return self._edges[edge_id]
        except KeyError:
            raise InvalidArgumentError(f'unknown edge id {edge_id}') from None

    def edges(self):
        return [self._edges[i] for i in sorted(self._edges)]

    def _close(self, pos_a, val_a, pos_b, val_b):
        return (euclidean_distance(pos_a, pos_b) < self.position_tol
                and abs(val_a - val_b) < self.value_tol)

    # ---- inserts ----
    def add_minimum_dedup(self, candidate):
        """Id of an existing minimum within tolerance, else of a newly inserted one"""
        if not candidate.converged:
            raise InvalidArgumentError('only converged minima can enter the network')
        position = np.asarray(candidate.position, dtype=float)
        if position.shape != (self.dimension,):
            raise InvalidArgumentError(f'expected a {self.dimension}-D minimum')
        for min_id, data in self.graph.nodes(data=True):
            if self._close(position, candidate.value, data['position'], data['value']):
                return min_id
        min_id = self.n_minima
        self.graph.add_node(min_id, position=position.copy(), value=float(candidate.value))
        return min_id

    def add_edge(self, ts, id_a, id_b):
        for min_id in (id_a, id_b):
            if min_id not in self.graph:
                raise InvalidArgumentError(f'unknown minimum id {min_id}')
        for edge in self._edges.values():
            if self._close(ts.position, ts.value, edge.ts_position, edge.ts_value):
                return edge.id
        edge_id = len(self._edges)
        record = EdgeRecord(
            id=edge_id,
            ts_position=np.asarray(ts.position, dtype=float).copy(),
            ts_value=float(ts.value),
            min_a=id_a,
            min_b=id_b,
            eigenvector=np.asarray(ts.downhill_eigenvector, dtype=float).copy(),
        )
        self._edges[edge_id] = record
        self.graph.add_edge(id_a, id_b, key=edge_id, ts_value=record.ts_value)
        if record.degenerate:
            logger.debug('edge %d is a self-loop on minimum %d', edge_id, id_a)
        return edge_id

    # ---- persistence ----
    def to_dict(self):
        return {
            'dimension': self.dimension,
            'minima': [
                {'id': m.id, 'position': float_list(m.position), 'value': m.value}
                for m in self.minima()
            ],
            'edges': [
                {
                    'id': e.id, 'ts_position': float_list(e.ts_position), 'ts_value': e.ts_value,
                    'min_a': e.min_a, 'min_b': e.min_b, 'eigenvector': float_list(e.eigenvector),
                }
                for e in self.edges()
            ],
        }

    @classmethod
    def from_dict(cls, document, position_tol=1e-3, value_tol=1e-6):
        """Rebuild a network exactly as stored; ids must be 0..n-1 in order"""
        dimension = require_key(document, 'dimension')
        if isinstance(dimension, bool) or not isinstance(dimension, int) or dimension < 1:
            raise ArtifactParseError('expected a positive integer', '$.dimension')
        net = cls(dimension, position_tol, value_tol)

        minima = require_key(document, 'minima')
        if not isinstance(minima, list):
            raise ArtifactParseError('expected a list', '$.minima')
        for i, item in enumerate(minima):
            path = f'$.minima[{i}]'
            if require_key(item, 'id', path) != i:
                raise ArtifactParseError(f'expected id {i}', f'{path}.id')
            position = require_vector(require_key(item, 'position', path), f'{path}.position', dimension)
            value = require_number(require_key(item, 'value', path), f'{path}.value')
            net.graph.add_node(i, position=np.array(position), value=value)

        edges = require_key(document, 'edges')
        if not isinstance(edges, list):
            raise ArtifactParseError('expected a list', '$.edges')
        for i, item in enumerate(edges):
            path = f'$.edges[{i}]'
            if require_key(item, 'id', path) != i:
                raise ArtifactParseError(f'expected id {i}', f'{path}.id')
            ends = []
            for key in ('min_a', 'min_b'):
                min_id = require_key(item, key, path)
                if min_id not in net.graph or isinstance(min_id, bool):
                    raise ArtifactParseError(f'unknown minimum id {min_id!r}', f'{path}.{key}')
                ends.append(min_id)
            record = EdgeRecord(
                id=i,
                ts_position=np.array(require_vector(
                    require_key(item, 'ts_position', path), f'{path}.ts_position', dimension)),
                ts_value=require_number(require_key(item, 'ts_value', path), f'{path}.ts_value'),
                min_a=ends[0],
                min_b=ends[1],
                eigenvector=np.array(require_vector(
                    require_key(item, 'eigenvector', path), f'{path}.eigenvector', dimension)),
            )
            net._edges[i] = record
            net.graph.add_edge(record.min_a, record.min_b, key=i, ts_value=record.ts_value)
        return net


# ============================================
# EXPLORATION
# ============================================
def select_pairs(positions, strategy='k-nearest', k=5):
    """Minima index pairs (i < j) that get a band run, in sorted order"""
    n = len(positions)
    if n < 2:
        return []
    if strategy == 'all-pairs':
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    distances = cdist(np.asarray(positions), np.asarray(positions))
    pairs = set()
    for i in range(n):
        order = sorted((j for j in range(n) if j != i), key=lambda j: (distances[i, j], j))
        for j in order[:k]:
            pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


def search_pair(surface, a, b, cfg, minimizer):
    """Band, refine and connect every candidate between two minima"""
    results = []
    for candidate in neb_candidates(surface, a, b, cfg.neb):
        try:
            ts = eigenvector_following_refine(surface, candidate, minimizer, guess=b - a)
        except FilltuneError as exc:
            logger.warning('discarding band candidate %s: %s', candidate.tolist(), exc)
            continue
        minus, plus = connect_transition_state(surface, ts, cfg.connect_displacement, minimizer)
        results.append((ts, minus, plus))
    return results


def explore_landscape(surface, bounds, cfg=None, rng=None, minimizer=None, workers=1):
    """
    Random-start minimization followed by transition-state searches between
    selected minima pairs. Workers only compute; inserts happen here, in start
    order and then pair order, so the network does not depend on scheduling.
    """
    if rng is None:
        raise InvalidArgumentError('exploration needs a RandomSource for its start points')
    cfg = cfg or ExploreConfig()
    minimizer = minimizer or MinimizerConfig()
    if surface.dimension != bounds.dimension:
        raise InvalidArgumentError(
            f'surface is {surface.dimension}-D but bounds are {bounds.dimension}-D'
        )
    net = KineticTransitionNetwork(bounds.dimension, cfg.dedup_position_tol, cfg.dedup_value_tol)
    starts = latin_hypercube(bounds, cfg.n_starts, rng.child('explore-starts'))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        def run_start(index):
            try:
                return local_minimize(surface, starts[index], minimizer)
            except FilltuneError as exc:
                logger.error('start %d failed: %s', index, exc)
                raise

        minima = list(pool.map(run_start, range(len(starts))))
        for index, minimum in enumerate(minima):
            if minimum.converged:
                net.add_minimum_dedup(minimum)
            else:
                logger.debug('start %d did not converge (gradient norm %.3g)', index, minimum.gradient_norm)
        logger.info('located %d distinct minima from %d starts', net.n_minima, cfg.n_starts)

        positions = [m.position for m in net.minima()]
        pairs = select_pairs(positions, cfg.pair_strategy, cfg.k_nearest)

        def run_pair(pair):
            i, j = pair
            try:
                return search_pair(surface, positions[i], positions[j], cfg, minimizer)
            except FilltuneError as exc:
                logger.warning('skipping minima pair (%d, %d): %s', i, j, exc)
                return []

        for found in pool.map(run_pair, pairs):
            for ts, minus, plus in found:
                if not (minus.converged and plus.converged):
                    logger.warning('skipping transition state at %s: descent did not converge',
                                   ts.position.tolist())
                    continue
                id_a = net.add_minimum_dedup(minus)
                id_b = net.add_minimum_dedup(plus)
                net.add_edge(ts, id_a, id_b)

    logger.info('network has %d minima and %d transition states after %d pair searches',
                net.n_minima, net.n_edges, len(pairs))
    return net
