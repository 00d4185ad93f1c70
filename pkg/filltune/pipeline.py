"""
The fill-tuning pipeline: similarity field -> thin-plate fit -> landscape
exploration -> frustration -> roughness surface -> fill-point selection.

Every stage reads its inputs from the artifacts of the previous stages and
writes its own, so a staged run and a single `run_pipeline` call produce the
same files.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import FieldCsvSpec
from .exceptions import (
    ConfigError, EmptyNetworkError, FilltuneError, InvalidArgumentError, StageError,
    UnsupportedDimensionError,
)
from .frustration import (
    RoughnessSurface, all_frustration_vectors, build_roughness_surface, overall_frustration,
    select_fill_points,
)
from .geometry import RandomSource
from .ktn import KineticTransitionNetwork, explore_landscape
from .latent_oracle import build_similarity_field, read_similarity_field, write_similarity_field
from .surfaces import rbf_fit, surface_from_dict
from .utils import check_config_hash, float_list, read_json, write_csv, write_json

logger = logging.getLogger(__name__)

FIELD_FILE = 'similarity_field.csv'
SURFACE_FILE = 'surface.json'
NETWORK_FILE = 'network.ktn.json'
FRUSTRATION_FILE = 'frustration.json'
ROUGHNESS_FILE = 'roughness.json'
DATASET_FILE = 'filltune.jsonl'
BASELINE_FILE = 'baseline.jsonl'
GRID_FILE = 'grid.csv'

STAGES = ('sample', 'fit', 'explore', 'frustration', 'rough', 'select')


# ============================================
# DATASET
# ============================================
@dataclass(frozen=True)
class DatasetEntry:
    rank: int
    point: tuple
    roughness: Optional[float] = None
    tokens: Optional[tuple] = None
    valid: Optional[bool] = None

    def to_dict(self, provenance):
        return {
            'rank': self.rank,
            'point': float_list(self.point),
            'roughness': self.roughness,
            'tokens': list(self.tokens) if self.tokens is not None else None,
            'valid': self.valid,
            'provenance': provenance,
        }


@dataclass
class FillTuneDataset:
    """Ranked fill points; ranks run 1..n with non-increasing roughness"""

    entries: list = field(default_factory=list)
    config_hash: Optional[str] = None
    seed: Optional[int] = None
    shortfall: int = 0

    @classmethod
    def from_points(cls, points, roughness=None, oracle=None, config_hash=None, seed=None, shortfall=0):
        if roughness is not None:
            if len(roughness) != len(points):
                raise InvalidArgumentError(f'{len(points)} points but {len(roughness)} roughness values')
            if any(b > a for a, b in zip(roughness, roughness[1:])):
                raise InvalidArgumentError('roughness values must be non-increasing with rank')
        entries = []
        for index, point in enumerate(points):
            decoded = oracle.safe_decode(point) if oracle is not None else None
            entries.append(DatasetEntry(
                rank=index + 1,
                point=tuple(float_list(point)),
                roughness=float(roughness[index]) if roughness is not None else None,
                tokens=decoded.tokens if decoded is not None else None,
                valid=decoded.valid if decoded is not None else None,
            ))
        return cls(entries, config_hash, seed, shortfall)

    @property
    def provenance(self):
        return {'config_hash': self.config_hash, 'seed': self.seed}

    @property
    def valid_fraction(self):
        flags = [e.valid for e in self.entries if e.valid is not None]
        if not flags:
            return None
        return sum(flags) / len(flags)

    def __len__(self):
        return len(self.entries)

    def points(self):
        return [np.array(e.point) for e in self.entries]

    def write_jsonl(self, path):
        provenance = self.provenance
        with open(path, 'w', encoding='utf-8') as handle:
            for entry in self.entries:
                handle.write(json.dumps(entry.to_dict(provenance), sort_keys=True))
                handle.write('\n')


def select_random_baseline(bounds, k, seed, oracle=None, config_hash=None):
    """k uniform points over the box, in the dataset format, without roughness"""
    if k < 1:
        raise InvalidArgumentError(f'k must be at least 1, got {k}')
    rng = RandomSource(seed).child('baseline')
    points = rng.generator.uniform(bounds.lower, bounds.upper, size=(k, bounds.dimension))
    return FillTuneDataset.from_points(list(points), oracle=oracle, config_hash=config_hash, seed=seed)


# ============================================
# GRID EXPORT
# ============================================
def export_grid(surface, bounds, resolution):
    """(x, y, value) rows over a resolution x resolution grid, x varying fastest"""
    if bounds.dimension != 2:
        raise UnsupportedDimensionError(f'grid export is 2-D only, got a {bounds.dimension}-D box')
    if resolution < 2:
        raise InvalidArgumentError(f'resolution must be at least 2, got {resolution}')
    xs = np.linspace(bounds.lower[0], bounds.upper[0], resolution)
    ys = np.linspace(bounds.lower[1], bounds.upper[1], resolution)
    return [(x, y, surface.value(np.array([x, y]))) for y in ys for x in xs]


# ============================================
# STAGED RUN
# ============================================
class PipelineRun:
    """One configuration bound to one output directory"""

    def __init__(self, config, output_dir=None, workers=1):
        self.config = config
        self.output_dir = output_dir or config.output_dir
        if not self.output_dir:
            raise ConfigError('no output directory given')
        self.workers = max(1, int(workers))
        self.bounds = config.resolved_bounds()
        self.config_hash = config.config_hash()
        self.root_rng = RandomSource(config.seed)

    def path(self, name):
        return os.path.join(self.output_dir, name)

    def _stage(self, name, action):
        """Run one stage; configuration problems pass through, anything else becomes a StageError"""
        os.makedirs(self.output_dir, exist_ok=True)
        logger.info('stage %s started (config %s, seed %d)', name, self.config_hash, self.config.seed)
        try:
            result = action()
        except ConfigError:
            raise
        except (FilltuneError, OSError) as exc:
            logger.error('stage %s failed: %s', name, exc)
            raise StageError(name, exc) from exc
        logger.info('stage %s finished', name)
        return result

    def _read_document(self, name):
        document = read_json(self.path(name))
        check_config_hash(document, self.config_hash, name)
        return document

    def _write_document(self, name, document):
        write_json(self.path(name), {**document, 'config_hash': self.config_hash})

    def load_surface(self):
        return surface_from_dict(self._read_document(SURFACE_FILE))

    def load_network(self):
        explore = self.config.explore
        return KineticTransitionNetwork.from_dict(
            self._read_document(NETWORK_FILE), explore.dedup_position_tol, explore.dedup_value_tol,
        )

    def load_roughness(self):
        return RoughnessSurface.from_dict(self._read_document(ROUGHNESS_FILE))

    # ---- stages ----
    def sample(self):
        def action():
            oracle = self.config.build_oracle()
            if oracle is None:
                logger.info('%s oracle: nothing to sample', self.config.oracle.kind)
                return None
            cfg = self.config
            points, values = build_similarity_field(
                oracle, self.bounds, self.root_rng.child('sample'), cfg.n_samples, cfg.n_neighbors,
                cfg.perturbation_radius, workers=self.workers,
            )
            write_similarity_field(self.path(FIELD_FILE), points, values, self.config_hash)
            return len(points)
        return self._stage('sample', action)

    def fit(self):
        def action():
            surface = self.config.analytic_surface()
            if surface is None:
                surface = rbf_fit(*self._field(), self.config.rbf_smoothing, self.bounds)
            self._write_document(SURFACE_FILE, surface.to_dict())
            return surface
        return self._stage('fit', action)

    def _field(self):
        oracle = self.config.oracle
        if isinstance(oracle, FieldCsvSpec):
            # user-supplied fields carry no hash; one that does must match
            found, points, values = read_similarity_field(oracle.path, self.config.dimension)
            if found is not None:
                check_config_hash({'config_hash': found}, self.config_hash, oracle.path)
        else:
            found, points, values = read_similarity_field(self.path(FIELD_FILE), self.config.dimension)
            check_config_hash({'config_hash': found}, self.config_hash, FIELD_FILE)
        return points, values

    def explore(self):
        def action():
            net = explore_landscape(
                self.load_surface(), self.bounds, self.config.explore, self.root_rng.child('explore'),
                self.config.minimizer, self.workers,
            )
            self._write_document(NETWORK_FILE, net.to_dict())
            return net
        return self._stage('explore', action)

    def frustration(self):
        def action():
            net = self.load_network()
            lengthscale = self.config.lengthscale
            vectors = all_frustration_vectors(net, lengthscale)
            try:
                overall = overall_frustration(net, lengthscale)
            except EmptyNetworkError:
                logger.warning('network has no transition states; overall frustration is undefined')
                overall = None
            self._write_document(FRUSTRATION_FILE, {
                'lengthscale': lengthscale,
                'n_minima': net.n_minima,
                'n_edges': net.n_edges,
                'overall_frustration': overall,
                'vectors': [v.to_dict() for v in vectors],
            })
            return overall
        return self._stage('frustration', action)

    def rough(self):
        def action():
            cfg = self.config
            surface = build_roughness_surface(
                self.load_network(), self.bounds, cfg.lengthscale, cfg.sigma, cfg.delta,
                cfg.weight_floor, cfg.variance_scaling,
            )
            self._write_document(ROUGHNESS_FILE, surface.to_dict())
            logger.info('roughness surface has %d components', len(surface.components))
            return surface
        return self._stage('rough', action)

    def select(self):
        def action():
            cfg = self.config
            selection = select_fill_points(
                self.load_roughness(), self.bounds, cfg.k_select, self.root_rng.child('select'),
                cfg.basin_hopping, cfg.minimizer,
            )
            dataset = FillTuneDataset.from_points(
                list(selection.points), list(selection.values), cfg.build_oracle(),
                self.config_hash, cfg.seed, selection.shortfall,
            )
            dataset.write_jsonl(self.path(DATASET_FILE))
            return dataset
        return self._stage('select', action)

    def baseline(self, k=None):
        count = self.config.k_select if k is None else k

        def action():
            dataset = select_random_baseline(
                self.bounds, count, self.config.seed, self.config.build_oracle(), self.config_hash,
            )
            dataset.write_jsonl(self.path(BASELINE_FILE))
            return dataset
        return self._stage('baseline', action)

    def grid(self, surface_kind='fitted', resolution=50):
        def action():
            if surface_kind == 'fitted':
                surface = self.load_surface()
            elif surface_kind == 'roughness':
                surface = self.load_roughness()
            else:
                raise InvalidArgumentError(f'unknown surface "{surface_kind}"')
            rows = export_grid(surface, self.bounds, resolution)
            write_csv(self.path(GRID_FILE), ['x', 'y', 'value'], rows, self.config_hash)
            return len(rows)
        return self._stage('grid', action)

    def run(self):
        for name in STAGES[:-1]:
            getattr(self, name)()
        return self.select()


def run_pipeline(config, output_dir=None, workers=1):
    """All stages in order; artifacts of completed stages stay on disk if a later one fails"""
    return PipelineRun(config, output_dir, workers).run()
