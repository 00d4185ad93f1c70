import json
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from filltune.config import load_config, parse_config
from filltune.exceptions import (
    ArtifactMismatchError, ConfigError, InvalidArgumentError, StageError, UnsupportedDimensionError,
)
from filltune.geometry import Bounds
from filltune.latent_oracle import write_similarity_field
from filltune.pipeline import (
    DATASET_FILE, FIELD_FILE, FRUSTRATION_FILE, NETWORK_FILE, ROUGHNESS_FILE, SURFACE_FILE,
    FillTuneDataset, PipelineRun, export_grid, run_pipeline, select_random_baseline,
)
from filltune.surfaces import AnalyticMixtureSurface, MixtureComponent

from .helpers import LinearSurface

ARTIFACTS = (SURFACE_FILE, NETWORK_FILE, FRUSTRATION_FILE, ROUGHNESS_FILE, DATASET_FILE)


def demo_config(**overrides):
    document = {
        'dimension': 2,
        'oracle': {'kind': 'analytic'},
        'explore': {'n_starts': 30},
        'basin_hopping': {'n_steps': 15, 'n_chains': 2},
        'k_select': 5,
        'variance_scaling': 'absolute',
        'seed': 4,
    }
    document.update(overrides)
    return parse_config(document)


def flat_config(**overrides):
    document = {
        'dimension': 2,
        'oracle': {'kind': 'constant'},
        'n_samples': 12,
        'n_neighbors': 4,
        'explore': {'n_starts': 6},
    }
    document.update(overrides)
    return parse_config(document)


def read_lines(path):
    with open(path, encoding='utf-8') as handle:
        return [json.loads(line) for line in handle]


class TempDirTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()


class ConfigTests(TempDirTestCase):
    def test_defaults(self):
        config = parse_config({'dimension': 3})
        self.assertEqual(config.n_samples, 5000)
        self.assertEqual(config.n_neighbors, 10)
        self.assertEqual(config.perturbation_radius, 0.05)
        self.assertEqual(config.rbf_smoothing, 1e-5)
        self.assertEqual(config.lengthscale, 80.0)
        self.assertEqual(config.sigma, 0.99)
        self.assertEqual(config.delta, 0.25)
        self.assertEqual(config.variance_scaling, 'box')
        self.assertEqual(config.k_select, 100)
        self.assertEqual(config.oracle.kind, 'quantized')
        self.assertEqual(config.resolved_bounds(), Bounds.unit(3))

    def test_analytic_demo_uses_its_own_box(self):
        self.assertEqual(demo_config().resolved_bounds(), Bounds([-3.0, -3.0], [3.0, 3.0]))
        self.assertIsNone(demo_config().build_oracle())

    def test_unknown_key(self):
        with self.assertRaises(ConfigError):
            parse_config({'dimension': 2, 'lenghtscale': 10.0})

    def test_consistency_checks(self):
        bad = [
            {'dimension': 3, 'bounds': {'lower': [0, 0], 'upper': [1, 1]}},
            {'dimension': 2, 'bounds': {'lower': [0, 1], 'upper': [1, 1]}},
            {'dimension': 3, 'oracle': {'kind': 'analytic'}},
            {'dimension': 2, 'oracle': {'kind': 'field_csv', 'path': 'x.csv'}},
            {'dimension': 4, 'n_samples': 5},
            {'dimension': 2, 'seed': -1},
            {'dimension': 2, 'oracle': {'kind': 'quantized', 'bins': 3, 'vocabulary': ['a', 'b']}},
        ]
        for document in bad:
            with self.subTest(document=document):
                with self.assertRaises(ConfigError):
                    parse_config(document)

    def test_hash_ignores_the_output_directory(self):
        first = parse_config({'dimension': 2, 'output_dir': 'a'})
        second = parse_config({'dimension': 2, 'output_dir': 'b'})
        self.assertEqual(first.config_hash(), second.config_hash())

    def test_seed_changes_the_hash(self):
        config = parse_config({'dimension': 2})
        self.assertNotEqual(config.config_hash(), config.with_overrides(seed=1).config_hash())

    def test_load_config(self):
        path = os.path.join(self.out, 'config.json')
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump({'dimension': 2, 'seed': 3}, handle)
        config = load_config(path, seed=9, output_dir='elsewhere')
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.output_dir, 'elsewhere')

    def test_load_errors(self):
        with self.assertRaises(ConfigError):
            load_config(os.path.join(self.out, 'missing.json'))
        path = os.path.join(self.out, 'broken.json')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write('{"dimension": ')
        with self.assertRaises(ConfigError):
            load_config(path)


class DemoPipelineTests(TempDirTestCase):
    def test_dataset_is_ranked_by_roughness(self):
        config = demo_config()
        run = PipelineRun(config, self.out)
        dataset = run.run()
        self.assertGreater(len(dataset), 0)
        self.assertEqual(len(dataset) + dataset.shortfall, config.k_select)

        records = read_lines(run.path(DATASET_FILE))
        self.assertEqual([r['rank'] for r in records], list(range(1, len(records) + 1)))
        values = [r['roughness'] for r in records]
        self.assertEqual(values, sorted(values, reverse=True))
        for record in records:
            self.assertEqual(record['provenance'], {'config_hash': config.config_hash(), 'seed': 4})
            self.assertIsNone(record['valid'])

        roughness = run.load_roughness()
        for entry in dataset.entries:
            p = np.array(entry.point)
            self.assertTrue(run.bounds.contains(p, tol=1e-12))
            self.assertAlmostEqual(roughness.value(p), entry.roughness, delta=1e-12)
            for axis in range(2):
                for step in (-1e-3, 1e-3):
                    nearby = run.bounds.clip(p + step * np.eye(2)[axis])
                    self.assertLessEqual(roughness.value(nearby), entry.roughness + 1e-8)

    def test_artifacts_carry_the_config_hash(self):
        config = demo_config()
        run_pipeline(config, self.out)
        for name in (SURFACE_FILE, NETWORK_FILE, FRUSTRATION_FILE, ROUGHNESS_FILE):
            with open(os.path.join(self.out, name), encoding='utf-8') as handle:
                self.assertEqual(json.load(handle)['config_hash'], config.config_hash())

    def test_frustration_artifact(self):
        run = PipelineRun(demo_config(), self.out)
        run.fit()
        run.explore()
        overall = run.frustration()
        with open(run.path(FRUSTRATION_FILE), encoding='utf-8') as handle:
            document = json.load(handle)
        self.assertEqual(document['lengthscale'], 80.0)
        self.assertGreater(document['n_edges'], 0)
        self.assertEqual(document['overall_frustration'], overall)
        self.assertGreater(overall, 0.0)

    def test_rerun_writes_identical_files(self):
        second = os.path.join(self.out, 'again')
        run_pipeline(demo_config(), os.path.join(self.out, 'first'))
        run_pipeline(demo_config(), second)
        for name in ARTIFACTS:
            with open(os.path.join(self.out, 'first', name), 'rb') as a, open(os.path.join(second, name), 'rb') as b:
                self.assertEqual(a.read(), b.read(), name)


class FailureTests(TempDirTestCase):
    def test_flat_oracle_fails_at_selection(self):
        run = PipelineRun(flat_config(), self.out)
        with self.assertRaises(StageError) as ctx:
            run.run()
        self.assertEqual(ctx.exception.stage, 'select')
        for name in (FIELD_FILE, SURFACE_FILE, NETWORK_FILE, FRUSTRATION_FILE, ROUGHNESS_FILE):
            self.assertTrue(os.path.exists(run.path(name)), name)
        self.assertFalse(os.path.exists(run.path(DATASET_FILE)))
        with open(run.path(FRUSTRATION_FILE), encoding='utf-8') as handle:
            document = json.load(handle)
        self.assertEqual(document['n_edges'], 0)
        self.assertIsNone(document['overall_frustration'])

    def test_missing_input_is_a_stage_error(self):
        run = PipelineRun(flat_config(), self.out)
        with self.assertRaises(StageError) as ctx:
            run.explore()
        self.assertEqual(ctx.exception.stage, 'explore')

    def test_artifacts_from_another_config_are_rejected(self):
        PipelineRun(flat_config(), self.out).sample()
        with self.assertRaises(ArtifactMismatchError):
            PipelineRun(flat_config(seed=1), self.out).fit()

    def test_output_directory_is_required(self):
        with self.assertRaises(ConfigError):
            PipelineRun(flat_config())


class ExternalFieldTests(TempDirTestCase):
    def test_fit_reads_a_field_without_hash(self):
        field_path = os.path.join(self.out, 'external.csv')
        points = [np.array([x, y]) for x in (0.1, 0.5, 0.9) for y in (0.2, 0.6, 0.8)]
        write_similarity_field(field_path, points, [float(p @ p) for p in points])
        config = parse_config({
            'dimension': 2,
            'bounds': {'lower': [0, 0], 'upper': [1, 1]},
            'oracle': {'kind': 'field_csv', 'path': field_path},
        })
        run = PipelineRun(config, os.path.join(self.out, 'run'))
        self.assertIsNone(run.sample())
        surface = run.fit()
        for p in points:
            self.assertAlmostEqual(surface.value(p), float(p @ p), delta=1e-3)
        with open(run.path(SURFACE_FILE), encoding='utf-8') as handle:
            self.assertEqual(json.load(handle)['kind'], 'rbf')


class BaselineTests(TempDirTestCase):
    def test_single_point(self):
        dataset = select_random_baseline(Bounds.unit(3), 1, seed=0)
        self.assertEqual(len(dataset), 1)
        self.assertEqual(dataset.entries[0].rank, 1)
        self.assertIsNone(dataset.entries[0].roughness)

    def test_seed_changes_the_points(self):
        first = select_random_baseline(Bounds.unit(2), 5, seed=1).points()
        second = select_random_baseline(Bounds.unit(2), 5, seed=2).points()
        self.assertFalse(np.array_equal(first, second))

    def test_points_are_uniform(self):
        points = np.array(select_random_baseline(Bounds.unit(2), 10000, seed=3).points())
        counts, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=10, range=[[0, 1], [0, 1]])
        chi_square = float(np.sum((counts - 100.0) ** 2 / 100.0))
        self.assertLess(chi_square, 169.0)

    def test_k_must_be_positive(self):
        with self.assertRaises(InvalidArgumentError):
            select_random_baseline(Bounds.unit(2), 0, seed=0)

    def test_stage_decodes_points(self):
        run = PipelineRun(parse_config({'dimension': 2, 'k_select': 7}), self.out)
        dataset = run.baseline()
        self.assertEqual(len(dataset), 7)
        self.assertEqual(dataset.valid_fraction, 1.0)
        records = read_lines(run.path('baseline.jsonl'))
        self.assertEqual(len(records[0]['tokens']), 2)


class DatasetTests(SimpleTestCase):
    def test_roughness_must_not_increase(self):
        with self.assertRaises(InvalidArgumentError):
            FillTuneDataset.from_points([np.zeros(2), np.ones(2)], roughness=[0.1, 0.2])

    def test_lengths_must_match(self):
        with self.assertRaises(InvalidArgumentError):
            FillTuneDataset.from_points([np.zeros(2)], roughness=[0.3, 0.2])


class GridTests(SimpleTestCase):
    def test_corners_and_order(self):
        bounds = Bounds([-1.0, 0.0], [1.0, 2.0])
        rows = export_grid(LinearSurface([1.0, 10.0], bounds=bounds), bounds, 3)
        self.assertEqual(len(rows), 9)
        assert_allclose(rows[0][:2], [-1.0, 0.0])
        assert_allclose(rows[2][:2], [1.0, 0.0])
        assert_allclose(rows[3][:2], [-1.0, 1.0])
        assert_allclose(rows[-1][:2], [1.0, 2.0])
        self.assertAlmostEqual(rows[-1][2], 21.0, delta=1e-12)

    def test_constant_surface(self):
        bounds = Bounds.unit(2)
        rows = export_grid(LinearSurface([0.0, 0.0], offset=2.0, bounds=bounds), bounds, 4)
        self.assertEqual({row[2] for row in rows}, {2.0})

    def test_peak_lands_on_the_mean(self):
        bounds = Bounds([-1.0, -1.0], [1.0, 1.0])
        surface = AnalyticMixtureSurface([MixtureComponent(1.0, (0.3, -0.2), 0.5)], bounds)
        rows = export_grid(surface, bounds, 101)
        x, y, _ = max(rows, key=lambda row: row[2])
        self.assertLessEqual(abs(x - 0.3), 0.02)
        self.assertLessEqual(abs(y + 0.2), 0.02)

    def test_two_dimensional_only(self):
        bounds = Bounds.unit(3)
        with self.assertRaises(UnsupportedDimensionError):
            export_grid(LinearSurface([0.0, 0.0, 0.0], bounds=bounds), bounds, 5)

    def test_resolution(self):
        with self.assertRaises(InvalidArgumentError):
            export_grid(LinearSurface([0.0, 0.0]), Bounds.unit(2), 1)


def near_face_fraction(points, faces=(0.25, 0.5, 0.75), eps=0.02):
    """Share of points with some coordinate within eps of an interior bin face"""
    points = np.asarray(points)
    near = np.any(np.abs(points[:, :, None] - np.asarray(faces)) <= eps, axis=(1, 2))
    return float(np.mean(near))


class QuantizedFieldTests(TempDirTestCase):
    def test_fill_points_gather_at_bin_faces(self):
        config = parse_config({'dimension': 2, 'n_samples': 500, 'k_select': 20, 'seed': 7})
        dataset = run_pipeline(config, self.out)
        self.assertGreater(len(dataset), 0)

        band = 1.0 - (1.0 - 3 * 2 * 0.02) ** 2
        fraction = near_face_fraction(dataset.points())
        self.assertGreaterEqual(fraction, 2.0 * band)

        wins = sum(
            fraction > near_face_fraction(select_random_baseline(Bounds.unit(2), 20, seed).points())
            for seed in range(20)
        )
        self.assertGreaterEqual(wins, 18)
