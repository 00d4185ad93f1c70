import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from filltune.exceptions import InvalidArgumentError
from filltune.geometry import (
    Bounds, RandomSource, as_point, euclidean_distance, latin_hypercube, sample_sphere_shell,
)


class PointAndBoundsTests(SimpleTestCase):
    def test_as_point_rejects_non_finite(self):
        with self.assertRaises(InvalidArgumentError):
            as_point([0.0, float('inf')])

    def test_as_point_checks_dimension(self):
        with self.assertRaises(InvalidArgumentError):
            as_point([1.0, 2.0], dimension=3)

    def test_bounds_require_lower_below_upper(self):
        with self.assertRaises(InvalidArgumentError):
            Bounds([0.0, 1.0], [1.0, 1.0])

    def test_bounds_clip_and_contains(self):
        bounds = Bounds([0.0, -1.0], [1.0, 1.0])
        assert_array_equal(bounds.clip([2.0, -3.0]), [1.0, -1.0])
        self.assertTrue(bounds.contains([0.5, 0.0]))
        self.assertFalse(bounds.contains([1.5, 0.0]))


class RandomSourceTests(SimpleTestCase):
    def test_same_seed_same_draws(self):
        a = RandomSource(42).generator.random(5)
        b = RandomSource(42).generator.random(5)
        assert_array_equal(a, b)

    def test_child_depends_only_on_seed_and_label(self):
        parent = RandomSource(7)
        first = parent.child('lhs').generator.random(3)
        parent.generator.random(100)
        second = parent.child('lhs').generator.random(3)
        assert_array_equal(first, second)
        self.assertNotEqual(parent.child('lhs').seed, parent.child('explore').seed)

    def test_seed_must_be_unsigned_64_bit(self):
        with self.assertRaises(InvalidArgumentError):
            RandomSource(-1)
        with self.assertRaises(InvalidArgumentError):
            RandomSource(2 ** 64)


class EuclideanDistanceTests(SimpleTestCase):
    def test_identity(self):
        self.assertEqual(euclidean_distance([0.3, -1.2], [0.3, -1.2]), 0.0)

    def test_pythagorean_triple(self):
        self.assertEqual(euclidean_distance([0.0, 0.0], [3.0, 4.0]), 5.0)

    def test_matches_direct_summation(self):
        gen = RandomSource(3).generator
        a, b = gen.normal(size=7), gen.normal(size=7)
        expected = sum((x - y) ** 2 for x, y in zip(a, b)) ** 0.5
        self.assertAlmostEqual(euclidean_distance(a, b), expected, delta=1e-12)

    def test_triangle_inequality(self):
        gen = RandomSource(4).generator
        for _ in range(50):
            a, b, c = gen.normal(size=(3, 5))
            self.assertLessEqual(
                euclidean_distance(a, c), euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12
            )

    def test_dimension_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            euclidean_distance([0.0, 0.0], [0.0, 0.0, 0.0])


class SphereShellTests(SimpleTestCase):
    def test_empty(self):
        self.assertEqual(sample_sphere_shell([0.0, 0.0], 0.05, 0, RandomSource(1)), [])

    def test_points_lie_on_the_shell(self):
        center = np.array([0.2, -0.4, 1.0])
        points = sample_sphere_shell(center, 0.05, 10, RandomSource(1))
        self.assertEqual(len(points), 10)
        for p in points:
            self.assertAlmostEqual(euclidean_distance(p, center), 0.05, delta=1e-12)

    def test_directions_are_isotropic(self):
        points = np.array(sample_sphere_shell(np.zeros(3), 1.0, 100000, RandomSource(2)))
        self.assertLess(np.linalg.norm(points.mean(axis=0)), 0.02)

    def test_radius_must_be_positive(self):
        with self.assertRaises(InvalidArgumentError):
            sample_sphere_shell([0.0], 0.0, 3, RandomSource(1))


class LatinHypercubeTests(SimpleTestCase):
    def _assert_one_per_stratum(self, bounds, points):
        n = len(points)
        points = np.array(points)
        strata = np.floor((points - bounds.lower) / bounds.widths * n).astype(int)
        strata = np.minimum(strata, n - 1)
        for axis in range(bounds.dimension):
            assert_array_equal(np.bincount(strata[:, axis], minlength=n), np.ones(n))

    def test_single_sample(self):
        bounds = Bounds([0.0, 0.0], [1.0, 1.0])
        points = latin_hypercube(bounds, 1, RandomSource(5))
        self.assertEqual(len(points), 1)
        self.assertTrue(bounds.contains(points[0]))

    def test_quartiles(self):
        bounds = Bounds.unit(2)
        self._assert_one_per_stratum(bounds, latin_hypercube(bounds, 4, RandomSource(5)))

    def test_occupancy_in_many_dimensions(self):
        bounds = Bounds(-5.0 * np.ones(32), 5.0 * np.ones(32))
        self._assert_one_per_stratum(bounds, latin_hypercube(bounds, 1000, RandomSource(6)))

    def test_reproducible(self):
        bounds = Bounds.unit(3)
        first = latin_hypercube(bounds, 20, RandomSource(9))
        second = latin_hypercube(bounds, 20, RandomSource(9))
        assert_allclose(np.array(first), np.array(second), rtol=0, atol=0)

    def test_zero_samples(self):
        with self.assertRaises(InvalidArgumentError):
            latin_hypercube(Bounds.unit(2), 0, RandomSource(1))
