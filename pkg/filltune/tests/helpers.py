"""Closed-form surfaces shared by the test modules"""
import numpy as np

from filltune.geometry import Bounds
from filltune.surfaces import Surface


class QuadraticSurface(Surface):
    """f(p) = sum a_i p_i^2"""

    def __init__(self, coefficients, bounds=None):
        coefficients = np.asarray(coefficients, dtype=float)
        super().__init__(bounds or Bounds(-2.0 * np.ones(coefficients.size), 2.0 * np.ones(coefficients.size)))
        self.coefficients = coefficients

    def value(self, p):
        p = self._check(p)
        return float(self.coefficients @ p ** 2)

    def gradient(self, p):
        return 2.0 * self.coefficients * self._check(p)


class RoundedQuadraticSurface(QuadraticSurface):
    """Quadratic whose values are rounded to `decimals` places; the gradient stays exact"""

    def __init__(self, coefficients, decimals=10, bounds=None):
        super().__init__(coefficients, bounds)
        self.decimals = decimals

    def value(self, p):
        return round(super().value(p), self.decimals)


class DoubleWellSurface(Surface):
    """(x^2 - 1)^2 + y^2: minima at (+-1, 0), saddle at the origin"""

    def __init__(self, bounds=None):
        super().__init__(bounds or Bounds([-2.0, -2.0], [2.0, 2.0]))

    def value(self, p):
        x, y = self._check(p)
        return float((x ** 2 - 1.0) ** 2 + y ** 2)

    def gradient(self, p):
        x, y = self._check(p)
        return np.array([4.0 * x * (x ** 2 - 1.0), 2.0 * y])


class LinearSurface(Surface):
    def __init__(self, slope, offset=0.0, bounds=None):
        slope = np.asarray(slope, dtype=float)
        super().__init__(bounds or Bounds(-np.ones(slope.size), np.ones(slope.size)))
        self.slope = slope
        self.offset = offset

    def value(self, p):
        return float(self.slope @ self._check(p) + self.offset)

    def gradient(self, p):
        self._check(p)
        return self.slope.copy()


class NaNSurface(Surface):
    def __init__(self, dimension=2):
        super().__init__(Bounds.unit(dimension))

    def value(self, p):
        self._check(p)
        return float('nan')

    def gradient(self, p):
        return np.full(self.dimension, np.nan)
