"""Shared fixtures data for the test-suite."""
import math

import numpy as np

TABLE4_GCI_BEST = (1.13, -1.02, -0.06, 1.47, -1.01, -0.05, 0.72, 0.44, -0.02, 1.52, 0.54, 0.02, 3.04)
class Concave2D:
    """Synthetic concave objective on a 2-d box (used by multistart tests)."""

    box = ((-2.0, 2.0), (-1.0, 3.0))
    dimension = 2
    peak = np.array([0.7, 1.3])

    def in_box(self, x):
        return all(lo <= v <= hi for v, (lo, hi) in zip(x, self.box))

    def evaluate(self, x, level="fine"):
        if not self.in_box(x):
            return -math.inf
        d = np.asarray(x, dtype=float) - self.peak
        return 10.0 - float(d @ np.array([[2.0, 0.5], [0.5, 1.0]]) @ d)

    def e_max(self, level):
        return 10.0
