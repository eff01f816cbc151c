"""Geometric primitives: condition index, segment clearance, rotations, RDW grids."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

SHAPES = ("interval", "disk", "box-times-interval")
_SHAPE_AXES = {"interval": 1, "disk": 2, "box-times-interval": 3}


@dataclass(frozen=True)
class Segment3:
    p0: tuple
    p1: tuple

    def __post_init__(self):
        p0 = tuple(float(v) for v in self.p0)
        p1 = tuple(float(v) for v in self.p1)
        if len(p0) != 3 or len(p1) != 3:
            raise ValueError("segment endpoints must be 3-vectors")
        if not all(map(math.isfinite, p0 + p1)):
            raise ValueError("segment endpoints must be finite")
        if p0 == p1:
            raise ValueError("segment has zero length")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)


@dataclass(frozen=True)
class RDWSpec:
    """Desired regular dextrous workspace.

    ``half_extents`` are per-axis half widths; for a disk both entries are
    the radius. Rotational axes are in radians.
    """

    shape: str
    center: tuple
    half_extents: tuple
    coarse_points_per_axis: int
    fine_points_per_axis: int

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown RDW shape {self.shape!r}; expected one of {SHAPES}")
        center = tuple(float(c) for c in self.center)
        half = tuple(float(h) for h in self.half_extents)
        naxes = _SHAPE_AXES[self.shape]
        if len(center) != naxes or len(half) != naxes:
            raise ValueError(f"{self.shape} workspace needs {naxes} axes")
        if any(h <= 0 or not math.isfinite(h) for h in half):
            raise ValueError("all extents must be positive")
        if self.shape == "disk" and half[0] != half[1]:
            raise ValueError("disk workspace needs equal half extents (the radius)")
        if not (1 <= self.coarse_points_per_axis < self.fine_points_per_axis):
            raise ValueError("need 1 <= coarse_points_per_axis < fine_points_per_axis")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_extents", half)

    @property
    def ndim(self):
        return len(self.center)

    def points_per_axis(self, level):
        if level == "coarse":
            return self.coarse_points_per_axis
        if level == "fine":
            return self.fine_points_per_axis
        raise ValueError(f"level must be 'coarse' or 'fine', got {level!r}")


def inverse_condition_index(matrix):
    """Inverse condition number sigma_min / sigma_max, in [0, 1].

    A 1x1 input (a scalar transmission ratio) is returned as ``|j|``
    clamped to [0, 1]. The zero matrix gives 0.
    """
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    if m.shape == (1, 1):
        return min(abs(float(m[0, 0])), 1.0)
    if not np.any(m):
        return 0.0
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[-1] / s[0])


def segment_distance(s1, s2):
    """Minimum Euclidean distance between two closed 3-D segments."""
    return kernels.segment_distance(s1.p0, s1.p1, s2.p0, s2.p1)


def rotation_uv(alpha, beta):
    """Universal-joint rotation ``Rx(alpha) @ Ry(beta)``."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]])
    ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    return rx @ ry


def grid_points(rdw, level):
    """Lattice over the RDW, inclusive of endpoints, first axis slowest.

    Returns an ``(N, ndim)`` array. Disk lattices keep points with
    distance to the centre <= radius.
    """
    n = rdw.points_per_axis(level)
    axes = []
    for c, h in zip(rdw.center, rdw.half_extents):
        axes.append(np.array([c]) if n == 1 else np.linspace(c - h, c + h, n))
    pts = np.array(list(itertools.product(*axes)), dtype=float)
    if rdw.shape == "disk":
        r = rdw.half_extents[0]
        d = np.hypot(pts[:, 0] - rdw.center[0], pts[:, 1] - rdw.center[1])
        pts = pts[d <= r * (1.0 + 1e-12)]
    return pts
