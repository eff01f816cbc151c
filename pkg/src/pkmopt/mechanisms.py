"""Kinematic models of the lambda, 2UPS-1U and 3-RPR mechanisms.

Every mechanism maps (design parameters, workspace pose) to a ``MechEval``
bundle; ``Mechanism.batch`` does the same for a whole pose grid through the
selected kernel backend.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from ._backend import kernels
from .errors import DegeneratePoseError
from .geometry import rotation_uv

DEFAULT_STEP = 1e-6
RPR_PLATFORM_ANGLES = (math.pi / 2, 7 * math.pi / 6, 11 * math.pi / 6)
RPR_PLATFORM_RADIUS = 1.0


@dataclass(frozen=True)
class MechEval:
    detJ: float
    passive_angles: tuple
    rho: tuple
    quality: float
    clearance: float | None = None


@dataclass(frozen=True)
class LambdaParams:
    l1: float
    l2: float = 1.0

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise ValueError("lambda link lengths must be positive")


@dataclass(frozen=True)
class UpsParams:
    a1: float
    phi1: float
    h1: float
    b1: float
    psi1: float
    h2: float
    a2: float
    phi2: float
    h3: float
    b2: float
    psi2: float
    h4: float
    t: float

    @classmethod
    def from_vector(cls, v):
        v = [float(x) for x in v]
        if len(v) != 13:
            raise ValueError("2UPS-1U needs 13 parameters")
        return cls(*v)

    def as_vector(self):
        return np.array(astuple(self), dtype=float)


@dataclass(frozen=True)
class RprParams:
    r1: float
    theta1: float
    theta2: float
    theta3: float

    @classmethod
    def from_vector(cls, v):
        v = [float(x) for x in v]
        if len(v) != 4:
            raise ValueError("3-RPR needs 4 parameters")
        return cls(*v)

    def as_vector(self):
        return np.array(astuple(self), dtype=float)


@dataclass
class PoseBatch:
    """Solver output for a grid of poses, one row per pose."""

    detJ: np.ndarray
    quality: np.ndarray
    rho: np.ndarray
    passive: np.ndarray
    clearance: np.ndarray | None
    ok: np.ndarray

    def __len__(self):
        return len(self.detJ)


def numeric_jacobian(solver, pose, step=DEFAULT_STEP):
    """Central-difference Jacobian d(solver)/d(pose), one column per pose axis.

    ``step`` may be a scalar or one value per axis.
    """
    pose = np.atleast_1d(np.asarray(pose, dtype=float))
    steps = np.broadcast_to(np.asarray(step, dtype=float), pose.shape)
    cols = []
    for k in range(len(pose)):
        plus = pose.copy()
        minus = pose.copy()
        plus[k] += steps[k]
        minus[k] -= steps[k]
        fp = np.atleast_1d(np.asarray(solver(plus), dtype=float))
        fm = np.atleast_1d(np.asarray(solver(minus), dtype=float))
        cols.append((fp - fm) / (2.0 * steps[k]))
    return np.column_stack(cols)


# -- lambda ----------------------------------------------------------------------

def lambda_solve(p, theta):
    rho, j, ok = kernels.lambda_batch(p.l1, p.l2, np.array([theta], dtype=float))
    if not ok[0]:
        raise DegeneratePoseError(f"lambda actuator length vanishes at theta={theta}")
    j = float(j[0])
    return MechEval(detJ=j, passive_angles=(float(theta),), rho=(float(rho[0]),),
                    quality=j, clearance=None)


def lambda_rho(p):
    """Actuator length as a function of the joint angle (for Jacobian checks)."""
    def rho(theta):
        th = float(np.ravel(theta)[0])
        return math.sqrt(p.l1 ** 2 + p.l2 ** 2 - 2 * p.l1 * p.l2 * math.cos(th))
    return rho


def lambda_vaf(j, vaf_range):
    low, high = vaf_range
    if low < j < high:
        return 1.0 / (1.0 + math.sqrt(2.0) * (j - 1.0) ** 2)
    return 0.0


def lambda_vaf_array(j, vaf_range):
    low, high = vaf_range
    j = np.asarray(j, dtype=float)
    return np.where((j > low) & (j < high), 1.0 / (1.0 + math.sqrt(2.0) * (j - 1.0) ** 2), 0.0)


# -- 2UPS-1U -----------------------------------------------------------------------

def ups_anchors(p):
    """Base anchors A_i and home platform anchors B_i in the base frame."""
    a = np.array([
        [p.a1 * math.cos(p.phi1), p.a1 * math.sin(p.phi1), p.h1],
        [p.a2 * math.cos(p.phi2), p.a2 * math.sin(p.phi2), p.h2],
    ])
    b = np.array([
        [p.b1 * math.cos(p.psi1), p.b1 * math.sin(p.psi1), p.h3 + p.t],
        [p.b2 * math.cos(p.psi2), p.b2 * math.sin(p.psi2), p.h4 + p.t],
    ])
    return a, b


def ups_rho(p):
    """Leg lengths as a function of the (alpha, beta) pose."""
    a, b = ups_anchors(p)
    u = np.array([0.0, 0.0, p.t])

    def rho(pose):
        r = rotation_uv(pose[0], pose[1])
        world = u + (b - u) @ r.T
        return np.linalg.norm(world - a, axis=1)
    return rho


def ups_solve(p, pose, step=DEFAULT_STEP):
    out = kernels.ups_batch(p.as_vector(), np.array([pose], dtype=float), step)
    det, qual, rho, pas, clr, ok = out
    if not ok[0]:
        raise DegeneratePoseError(f"2UPS-1U leg length vanishes at pose {tuple(pose)}")
    return MechEval(detJ=float(det[0]), passive_angles=tuple(map(float, pas[0])),
                    rho=tuple(map(float, rho[0])), quality=float(qual[0]),
                    clearance=float(clr[0]))


# -- 3-RPR ---------------------------------------------------------------------------

def rpr_points(p, pose):
    """Base points P_i and world platform points Q_i."""
    th = np.array([p.theta1, p.theta2, p.theta3])
    base = p.r1 * np.column_stack([np.cos(th), np.sin(th)])
    x, y, phi = pose
    ang = phi + np.asarray(RPR_PLATFORM_ANGLES)
    plat = np.column_stack([x + RPR_PLATFORM_RADIUS * np.cos(ang),
                            y + RPR_PLATFORM_RADIUS * np.sin(ang)])
    return base, plat


def rpr_rho(p):
    def rho(pose):
        base, plat = rpr_points(p, pose)
        return np.linalg.norm(plat - base, axis=1)
    return rho


def rpr_solve(p, pose):
    det, qual, rho, pas, ok = kernels.rpr_batch(
        p.as_vector(), np.array([pose], dtype=float), RPR_PLATFORM_ANGLES, RPR_PLATFORM_RADIUS)
    if not ok[0]:
        raise DegeneratePoseError(f"3-RPR leg length vanishes at pose {tuple(pose)}")
    return MechEval(detJ=float(det[0]), passive_angles=tuple(map(float, pas[0])),
                    rho=tuple(map(float, rho[0])), quality=float(qual[0]), clearance=None)


def rpr_jacobian(p, pose):
    """Velocity-loop Jacobian ``A^-1 B`` (rotational column scaled by platform radius)."""
    base, plat = rpr_points(p, pose)
    u = plat - base
    r = plat - np.asarray(pose[:2])
    a = np.column_stack([u[:, 0], u[:, 1],
                         (r[:, 0] * u[:, 1] - r[:, 1] * u[:, 0]) / RPR_PLATFORM_RADIUS])
    b = np.diag(np.linalg.norm(u, axis=1))
    return np.linalg.solve(a, b), a, b


# -- mechanism registry ------------------------------------------------------------------

class Mechanism:
    """Binds a design vector to a kinematic model."""

    name = ""
    pose_axes: tuple = ()
    n_legs = 0
    has_clearance = False
    param_names: tuple = ()

    def params(self, design):
        raise NotImplementedError

    def batch(self, design, poses):
        raise NotImplementedError

    def solve(self, design, pose):
        raise NotImplementedError

    def max_quality(self, box, poses):
        """Upper bound of the per-pose quality over the design box."""
        return 1.0


class LambdaMechanism(Mechanism):
    name = "lambda"
    pose_axes = ("theta",)
    n_legs = 1
    param_names = ("length",)

    def params(self, design):
        return LambdaParams(l1=float(np.ravel(design)[0]), l2=1.0)

    def batch(self, design, poses):
        p = self.params(design)
        theta = np.asarray(poses, dtype=float).reshape(len(poses), -1)[:, 0]
        rho, j, ok = kernels.lambda_batch(p.l1, p.l2, theta)
        return PoseBatch(detJ=j, quality=j, rho=rho[:, None], passive=theta[:, None].copy(),
                         clearance=None, ok=ok)

    def solve(self, design, pose):
        return lambda_solve(self.params(design), float(np.ravel(pose)[0]))

    def max_quality(self, box, poses, samples=301):
        # j_max scanned over the free length
        lo, hi = box[0]
        theta = np.asarray(poses, dtype=float).reshape(len(poses), -1)[:, 0]
        best = 0.0
        for lam in np.linspace(lo, hi, samples):
            _, j, ok = kernels.lambda_batch(float(lam), 1.0, theta)
            if np.any(ok):
                best = max(best, float(np.max(j[ok.astype(bool)])))
        return best


class UpsMechanism(Mechanism):
    name = "ups2"
    pose_axes = ("alpha", "beta")
    n_legs = 2
    has_clearance = True
    param_names = tuple(f.name for f in fields(UpsParams))

    def __init__(self, step=DEFAULT_STEP):
        self.step = step

    def params(self, design):
        return UpsParams.from_vector(design)

    def batch(self, design, poses):
        det, qual, rho, pas, clr, ok = kernels.ups_batch(
            np.asarray(design, dtype=float), np.asarray(poses, dtype=float), self.step)
        return PoseBatch(detJ=det, quality=qual, rho=rho, passive=pas, clearance=clr, ok=ok)

    def solve(self, design, pose):
        return ups_solve(self.params(design), pose, self.step)


class RprMechanism(Mechanism):
    name = "rpr3"
    pose_axes = ("x", "y", "phi")
    n_legs = 3
    param_names = tuple(f.name for f in fields(RprParams))

    def params(self, design):
        return RprParams.from_vector(design)

    def batch(self, design, poses):
        det, qual, rho, pas, ok = kernels.rpr_batch(
            np.asarray(design, dtype=float), np.asarray(poses, dtype=float),
            RPR_PLATFORM_ANGLES, RPR_PLATFORM_RADIUS)
        return PoseBatch(detJ=det, quality=qual, rho=rho, passive=pas, clearance=None, ok=ok)

    def solve(self, design, pose):
        return rpr_solve(self.params(design), pose)


MECHANISMS = {"lambda": LambdaMechanism, "ups2": UpsMechanism, "rpr3": RprMechanism}


def get_mechanism(name):
    try:
        return MECHANISMS[name]()
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}; expected one of {sorted(MECHANISMS)}") from None


__all__ = [
    "MechEval", "LambdaParams", "UpsParams", "RprParams", "PoseBatch",
    "numeric_jacobian", "lambda_solve", "lambda_vaf", "ups_solve", "rpr_solve",
    "get_mechanism",
]
