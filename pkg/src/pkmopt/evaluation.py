"""Per-design evaluation over the discretised workspace and actuator bracket selection."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import NoFeasiblePointError
from .geometry import grid_points
from .mechanisms import PoseBatch, lambda_vaf_array

REWARD_KINDS = ("binary", "quality", "vaf", "center_biased")
BRACKET_REL_TOL = 1e-12


@dataclass(frozen=True)
class ValidPointRecord:
    rho: tuple
    reward: float
    feasible: bool = True


@dataclass(frozen=True)
class ActuatorBracket:
    rho_min: float
    rho_max: float

    @property
    def ratio(self):
        return self.rho_max / self.rho_min


@dataclass(frozen=True)
class ConstraintConfig:
    """Constraint switches and thresholds.

    ``passive_limits`` holds one ``(q_min, q_max)`` pair per passive joint
    reported by the mechanism (use +-inf for an unlimited joint); an empty
    tuple disables the passive-joint check.
    """

    passive_limits: tuple = ()
    collision_enabled: bool = False
    collision_threshold: float = 0.05
    vaf_range: tuple | None = None
    singular_tol: float = 1e-9
    stroke: float = 1.5
    bracket_steps: int = 100

    def __post_init__(self):
        if not 1.0 <= self.stroke <= 2.0:
            raise ValueError("stroke must lie in [1, 2]")
        if self.collision_threshold < 0:
            raise ValueError("collision_threshold must be >= 0")
        if self.bracket_steps < 1:
            raise ValueError("bracket_steps must be positive")
        if self.singular_tol < 0:
            raise ValueError("singular_tol must be >= 0")
        limits = tuple((float(lo), float(hi)) for lo, hi in self.passive_limits)
        object.__setattr__(self, "passive_limits", limits)
        if self.vaf_range is not None:
            lo, hi = (float(x) for x in self.vaf_range)
            if not lo < hi:
                raise ValueError("vaf_range needs low < high")
            object.__setattr__(self, "vaf_range", (lo, hi))


@dataclass(frozen=True)
class RewardStrategy:
    kind: str = "quality"
    inner: str | None = None

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward kind {self.kind!r}")
        if self.kind == "center_biased":
            if self.inner not in ("binary", "quality", "vaf"):
                raise ValueError("center_biased needs inner in {binary, quality, vaf}")
        elif self.inner is not None:
            raise ValueError("only center_biased takes an inner strategy")

    @property
    def base_kind(self):
        return self.inner if self.kind == "center_biased" else self.kind


def center_weights(poses, rdw, d_max=None):
    """Linear centre bias ``1 - d / d_max`` with per-axis normalised distance."""
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    c = np.asarray(rdw.center)
    h = np.asarray(rdw.half_extents)
    d = np.sqrt(np.sum(((poses - c) / h) ** 2, axis=1))
    if d_max is None:
        d_max = float(d.max()) if len(d) else 0.0
    if d_max <= 0.0:
        return np.ones(len(d))
    return np.clip(1.0 - d / d_max, 0.0, 1.0)


def center_biased(inner_reward, pose, rdw, level="fine"):
    """Weight one pose's inner reward by its closeness to the RDW centre."""
    grid = grid_points(rdw, level)
    d_max = float(np.max(np.sqrt(np.sum(((grid - np.asarray(rdw.center))
                                          / np.asarray(rdw.half_extents)) ** 2, axis=1))))
    return float(center_weights([pose], rdw, d_max)[0]) * inner_reward


def base_rewards(kind, quality, vaf_range):
    quality = np.asarray(quality, dtype=float)
    if kind == "binary":
        return np.ones_like(quality)
    if kind == "quality":
        return quality.copy()
    if kind == "vaf":
        if vaf_range is None:
            raise ValueError("vaf reward needs constraints.vaf_range")
        return lambda_vaf_array(quality, vaf_range)
    raise ValueError(f"unknown reward kind {kind!r}")


def pose_rewards(rs, poses, quality, rdw, cc):
    r = base_rewards(rs.base_kind, quality, cc.vaf_range)
    if rs.kind == "center_biased":
        r = r * center_weights(poses, rdw)
    return r


# -- actuator bracket -------------------------------------------------------------

def bracket_candidates(rho_min, rho_max, stroke, steps):
    """Candidate lower bounds swept from rho_min to rho_max / stroke."""
    return np.linspace(rho_min, rho_max / stroke, steps)


def in_bracket(rho, lower, upper):
    """Mask of rows whose every leg lies in ``[lower, upper]`` (relative tol 1e-12)."""
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    tol = BRACKET_REL_TOL * upper
    return (rho.min(axis=1) >= lower - tol) & (rho.max(axis=1) <= upper + tol)


def _bracket_arrays(rho, rewards, stroke, steps):
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 1:
        rho = rho[:, None]
    if len(rho) == 0:
        raise NoFeasiblePointError("no records to select an actuator bracket from")
    lo = float(rho.min())
    hi = float(rho.max())
    if hi <= stroke * lo:
        return kernels.ordered_sum(rewards), ActuatorBracket(lo, hi)
    lowers = bracket_candidates(lo, hi, stroke, steps)
    e, k = kernels.bracket_sweep(rho, rewards, lowers, stroke, BRACKET_REL_TOL)
    lower = float(lowers[k])
    return float(e), ActuatorBracket(lower, stroke * lower)


def best_actuator_bracket(records, stroke, steps=100):
    """Pick the stroke-limited actuator bracket that keeps the most reward.

    If all leg lengths already fit within one stroke the full range is
    returned untouched. Otherwise ``steps`` brackets ``[lo, stroke*lo]`` are
    tried with ``lo`` swept evenly from the smallest length to
    ``max / stroke``; the first (smallest ``lo``) of equally good brackets
    wins.
    """
    if not records:
        raise NoFeasiblePointError("no records to select an actuator bracket from")
    rho = np.array([r.rho for r in records], dtype=float)
    rewards = np.array([r.reward for r in records], dtype=float)
    return _bracket_arrays(rho, rewards, stroke, steps)


# -- design evaluation -----------------------------------------------------------------

@dataclass
class Evaluation:
    e: float
    poses: np.ndarray
    batch: PoseBatch
    rewards: np.ndarray
    feasible: np.ndarray
    in_bracket: np.ndarray
    bracket: ActuatorBracket | None
    singular: bool
    counters: dict = field(default_factory=dict)

    @property
    def records(self):
        if self.singular:
            return []
        return [ValidPointRecord(tuple(map(float, r)), float(w), bool(f))
                for r, w, f in zip(self.batch.rho, self.rewards, self.feasible)]

    @property
    def selected(self):
        """Poses that are feasible and inside the chosen bracket."""
        if self.singular:
            return np.zeros(len(self.poses), dtype=bool)
        return self.feasible & self.in_bracket

    @property
    def feasible_count(self):
        return int(np.count_nonzero(self.selected))

    @property
    def gci(self):
        n = self.feasible_count
        return self.e / n if n and math.isfinite(self.e) else float("nan")


def singular_mask(batch, tol):
    """True at poses that are degenerate or within ``tol`` of det(J) = 0."""
    return (batch.ok == 0) | ~(np.abs(batch.detJ) > tol)


def evaluate_poses(design, mech, poses, cc, rs, rdw):
    """Constraint/reward pass over an explicit, ordered pose array."""
    poses = np.asarray(poses, dtype=float)
    batch = mech.batch(design, poses)
    n = len(poses)
    counters = {"singular": 0, "passive": 0, "collision": 0, "bracket": 0}
    empty = np.zeros(n, dtype=bool)

    sing = singular_mask(batch, cc.singular_tol)
    signs = np.sign(batch.detJ)
    flipped = n > 1 and bool(np.any(signs[1:] != signs[:-1]))
    if n == 0 or np.any(sing) or flipped:
        counters["singular"] = 1
        return Evaluation(-math.inf, poses, batch, np.zeros(n), empty, empty, None, True, counters)

    feasible = np.ones(n, dtype=bool)
    if cc.passive_limits:
        lim = np.asarray(cc.passive_limits, dtype=float)
        if lim.shape[0] != batch.passive.shape[1]:
            raise ValueError(f"{mech.name} has {batch.passive.shape[1]} passive joints, "
                             f"got {lim.shape[0]} limits")
        q = batch.passive
        bad = np.any((q >= lim[:, 1]) | (q <= lim[:, 0]), axis=1)
        counters["passive"] = int(np.count_nonzero(bad))
        feasible &= ~bad
    if cc.collision_enabled and batch.clearance is not None:
        hit = batch.clearance < cc.collision_threshold
        counters["collision"] = int(np.count_nonzero(hit))
        feasible &= ~hit

    rewards = np.where(feasible, pose_rewards(rs, poses, batch.quality, rdw, cc), 0.0)
    e, bracket = _bracket_arrays(batch.rho, rewards, cc.stroke, cc.bracket_steps)
    inside = in_bracket(batch.rho, bracket.rho_min, bracket.rho_max)
    counters["bracket"] = int(np.count_nonzero(feasible & ~inside))
    return Evaluation(e, poses, batch, rewards, feasible, inside, bracket, False, counters)


def evaluate_design(design, mech, rdw, cc, rs, level="fine"):
    """Evaluate one design over ``grid_points(rdw, level)``.

    Returns an ``Evaluation``; ``e`` is ``-inf`` if the grid touches or
    crosses a singularity (detJ within ``singular_tol`` of zero, a sign
    change between consecutive grid points, or a degenerate pose).
    Otherwise passive-limit and collision violations zero the pose reward
    and ``e`` is the reward kept by the best actuator bracket.
    """
    return evaluate_poses(design, mech, grid_points(rdw, level), cc, rs, rdw)


# -- grid dump --------------------------------------------------------------------------

def grid_header(mech):
    cols = list(mech.pose_axes) + ["detJ", "quality"]
    cols += [f"rho{i + 1}" for i in range(mech.n_legs)]
    cols += ["clearance", "reward", "feasible"]
    return cols


def _fmt(x):
    return format(float(x), ".17g")


def write_grid_csv(ev, mech, fh):
    """One CSV row per pose: pose, detJ, quality, rho_i, clearance, reward, feasible."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(grid_header(mech))
    sel = ev.selected
    b = ev.batch
    for i in range(len(ev.poses)):
        row = [_fmt(x) for x in ev.poses[i]]
        row += [_fmt(b.detJ[i]), _fmt(b.quality[i])]
        row += [_fmt(r) for r in b.rho[i]]
        row.append("" if b.clearance is None else _fmt(b.clearance[i]))
        row.append(_fmt(ev.rewards[i] if sel[i] else 0.0))
        row.append("1" if sel[i] else "0")
        w.writerow(row)


# -- problem binding -------------------------------------------------------------------------

class DesignProblem:
    """Objective ``design -> e`` over a parameter box at a grid level.

    Points outside the box evaluate to ``-inf``.
    """

    def __init__(self, mechanism, box, rdw, constraints, reward):
        self.mechanism = mechanism
        self.box = tuple((float(lo), float(hi)) for lo, hi in box)
        self.rdw = rdw
        self.constraints = constraints
        self.reward = reward
        self._grids = {}
        self._e_max = {}

    @property
    def dimension(self):
        return len(self.box)

    def grid(self, level):
        if level not in self._grids:
            self._grids[level] = grid_points(self.rdw, level)
        return self._grids[level]

    def in_box(self, point):
        point = np.asarray(point, dtype=float)
        return all(lo <= x <= hi for x, (lo, hi) in zip(point, self.box))

    def evaluate_full(self, point, level="fine"):
        return evaluate_poses(np.asarray(point, dtype=float), self.mechanism, self.grid(level),
                              self.constraints, self.reward, self.rdw)

    def evaluate(self, point, level="fine"):
        if not self.in_box(point):
            return -math.inf
        return self.evaluate_full(point, level).e

    def e_max(self, level):
        """Largest evaluation any design could reach on this grid."""
        if level not in self._e_max:
            grid = self.grid(level)
            kind = self.reward.base_kind
            if kind == "quality":
                per_pose = self.mechanism.max_quality(self.box, grid)
            else:
                per_pose = 1.0
            if self.reward.kind == "center_biased":
                total = float(np.sum(center_weights(grid, self.rdw)))
            else:
                total = float(len(grid))
            self._e_max[level] = total * per_pose
        return self._e_max[level]
