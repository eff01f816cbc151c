"""Sobol-seeded two-stage (coarse -> fine) multi-start Nelder-Mead."""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoFeasibleDesignError
from .neldermead import _json_float, coarse_config, fine_config, single_start
from .sobol import scale_to_box, sobol_points


@dataclass(frozen=True)
class MultiStartConfig:
    m: int = 100
    k: int | None = None
    fine_simplex_scale: float = 0.05
    workers: int = 1
    keep_traces: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one coarse start")
        if self.k is not None and not 1 <= self.k <= self.m:
            raise ValueError("fine starts k must satisfy 1 <= k <= m")
        if not 0 < self.fine_simplex_scale < 1:
            raise ValueError("fine_simplex_scale must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def fine_starts(self):
        return self.k if self.k is not None else max(1, math.ceil(0.1 * self.m))


@dataclass
class StartSummary:
    start_id: int
    stage: str
    initial_best: list
    final_point: list
    evaluation: float
    iterations: int
    evaluations: int
    stop_reason: str
    wall_time: float = 0.0
    parent: int | None = None

    def to_dict(self, include_timings=False):
        d = {
            "start_id": self.start_id,
            "stage": self.stage,
            "parent": self.parent,
            "final_point": self.final_point,
            "evaluation": _json_float(self.evaluation),
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "stop_reason": self.stop_reason,
        }
        if include_timings:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class RunResult:
    best_point: list
    best_evaluation: float
    bracket: tuple | None
    gci: float | None
    feasible_count: int | None
    coarse: list
    fine: list
    traces: dict = field(default_factory=dict)
    e_max: dict = field(default_factory=dict)

    def to_dict(self, include_timings=False, include_traces=False):
        d = {
            "best_point": self.best_point,
            "best_evaluation": _json_float(self.best_evaluation),
            "gci": _json_float(self.gci),
            "feasible_count": self.feasible_count,
            "actuator_bracket": None if self.bracket is None else list(self.bracket),
            "e_max": {k: _json_float(v) for k, v in self.e_max.items()},
            "coarse_starts": [s.to_dict(include_timings) for s in self.coarse],
            "fine_starts": [s.to_dict(include_timings) for s in self.fine],
        }
        if include_traces:
            d["traces"] = self.traces
        return d


def _affine_rank(simplex):
    return int(np.linalg.matrix_rank(simplex[1:] - simplex[0]))


def _repair(s, lo, hi):
    """Nudge vertices by 1% of an axis extent until the simplex spans n dimensions.

    The first nudge moves the last vertex along the first axis; if the group
    is still dependent, earlier vertices are moved along later axes. A nudge
    that does not raise the rank is undone.
    """
    n = s.shape[1]
    rank = _affine_rank(s)
    for a in range(n * n):
        if rank == n:
            break
        axis, vertex = a % n, n - (a // n + a % n) % n
        delta = 0.01 * (hi[axis] - lo[axis])
        old = s[vertex, axis]
        s[vertex, axis] = old + delta if old + delta <= hi[axis] else old - delta
        new_rank = _affine_rank(s)
        if new_rank > rank:
            rank = new_rank
        else:
            s[vertex, axis] = old
    return s


def initial_simplexes(m, box):
    """``m`` simplexes built from ``m*(n+1)`` consecutive scaled Sobol points.

    Affinely dependent groups are repaired by small in-box nudges (see
    ``_repair``); all other vertices are the raw Sobol points.
    """
    box = np.asarray(box, dtype=float)
    n = len(box)
    lo, hi = box[:, 0], box[:, 1]
    pts = scale_to_box(sobol_points(n, m * (n + 1)), lo, hi)
    out = []
    for i in range(m):
        s = pts[i * (n + 1):(i + 1) * (n + 1)].copy()
        if _affine_rank(s) < n:
            s = _repair(s, lo, hi)
        out.append(s)
    return out


def fine_simplex(v0, box, scale):
    """``v0`` plus one vertex per axis, offset by ``scale`` of the axis extent.

    Offsets that would leave the box are flipped to the other side.
    """
    v0 = np.asarray(v0, dtype=float)
    box = np.asarray(box, dtype=float)
    verts = [v0.copy()]
    for i in range(len(v0)):
        step = scale * (box[i, 1] - box[i, 0])
        v = v0.copy()
        v[i] += step
        if v[i] > box[i, 1]:
            v[i] = v0[i] - step
        verts.append(v)
    return np.array(verts)


# -- worker plumbing ------------------------------------------------------------------

_WORKER_PROBLEM = None


def _init_worker(problem):
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = problem


def _objective(problem, level):
    def f(x):
        return problem.evaluate(x, level)
    return f


def _run_one(task, problem=None):
    problem = problem if problem is not None else _WORKER_PROBLEM
    simplex, cfg, level = task
    t0 = time.perf_counter()
    res = single_start(_objective(problem, level), simplex, cfg)
    res.wall_time = time.perf_counter() - t0
    return res


def _map(problem, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [_run_one(t, problem) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(problem,)) as pool:
        return list(pool.map(_run_one, tasks))


def _summary(start_id, stage, simplex, res, parent=None):
    return StartSummary(
        start_id=start_id, stage=stage, initial_best=[float(x) for x in simplex[0]],
        final_point=[float(x) for x in res.v0], evaluation=float(res.e0),
        iterations=res.iterations, evaluations=res.evaluations,
        stop_reason=res.stop_reason, wall_time=res.wall_time, parent=parent)


def _order(results):
    # descending evaluation, ties by start index
    return sorted(range(len(results)), key=lambda i: (-_sortable(results[i].e0), i))


def _sortable(x):
    return -math.inf if math.isnan(x) else x


def run_cascade(problem, ms=None, coarse=None, fine=None):
    """Coarse multi-start on the coarse grid, then fine polishing of the top ``k``.

    ``problem`` must provide ``box``, ``dimension``, ``evaluate(point, level)``
    and ``e_max(level)``; ``evaluate_full`` is used when present to report
    the actuator bracket and GCI of the winner. ``coarse``/``fine`` are
    ``NMConfig`` templates whose ``e_max`` is replaced by the problem's.
    """
    ms = ms or MultiStartConfig()
    n = problem.dimension
    e_max = {"coarse": problem.e_max("coarse"), "fine": problem.e_max("fine")}
    coarse = replace(coarse or coarse_config(n), e_max=e_max["coarse"])
    fine = replace(fine or fine_config(n), e_max=e_max["fine"])

    simplexes = initial_simplexes(ms.m, problem.box)
    coarse_res = _map(problem, [(s, coarse, "coarse") for s in simplexes], ms.workers)
    coarse_sum = [_summary(i, "coarse", s, r) for i, (s, r) in enumerate(zip(simplexes, coarse_res))]

    chosen = _order(coarse_res)[:ms.fine_starts]
    fine_simplexes = [fine_simplex(coarse_res[i].v0, problem.box, ms.fine_simplex_scale)
                      for i in chosen]
    fine_res = _map(problem, [(s, fine, "fine") for s in fine_simplexes], ms.workers)
    fine_sum = [_summary(j, "fine", s, r, parent=chosen[j])
                for j, (s, r) in enumerate(zip(fine_simplexes, fine_res))]

    best_j = _order(fine_res)[0]
    best = fine_res[best_j]
    traces = {}
    if ms.keep_traces:
        traces = {"coarse": [r.trace for r in coarse_res], "fine": [r.trace for r in fine_res]}

    bracket = gci = feasible = None
    full = getattr(problem, "evaluate_full", None)
    if full is not None and math.isfinite(best.e0):
        ev = full(best.v0, "fine")
        feasible = ev.feasible_count
        gci = ev.gci
        if ev.bracket is not None:
            bracket = (ev.bracket.rho_min, ev.bracket.rho_max)
    no_design = not math.isfinite(best.e0) or (full is not None and not feasible)
    if no_design:
        raise NoFeasibleDesignError(
            "no start reached a design with a feasible workspace pose",
            _diagnose(problem, coarse_res))
    return RunResult(best_point=[float(x) for x in best.v0], best_evaluation=float(best.e0),
                     bracket=bracket, gci=gci, feasible_count=feasible,
                     coarse=coarse_sum, fine=fine_sum, traces=traces, e_max=e_max)


def _diagnose(problem, results):
    """Sum constraint counters over the coarse-stage final points."""
    totals = {}
    full = getattr(problem, "evaluate_full", None)
    if full is None:
        return totals
    for r in results:
        if not problem.in_box(r.v0):
            totals["out_of_box"] = totals.get("out_of_box", 0) + 1
            continue
        for key, val in full(r.v0, "coarse").counters.items():
            totals[key] = totals.get(key, 0) + val
    return totals


# -- exhaustive oracle -----------------------------------------------------------------

@dataclass
class OracleResult:
    argmax: list
    max_evaluation: float
    points_per_axis: int
    evaluations: int
    values: np.ndarray | None = None


def lattice_axes(box, points_per_axis):
    axes = []
    for lo, hi in box:
        if points_per_axis == 1:
            axes.append(np.array([0.5 * (lo + hi)]))
        else:
            axes.append(np.linspace(lo, hi, points_per_axis))
    return axes


def oracle_scan(problem, points_per_axis=301, level="fine", force=False, keep_values=False):
    """Evaluate every lattice point of the box; the first maximum wins."""
    n = problem.dimension
    if n > 4 and not force:
        raise ValueError(f"oracle scan of a {n}-dimensional box needs force=True")
    if points_per_axis < 1:
        raise ValueError("points_per_axis must be >= 1")
    best_x, best_e = None, -math.inf
    values = []
    count = 0
    for x in itertools.product(*lattice_axes(problem.box, points_per_axis)):
        e = problem.evaluate(np.array(x), level)
        count += 1
        if keep_values:
            values.append(e)
        if best_x is None or e > best_e:
            best_x, best_e = list(x), e
    vals = np.array(values).reshape((points_per_axis,) * n) if keep_values else None
    return OracleResult(argmax=[float(v) for v in best_x], max_evaluation=float(best_e),
                        points_per_axis=points_per_axis, evaluations=count, values=vals)
