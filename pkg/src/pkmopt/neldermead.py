"""Maximising Nelder-Mead simplex search with coarse/fine acceptance rules."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NMConfig:
    """Nelder-Mead coefficients and stopping rules.

    ``max_iter`` counts consecutive iterations without an improvement of at
    least ``margin``; the search also stops once the best value reaches
    ``limit * e_max``. ``max_total_iter`` is a hard safety cap.
    """

    r: float = 1.0
    e: float = 2.0
    k: float = 0.5
    s: float = 0.5
    eps1: float = 1e-3
    eps2: float = 1e-3
    max_iter: int = 20
    margin: float = 1.0
    limit: float = 1.0
    e_max: float = math.inf
    max_total_iter: int = 10_000

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("reflection coefficient r must be > 0")
        if not self.e > 1:
            raise ValueError("expansion coefficient e must be > 1")
        if not 0 < self.k < self.r:
            raise ValueError("contraction coefficient k must lie in (0, r)")
        if not 0 < self.s < 1:
            raise ValueError("shrink factor s must lie in (0, 1)")
        if self.max_iter < 1 or self.max_total_iter < 1:
            raise ValueError("iteration limits must be positive")
        if self.margin < 1:
            raise ValueError("margin must be >= 1")
        if not 0 < self.limit <= 1:
            raise ValueError("limit must lie in (0, 1]")
        if self.eps1 < 0 or self.eps2 < 0:
            raise ValueError("tolerances must be >= 0")


def coarse_config(n, e_max=math.inf, max_iter_per_dim=3, margin=1.05, limit=0.8, **coeffs):
    return NMConfig(max_iter=max_iter_per_dim * n, margin=margin, limit=limit, e_max=e_max, **coeffs)


def fine_config(n, e_max=math.inf, max_iter_per_dim=10, margin=1.01, limit=1.0, **coeffs):
    return NMConfig(max_iter=max_iter_per_dim * n, margin=margin, limit=limit, e_max=e_max, **coeffs)


def _clean(value):
    value = float(value)
    return -math.inf if math.isnan(value) else value


class Simplex:
    """n+1 vertices with evaluations, kept sorted best (largest) first."""

    def __init__(self, vertices, evals):
        vertices = np.array(vertices, dtype=float)
        evals = np.array([_clean(v) for v in evals], dtype=float)
        n = vertices.shape[1]
        if vertices.shape != (n + 1, n) or evals.shape != (n + 1,):
            raise ValueError("a simplex in n dimensions needs n+1 vertices")
        order = np.argsort(-evals, kind="stable")
        self.vertices = vertices[order]
        self.evals = evals[order]

    @property
    def n(self):
        return self.vertices.shape[1]

    @property
    def best(self):
        return self.vertices[0], float(self.evals[0])

    def size(self):
        """Largest edge length."""
        v = self.vertices
        d = np.sqrt(np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1))
        return float(d.max())

    def spread(self):
        """Largest pairwise difference of the evaluations."""
        hi, lo = self.evals[0], self.evals[-1]
        if hi == lo:
            return 0.0
        return float(hi - lo)

    def replace_worst(self, vertex, value):
        v = self.vertices.copy()
        ev = self.evals.copy()
        v[-1] = vertex
        ev[-1] = value
        return Simplex(v, ev)


def centroid(simplex):
    return simplex.vertices[:-1].mean(axis=0)


def candidates(simplex, cfg):
    """All trial points of one iteration, keyed by operation tag."""
    vm = centroid(simplex)
    vn = simplex.vertices[-1]
    vr = vm + cfg.r * (vm - vn)
    return {
        "centroid": vm,
        "reflect": vr,
        "expand": vm + cfg.e * (vr - vm),
        "outside_contraction": vm + cfg.k * (vm - vn),
        "inside_contraction": vm - cfg.k * (vm - vn),
    }


def shrink(simplex, cfg):
    """Pull every vertex toward the best one by factor ``s``."""
    v0 = simplex.vertices[0]
    return v0 + cfg.s * (simplex.vertices - v0)


def propose(simplex, cfg, objective):
    """Run the case analysis of one iteration.

    Returns ``(tag, point, value, trials)``; ``tag`` is one of reflect,
    expand, outside_contraction, inside_contraction or shrink (``point`` is
    then None). ``trials`` lists every ``(tag, point, value)`` evaluated.
    """
    c = candidates(simplex, cfg)
    e = simplex.evals
    trials = []

    def ev(tag):
        val = _clean(objective(c[tag]))
        trials.append((tag, c[tag], val))
        return val

    er = ev("reflect")
    if er > e[0]:
        ee = ev("expand")
        if ee > er:
            return "expand", c["expand"], ee, trials
        return "reflect", c["reflect"], er, trials
    if er > e[-2]:
        return "reflect", c["reflect"], er, trials
    if er > e[-1]:
        eoc = ev("outside_contraction")
        if eoc >= er:
            return "outside_contraction", c["outside_contraction"], eoc, trials
        return "shrink", None, None, trials
    eic = ev("inside_contraction")
    if eic > e[-1]:
        return "inside_contraction", c["inside_contraction"], eic, trials
    return "shrink", None, None, trials


def stopping(simplex, iteration, cfg):
    if simplex.size() <= cfg.eps1 and simplex.spread() <= cfg.eps2:
        return True
    return iteration >= cfg.max_iter


def is_improvement(new, old, margin):
    """``new`` beats ``old`` by at least the relative ``margin``.

    Uses ``new - old >= (margin - 1) * |old|`` so the rule also behaves for
    non-positive evaluations; any finite value improves on -inf.
    """
    if not new > old:
        return False
    if not math.isfinite(old):
        return True
    return new - old >= (margin - 1.0) * abs(old)


@dataclass
class StartResult:
    v0: np.ndarray
    e0: float
    trace: list = field(default_factory=list)
    iterations: int = 0
    evaluations: int = 0
    stop_reason: str = ""


class _Cached:
    def __init__(self, objective):
        self.objective = objective
        self.cache = {}
        self.calls = 0

    def __call__(self, point):
        key = tuple(float(x) for x in point)
        if key not in self.cache:
            self.calls += 1
            self.cache[key] = _clean(self.objective(np.array(key)))
        return self.cache[key]


def single_start(objective, initial_simplex, cfg, record_simplex=False):
    """Maximise ``objective`` from one initial simplex.

    Returns a ``StartResult`` with the best vertex, its value and a trace of
    every evaluated trial point.
    """
    f = _Cached(objective)
    pts = np.array(initial_simplex, dtype=float)
    trace = []
    sim = Simplex(pts, [f(p) for p in pts])
    for p in pts:
        trace.append({"step": 0, "op": "init", "point": [float(x) for x in p],
                      "evaluation": f(p), "accepted": True})
    stall = 0
    total = 0
    reason = ""
    while True:
        if sim.evals[0] >= cfg.limit * cfg.e_max:
            reason = "limit"
            break
        if sim.size() <= cfg.eps1 and sim.spread() <= cfg.eps2:
            reason = "converged"
            break
        if stall >= cfg.max_iter:
            reason = "max_iter"
            break
        if total >= cfg.max_total_iter:
            reason = "max_total_iter"
            break
        total += 1
        before = sim.vertices.copy() if record_simplex else None
        old_best = float(sim.evals[0])
        tag, point, value, trials = propose(sim, cfg, f)
        for ttag, tpoint, tval in trials:
            entry = {"step": total, "op": ttag, "point": [float(x) for x in tpoint],
                     "evaluation": tval, "accepted": ttag == tag}
            if before is not None:
                entry["simplex"] = before.tolist()
            trace.append(entry)
        if tag == "shrink":
            verts = shrink(sim, cfg)
            sim = Simplex(verts, [f(v) for v in verts])
            trace.append({"step": total, "op": "shrink", "point": None,
                          "evaluation": float(sim.evals[0]), "accepted": True})
        else:
            sim = sim.replace_worst(point, value)
        if is_improvement(float(sim.evals[0]), old_best, cfg.margin):
            stall = 0
        else:
            stall += 1
    v0, e0 = sim.best
    return StartResult(v0=v0.copy(), e0=e0, trace=trace, iterations=total,
                       evaluations=f.calls, stop_reason=reason)


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def write_trace(trace, fh, start_id=None):
    """Write trace entries as JSON lines."""
    for entry in trace:
        row = dict(entry)
        if start_id is not None:
            row = {"start": start_id, **row}
        row["evaluation"] = _json_float(row["evaluation"])
        row.pop("simplex", None)
        fh.write(json.dumps(row) + "\n")


__all__ = ["NMConfig", "Simplex", "coarse_config", "fine_config", "propose", "stopping",
           "single_start", "is_improvement", "write_trace"]
