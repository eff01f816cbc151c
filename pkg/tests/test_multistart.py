import math

import numpy as np
import pytest

from pkmopt.config import default_config
from pkmopt.errors import NoFeasibleDesignError
from pkmopt.multistart import (MultiStartConfig, fine_simplex, initial_simplexes, oracle_scan,
                               run_cascade)
from pkmopt.neldermead import coarse_config, fine_config, single_start
from pkmopt.sobol import scale_to_box, sobol_points

from helpers import Concave2D


def star_discrepancy_2d(p):
    """Exact star discrepancy over anchored boxes with corners on the point coordinates."""
    xs = np.append(np.unique(p[:, 0]), 1.0)
    ys = np.append(np.unique(p[:, 1]), 1.0)
    n = len(p)
    worst = 0.0
    for x in xs:
        inx_open = p[:, 0] < x
        inx_closed = p[:, 0] <= x
        open_counts = np.sum(inx_open[:, None] & (p[:, 1][:, None] < ys[None, :]), axis=0)
        closed_counts = np.sum(inx_closed[:, None] & (p[:, 1][:, None] <= ys[None, :]), axis=0)
        vol = x * ys
        worst = max(worst, np.max(vol - open_counts / n), np.max(closed_counts / n - vol))
    return worst


class TestConfig:
    def test_default_k(self):
        assert MultiStartConfig(m=100).fine_starts == 10
        assert MultiStartConfig(m=30).fine_starts == 3
        assert MultiStartConfig(m=5).fine_starts == 1

    @pytest.mark.parametrize("kw", [dict(m=0), dict(m=10, k=11), dict(k=0), dict(fine_simplex_scale=1.0),
                                    dict(workers=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            MultiStartConfig(**kw)


class TestInitialSimplexes:
    def test_one_dim(self):
        s = initial_simplexes(2, [(1.0, 4.0)])
        assert len(s) == 2 and all(x.shape == (2, 1) for x in s)
        pts = np.concatenate(s)[:, 0]
        assert len(set(pts)) == 4
        assert np.array_equal(pts, scale_to_box(sobol_points(1, 4), [1.0], [4.0])[:, 0])

    def test_inside_box_and_order(self):
        box = default_config("ups2").box
        sims = initial_simplexes(20, box)
        lo, hi = np.array(box).T
        ref = scale_to_box(sobol_points(13, 20 * 14), lo, hi)
        allp = np.concatenate(sims)
        assert np.all((allp >= lo) & (allp <= hi))
        # repairs move single coordinates by 1 % of their axis extent
        for i, s in enumerate(sims):
            raw = ref[i * 14:(i + 1) * 14]
            assert np.array_equal(s[0], raw[0])
            diff = np.abs(s - raw)
            moved = diff > 0
            assert np.allclose(diff[moved], np.broadcast_to(0.01 * (hi - lo), diff.shape)[moved])
            assert np.linalg.matrix_rank(s[1:] - s[0]) == 13

    def test_repairs_collinear_group(self):
        s = initial_simplexes(1, [(-1.0, 1.0), (-1.0, 1.0)])[0]
        raw = scale_to_box(sobol_points(2, 3), [-1, -1], [1, 1])
        assert np.linalg.matrix_rank(raw[1:] - raw[0]) < 2
        assert np.linalg.matrix_rank(s[1:] - s[0]) == 2
        assert abs(s[-1, 0] - raw[-1, 0]) == pytest.approx(0.02)

    def test_fine_simplex_flips_at_boundary(self):
        s = fine_simplex([4.0, 0.0], [(1.0, 4.0), (-1.0, 1.0)], 0.05)
        assert s.tolist() == [[4.0, 0.0], [3.85, 0.0], [4.0, 0.1]]


def test_discrepancy_beats_random():
    rng = np.random.default_rng(2024)
    sob = star_discrepancy_2d(sobol_points(2, 256))
    rand = np.mean([star_discrepancy_2d(rng.random((256, 2))) for _ in range(20)])
    assert sob < rand


class TestCascade:
    def test_finds_concave_peak(self):
        prob = Concave2D()
        res = run_cascade(prob, MultiStartConfig(m=10))
        assert np.allclose(res.best_point, prob.peak, atol=2e-3)
        assert res.best_evaluation == max(s.evaluation for s in res.fine)
        assert len(res.fine) == 1 and res.fine[0].parent is not None

    def test_single_start_then_polish(self):
        prob = Concave2D()
        res = run_cascade(prob, MultiStartConfig(m=1))
        simplex = initial_simplexes(1, prob.box)[0]
        f = lambda x: prob.evaluate(x)
        first = single_start(f, simplex, coarse_config(2, e_max=prob.e_max("coarse")))
        second = single_start(f, fine_simplex(first.v0, prob.box, 0.05),
                              fine_config(2, e_max=prob.e_max("fine")))
        assert res.coarse[0].final_point == first.v0.tolist()
        assert res.best_point == second.v0.tolist()
        assert res.best_evaluation == second.e0

    def test_fine_never_loses_selected_vertex(self):
        cfg = default_config("lambda")
        prob = cfg.problem()
        res = run_cascade(prob, MultiStartConfig(m=20), cfg.nm_stage("coarse"), cfg.nm_stage("fine"))
        for s in res.fine:
            parent = res.coarse[s.parent]
            assert s.evaluation >= prob.evaluate(parent.final_point, "fine")

    def test_selection_order(self):
        cfg = default_config("lambda")
        res = run_cascade(cfg.problem(), MultiStartConfig(m=30, k=5), cfg.nm_stage("coarse"),
                          cfg.nm_stage("fine"))
        picked = [s.parent for s in res.fine]
        ranked = sorted(range(30), key=lambda i: (-res.coarse[i].evaluation, i))[:5]
        assert picked == ranked

    def test_worker_count_identical(self):
        prob = Concave2D()
        a = run_cascade(prob, MultiStartConfig(m=12, workers=1)).to_dict()
        b = run_cascade(prob, MultiStartConfig(m=12, workers=3)).to_dict()
        assert a == b

    def test_no_feasible_design(self):
        class Dead(Concave2D):
            def evaluate(self, x, level="fine"):
                return -math.inf
        with pytest.raises(NoFeasibleDesignError):
            run_cascade(Dead(), MultiStartConfig(m=3))

    def test_infeasible_lambda_reports_counters(self):
        from dataclasses import replace
        cfg = default_config("lambda")
        cc = replace(cfg.constraints, passive_limits=((0.0, 0.1),))
        prob = replace(cfg, constraints=cc).problem()
        with pytest.raises(NoFeasibleDesignError) as info:
            run_cascade(prob, MultiStartConfig(m=4))
        assert info.value.diagnostics["passive"] > 0

    def test_traces_kept(self):
        res = run_cascade(Concave2D(), MultiStartConfig(m=3, keep_traces=True))
        assert len(res.traces["coarse"]) == 3 and len(res.traces["fine"]) == 1
        d = res.to_dict(include_traces=True)
        assert "traces" in d and "wall_time" not in d["coarse_starts"][0]


class TestOracle:
    def test_midpoint(self):
        seen = []

        class Spy(Concave2D):
            def evaluate(self, x, level="fine"):
                seen.append(tuple(x))
                return 0.0
        res = oracle_scan(Spy(), 1)
        assert seen == [(0.0, 1.0)] and res.evaluations == 1

    def test_refuses_high_dimension(self):
        with pytest.raises(ValueError):
            oracle_scan(default_config("ups2").problem(), 2)

    def test_first_max_wins(self):
        class Flat(Concave2D):
            def evaluate(self, x, level="fine"):
                return 1.0
        assert oracle_scan(Flat(), 3).argmax == [-2.0, -1.0]

    def test_lambda_gci_argmax(self):
        res = oracle_scan(default_config("lambda").problem(), 301)
        assert res.argmax == [4.0]
