import math
from dataclasses import replace

import pytest

from pkmopt.config import (default_config, effective_workers, load_config, parse_config, to_ini)
from pkmopt.errors import ConfigError


@pytest.mark.parametrize("mech", ["lambda", "ups2", "rpr3"])
def test_roundtrip_defaults(mech):
    cfg = default_config(mech)
    text = to_ini(cfg)
    assert parse_config(text) == cfg
    assert to_ini(parse_config(text)) == text


def test_minimal_file_gets_defaults():
    cfg = parse_config("[problem]\nmechanism = lambda\n")
    assert cfg == default_config("lambda")
    assert cfg.box == ((1.0, 4.0),)
    assert cfg.rdw.center == (math.pi / 2,) and cfg.rdw.half_extents == (math.pi / 4,)
    assert cfg.constraints.stroke == 1.5 and cfg.constraints.vaf_range == (0.3, 3.0)
    assert cfg.multistart.m == 100 and cfg.multistart.fine_starts == 10


def test_reference_tables():
    ups = default_config("ups2")
    assert ups.box[0] == (0.25, 1.5) and ups.box[3] == (0.25, 2.0) and ups.box[12] == (1.0, 4.0)
    assert ups.box[1] == (-1.745, 1.745) and ups.box[2] == (-0.1, 0.1)
    assert ups.constraints.passive_limits[0] == (-math.pi / 6, math.pi / 6)
    assert ups.constraints.collision_enabled and ups.multistart.m == 200
    assert ups.rdw.shape == "disk" and ups.rdw.half_extents == (1.0, 1.0)
    rpr = default_config("rpr3")
    assert rpr.box[0] == (1.0, 10.0) and rpr.multistart.m == 30
    assert rpr.reward.kind == "center_biased" and not rpr.constraints.collision_enabled
    assert rpr.rdw.half_extents == (0.3, 0.3, 0.261)


def test_roundtrip_modified():
    cfg = default_config("ups2")
    cfg = replace(cfg, objective="workspace",
                  constraints=replace(cfg.constraints, collision_threshold=0.1, singular_tol=1e-7),
                  multistart=replace(cfg.multistart, m=7, k=2, workers=3),
                  nm=replace(cfg.nm, fine_margin=1.02))
    assert parse_config(to_ini(cfg)) == cfg


def test_overrides():
    cfg = parse_config("""
[problem]
mechanism = lambda
objective = vaf
box = 1.5 3.5
[constraints]
stroke_ratio = 1.8
passive_limits_rad = 0.1 3.0
[multistart]
m = 12
k = auto
""")
    assert cfg.objective == "vaf" and cfg.box == ((1.5, 3.5),)
    assert cfg.constraints.stroke == 1.8 and cfg.constraints.passive_limits == ((0.1, 3.0),)
    assert cfg.multistart.fine_starts == 2


@pytest.mark.parametrize("text, path", [
    ("[problem]\nobjective = gci\n", "problem.mechanism"),
    ("[problem]\nmechanism = delta\n", "problem.mechanism"),
    ("[problem]\nmechanism = lambda\nobjective = speed\n", "problem.objective"),
    ("[problem]\nmechanism = lambda\nbox = 4 1\n", "problem.box[0]"),
    ("[problem]\nmechanism = lambda\nbox = 1 2, 3 4\n", "problem.box"),
    ("[problem]\nmechanism = lambda\n[constraints]\nstroke_ratio = 2.5\n", "constraints.stroke_ratio"),
    ("[problem]\nmechanism = lambda\n[constraints]\nstroke_ratio = abc\n", "constraints.stroke_ratio"),
    ("[problem]\nmechanism = ups2\nobjective = vaf\n", "problem.objective"),
    ("[problem]\nmechanism = lambda\nobjective = vaf\n[constraints]\nvaf_range = none\n",
     "constraints.vaf_range"),
    ("[problem]\nmechanism = lambda\n[constraints]\npassive_limits_rad = 0 1, 0 1\n",
     "constraints.passive_limits_rad"),
    ("[problem]\nmechanism = lambda\n[rdw]\ncoarse_points_per_axis = 200\n", "rdw"),
    ("[problem]\nmechanism = lambda\n[rdw]\nshape = disk\ncenter = 0 0\nhalf_extents = 1 1\n", "rdw.shape"),
    ("[problem]\nmechanism = lambda\n[multistart]\nk = 500\n", "multistart"),
    ("[problem]\nmechanism = lambda\n[nm]\ncoarse_margin = 0.5\n", "nm"),
    ("[problem]\nmechanism = lambda\n[nm]\nwobble = 1\n", "nm.wobble"),
    ("[problem]\nmechanism = lambda\n[extras]\nx = 1\n", "extras"),
    ("[problem]\nmechanism = lambda\n[reward]\nstrategy = greedy\n", "reward.strategy"),
    ("[problem]\nmechanism = lambda\n[constraints]\ncollision_enabled = maybe\n", "constraints.collision_enabled"),
])
def test_field_path_errors(text, path):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == path
    assert str(info.value).startswith(path + ": ")


def test_load_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_workers_env(monkeypatch):
    cfg = default_config("lambda")
    monkeypatch.delenv("PKMOPT_WORKERS", raising=False)
    assert effective_workers(cfg) == 1
    monkeypatch.setenv("PKMOPT_WORKERS", "6")
    assert effective_workers(cfg) == 6
    assert effective_workers(cfg, 2) == 2
    monkeypatch.setenv("PKMOPT_WORKERS", "zero")
    with pytest.raises(ConfigError):
        effective_workers(cfg)
