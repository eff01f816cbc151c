"""INI problem configuration: per-mechanism defaults, parsing, validation, serialisation.

Angles are radians throughout. List values are whitespace separated; pairs
(box axes, passive limits) are separated by commas, e.g.
``passive_limits_rad = -0.5236 0.5236, -inf inf``.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .evaluation import ConstraintConfig, DesignProblem, RewardStrategy
from .geometry import RDWSpec
from .mechanisms import get_mechanism
from .multistart import MultiStartConfig
from .neldermead import NMConfig

OBJECTIVES = {"workspace": "binary", "gci": "quality", "vaf": "vaf"}
STRATEGIES = ("plain", "center_biased")
WORKERS_ENV = "PKMOPT_WORKERS"

_PI6 = math.pi / 6
_ANG = 1.745


@dataclass(frozen=True)
class NMSettings:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    eps_size: float = 1e-3
    eps_spread: float = 1e-3
    coarse_max_iter_per_dim: int = 3
    coarse_margin: float = 1.05
    coarse_limit: float = 0.8
    fine_max_iter_per_dim: int = 10
    fine_margin: float = 1.01
    fine_limit: float = 1.0
    max_total_iter: int = 10_000

    def stage(self, level, n, e_max=math.inf):
        pre = "coarse" if level == "coarse" else "fine"
        return NMConfig(r=self.reflection, e=self.expansion, k=self.contraction, s=self.shrink,
                        eps1=self.eps_size, eps2=self.eps_spread,
                        max_iter=getattr(self, pre + "_max_iter_per_dim") * n,
                        margin=getattr(self, pre + "_margin"), limit=getattr(self, pre + "_limit"),
                        e_max=e_max, max_total_iter=self.max_total_iter)


@dataclass(frozen=True)
class OutputSettings:
    result_json: str = ""
    result_table: str = ""
    trace_jsonl: str = ""
    include_timings: bool = False


@dataclass(frozen=True)
class ProblemConfig:
    mechanism: str
    objective: str
    box: tuple
    rdw: RDWSpec
    constraints: ConstraintConfig
    strategy: str = "plain"
    nm: NMSettings = field(default_factory=NMSettings)
    multistart: MultiStartConfig = field(default_factory=MultiStartConfig)
    output: OutputSettings = field(default_factory=OutputSettings)

    @property
    def reward(self):
        kind = OBJECTIVES[self.objective]
        if self.strategy == "center_biased":
            return RewardStrategy("center_biased", inner=kind)
        return RewardStrategy(kind)

    def problem(self):
        return DesignProblem(get_mechanism(self.mechanism), self.box, self.rdw,
                             self.constraints, self.reward)

    def nm_stage(self, level, e_max=math.inf):
        return self.nm.stage(level, len(self.box), e_max)


# -- defaults -------------------------------------------------------------------------

def _ups_box():
    a, b, ang, h = (0.25, 1.5), (0.25, 2.0), (-_ANG, _ANG), (-0.1, 0.1)
    # a1 phi1 h1 b1 psi1 h2 a2 phi2 h3 b2 psi2 h4 t
    return (a, ang, h, b, ang, h, a, ang, h, b, ang, h, (1.0, 4.0))


def default_config(mechanism):
    """The reference setup of each mechanism."""
    if mechanism == "lambda":
        return ProblemConfig(
            mechanism="lambda", objective="gci", box=((1.0, 4.0),),
            rdw=RDWSpec("interval", (math.pi / 2,), (math.pi / 4,), 11, 101),
            constraints=ConstraintConfig(vaf_range=(0.3, 3.0), stroke=1.5),
            multistart=MultiStartConfig(m=100))
    if mechanism == "ups2":
        inf = math.inf
        return ProblemConfig(
            mechanism="ups2", objective="gci", box=_ups_box(),
            rdw=RDWSpec("disk", (0.0, 0.0), (1.0, 1.0), 9, 81),
            constraints=ConstraintConfig(
                passive_limits=((-_PI6, _PI6), (-_PI6, _PI6), (-inf, inf), (-inf, inf)),
                collision_enabled=True, collision_threshold=0.05, stroke=1.5),
            multistart=MultiStartConfig(m=200))
    if mechanism == "rpr3":
        two_pi = 2 * math.pi
        return ProblemConfig(
            mechanism="rpr3", objective="workspace", strategy="center_biased",
            box=((1.0, 10.0), (0.0, two_pi), (0.0, two_pi), (0.0, two_pi)),
            rdw=RDWSpec("box-times-interval", (0.0, 0.0, 0.0), (0.3, 0.3, 0.261), 3, 21),
            constraints=ConstraintConfig(stroke=1.5),
            multistart=MultiStartConfig(m=30))
    raise ConfigError("problem.mechanism", f"unknown mechanism {mechanism!r}")


# -- value codecs -------------------------------------------------------------------------

def _fmt_float(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _fmt_list(xs):
    return " ".join(_fmt_float(x) for x in xs)


def _fmt_pairs(pairs):
    return ", ".join(_fmt_list(p) for p in pairs)


def _float(path, raw):
    try:
        x = float(raw)
    except ValueError:
        raise ConfigError(path, f"expected a number, got {raw!r}") from None
    if math.isnan(x):
        raise ConfigError(path, "NaN is not allowed")
    return x


def _int(path, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(path, f"expected an integer, got {raw!r}") from None


def _bool(path, raw):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(path, f"expected a boolean, got {raw!r}")


def _floats(path, raw):
    return tuple(_float(path, t) for t in raw.split())


def _pairs(path, raw):
    if not raw.strip() or raw.strip().lower() == "none":
        return ()
    out = []
    for i, chunk in enumerate(raw.split(",")):
        vals = _floats(f"{path}[{i}]", chunk)
        if len(vals) != 2:
            raise ConfigError(f"{path}[{i}]", "expected a 'low high' pair")
        out.append(vals)
    return tuple(out)


# -- INI layout ---------------------------------------------------------------------------

def to_ini(cfg):
    """Serialise a configuration; ``parse_config(to_ini(c)) == c``."""
    cc, rdw, ms, out = cfg.constraints, cfg.rdw, cfg.multistart, cfg.output
    cp = configparser.ConfigParser(interpolation=None)
    cp["problem"] = {
        "mechanism": cfg.mechanism,
        "objective": cfg.objective,
        "box": _fmt_pairs(cfg.box),
    }
    cp["rdw"] = {
        "shape": rdw.shape,
        "center": _fmt_list(rdw.center),
        "half_extents": _fmt_list(rdw.half_extents),
        "coarse_points_per_axis": str(rdw.coarse_points_per_axis),
        "fine_points_per_axis": str(rdw.fine_points_per_axis),
    }
    cp["constraints"] = {
        "passive_limits_rad": _fmt_pairs(cc.passive_limits) or "none",
        "collision_enabled": str(cc.collision_enabled).lower(),
        "collision_threshold": _fmt_float(cc.collision_threshold),
        "vaf_range": "none" if cc.vaf_range is None else _fmt_list(cc.vaf_range),
        "singular_tol": _fmt_float(cc.singular_tol),
        "stroke_ratio": _fmt_float(cc.stroke),
        "bracket_steps": str(cc.bracket_steps),
    }
    cp["reward"] = {"strategy": cfg.strategy}
    cp["nm"] = {f.name: (str(getattr(cfg.nm, f.name)) if f.type == "int"
                         else _fmt_float(getattr(cfg.nm, f.name)))
                for f in fields(NMSettings)}
    cp["multistart"] = {
        "m": str(ms.m),
        "k": "auto" if ms.k is None else str(ms.k),
        "fine_simplex_scale": _fmt_float(ms.fine_simplex_scale),
        "workers": str(ms.workers),
        "keep_traces": str(ms.keep_traces).lower(),
    }
    cp["output"] = {
        "result_json": out.result_json,
        "result_table": out.result_table,
        "trace_jsonl": out.trace_jsonl,
        "include_timings": str(out.include_timings).lower(),
    }
    lines = []
    for sec in cp.sections():
        lines.append(f"[{sec}]")
        lines += [f"{k} = {v}" for k, v in cp[sec].items()]
        lines.append("")
    return "\n".join(lines)


_KNOWN = {
    "problem": {"mechanism", "objective", "box"},
    "rdw": {"shape", "center", "half_extents", "coarse_points_per_axis", "fine_points_per_axis"},
    "constraints": {"passive_limits_rad", "collision_enabled", "collision_threshold", "vaf_range",
                    "singular_tol", "stroke_ratio", "bracket_steps"},
    "reward": {"strategy"},
    "nm": {f.name for f in fields(NMSettings)},
    "multistart": {"m", "k", "fine_simplex_scale", "workers", "keep_traces"},
    "output": {"result_json", "result_table", "trace_jsonl", "include_timings"},
}


def _build(section, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(section, str(exc)) from None


def parse_config(text):
    """Parse INI text, filling unspecified keys from the mechanism defaults."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<config>", str(exc).splitlines()[0]) from None
    for sec in cp.sections():
        if sec not in _KNOWN:
            raise ConfigError(sec, "unknown section")
        for key in cp[sec]:
            if key not in _KNOWN[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")

    def get(sec, key):
        return cp.get(sec, key, fallback=None) if cp.has_section(sec) else None

    mech = get("problem", "mechanism")
    if mech is None:
        raise ConfigError("problem.mechanism", "required")
    base = default_config(mech.strip())

    objective = (get("problem", "objective") or base.objective).strip()
    if objective not in OBJECTIVES:
        raise ConfigError("problem.objective", f"expected one of {sorted(OBJECTIVES)}")
    box = base.box
    if (raw := get("problem", "box")) is not None:
        box = _pairs("problem.box", raw)
        if len(box) != len(base.box):
            raise ConfigError("problem.box", f"{mech} needs {len(base.box)} axes, got {len(box)}")
        for i, (lo, hi) in enumerate(box):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"problem.box[{i}]", "need finite low < high")

    # rdw
    r = base.rdw
    rdw_kw = {
        "shape": (get("rdw", "shape") or r.shape).strip(),
        "center": r.center,
        "half_extents": r.half_extents,
        "coarse_points_per_axis": r.coarse_points_per_axis,
        "fine_points_per_axis": r.fine_points_per_axis,
    }
    for key in ("center", "half_extents"):
        if (raw := get("rdw", key)) is not None:
            rdw_kw[key] = _floats(f"rdw.{key}", raw)
    for key in ("coarse_points_per_axis", "fine_points_per_axis"):
        if (raw := get("rdw", key)) is not None:
            rdw_kw[key] = _int(f"rdw.{key}", raw)
    rdw = _build("rdw", RDWSpec, **rdw_kw)
    naxes = len(get_mechanism(mech).pose_axes)
    if rdw.ndim != naxes:
        raise ConfigError("rdw.shape", f"{mech} poses have {naxes} axes, {rdw.shape} has {rdw.ndim}")

    # constraints
    c = base.constraints
    cc_kw = {f.name: getattr(c, f.name) for f in fields(ConstraintConfig)}
    readers = {
        "passive_limits_rad": ("passive_limits", _pairs),
        "collision_enabled": ("collision_enabled", _bool),
        "collision_threshold": ("collision_threshold", _float),
        "singular_tol": ("singular_tol", _float),
        "stroke_ratio": ("stroke", _float),
        "bracket_steps": ("bracket_steps", _int),
    }
    for key, (name, reader) in readers.items():
        if (raw := get("constraints", key)) is not None:
            cc_kw[name] = reader(f"constraints.{key}", raw)
    if (raw := get("constraints", "vaf_range")) is not None:
        if raw.strip().lower() in ("", "none"):
            cc_kw["vaf_range"] = None
        else:
            vr = _floats("constraints.vaf_range", raw)
            if len(vr) != 2:
                raise ConfigError("constraints.vaf_range", "expected 'low high'")
            cc_kw["vaf_range"] = vr
    npassive = {"lambda": 1, "ups2": 4, "rpr3": 6}[mech]
    if cc_kw["passive_limits"] and len(cc_kw["passive_limits"]) != npassive:
        raise ConfigError("constraints.passive_limits_rad",
                          f"{mech} has {npassive} passive joints, got {len(cc_kw['passive_limits'])}")
    if not 1.0 <= cc_kw["stroke"] <= 2.0:
        raise ConfigError("constraints.stroke_ratio", "must lie in [1, 2]")
    cc = _build("constraints", ConstraintConfig, **cc_kw)

    if objective == "vaf":
        if mech != "lambda":
            raise ConfigError("problem.objective", "the vaf objective is defined for the lambda mechanism only")
        if cc.vaf_range is None:
            raise ConfigError("constraints.vaf_range", "required by the vaf objective")

    strategy = (get("reward", "strategy") or base.strategy).strip()
    if strategy not in STRATEGIES:
        raise ConfigError("reward.strategy", f"expected one of {list(STRATEGIES)}")

    # nm
    nm_kw = {}
    for f in fields(NMSettings):
        if (raw := get("nm", f.name)) is not None:
            nm_kw[f.name] = (_int if f.type == "int" else _float)(f"nm.{f.name}", raw)
    nm = replace(base.nm, **nm_kw)
    try:
        nm.stage("coarse", len(box))
        nm.stage("fine", len(box))
    except ValueError as exc:
        raise ConfigError("nm", str(exc)) from None

    # multistart
    b = base.multistart
    ms_kw = {"m": b.m, "k": b.k, "fine_simplex_scale": b.fine_simplex_scale,
             "workers": b.workers, "keep_traces": b.keep_traces}
    if (raw := get("multistart", "m")) is not None:
        ms_kw["m"] = _int("multistart.m", raw)
    if (raw := get("multistart", "k")) is not None:
        ms_kw["k"] = None if raw.strip().lower() in ("", "auto") else _int("multistart.k", raw)
    if (raw := get("multistart", "fine_simplex_scale")) is not None:
        ms_kw["fine_simplex_scale"] = _float("multistart.fine_simplex_scale", raw)
    if (raw := get("multistart", "workers")) is not None:
        ms_kw["workers"] = _int("multistart.workers", raw)
    if (raw := get("multistart", "keep_traces")) is not None:
        ms_kw["keep_traces"] = _bool("multistart.keep_traces", raw)
    ms = _build("multistart", MultiStartConfig, **ms_kw)

    out_kw = {}
    for key in ("result_json", "result_table", "trace_jsonl"):
        if (raw := get("output", key)) is not None:
            out_kw[key] = raw.strip()
    if (raw := get("output", "include_timings")) is not None:
        out_kw["include_timings"] = _bool("output.include_timings", raw)
    out = replace(base.output, **out_kw)

    return ProblemConfig(mechanism=mech, objective=objective, box=tuple(box), rdw=rdw,
                         constraints=cc, strategy=strategy, nm=nm, multistart=ms, output=out)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    return parse_config(text)


def effective_workers(cfg, override=None):
    """Worker count: explicit override, then the environment, then the config."""
    if override is not None:
        n = override
    elif os.environ.get(WORKERS_ENV):
        n = _int(WORKERS_ENV, os.environ[WORKERS_ENV])
    else:
        n = cfg.multistart.workers
    if n < 1:
        raise ConfigError("multistart.workers", "must be >= 1")
    return n
