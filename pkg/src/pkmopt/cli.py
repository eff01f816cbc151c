"""Command-line front end: optimize, evaluate, grid, oracle, sobol."""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .config import effective_workers, load_config
from .errors import ConfigError, NoFeasibleDesignError, UnsupportedDimensionError
from .evaluation import write_grid_csv
from .multistart import oracle_scan, run_cascade
from .neldermead import _json_float, write_trace
from .sobol import sobol_points

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3
_CODES = {EXIT_USAGE: "usage", EXIT_INFEASIBLE: "no_feasible_design", EXIT_NUMERIC: "numeric"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x):
    if x is None:
        return "none"
    x = float(x)
    if math.isfinite(x):
        return format(x, ".17g")
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _fmt_vec(v):
    return "[" + ", ".join(_fmt(x) for x in v) + "]"


def parse_point(tokens):
    """Accept ``1 2 3``, ``1,2,3`` or a mix."""
    vals = []
    for tok in tokens:
        for part in tok.replace(",", " ").split():
            try:
                vals.append(float(part))
            except ValueError:
                raise UsageError(f"point: not a number: {part!r}") from None
    return np.array(vals)


def _check_point(cfg, point):
    if len(point) != len(cfg.box):
        raise ConfigError("point", f"{cfg.mechanism} needs {len(cfg.box)} coordinates, got {len(point)}")
    for i, (x, (lo, hi)) in enumerate(zip(point, cfg.box)):
        if not lo <= x <= hi:
            raise ConfigError(f"point[{i}]", f"{x!r} outside the box [{lo!r}, {hi!r}]")


# -- result rendering ------------------------------------------------------------------

def result_table(result, names):
    """Aligned human-readable summary of a ``RunResult``."""
    rows = [
        ("Best point", _fmt_vec(result.best_point)),
        ("Parameters", "[" + ", ".join(names) + "]"),
        ("Best evaluation", _fmt(result.best_evaluation)),
        ("GCI (e / feasible)", _fmt(result.gci)),
        ("Feasible poses", str(result.feasible_count)),
        ("Best actuator range", "none" if result.bracket is None else _fmt_vec(result.bracket)),
        ("Coarse starts", str(len(result.coarse))),
        ("Fine starts", str(len(result.fine))),
    ]
    width = max(len(k) for k, _ in rows)
    out = [f"{k.ljust(width)}  {v}" for k, v in rows]
    out.append("")
    head = ("stage", "id", "parent", "evaluation", "iter", "evals", "stop", "point")
    body = []
    for s in result.coarse + result.fine:
        body.append((s.stage, str(s.start_id), "-" if s.parent is None else str(s.parent),
                     _fmt(s.evaluation), str(s.iterations), str(s.evaluations), s.stop_reason,
                     _fmt_vec(s.final_point)))
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(head)]
    out.append("  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip())
    for r in body:
        out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(out) + "\n"


def result_json(result, include_timings=False, include_traces=False):
    return json.dumps(result.to_dict(include_timings, include_traces), indent=2) + "\n"


def evaluation_report(ev, mech):
    """Key/value lines describing one design evaluation."""
    sel = ev.selected
    lines = [("e", _fmt(ev.e)), ("singular", str(ev.singular).lower()),
             ("feasible_count", str(ev.feasible_count)), ("grid_points", str(len(ev.poses)))]
    if sel.any():
        q = ev.batch.quality[sel]
        poses = ev.poses[sel]
        imax, imin = int(np.argmax(q)), int(np.argmin(q))
        lines += [
            ("gci_mean", _fmt(np.mean(q))),
            ("gci_std", _fmt(np.std(q))),
            ("max_quality", _fmt(q[imax])),
            ("max_quality_pose", _fmt_vec(poses[imax])),
            ("min_quality", _fmt(q[imin])),
            ("min_quality_pose", _fmt_vec(poses[imin])),
        ]
    else:
        lines += [(k, "none") for k in ("gci_mean", "gci_std", "max_quality", "max_quality_pose",
                                        "min_quality", "min_quality_pose")]
    b = ev.bracket
    lines.append(("bracket", "none" if b is None else _fmt_vec((b.rho_min, b.rho_max))))
    for key in sorted(ev.counters):
        lines.append((f"violations.{key}", str(ev.counters[key])))
    lines.append(("pose_axes", "[" + ", ".join(mech.pose_axes) + "]"))
    width = max(len(k) for k, _ in lines)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in lines)


# -- commands -----------------------------------------------------------------------------

def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_optimize(args, out):
    cfg = load_config(args.config)
    workers = effective_workers(cfg, args.workers)
    traces = args.traces or cfg.multistart.keep_traces or bool(cfg.output.trace_jsonl)
    ms = replace(cfg.multistart, workers=workers, keep_traces=traces)
    problem = cfg.problem()
    result = run_cascade(problem, ms, coarse=cfg.nm_stage("coarse"), fine=cfg.nm_stage("fine"))
    timings = args.timings or cfg.output.include_timings
    doc = result_json(result, timings, include_traces=args.traces)
    table = result_table(result, problem.mechanism.param_names)
    json_path = args.output or cfg.output.result_json
    table_path = args.table or cfg.output.result_table
    if cfg.output.trace_jsonl:
        buf = io.StringIO()
        for stage in ("coarse", "fine"):
            for i, tr in enumerate(result.traces.get(stage, [])):
                write_trace(tr, buf, start_id=f"{stage}-{i}")
        _write(cfg.output.trace_jsonl, buf.getvalue())
    if table_path:
        _write(table_path, table)
    if json_path:
        _write(json_path, doc)
        out.write(table)
    else:
        out.write(doc)


def _design_eval(args):
    cfg = load_config(args.config)
    point = parse_point(args.point)
    _check_point(cfg, point)
    problem = cfg.problem()
    return cfg, problem, problem.evaluate_full(point, args.level)


def cmd_evaluate(args, out):
    _, problem, ev = _design_eval(args)
    if args.json:
        doc = {"e": _json_float(ev.e), "feasible_count": ev.feasible_count,
               "bracket": None if ev.bracket is None else [ev.bracket.rho_min, ev.bracket.rho_max],
               "counters": ev.counters}
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(evaluation_report(ev, problem.mechanism))


def cmd_grid(args, out):
    _, problem, ev = _design_eval(args)
    buf = io.StringIO()
    write_grid_csv(ev, problem.mechanism, buf)
    if args.output:
        _write(args.output, buf.getvalue())
    else:
        out.write(buf.getvalue())


def cmd_oracle(args, out):
    cfg = load_config(args.config)
    try:
        res = oracle_scan(cfg.problem(), args.points_per_axis, args.level, force=args.force)
    except ValueError as exc:
        raise ConfigError("oracle", str(exc)) from None
    doc = {"argmax": res.argmax, "max_evaluation": _json_float(res.max_evaluation),
           "points_per_axis": res.points_per_axis, "evaluations": res.evaluations,
           "level": args.level}
    out.write(json.dumps(doc, indent=2) + "\n")


def cmd_sobol(args, out):
    if args.count < 0:
        raise UsageError("count must be >= 0")
    pts = sobol_points(args.dim, args.count)
    for row in pts:
        out.write(" ".join(format(float(x), ".17g") for x in row) + "\n")


def build_parser():
    p = _Parser(prog="pkmopt", description="Design optimisation of parallel kinematic manipulators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("optimize", help="run the coarse/fine multi-start search")
    o.add_argument("config")
    o.add_argument("--workers", type=int, default=None)
    o.add_argument("--output", "-o", default=None, help="result JSON path (stdout if omitted)")
    o.add_argument("--table", default=None, help="text table path")
    o.add_argument("--traces", action="store_true", help="embed per-start traces in the JSON")
    o.add_argument("--timings", action="store_true", help="include wall times (breaks byte identity)")
    o.set_defaults(func=cmd_optimize)

    for name, func, hlp in (("evaluate", cmd_evaluate, "report one design"),
                            ("grid", cmd_grid, "dump the per-pose grid as CSV")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("config")
        s.add_argument("--point", nargs="+", required=True)
        s.add_argument("--level", choices=("coarse", "fine"), default="fine")
        if name == "evaluate":
            s.add_argument("--json", action="store_true")
        else:
            s.add_argument("--output", "-o", default=None)
        s.set_defaults(func=func)

    r = sub.add_parser("oracle", help="exhaustive lattice scan of the parameter box")
    r.add_argument("config")
    r.add_argument("--points-per-axis", type=int, default=301)
    r.add_argument("--level", choices=("coarse", "fine"), default="fine")
    r.add_argument("--force", action="store_true")
    r.set_defaults(func=cmd_oracle)

    s = sub.add_parser("sobol", help="print unit-cube Sobol points")
    s.add_argument("dim", type=int)
    s.add_argument("count", type=int)
    s.set_defaults(func=cmd_sobol)
    return p


def _fail(err, code, message):
    err.write(f"error[{_CODES[code]}]: {message}\n")
    return code


def main(argv=None, stdout=None, stderr=None):
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    buf = io.StringIO()
    try:
        args = build_parser().parse_args(argv)
        with np.errstate(all="ignore"):
            args.func(args, buf)
    except UsageError as exc:
        return _fail(err, EXIT_USAGE, str(exc))
    except (ConfigError, UnsupportedDimensionError) as exc:
        return _fail(err, EXIT_USAGE, str(exc))
    except NoFeasibleDesignError as exc:
        diag = ", ".join(f"{k}={v}" for k, v in sorted(exc.diagnostics.items(),
                                                       key=lambda kv: (-kv[1], kv[0])))
        return _fail(err, EXIT_INFEASIBLE, f"{exc}" + (f" (constraint counts: {diag})" if diag else ""))
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        return _fail(err, EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    except OSError as exc:
        return _fail(err, EXIT_USAGE, f"{exc.filename}: {exc.strerror}")
    try:
        out.write(buf.getvalue())
        out.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the interpreter's flush at exit
        import os
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
