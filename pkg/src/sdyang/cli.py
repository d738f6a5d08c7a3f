"""Command-line front end.

Every command writes one JSON report (stdout or --out).  The report itself
is deterministic; wall-clock data, the thread count and the kernel backend
go into a separate envelope that the checksum does not cover.

Exit codes: 0 pass, 1 residual failure, 2 usage or configuration error,
3 obstructed as expected.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__, kernels
from . import catalog as cat
from . import expr as ex
from .backlund import (BacklundError, TransformConfig, conjugate, obstruction_probe, orbit,
                       transform)
from .fieldcore import ChartBox, Field, FieldError, lattice, max_norm, write_csv
from .gauge import kmatrix_residual, tolerance, yang_residual, yang_residual_coord
from .geometry import flat_metric
from .heavenly import HeavenlyError, chain_residuals, second_heavenly_residual

SCHEMA = "sdyang.report/1"
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_OBSTRUCTED = 0, 1, 2, 3
ALIASES = {"flat": "euclidean_flat", "eh": "eguchi_hanson", "fs": "fubini_study"}
FLAT_BOX = ChartBox((-0.5,) * 4, (0.5,) * 4)
PLATEAU = 1e-10
MIN_ORDER = 3.5
DEFAULT_CONJ = "1, 0.3; 0.5i, 1 | 1, 0.2; 0.3, 1"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- reports

def _clean(x):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.complexfloating, complex)):
        return {"re": _clean(x.real), "im": _clean(x.imag)}
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False)


def make_report(command, config, results, verdict):
    return {"schema": SCHEMA, "command": command, "config": config, "results": results,
            "verdict": verdict, "versions": {"sdyang": __version__}}


def emit(report, out, started, threads):
    body = dumps(report)
    envelope = {"checksum": "sha256:" + hashlib.sha256(body.encode()).hexdigest(),
                "elapsed_s": round(time.perf_counter() - started, 3), "threads": threads,
                "backend": kernels.BACKEND}
    text = dumps({"report": report, "envelope": envelope}) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def report_checksum(text):
    """Checksum of the deterministic part of a written report."""
    data = json.loads(text)
    return "sha256:" + hashlib.sha256(dumps(data["report"]).encode()).hexdigest()


# ---------------------------------------------------------------- argument helpers

def parse_grid(text):
    try:
        grids = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected e.g. 17 or 9,17,33") from None
    if not grids:
        raise UsageError("empty grid list")
    for n in grids:
        if n < 9 or n % 2 == 0:
            raise UsageError(f"grid sizes must be odd and >= 9, got {n}")
    return grids


def parse_matrix(text):
    rows = [[c.strip() for c in r.split(",")] for r in text.split(";") if r.strip()]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise UsageError(f"matrix {text!r} is not square")
    return rows


def parse_constants(text):
    parts = text.split("|")
    if len(parts) != 2:
        raise UsageError("conjugation constants must be 'C1 | C2'")
    out = []
    for p in parts:
        rows = parse_matrix(p)
        out.append(np.array([[complex(c.replace("i", "j")) for c in r] for r in rows]))
    return out


def parse_params(extra):
    """Leftover '--name value' pairs become metric parameters."""
    params = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            val = next(it, None)
            if val is None:
                raise UsageError(f"parameter --{key} needs a value")
        try:
            params[key] = float(val)
        except ValueError:
            raise UsageError(f"parameter --{key} needs a number, got {val!r}") from None
    return params


def resolve_entry(name, params, catalog=None):
    name = ALIASES.get(name, name)
    try:
        return cat.get(name, catalog, **params)
    except cat.CatalogError as exc:
        raise UsageError(str(exc)) from None


def resolve_seed(name, catalog=None):
    try:
        return (catalog or cat.default_catalog()).seed(name)
    except cat.CatalogError as exc:
        raise UsageError(str(exc)) from None


def _field_from_text(text, dom, params, order):
    try:
        return Field.from_exprs(parse_matrix(text), dom, params, order)
    except ex.ExprError as exc:
        raise UsageError(f"bad field expression: {exc}") from None


def _seed_field(args, entry, dom, order, g=None):
    if args.field:
        return _field_from_text(args.field, dom, entry.params, order), {"field": args.field}
    seed = resolve_seed(args.seed)
    if not seed.applies_to(entry):
        raise UsageError(f"seed {seed.name!r} does not apply to metric {entry.name!r}")
    rng = np.random.default_rng(args.rng_seed)
    return seed.build(entry, dom, order, rng=rng, g=g), {"seed": seed.name}


def _metric_config(args, entry, grids):
    return {"metric": entry.name, "params": dict(entry.params), "grid": grids,
            "tol_profile": args.tol_profile}


# ---------------------------------------------------------------- commands

def cmd_catalog(args):
    c = cat.default_catalog()
    if args.action == "list":
        res = {"metrics": [e.name for e in cat.entries(c)], "seeds": [s.name for s in cat.seeds(c)],
               "checksum": c.checksum, "version": c.version}
        return make_report("catalog list", {}, res, "pass"), EXIT_PASS
    if args.action == "show":
        if not args.name:
            raise UsageError("catalog show needs a name")
        if args.name in c.seed_entries:
            return make_report("catalog show", {"name": args.name}, c.seed(args.name).to_dict(),
                               "pass"), EXIT_PASS
        e = resolve_entry(args.name, {}, c)
        return make_report("catalog show", {"name": e.name}, e.to_dict(), "pass"), EXIT_PASS
    names = [ALIASES.get(args.name, args.name)] if args.name else [e.name for e in cat.entries(c)]
    n = parse_grid(args.grid)[0]
    out, ok = {}, True
    for name in names:
        rep = cat.validate(resolve_entry(name, {}, c), n=n, strict=False)
        out[name] = rep
        ok = ok and rep["ok"]
    return (make_report("catalog validate", {"names": names, "grid": n}, out,
                        "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL)


def cmd_check_metric(args, params):
    entry = resolve_entry(args.metric, params)
    n = parse_grid(args.grid)[0]
    rep = cat.validate(entry, n=n, strict=False)
    ok = rep["ok"]
    return (make_report("check-metric", _metric_config(args, entry, [n]), rep,
                        "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL)


def _yang_check(args, entry, n):
    dom = entry.lattice(n)
    g = entry.metric(dom, 2)
    _, s, _ = entry.aux(dom, 2)
    J, src = _seed_field(args, entry, dom, 2, g)
    if args.tol_profile == "sampled":
        g, J, s = g.to_sampled(), J.to_sampled(), s.to_sampled()
    rep = yang_residual(g, J, profile=args.tol_profile, keep_fields=True)
    coord = yang_residual_coord(g, s, J)
    lhs = coord + s @ rep.fields["R3"]
    margin = 4 if args.tol_profile == "sampled" else None
    scale = max(max_norm(coord, margin), max_norm(s @ rep.fields["R3"], margin), 1e-300)
    res = rep.to_dict()
    res["equivalence"] = {"abs": max_norm(lhs, margin), "rel": max_norm(lhs, margin) / scale}
    return res, rep.passed, src, (g, J, s, coord, lhs, rep)


def cmd_check_yang(args, params):
    entry = resolve_entry(args.metric, params)
    n = parse_grid(args.grid)[0]
    res, ok, src, _ = _yang_check(args, entry, n)
    conf = _metric_config(args, entry, [n])
    conf.update(src)
    return make_report("check-yang", conf, res, "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL


def cmd_check_k(args, params):
    entry = resolve_entry(args.metric, params)
    if not args.field:
        raise UsageError("check-k needs --field with the K matrix")
    n = parse_grid(args.grid)[0]
    dom = entry.lattice(n)
    g = entry.metric(dom, 1)
    K = _field_from_text(args.field, dom, entry.params, 2)
    try:
        F = kmatrix_residual(g, K, args.background)
    except Exception as exc:  # unsupported background
        raise UsageError(str(exc)) from None
    r = max_norm(F)
    tol = tolerance(F, "analytic")
    res = {"kmatrix_residual": r, "tol": tol, "background": args.background}
    conf = _metric_config(args, entry, [n])
    conf["field"] = args.field
    return make_report("check-k", conf, res, "pass" if r <= tol else "fail"), (
        EXIT_PASS if r <= tol else EXIT_FAIL)


def _verdict_code(verdict):
    return {"pass": EXIT_PASS, "obstructed": EXIT_OBSTRUCTED}.get(verdict, EXIT_FAIL)


def _backlund_once(args, entry, n, order, light=False):
    dom = entry.lattice(n)
    g = entry.metric(dom, 1 if light else 2)
    _, s, r = entry.aux(dom, 1 if light else 2)
    J, src = _seed_field(args, entry, dom, 1 if light else 2, g)
    seed_rep = None if light else yang_residual(g, J).to_dict()
    cfg = TransformConfig(r=r, s=s, tol=args.solver_tol, method=args.method, order=order)
    res = transform(g, cfg, J, k=args.k, check=False, probe=not light)
    return g, cfg, J, res, seed_rep, src


def cmd_backlund(args, params):
    entry = resolve_entry(args.metric, params)
    grids = parse_grid(args.grid)
    conf = _metric_config(args, entry, grids)
    conf.update({"k": args.k, "solver_tol": args.solver_tol, "method": args.method})
    if len(grids) == 1:
        try:
            _, _, _, res, seed_rep, src = _backlund_once(args, entry, grids[0], 2)
        except BacklundError as exc:
            raise UsageError(str(exc)) from None
        conf.update(src)
        out = {"seed": seed_rep, **res.to_dict()}
        return make_report("backlund", conf, out, res.verdict), _verdict_code(res.verdict)
    if len(grids) < 3:
        raise UsageError("a convergence study needs at least three grids")
    rows = []
    for n in grids:
        try:
            g, _, _, res, _, src = _backlund_once(args, entry, n, 0, light=True)
        except BacklundError as exc:
            raise UsageError(str(exc)) from None
        rep = yang_residual(g.to_sampled(), res.J.to_sampled(), keep_fields=True)
        err = matched_max(grids, n, [rep.fields[k] for k in ("R1", "R2", "R3")])
        rows.append({"n": n, "h": max(g.domain.h), "error": err,
                     "solver_residual": res.primed.solver_residual})
        del g, res, rep
    conf.update(src)
    table = fit_table(rows)
    ok = table["order"] is not None and table["order"] >= MIN_ORDER
    verdict = "pass" if ok or table["plateau"] else "fail"
    return make_report("backlund", conf, table, verdict), _verdict_code(verdict)


def cmd_orbit(args, params):
    entry = resolve_entry(args.metric, params)
    n = parse_grid(args.grid)[0]
    dom = entry.lattice(n)
    g = entry.metric(dom, 2)
    _, s, r = entry.aux(dom, 2)
    J, src = _seed_field(args, entry, dom, 2, g)
    C1, C2 = parse_constants(args.conj)
    moves = []
    for m in [m.strip() for m in args.moves.split(",") if m.strip()]:
        if m == "conjugate":
            moves.append({"kind": "conjugate", "C1": C1, "C2": C2})
        elif m.startswith("transform"):
            k = m.partition(":")[2]
            moves.append({"kind": "transform", "k": int(k) if k else args.k})
        else:
            raise UsageError(f"unknown move {m!r}; use transform[:k] or conjugate")
    cfg = TransformConfig(r=r, s=s, tol=args.solver_tol, method=args.method)
    try:
        steps = orbit(g, cfg, J, moves)
    except BacklundError as exc:
        raise UsageError(str(exc)) from None
    out = {"steps": [st.to_dict() for st in steps], "completed": len(steps) == len(moves) + 1}
    verdict = steps[-1].verdict if out["completed"] else "fail"
    if out["completed"] and all(st.verdict == "pass" for st in steps):
        verdict = "pass"
    conf = _metric_config(args, entry, [n])
    conf.update(src)
    conf["moves"] = args.moves
    for mv in out["steps"]:
        mv["move"] = {k: v for k, v in mv["move"].items() if k not in ("C1", "C2")}
    return make_report("orbit", conf, out, verdict), _verdict_code(verdict)


def cmd_heavenly(args, params):
    if not args.theta:
        raise UsageError("heavenly needs --theta")
    n = parse_grid(args.grid)[0]
    dom = lattice(FLAT_BOX, n)
    try:
        theta = Field.from_expr(args.theta, dom, params, 4)
    except ex.ExprError as exc:
        raise UsageError(f"bad theta: {exc}") from None
    g = flat_metric(dom, 1)
    res = chain_residuals(g, theta)
    tol = 1e-9
    res["tol"] = tol
    res["heavenly_solution"] = res["heavenly"] <= tol
    res["kmatrix_solution"] = res["kmatrix"] <= tol
    res["agree"] = res["heavenly_solution"] == res["kmatrix_solution"]
    if args.csv:
        write_csv(second_heavenly_residual(theta), args.csv)
    conf = {"theta": args.theta, "params": params, "grid": [n], "background": "flat"}
    ok = res["heavenly_solution"] and res["kmatrix_solution"]
    return make_report("heavenly", conf, res, "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------- convergence

def matched_max(grids, n, fields):
    """Max over the points shared by every grid's valid stencil region.

    Grids are nested (n - 1 doubling), so the coarsest grid's interior at
    margin 4 names physical points present on all of them.
    """
    n0 = min(grids)
    if any((m - 1) % (n0 - 1) for m in grids):
        raise UsageError("convergence grids must be nested: (n - 1) multiples of the coarsest")
    step = (n - 1) // (n0 - 1)
    lo, hi = 4, n0 - 5
    sl = tuple(slice(lo * step, hi * step + 1, step) for _ in range(4))
    return max(float(np.abs(f.values[sl]).max()) for f in fields)


def fit_table(rows):
    errs = np.array([r["error"] for r in rows])
    hs = np.array([r["h"] for r in rows])
    plateau = bool(errs.max() <= PLATEAU)
    for i, r in enumerate(rows):
        r["order"] = None
        if i > 0 and errs[i] > PLATEAU and errs[i - 1] > PLATEAU:
            r["order"] = float(math.log(errs[i - 1] / errs[i]) / math.log(hs[i - 1] / hs[i]))
    use = errs > PLATEAU
    order = None
    if use.sum() >= 2:
        order = float(np.polyfit(np.log(hs[use]), np.log(errs[use]), 1)[0])
    return {"rows": rows, "order": order, "plateau": plateau, "min_order": MIN_ORDER,
            "plateau_floor": PLATEAU}


def _conv_derivative(args, entry, n, grids):
    dom = entry.lattice(n)
    f = Field.from_expr(args.expr, dom, entry.params, 1)
    fs = f.to_sampled()
    fields = []
    for d in ("z", "w", "zt", "wt"):
        exact = Field(dom, {(0, 0, 0, 0): f.derive(d).values}, 0, "sampled")
        fields.append(fs.derive(d) - exact)
    return matched_max(grids, n, fields)


def _conv_equivalence(args, entry, n, grids):
    dom = entry.lattice(n)
    g = entry.metric(dom, 0).to_sampled()
    s = entry.scalar("s", dom, 0).to_sampled()
    J = cat.perturbative_seed(dom, args.epsilon, np.random.default_rng(args.rng_seed), 0).to_sampled()
    rep = yang_residual(g, J, keep_fields=True)
    return matched_max(grids, n, [yang_residual_coord(g, s, J) + s @ rep.fields["R3"]])


def _conv_analytic(args, entry, n, grids):
    dom = entry.lattice(n)
    g = entry.metric(dom, 2)
    J, _ = _seed_field(args, entry, dom, 2, g)
    return yang_residual(g, J).worst


def _conv_sampled_yang(args, entry, n, grids):
    dom = entry.lattice(n)
    g = entry.metric(dom, 0).to_sampled()
    J, _ = _seed_field(args, entry, dom, 0)
    rep = yang_residual(g, J.to_sampled(), keep_fields=True)
    return matched_max(grids, n, [rep.fields[k] for k in ("R1", "R2", "R3")])


CONVERGENCE_CHECKS = {
    "derivative": _conv_derivative,
    "equivalence": _conv_equivalence,
    "analytic": _conv_analytic,
    "yang": _conv_sampled_yang,
}


def cmd_convergence(args, params):
    grids = parse_grid(args.grid)
    if len(grids) < 3:
        raise UsageError("convergence needs at least three grids")
    if args.check not in CONVERGENCE_CHECKS:
        raise UsageError(f"unknown check {args.check!r}; one of {sorted(CONVERGENCE_CHECKS)}")
    entry = resolve_entry(args.metric, params)
    fn = CONVERGENCE_CHECKS[args.check]
    rows = [{"n": n, "h": max(entry.lattice(9).h) * 8 / (n - 1), "error": fn(args, entry, n, grids)}
            for n in grids]
    table = fit_table(rows)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            fh.write(table_csv(table))
    ok = table["plateau"] or (table["order"] is not None and table["order"] >= MIN_ORDER)
    conf = _metric_config(args, entry, grids)
    conf.update({"check": args.check})
    return make_report("convergence", conf, table, "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL


def table_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "h", "error", "order"])
    for r in table["rows"]:
        w.writerow([r["n"], repr(r["h"]), repr(r["error"]), "" if r["order"] is None else repr(r["order"])])
    w.writerow(["fit", "", "", "" if table["order"] is None else repr(table["order"])])
    return buf.getvalue()


# ---------------------------------------------------------------- parser

def _common():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--grid", default="17", help="points per axis, or a list like 9,17,33")
    common.add_argument("--threads", type=int, default=1, help="worker threads for lattice kernels")
    common.add_argument("--tol-profile", dest="tol_profile", choices=("analytic", "sampled"),
                        default="analytic")
    common.add_argument("--config", help="INI file with defaults for these flags ([sdyang] section)")
    common.add_argument("--rng-seed", dest="rng_seed", type=int, default=0)
    return common


def build_parser():

    p = argparse.ArgumentParser(prog="sdyang", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sdyang {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("catalog", parents=[_common()], help="list, show or validate catalog entries")
    c.add_argument("action", choices=("list", "show", "validate"))
    c.add_argument("name", nargs="?")
    c.set_defaults(grid="9")

    c = sub.add_parser("check-metric", parents=[_common()], help="diagnostics and flag comparison")
    c.add_argument("metric")

    def seeded(c):
        c.add_argument("seed", nargs="?", default="triangular")
        c.add_argument("--field", help="explicit matrix 'a, b; c, d' instead of a named seed")

    c = sub.add_parser("check-yang", parents=[_common()], help="SDYM residuals of a Yang matrix")
    c.add_argument("metric")
    seeded(c)

    c = sub.add_parser("check-k", parents=[_common()], help="K-matrix equation residual")
    c.add_argument("metric")
    c.add_argument("--field", help="K matrix 'a, b; c, d'")
    c.add_argument("--background", default="flat", choices=("flat", "hyperkahler"))

    for name, helptext in (("backlund", "one Backlund step or its convergence study"),
                           ("orbit", "sequence of transform / conjugate moves")):
        c = sub.add_parser(name, parents=[_common()], help=helptext)
        c.add_argument("metric")
        seeded(c)
        c.add_argument("--k", type=int, default=1)
        c.add_argument("--solver-tol", dest="solver_tol", type=float, default=1e-12)
        c.add_argument("--method", choices=("auto", "spectral", "lattice"), default="auto")
        if name == "orbit":
            c.add_argument("--moves", default="transform,transform")
            c.add_argument("--conj", default=DEFAULT_CONJ, help="constants 'C1 | C2'")

    c = sub.add_parser("heavenly", parents=[_common()], help="second heavenly equation and K chain")
    c.add_argument("--theta", help="scalar potential expression")
    c.add_argument("--csv", help="write the heavenly residual field as CSV")
    c.set_defaults(grid="9")

    c = sub.add_parser("convergence", parents=[_common()], help="residual against h over grids")
    c.add_argument("check", help="derivative, equivalence, analytic or yang")
    c.add_argument("metric", nargs="?", default="burns")
    seeded(c)
    c.add_argument("--expr", default="exp(z*wt)*zt + w^3", help="field for the derivative check")
    c.add_argument("--epsilon", type=float, default=0.3)
    c.add_argument("--csv", help="write the table as CSV")
    c.set_defaults(grid="9,17,33")
    return p


COMMANDS = {"check-metric": cmd_check_metric, "check-yang": cmd_check_yang, "check-k": cmd_check_k,
            "backlund": cmd_backlund, "orbit": cmd_orbit, "heavenly": cmd_heavenly,
            "convergence": cmd_convergence}


def _apply_config_file(parser, argv):
    """Defaults from --config; explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(known.config, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    if "sdyang" not in cp:
        raise UsageError("config file needs an [sdyang] section")
    return {k.replace("-", "_"): v for k, v in cp["sdyang"].items()}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    parser = build_parser()
    try:
        defaults = _apply_config_file(parser, argv)
        args, extra = parser.parse_known_args(argv)
        if defaults:
            sub_defaults = {k: v for k, v in defaults.items() if k != "config"}
            reparsed = build_parser()
            for action in reparsed._subparsers._group_actions[0].choices.values():
                valid = {a.dest: a for a in action._actions}
                conv = {}
                for k, v in sub_defaults.items():
                    if k in valid:
                        t = valid[k].type
                        conv[k] = t(v) if t else v
                action.set_defaults(**conv)
            args, extra = reparsed.parse_known_args(argv)
        kernels.set_threads(args.threads)
        if args.command == "catalog":
            if extra:
                raise UsageError(f"unexpected arguments {extra}")
            report, code = cmd_catalog(args)
        else:
            report, code = COMMANDS[args.command](args, parse_params(extra))
    except UsageError as exc:
        sys.stderr.write(f"sdyang: error: {exc}\n")
        return EXIT_USAGE
    except (cat.CatalogError, FieldError, HeavenlyError, ex.ExprError) as exc:
        sys.stderr.write(f"sdyang: error: {exc}\n")
        return EXIT_USAGE
    emit(report, args.out, started, args.threads)
    return code


if __name__ == "__main__":
    sys.exit(main())
