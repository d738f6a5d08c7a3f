"""Registry of closed-form test metrics and seed solutions.

The registry lives in an INI file (``data/catalog.ini`` by default, or the
path in SDYANG_CATALOG).  Each ``[metric NAME]`` section gives either a
Kahler potential or the four block components, a chart box, the auxiliary
scalars phi, s, r, a harmonic function for the seeds and the expected
flags.  ``[seed NAME]`` sections describe seed families as matrix
templates.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field as dc_field, replace
from importlib import resources

import numpy as np

from . import expr as ex
from .fieldcore import ChartBox, Field, Lattice, lattice, max_norm, matrix_exp
from .geometry import (COMPONENTS, MetricSpec, curvature_diagnostics, exterior_derivative,
                       fundamental_form, lee_form, validate_s)

ENV_VAR = "SDYANG_CATALOG"
FLAG_NAMES = ("kahler", "conformally_kahler", "scalar_flat", "einstein", "half_flat")
SEED_KINDS = ("matrix", "spin_yang", "perturbative")
TOL_FORM = 1e-9
TOL_AUX = 1e-8
TOL_CURV = 1e-8


class CatalogError(Exception):
    pass


class ValidationError(CatalogError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------- parsing helpers

def _split_list(text, sep=","):
    return [p.strip() for p in text.split(sep) if p.strip()]


def _parse_assignments(text):
    """'a = 1; b = 2'  ->  [('a', '1'), ('b', '2')] (order kept)."""
    out = []
    for part in _split_list(text, ";"):
        if "=" not in part:
            raise CatalogError(f"expected name = value in {part!r}")
        k, v = part.split("=", 1)
        out.append((k.strip(), v.strip()))
    return out


def _floats(text, n=None):
    vals = [float(v) for v in _split_list(text)]
    if n is not None and len(vals) != n:
        raise CatalogError(f"expected {n} numbers, got {text!r}")
    return tuple(vals)


def _matrix_rows(text):
    return [_split_list(row) for row in _split_list(text, ";")]


def _const_matrix(text):
    rows = _matrix_rows(text)
    return np.array([[complex(v.replace("i", "j")) if "i" in v else float(v) for v in row]
                     for row in rows])


def compute_checksum(cp):
    """sha256 over every key of every metric and seed section, in sorted order."""
    lines = []
    for sec in sorted(s for s in cp.sections() if s != "catalog"):
        for key in sorted(cp[sec]):
            val = " ".join(cp[sec][key].split())
            lines.append(f"{sec}\x1f{key}\x1f{val}")
    return "sha256:" + hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def update_checksum(path):
    """Rewrite the checksum line of a catalog file after editing it."""
    actual = compute_checksum(_read(path))
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    for i, line in enumerate(lines):
        if line.replace(" ", "").startswith("checksum="):
            lines[i] = f"checksum = {actual}"
            break
    else:
        raise CatalogError("catalog file has no checksum line")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    return actual


# ---------------------------------------------------------------- entries

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: dict
    defs: tuple
    source: dict
    box: ChartBox
    flags: dict
    provenance: str = ""
    notes: str = ""

    def template(self, text):
        """Parse with the section's defs substituted; free names are left alone."""
        e = ex.parse(text, None)
        for k, v in reversed(self.defs):
            e = ex.substitute(e, {k: v})
        return e

    def _expr(self, text):
        e = self.template(text)
        unknown = ex.free_symbols(e) - set(self.params)
        if unknown:
            raise CatalogError(f"{self.name}: undeclared parameters {sorted(unknown)}")
        return e

    def expr(self, key):
        if key not in self.source:
            raise CatalogError(f"{self.name}: no {key!r} entry")
        return self._expr(self.source[key])

    def spec(self):
        if "potential" in self.source:
            return MetricSpec.from_potential(self.expr("potential"), self.params, self.name)
        comps = {c: self.expr("g_" + c) for c in COMPONENTS}
        return MetricSpec(comps, dict(self.params), self.name)

    def lattice(self, n=17):
        return lattice(self.box, n)

    def metric(self, domain, order=2):
        return self.spec().bind(domain, order)

    def scalar(self, key, domain, order=2):
        return Field.from_expr(self.expr(key), domain, self.params, order)

    def aux(self, domain, order=2):
        """(phi, s, r) as fields."""
        return tuple(self.scalar(k, domain, order) for k in ("phi", "s", "r"))

    def with_params(self, **kw):
        bad = set(kw) - set(self.params)
        if bad:
            raise CatalogError(f"{self.name}: unknown parameters {sorted(bad)}")
        p = dict(self.params)
        p.update({k: float(v) for k, v in kw.items()})
        return replace(self, params=p)

    def to_dict(self):
        return {"name": self.name, "params": dict(self.params), "box": self.box.to_dict(),
                "flags": dict(self.flags), "provenance": self.provenance, "notes": self.notes,
                "expressions": {k: v for k, v in sorted(self.source.items())},
                "defs": {k: ex.to_string(v) for k, v in self.defs}}


@dataclass(frozen=True)
class SeedEntry:
    name: str
    kind: str
    metrics: tuple
    matrix: tuple = ()
    bt: str | None = None
    left: tuple | None = None
    right: tuple | None = None
    epsilon: float = 0.1
    notes: str = ""

    def applies_to(self, entry):
        return entry.name in self.metrics

    def build(self, entry, domain, order=2, rng=None, g=None):
        """The seed's Yang matrix on ``domain`` for a catalog entry."""
        if not self.applies_to(entry):
            raise CatalogError(f"seed {self.name!r} does not apply to metric {entry.name!r}")
        if self.kind == "spin_yang":
            from .heavenly import spin_yang_matrix
            g = g if g is not None else entry.metric(domain, order)
            J = spin_yang_matrix(g, check=False)
        elif self.kind == "perturbative":
            return perturbative_seed(domain, self.epsilon, rng or np.random.default_rng(0), order)
        else:
            subs = {"psi": entry.expr("harmonic")}
            if self.bt is not None:
                subs["bt"] = ex.parse(self.bt, ())
            rows = [[ex.substitute(entry.template(c), subs) for c in row] for row in self.matrix]
            J = Field.from_exprs(rows, domain, entry.params, order)
        if self.left is not None or self.right is not None:
            from .backlund import conjugate
            n = J.rows
            C1 = np.eye(n) if self.left is None else np.array(self.left)
            C2 = np.eye(n) if self.right is None else np.array(self.right)
            J = conjugate(J, C1, C2)
        return J

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "metrics": list(self.metrics),
                "matrix": [list(r) for r in self.matrix], "bt": self.bt,
                "left": _matrix_text(self.left), "right": _matrix_text(self.right),
                "notes": self.notes}


def _matrix_text(m):
    if m is None:
        return None
    return [[repr(complex(v)) if complex(v).imag else repr(float(complex(v).real)) for v in row]
            for row in m]


def perturbative_seed(domain, epsilon, rng, order=2, n=2):
    """exp(epsilon psi) with psi a random matrix of low-degree polynomials."""
    monos = ["1", "z", "w", "zt", "wt", "z*zt", "w*wt", "z*wt", "zt*w", "z^2", "wt^2"]
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            c = rng.normal(size=len(monos)) + 1j * rng.normal(size=len(monos))
            row.append(ex.parse(" + ".join(f"({float(a.real)!r} + {float(a.imag)!r}*i)*{m}" for a, m in zip(c, monos)), ()))
        rows.append(row)
    psi = Field.from_exprs(rows, domain, None, order)
    return matrix_exp(psi.scale(epsilon))


# ---------------------------------------------------------------- loading

@dataclass
class Catalog:
    path: str
    version: int
    checksum: str
    metrics: dict = dc_field(default_factory=dict)
    seed_entries: dict = dc_field(default_factory=dict)

    def entry(self, name, **params):
        if name not in self.metrics:
            raise CatalogError(f"unknown metric {name!r}; known: {', '.join(sorted(self.metrics))}")
        e = self.metrics[name]
        return e.with_params(**params) if params else e

    def seed(self, name):
        if name not in self.seed_entries:
            raise CatalogError(f"unknown seed {name!r}; known: {', '.join(sorted(self.seed_entries))}")
        return self.seed_entries[name]


def default_path():
    env = os.environ.get(ENV_VAR)
    if env:
        return env
    return str(resources.files("sdyang") / "data" / "catalog.ini")


def _read(path):
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                   inline_comment_prefixes=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from exc
    return cp


def load(path=None, verify=True):
    path = path or default_path()
    cp = _read(path)
    if "catalog" not in cp:
        raise CatalogError("catalog file lacks a [catalog] section")
    head = cp["catalog"]
    version = int(head.get("version", "0"))
    if version != 1:
        raise CatalogError(f"unsupported catalog version {version}")
    stored = head.get("checksum", "")
    actual = compute_checksum(cp)
    if verify and stored != actual:
        raise CatalogError(f"catalog checksum mismatch: stored {stored}, computed {actual}")
    cat = Catalog(path, version, actual)
    for sec in cp.sections():
        if sec == "catalog":
            continue
        kind, _, name = sec.partition(" ")
        body = cp[sec]
        if kind == "metric":
            cat.metrics[name] = _metric(name, body)
        elif kind == "seed":
            cat.seed_entries[name] = _seed(name, body)
        else:
            raise CatalogError(f"unknown section [{sec}]")
    return cat


def _metric(name, body):
    params = {k: float(v) for k, v in _parse_assignments(body.get("params", ""))}
    defs = []
    for k, v in _parse_assignments(body.get("defs", "")):
        e = ex.parse(v, None)
        for kk, vv in reversed(defs):
            e = ex.substitute(e, {kk: vv})
        defs.append((k, e))
    keys = ["phi", "s", "r", "harmonic"]
    keys += ["potential"] if "potential" in body else ["g_" + c for c in COMPONENTS]
    missing = [k for k in keys + ["box_lo", "box_hi", "flags"] if k not in body]
    if missing:
        raise CatalogError(f"metric {name}: missing keys {missing}")
    source = {k: body[k] for k in keys}
    box = ChartBox(_floats(body["box_lo"], 4), _floats(body["box_hi"], 4),
                   float(body.get("rho_min", "0")))
    listed = set(_split_list(body["flags"]))
    bad = listed - set(FLAG_NAMES)
    if bad:
        raise CatalogError(f"metric {name}: unknown flags {sorted(bad)}")
    flags = {f: f in listed for f in FLAG_NAMES}
    entry = CatalogEntry(name, params, tuple(defs), source, box, flags,
                         body.get("provenance", ""), body.get("notes", ""))
    for k in keys:
        entry.expr(k)  # fail at load time on bad expressions
    return entry


def _seed(name, body):
    kind = body.get("kind", "")
    if kind not in SEED_KINDS:
        raise CatalogError(f"seed {name}: kind must be one of {SEED_KINDS}")
    matrix = tuple(tuple(r) for r in _matrix_rows(body["matrix"])) if kind == "matrix" else ()
    if kind == "matrix":
        if not matrix or any(len(r) != len(matrix) for r in matrix):
            raise CatalogError(f"seed {name}: matrix must be square")
        for row in matrix:
            for c in row:
                ex.parse(c, None)
    left = _const_matrix(body["left"]) if "left" in body else None
    right = _const_matrix(body["right"]) if "right" in body else None
    return SeedEntry(name, kind, tuple(_split_list(body.get("metrics", ""))), matrix,
                     body.get("bt"), None if left is None else tuple(map(tuple, left)),
                     None if right is None else tuple(map(tuple, right)),
                     float(body.get("epsilon", "0.1")), body.get("notes", ""))


_default = None


def default_catalog():
    global _default
    path = default_path()
    if _default is None or _default.path != path:
        _default = load(path)
    return _default


def entries(catalog=None):
    cat = catalog or default_catalog()
    return [cat.metrics[k] for k in cat.metrics]


def seeds(catalog=None):
    cat = catalog or default_catalog()
    return [cat.seed_entries[k] for k in cat.seed_entries]


def get(name, catalog=None, **params):
    return (catalog or default_catalog()).entry(name, **params)


# ---------------------------------------------------------------- validation

def validate(entry, n=9, strict=True, order=2):
    """Recompute the diagnostics behind every flag and the auxiliary data.

    Raises ValidationError on any mismatch when ``strict``; the report is
    attached to the exception and returned otherwise.
    """
    from .backlund import TransformConfig, obstruction_probe
    from .gauge import scalar_yang_residual

    dom = entry.lattice(n)
    g = entry.metric(dom, order)
    g.check()
    phi, s, r = entry.aux(dom, order)
    kap = fundamental_form(g)
    dk = max(max_norm(c) for c in exterior_derivative(kap))
    cd = lee_form(g)
    d_phi = max(max_norm(c) for c in exterior_derivative(kap.times(phi @ phi)))
    phi_match = None
    if cd.phi is not None:
        ratio = (phi.values / cd.phi.values)[..., 0, 0][~dom.excluded]
        phi_match = float(np.abs(ratio - ratio.mean()).max() / abs(ratio.mean()))
    s_res = max(validate_s(g, s).values())
    rv = r.values[..., 0, 0][~dom.excluded]
    r_ok = bool(np.all(np.abs(rv.imag) <= 1e-12 * np.abs(rv)) and np.all(rv.real > 0))
    diag = curvature_diagnostics(g)
    sm = diag.summary()
    probe = obstruction_probe(g, TransformConfig(r=r, s=s), diagnostics=diag)
    harm = max_norm(scalar_yang_residual(g, s, entry.scalar("harmonic", dom, order)))
    measured = {
        "kahler": dk <= TOL_FORM,
        "conformally_kahler": cd.conformally_kahler and d_phi <= TOL_AUX,
        "scalar_flat": sm["scalar_max_abs"] <= TOL_CURV,
        "einstein": sm["ricci_traceless_max"] <= TOL_CURV,
        "half_flat": sm["weyl_minus_max"] <= TOL_CURV,
    }
    checks = {
        "flags": all(measured[f] == entry.flags[f] for f in FLAG_NAMES),
        "s_valid": s_res <= TOL_AUX,
        "r_positive": r_ok,
        "phi_matches_lee": phi_match is not None and phi_match <= TOL_AUX,
        "probe_matches_half_flat": (probe.probe_zero if entry.flags["half_flat"]
                                    else probe.probe_nonvanishing),
        "harmonic": harm <= TOL_AUX,
    }
    report = {
        "name": entry.name, "params": dict(entry.params), "grid": dom.describe(),
        "expected": dict(entry.flags), "measured": measured,
        "values": {"d_kappa": dk, "lee_closedness": cd.closedness, "d_phi2_kappa": d_phi,
                   "phi_vs_lee": phi_match, "s_residual": s_res, "harmonic_residual": harm,
                   **sm},
        "obstruction": probe.to_dict(), "checks": checks, "ok": all(checks.values()),
    }
    if strict and not report["ok"]:
        bad = [k for k, v in checks.items() if not v]
        flags = [f for f in FLAG_NAMES if measured[f] != entry.flags[f]]
        raise ValidationError(f"catalog entry {entry.name} failed {bad} (flags {flags})", report)
    return report


__all__ = ["Catalog", "CatalogEntry", "SeedEntry", "CatalogError", "ValidationError", "load",
           "entries", "seeds", "get", "validate", "default_catalog", "compute_checksum",
           "perturbative_seed", "update_checksum", "FLAG_NAMES", "ENV_VAR"]
