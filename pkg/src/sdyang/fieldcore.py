"""Scalar and matrix fields on a chart of R^4 with Wirtinger derivatives.

Two backends share one interface.  Analytic fields carry a truncated jet:
a dict from multi-indices (counts of d/dz, d/dw, d/dzt, d/dwt) to value
arrays, so derivatives are exact and cost nothing.  Sampled fields carry
values on a lattice only and differentiate with 4th-order central stencils;
every derivative widens the invalid boundary band by two cells.

Values are always stored with shape (*domain.shape, rows, cols); a scalar
is a 1x1 matrix.
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import expr as ex
from . import kernels

DIRS = ("z", "w", "zt", "wt")
DIR_INDEX = {d: i for i, d in enumerate(DIRS)}
# mirror swaps z<->zt, w<->wt
MIRROR_INDEX = (2, 3, 0, 1)
STENCIL_HALF_WIDTH = 2
COND_LIMIT = 1e12


class FieldError(Exception):
    pass


class MarginError(FieldError):
    pass


class SingularMatrixError(FieldError):
    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{message} at {location}")
        self.location = location


class EmptyRegionError(FieldError):
    pass


def _dir(d):
    if isinstance(d, int):
        return d
    d = {"z~": "zt", "w~": "wt", "z̃": "zt", "w̃": "wt"}.get(d, d)
    if d not in DIR_INDEX:
        raise FieldError(f"unknown direction {d!r}")
    return DIR_INDEX[d]


# ---------------------------------------------------------------- geometry of the chart

@dataclass(frozen=True)
class Point:
    x1: float
    x2: float
    x3: float
    x4: float

    @property
    def coords(self):
        return (self.x1, self.x2, self.x3, self.x4)

    @property
    def z(self):
        return complex(self.x1, self.x2)

    @property
    def w(self):
        return complex(self.x3, self.x4)

    @property
    def zt(self):
        return self.z.conjugate()

    @property
    def wt(self):
        return self.w.conjugate()

    @classmethod
    def from_complex(cls, z, w):
        return cls(*ex.point_from_complex(z, w))


@dataclass(frozen=True)
class ChartBox:
    """Closed box in (x1..x4) with an optional exclusion disc rho < rho_min."""

    lo: tuple
    hi: tuple
    rho_min: float = 0.0

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 4 or len(hi) != 4:
            raise FieldError("chart box needs four intervals")
        if any(b <= a for a, b in zip(lo, hi)):
            raise FieldError("chart box has empty interior")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def excluded(self, x):
        if self.rho_min <= 0:
            return np.zeros(np.shape(x[0]), dtype=bool)
        rho2 = x[0] ** 2 + x[1] ** 2 + x[2] ** 2 + x[3] ** 2
        return rho2 < self.rho_min ** 2

    def center(self):
        return Point(*[(a + b) / 2 for a, b in zip(self.lo, self.hi)])

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi), "rho_min": self.rho_min}


@dataclass(frozen=True)
class GridSpec:
    n: tuple
    margin: int = STENCIL_HALF_WIDTH

    def __post_init__(self):
        n = self.n
        if isinstance(n, (int, np.integer)):
            n = (int(n),) * 4
        n = tuple(int(v) for v in n)
        if len(n) != 4:
            raise FieldError("grid needs four axis sizes")
        for v in n:
            if v < 9 or v % 2 == 0:
                raise FieldError(f"points per axis must be odd and >= 9, got {v}")
        if self.margin < STENCIL_HALF_WIDTH:
            raise FieldError("margin must cover the stencil half-width")
        object.__setattr__(self, "n", n)


class Domain:
    """A set of sample points; subclasses decide whether stencils exist."""

    lattice = False

    def __init__(self, x, excluded=None):
        self.x = tuple(np.asarray(c, dtype=float) for c in x)
        self.shape = self.x[0].shape
        self.excluded = np.zeros(self.shape, bool) if excluded is None else excluded

    @property
    def size(self):
        return int(np.prod(self.shape))

    def eval_coords(self):
        # excluded points are evaluated as NaN so singular loci never raise
        if not self.excluded.any():
            return self.x
        return tuple(np.where(self.excluded, np.nan, c) for c in self.x)

    def interior(self, margin=0):
        return ~self.excluded


class PointSet(Domain):
    """Unstructured points; analytic fields only."""

    @classmethod
    def from_points(cls, pts):
        arr = np.array([p.coords if isinstance(p, Point) else tuple(p) for p in pts], dtype=float)
        return cls(tuple(arr[:, i] for i in range(4)))


class Lattice(Domain):
    lattice = True

    def __init__(self, box, spec):
        if not isinstance(spec, GridSpec):
            spec = GridSpec(spec)
        self.box = box
        self.spec = spec
        axes = [np.linspace(a, b, n) for a, b, n in zip(box.lo, box.hi, spec.n)]
        self.axes = axes
        self.h = tuple(float(ax[1] - ax[0]) for ax in axes)
        x = np.meshgrid(*axes, indexing="ij")
        super().__init__(x, box.excluded(x))

    def interior(self, margin=None):
        m = self.spec.margin if margin is None else int(margin)
        mask = np.zeros(self.shape, bool)
        if all(n > 2 * m for n in self.shape):
            mask[m:-m or None, m:-m or None, m:-m or None, m:-m or None] = True
        return mask & ~self.excluded

    def index_of(self, point):
        """Nearest lattice index of a point."""
        out = []
        for ax, c in zip(self.axes, point.coords):
            out.append(int(np.argmin(np.abs(ax - c))))
        return tuple(out)

    def point(self, idx):
        return Point(*[float(ax[i]) for ax, i in zip(self.axes, idx)])

    def describe(self):
        return {"n": list(self.spec.n), "margin": self.spec.margin, "h": list(self.h),
                "box": self.box.to_dict()}

    def __eq__(self, other):
        return isinstance(other, Lattice) and self.box == other.box and self.spec == other.spec

    def __hash__(self):
        return hash((self.box, self.spec))


def lattice(box, n, margin=STENCIL_HALF_WIDTH):
    return Lattice(box, GridSpec(n, margin))


# ---------------------------------------------------------------- jet bookkeeping

_mi_cache = {}


def multi_indices(order):
    r = _mi_cache.get(order)
    if r is None:
        r = [a for k in range(order + 1) for a in _exact_order(k)]
        _mi_cache[order] = r
    return r


def _exact_order(k):
    out = []
    for c in itertools.product(range(k + 1), repeat=4):
        if sum(c) == k:
            out.append(c)
    return sorted(out, reverse=True)


_leib_cache = {}


def _leibniz(order):
    r = _leib_cache.get(order)
    if r is None:
        r = {}
        for a in multi_indices(order):
            terms = []
            for b in itertools.product(*[range(k + 1) for k in a]):
                g = tuple(x - y for x, y in zip(a, b))
                coef = 1
                for x, y in zip(a, b):
                    coef *= math.comb(x, y)
                terms.append((b, g, coef))
            r[a] = terms
        _leib_cache[order] = r
    return r


def _shift(a, d, k=1):
    return tuple(v + k if i == d else v for i, v in enumerate(a))


def _mirror(a):
    return (a[2], a[3], a[0], a[1])


def _first_dir(a):
    for i, v in enumerate(a):
        if v > 0:
            return i
    return None


def _mm(a, b):
    if a.shape[-1] == 1 and a.shape[-2] == 1:
        return a * b
    if b.shape[-1] == 1 and b.shape[-2] == 1:
        return a * b
    return np.matmul(a, b)


def _safe_inv(m):
    bad = ~np.isfinite(m).all(axis=(-1, -2))
    if bad.any():
        m = m.copy()
        m[bad] = np.eye(m.shape[-1])
    if m.shape[-1] == 1:
        inv = 1.0 / m
    elif m.shape[-1] == 2:
        # closed form keeps the common 2x2 case cheap and exact
        a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
        det = a * d - b * c
        inv = np.empty_like(m)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv[..., 0, 0] = d / det
            inv[..., 0, 1] = -b / det
            inv[..., 1, 0] = -c / det
            inv[..., 1, 1] = a / det
    else:
        try:
            inv = np.linalg.inv(m)
        except np.linalg.LinAlgError:
            inv = np.full_like(m, np.nan)
            for idx in np.ndindex(m.shape[:-2]):
                try:
                    inv[idx] = np.linalg.inv(m[idx])
                except np.linalg.LinAlgError:
                    pass
    if bad.any():
        inv[bad] = np.nan
    return inv, bad


# ---------------------------------------------------------------- the field type

class Field:
    """Immutable scalar/matrix field.  Use the constructors below."""

    __slots__ = ("domain", "jet", "order", "kind", "margin", "rows", "cols", "provenance")

    def __init__(self, domain, jet, order, kind="analytic", margin=0, provenance=""):
        self.domain = domain
        self.jet = jet
        self.order = order
        self.kind = kind
        self.margin = margin
        v = jet[(0, 0, 0, 0)]
        if v.ndim != len(domain.shape) + 2:
            raise FieldError("field values must be (*shape, rows, cols)")
        self.rows, self.cols = v.shape[-2], v.shape[-1]
        self.provenance = provenance

    # -- constructors

    @classmethod
    def from_values(cls, domain, values, margin=0, provenance="sampled"):
        """Sampled field from an array (*shape) or (*shape, r, c)."""
        v = np.asarray(values, dtype=complex)
        if v.shape == domain.shape:
            v = v[..., None, None]
        return cls(domain, {(0, 0, 0, 0): v}, 0, "sampled", margin, provenance)

    @classmethod
    def constant(cls, domain, mat, order=4):
        m = np.atleast_2d(np.asarray(mat, dtype=complex))
        v = np.broadcast_to(m, domain.shape + m.shape).copy()
        z = np.zeros_like(v)
        jet = {a: (v if sum(a) == 0 else z) for a in multi_indices(order)}
        return cls(domain, jet, order, "analytic", 0, "constant")

    @classmethod
    def zeros(cls, domain, rows=1, cols=1, order=4):
        return cls.constant(domain, np.zeros((rows, cols)), order)

    @classmethod
    def identity(cls, domain, n, order=4):
        return cls.constant(domain, np.eye(n), order)

    @classmethod
    def from_expr(cls, e, domain, params=None, order=2, evaluator=None):
        return cls.from_exprs([[e]], domain, params, order, evaluator)

    @classmethod
    def from_exprs(cls, entries, domain, params=None, order=2, evaluator=None):
        """Analytic matrix field from a nested list of expressions (or strings)."""
        if isinstance(entries, (str, ex.Expr)):
            entries = [[entries]]
        pnames = None if params is None else list(params)
        rows = [[e if isinstance(e, ex.Expr) else ex.parse(str(e), pnames) for e in row]
                for row in entries]
        r, c = len(rows), len(rows[0])
        ev = evaluator or ex.Evaluator(domain.eval_coords(), params)
        jet = {}
        for a in multi_indices(order):
            arr = np.empty(domain.shape + (r, c), dtype=complex)
            for i in range(r):
                for j in range(c):
                    arr[..., i, j] = ev(ex.diff_multi(rows[i][j], a))
            jet[a] = arr
        return cls(domain, jet, order, "analytic", 0, "expr")

    @classmethod
    def from_callable(cls, fn, domain, derivs=None, rows=1, cols=1):
        """Analytic field from a closure f(z, w, zt, wt).

        ``derivs`` optionally maps direction names (first derivatives) or
        pairs of names (second derivatives) to closures of the same form.
        The jet order is the highest order for which every derivative is
        supplied.
        """
        z = domain.x[0] + 1j * domain.x[1]
        w = domain.x[2] + 1j * domain.x[3]
        args = (z, w, np.conj(z), np.conj(w))

        def ev(f):
            v = np.asarray(f(*args), dtype=complex)
            v = np.broadcast_to(v, domain.shape + v.shape[len(domain.shape):]) if v.ndim >= len(domain.shape) else np.broadcast_to(v, domain.shape)
            if v.shape == domain.shape:
                v = v[..., None, None]
            return np.array(v)

        jet = {(0, 0, 0, 0): ev(fn)}
        derivs = derivs or {}
        order = 0
        first = {}
        for d in DIRS:
            if d in derivs:
                first[_shift((0, 0, 0, 0), _dir(d))] = ev(derivs[d])
        if len(first) == 4:
            jet.update(first)
            order = 1
            second = {}
            for key, f in derivs.items():
                if isinstance(key, tuple):
                    a = (0, 0, 0, 0)
                    for d in key:
                        a = _shift(a, _dir(d))
                    second[a] = ev(f)
            if all(a in second for a in _exact_order(2)):
                jet.update(second)
                order = 2
        return cls(domain, jet, order, "analytic", 0, "closure")

    # -- basic accessors

    @property
    def values(self):
        return self.jet[(0, 0, 0, 0)]

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def is_analytic(self):
        return self.kind == "analytic"

    def scalar_values(self):
        if self.shape != (1, 1):
            raise FieldError("not a scalar field")
        return self.values[..., 0, 0]

    def __repr__(self):
        return (f"Field({self.rows}x{self.cols}, {self.kind}, order={self.order}, "
                f"margin={self.margin}, points={self.domain.size})")

    def to_sampled(self):
        if self.kind == "sampled":
            return self
        return Field(self.domain, {(0, 0, 0, 0): self.values}, 0, "sampled", 0,
                     f"sampled({self.provenance})")

    def truncate(self, order):
        if self.kind == "sampled" or order >= self.order:
            return self
        return Field(self.domain, {a: self.jet[a] for a in multi_indices(order)}, order,
                     self.kind, self.margin, self.provenance)

    def _with_jet(self, jet, order, rows_cols_from=None):
        return Field(self.domain, jet, order, self.kind, self.margin, self.provenance)

    # -- arithmetic

    def _coerce(self, other):
        if isinstance(other, Field):
            if other.domain is not self.domain:
                raise FieldError("fields live on different domains")
            return other
        m = np.atleast_2d(np.asarray(other, dtype=complex))
        return Field.constant(self.domain, m, self.order if self.kind == "analytic" else 0)

    def _pair(self, other):
        other = self._coerce(other)
        if self.kind == "analytic" and other.kind == "analytic":
            n = min(self.order, other.order)
            return self, other, n, "analytic", 0
        a, b = self.to_sampled(), other.to_sampled()
        return a, b, 0, "sampled", max(a.margin, b.margin)

    def _combine(self, other, op):
        a, b, n, kind, margin = self._pair(other)
        jet = {k: op(a.jet[k], b.jet[k]) for k in multi_indices(n)}
        return Field(self.domain, jet, n, kind, margin, "derived")

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Field(self.domain, {k: -v for k, v in self.jet.items()}, self.order, self.kind,
                     self.margin, self.provenance)

    def scale(self, c):
        """Multiply by a complex number."""
        c = complex(c)
        return Field(self.domain, {k: c * v for k, v in self.jet.items()}, self.order, self.kind,
                     self.margin, self.provenance)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return matmul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return matmul(self._coerce(other), self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(1.0 / complex(other))
        return matmul(self, inverse(other))

    def __getitem__(self, key):
        """Sub-block by row/column slices or indices."""
        if not isinstance(key, tuple) or len(key) != 2:
            raise FieldError("index a field with [rows, cols]")
        rs, cs = [slice(k, k + 1) if isinstance(k, int) else k for k in key]
        jet = {k: v[..., rs, cs] for k, v in self.jet.items()}
        return Field(self.domain, jet, self.order, self.kind, self.margin, self.provenance)

    @property
    def T(self):
        jet = {k: np.swapaxes(v, -1, -2) for k, v in self.jet.items()}
        return Field(self.domain, jet, self.order, self.kind, self.margin, self.provenance)

    def conj(self):
        """Pointwise complex conjugate on the real slice."""
        if self.kind == "sampled":
            return Field(self.domain, {(0, 0, 0, 0): np.conj(self.values)}, 0, "sampled",
                         self.margin, self.provenance)
        jet = {k: np.conj(self.jet[_mirror(k)]) for k in self.jet}
        return Field(self.domain, jet, self.order, self.kind, self.margin, self.provenance)

    def derive(self, d):
        return derive(self, d)


# ---------------------------------------------------------------- operations

def derive(f, d):
    """Wirtinger derivative; d in {'z', 'w', 'zt', 'wt'}."""
    i = _dir(d)
    if f.kind == "analytic":
        if f.order < 1:
            raise FieldError("analytic field carries no further derivatives; build it with a higher order")
        jet = {a: f.jet[_shift(a, i)] for a in multi_indices(f.order - 1)}
        return Field(f.domain, jet, f.order - 1, "analytic", 0, f.provenance)
    dom = f.domain
    if not dom.lattice:
        raise FieldError("finite differences need a lattice domain")
    margin = f.margin + STENCIL_HALF_WIDTH
    if any(2 * margin >= n for n in dom.shape):
        raise MarginError(f"insufficient margin: a derivative would need {margin} cells per side")
    pair, conjugate = (0, False) if i == 0 else (1, False) if i == 1 else (0, True) if i == 2 else (1, True)
    v = kernels.wirtinger(f.values, pair, dom.h, conjugate)
    _blank_margin(v, margin)
    return Field(dom, {(0, 0, 0, 0): v}, 0, "sampled", margin, f.provenance)


def _blank_margin(v, m):
    if m <= 0:
        return
    for ax in range(4):
        idx = [slice(None)] * v.ndim
        idx[ax] = slice(0, m)
        v[tuple(idx)] = np.nan
        idx[ax] = slice(v.shape[ax] - m, None)
        v[tuple(idx)] = np.nan


def matmul(f, g):
    f = f if isinstance(f, Field) else g._coerce(f)
    g = f._coerce(g)
    a, b, n, kind, margin = f._pair(g)
    if a.cols != b.rows and (a.rows, a.cols) != (1, 1) and (b.rows, b.cols) != (1, 1):
        raise FieldError(f"shapes {a.shape} and {b.shape} do not conform")
    if kind == "sampled":
        return Field(f.domain, {(0, 0, 0, 0): _mm(a.values, b.values)}, 0, kind, margin, "derived")
    jet = {}
    for key, terms in _leibniz(n).items():
        acc = None
        for bi, gi, coef in terms:
            t = _mm(a.jet[bi], b.jet[gi])
            if coef != 1:
                t = coef * t
            acc = t if acc is None else acc + t
        jet[key] = acc
    return Field(f.domain, jet, n, kind, 0, "derived")


def _jet_from_derivs(f0, deriv_fn, order, template):
    """Build a jet of ``order`` from its value and a first-derivative rule.

    ``deriv_fn(F)`` receives the field known to order k-1 and returns its
    four first derivatives as fields of order k-1.
    """
    dom = template.domain
    F = Field(dom, {(0, 0, 0, 0): f0}, 0, "analytic", 0, "derived")
    for k in range(1, order + 1):
        ds = deriv_fn(F)
        jet = {(0, 0, 0, 0): f0}
        for a in multi_indices(k):
            if sum(a) == 0:
                continue
            i = _first_dir(a)
            jet[a] = ds[i].jet[_shift(a, i, -1)]
        F = Field(dom, jet, k, "analytic", 0, "derived")
    return F


def _restrict(f, order):
    return f.truncate(order)


def inverse(f, check=True):
    """Pointwise matrix inverse with a conditioning guard."""
    if f.rows != f.cols:
        raise FieldError("inverse of a non-square field")
    inv0, bad = _safe_inv(f.values)
    if check:
        _check_inverse(f, inv0, bad)
    if f.kind == "sampled" or f.order == 0:
        return Field(f.domain, {(0, 0, 0, 0): inv0}, 0, f.kind, f.margin, "inverse")

    def rule(F):
        # d(M^-1) = -M^-1 dM M^-1
        k = F.order
        M = f.truncate(k + 1)
        out = []
        for i in range(4):
            dM = derive(M, i)
            out.append(-(F @ dM @ F))
        return out

    return _jet_from_derivs(inv0, rule, f.order, f)


def _check_inverse(f, inv, bad):
    m = f.values
    fin = np.isfinite(inv).all(axis=(-1, -2)) & ~bad
    if f.kind == "analytic":
        pointmask = ~f.domain.excluded
    else:
        pointmask = np.isfinite(m).all(axis=(-1, -2))
    check = pointmask & ~bad
    broken = check & ~fin
    if broken.any():
        raise SingularMatrixError("singular matrix", _location(f.domain, broken))
    nm = np.sqrt((np.abs(m) ** 2).sum(axis=(-1, -2)))
    ni = np.sqrt((np.abs(np.where(fin[..., None, None], inv, 0)) ** 2).sum(axis=(-1, -2)))
    cond = nm * ni
    over = check & (cond > COND_LIMIT)
    if over.any():
        raise SingularMatrixError(f"condition number above {COND_LIMIT:g}", _location(f.domain, over))
    n = m.shape[-1]
    eye = np.eye(n)
    res = np.abs(_mm(np.where(fin[..., None, None], m, eye), np.where(fin[..., None, None], inv, eye)) - eye).max(axis=(-1, -2))
    tol = 1e-12 * np.maximum(1.0, cond)
    if (check & (res > tol)).any():
        raise SingularMatrixError("inverse residual above tolerance", _location(f.domain, check & (res > tol)))


def _location(domain, mask):
    idx = tuple(np.argwhere(mask)[0])
    pt = tuple(float(c[idx]) for c in domain.x)
    return f"index {idx}, x={tuple(round(p, 6) for p in pt)}"


def trace(f):
    jet = {k: np.trace(v, axis1=-2, axis2=-1)[..., None, None] for k, v in f.jet.items()}
    return Field(f.domain, jet, f.order, f.kind, f.margin, "trace")


def commutator(f, g):
    return f @ g - g @ f


def scalar_exp(f):
    v0 = np.exp(f.values)
    if f.kind == "sampled":
        return Field(f.domain, {(0, 0, 0, 0): v0}, 0, "sampled", f.margin, "exp")
    return _jet_from_derivs(v0, lambda F: [F * derive(f.truncate(F.order + 1), i) for i in range(4)], f.order, f)


def scalar_log(f):
    v = f.values
    if np.any((np.abs(v.imag) < 1e-300) & (v.real <= 0) & np.isfinite(v)):
        raise SingularMatrixError("log of a nonpositive real value")
    v0 = np.log(v)
    if f.kind == "sampled":
        return Field(f.domain, {(0, 0, 0, 0): v0}, 0, "sampled", f.margin, "log")
    inv = inverse(f)
    return _jet_from_derivs(v0, lambda F: [derive(f.truncate(F.order + 1), i) @ inv.truncate(F.order) for i in range(4)], f.order, f)


def scalar_sqrt(f):
    v = f.values
    if np.any((np.abs(v.imag) < 1e-300) & (v.real < 0)):
        raise SingularMatrixError("sqrt of a negative real value")
    v0 = np.sqrt(v)
    if f.kind == "sampled":
        return Field(f.domain, {(0, 0, 0, 0): v0}, 0, "sampled", f.margin, "sqrt")

    def rule(F):
        half_inv = inverse(F).scale(0.5)
        return [derive(f.truncate(F.order + 1), i) @ half_inv for i in range(4)]

    return _jet_from_derivs(v0, rule, f.order, f)


def matrix_exp(f, terms=18):
    """Matrix exponential by scaling and squaring (jets propagate exactly)."""
    if f.rows != f.cols:
        raise FieldError("exp of a non-square field")
    if f.shape == (1, 1):
        return scalar_exp(f)
    v = f.values
    norm = np.nanmax(np.abs(v).sum(axis=-1)) if v.size else 0.0
    s = max(0, int(np.ceil(np.log2(max(norm, 1e-300)))) + 1) if norm > 0.5 else 0
    y = f.scale(2.0 ** -s)
    n = f.rows
    result = Field.identity(f.domain, n, f.order if f.kind == "analytic" else 0)
    if f.kind == "sampled":
        result = result.to_sampled()
    term = result
    for k in range(1, terms + 1):
        term = (term @ y).scale(1.0 / k)
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def block(rows):
    """Assemble a block matrix field from a nested list of fields."""
    first = rows[0][0]
    fields = [f for row in rows for f in row]
    if all(f.kind == "analytic" for f in fields):
        n, kind, margin = min(f.order for f in fields), "analytic", 0
    else:
        fields_s = [f.to_sampled() for f in fields]
        n, kind, margin = 0, "sampled", max(f.margin for f in fields_s)
        it = iter(fields_s)
        rows = [[next(it) for _ in row] for row in rows]
    jet = {}
    for a in multi_indices(n):
        jet[a] = np.concatenate([np.concatenate([f.jet[a] for f in row], axis=-1) for row in rows], axis=-2)
    return Field(first.domain, jet, n, kind, margin, "block")


def max_norm(f, margin=None):
    """Max over valid interior points of the entrywise modulus."""
    dom = f.domain
    if dom.lattice:
        m = (dom.spec.margin if margin is None else margin)
        m = max(m, f.margin)
        mask = dom.interior(m)
    else:
        mask = ~dom.excluded
    if not mask.any():
        raise EmptyRegionError("no interior sample points")
    vals = np.abs(f.values[mask])
    if not np.isfinite(vals).all():
        raise FieldError("non-finite values inside the interior region")
    return float(vals.max())


def region_mask(f, margin=None):
    dom = f.domain
    if dom.lattice:
        m = dom.spec.margin if margin is None else margin
        return dom.interior(max(m, f.margin))
    return ~dom.excluded


def sample(f, lat=None):
    """Tabulate a field (or expression) on a lattice as a sampled field."""
    if isinstance(f, (str, ex.Expr)):
        if lat is None:
            raise FieldError("sampling an expression needs a lattice")
        f = Field.from_expr(f, lat, order=0)
    if lat is not None and f.domain is not lat:
        raise FieldError("field is not defined on this lattice")
    out = f.to_sampled()
    bad = ~np.isfinite(out.values).all(axis=(-1, -2)) & ~out.domain.excluded
    if out.margin == 0 and bad.any():
        raise ex.SingularEvaluationError("non-finite value", _location(out.domain, bad))
    return out


# ---------------------------------------------------------------- serialization

MAGIC = b"SDYF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sI4I8dIII")


def write_binary(f, path):
    """Write a sampled lattice field; layout documented in docs/formats.md."""
    dom = f.domain
    if not dom.lattice:
        raise FieldError("only lattice fields serialize")
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, *dom.shape, *dom.box.lo, *dom.box.hi,
                        f.margin, f.rows, f.cols)
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(struct.pack("<d", dom.box.rho_min))
        fh.write(body)


def read_binary(path):
    with open(path, "rb") as fh:
        data = fh.read()
    head = _HEADER.unpack_from(data, 0)
    if head[0] != MAGIC:
        raise FieldError("not a field file")
    if head[1] != FORMAT_VERSION:
        raise FieldError(f"unsupported format version {head[1]}")
    n = head[2:6]
    lo, hi = head[6:10], head[10:14]
    margin, rows, cols = head[14:17]
    off = _HEADER.size
    (rho_min,) = struct.unpack_from("<d", data, off)
    off += 8
    lat = Lattice(ChartBox(lo, hi, rho_min), GridSpec(n, max(margin, STENCIL_HALF_WIDTH)))
    vals = np.frombuffer(data, dtype="<c16", offset=off).reshape(tuple(n) + (rows, cols))
    return Field(lat, {(0, 0, 0, 0): vals.astype(complex)}, 0, "sampled", margin, "file")


def write_csv(f, path, margin=None):
    """Per-point dump: x1..x4 then re/im of each matrix entry (row-major)."""
    dom = f.domain
    mask = region_mask(f, margin) if dom.lattice else ~dom.excluded
    cols = ["x1", "x2", "x3", "x4"]
    for i in range(f.rows):
        for j in range(f.cols):
            cols += [f"re{i}{j}", f"im{i}{j}"]
    pts = np.stack([c[mask] for c in dom.x], axis=-1)
    v = f.values[mask].reshape(len(pts), -1)
    data = np.empty((len(pts), 4 + 2 * v.shape[1]))
    data[:, :4] = pts
    data[:, 4::2] = v.real
    data[:, 5::2] = v.imag
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


__all__ = [
    "Point", "ChartBox", "GridSpec", "Lattice", "PointSet", "Domain", "Field", "lattice",
    "derive", "matmul", "inverse", "trace", "commutator", "matrix_exp", "scalar_exp",
    "scalar_log", "scalar_sqrt", "block", "max_norm", "region_mask", "sample",
    "write_binary", "read_binary", "write_csv", "FieldError", "MarginError",
    "SingularMatrixError", "EmptyRegionError", "multi_indices", "DIRS",
]
