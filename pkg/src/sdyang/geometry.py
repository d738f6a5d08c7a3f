"""Hermitian metrics in double-null coordinates and their diagnostics.

Everything is computed in the complex coordinate basis (z, w, zt, wt),
indices 0..3.  The real metric is g = 2(g_zzt dz dzt + g_zwt dz dwt +
g_wzt dw dzt + g_wwt dw dwt); its components in the complex basis form the
4x4 matrix [[0, H], [H^T, 0]] with H the 2x2 Hermitian block.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import expr as ex
from . import conventions
from .fieldcore import (Field, FieldError, Lattice, Point, PointSet, derive, inverse,
                        max_norm, region_mask, _jet_from_derivs, multi_indices)

COMPONENTS = ("zzt", "zwt", "wzt", "wwt")
# complex-basis index pairs of the metric components (holomorphic, anti-holomorphic)
_COMP_INDEX = {"zzt": (0, 2), "zwt": (0, 3), "wzt": (1, 2), "wwt": (1, 3)}
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
PAIR_NAMES = ("zw", "zzt", "zwt", "wzt", "wwt", "ztwt")
TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
CHUNK = 4096


class MetricError(Exception):
    pass


def _levi_civita():
    eps = np.zeros((4, 4, 4, 4))
    import itertools
    for p in itertools.permutations(range(4)):
        inv = sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j])
        eps[p] = -1.0 if inv % 2 else 1.0
    return eps


EPS = _levi_civita()

# columns: d/dx_i expressed in the complex basis
_JAC = np.array([
    [1, 1j, 0, 0],
    [0, 0, 1, 1j],
    [1, -1j, 0, 0],
    [0, 0, 1, -1j],
], dtype=complex)


# ---------------------------------------------------------------- metric types

@dataclass
class MetricSpec:
    """Closed-form description of a Hermitian metric: expressions plus parameters."""

    comps: dict
    params: dict = dc_field(default_factory=dict)
    name: str = ""
    potential: ex.Expr | None = None

    @classmethod
    def from_potential(cls, k, params=None, name=""):
        k = ex.as_expr(k) if not isinstance(k, str) else ex.parse(k, None)
        comps = {c: ex.wirtinger_diff(ex.wirtinger_diff(k, c[0]), c[1:]) for c in COMPONENTS}
        return cls(comps, dict(params or {}), name, k)

    @classmethod
    def flat(cls):
        return cls({"zzt": ex.const(1), "zwt": ex.const(0), "wzt": ex.const(0), "wwt": ex.const(1)},
                   {}, "euclidean_flat")

    def bind(self, domain, order=2):
        ev = ex.Evaluator(domain.eval_coords(), self.params)
        g = {c: Field.from_expr(self.comps[c], domain, self.params, order, evaluator=ev)
             for c in COMPONENTS}
        return HermitianMetric(g, self, domain)


class HermitianMetric:
    """The four component fields on one domain (optionally with their source)."""

    def __init__(self, g, spec=None, domain=None):
        self.g = dict(g)
        self.spec = spec
        self.domain = domain or self.g["zzt"].domain

    def __getitem__(self, name):
        return self.g[name]

    @property
    def order(self):
        return min(f.order for f in self.g.values())

    @property
    def is_analytic(self):
        return all(f.is_analytic for f in self.g.values())

    def det(self):
        g = self.g
        return g["zzt"] @ g["wwt"] - g["zwt"] @ g["wzt"]

    def block(self):
        from .fieldcore import block
        g = self.g
        return block([[g["zzt"], g["zwt"]], [g["wzt"], g["wwt"]]])

    def to_sampled(self):
        return HermitianMetric({k: v.to_sampled() for k, v in self.g.items()}, self.spec, self.domain)

    def rebind(self, domain, order=None):
        if self.spec is None:
            raise MetricError("metric has no closed form to evaluate elsewhere")
        return self.spec.bind(domain, self.order if order is None else order)

    def check(self, tol=1e-12):
        """Hermiticity and positive definiteness on the valid points."""
        g = {k: v.values[..., 0, 0] for k, v in self.g.items()}
        mask = ~self.domain.excluded
        herm = max(float(np.abs(g["wzt"] - np.conj(g["zwt"]))[mask].max()),
                   float(np.abs(g["zzt"].imag)[mask].max()),
                   float(np.abs(g["wwt"].imag)[mask].max()))
        a = g["zzt"].real
        d = (g["zzt"] * g["wwt"] - g["zwt"] * g["wzt"]).real
        scale = 1.0 + np.abs(a) + np.abs(g["wwt"])
        if herm > tol * float(scale[mask].max()):
            raise MetricError(f"metric block not Hermitian (deviation {herm:.3g})")
        bad = mask & ~((a > 0) & (d > 0))
        if bad.any():
            idx = tuple(np.argwhere(bad)[0])
            raise MetricError(f"metric not positive definite at index {idx}")
        return herm

    def complex_tensor(self, jet_index=(0, 0, 0, 0)):
        """Components in the (z, w, zt, wt) basis of one jet entry, shape (*pts, 4, 4)."""
        shape = self.domain.shape
        out = np.zeros(shape + (4, 4), dtype=complex)
        for c, (a, b) in _COMP_INDEX.items():
            v = self.g[c].jet[jet_index][..., 0, 0]
            out[..., a, b] = v
            out[..., b, a] = v
        return out


def flat_metric(domain, order=2):
    return MetricSpec.flat().bind(domain, order)


def to_real_metric(g):
    """G(d/dx_i, d/dx_j) as a real symmetric (*pts, 4, 4) array."""
    gc = g.complex_tensor()
    G = np.einsum("ai,...ab,bj->...ij", _JAC, gc, _JAC)
    valid = ~g.domain.excluded
    if np.abs(G.imag[valid]).max() > 1e-10 * (1 + np.abs(G.real[valid]).max()):
        raise MetricError("real metric has an imaginary part; components are not Hermitian")
    G = G.real
    ev = np.linalg.eigvalsh(np.where(valid[..., None, None], G, np.eye(4)))
    bad = valid & (ev.min(axis=-1) <= 0)
    if bad.any():
        idx = tuple(np.argwhere(bad)[0])
        raise MetricError(f"real metric not positive definite at index {idx}")
    return G


# ---------------------------------------------------------------- forms

class TwoForm:
    """Six components in the ordered basis dz^dw, dz^dzt, dz^dwt, dw^dzt, dw^dwt, dzt^dwt."""

    def __init__(self, comps):
        comps = list(comps)
        if len(comps) != 6:
            raise FieldError("a two-form has six components")
        self.comps = comps

    def __getitem__(self, name):
        return self.comps[PAIR_NAMES.index(name)]

    def __add__(self, other):
        return TwoForm([a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        return TwoForm([a - b for a, b in zip(self.comps, other.comps)])

    def scale(self, c):
        return TwoForm([a.scale(c) for a in self.comps])

    def times(self, f):
        """Multiply every component by a scalar field."""
        return TwoForm([f @ a for a in self.comps])

    def array(self):
        """Antisymmetric values, shape (*pts, 4, 4, r, c)."""
        v0 = self.comps[0].values
        out = np.zeros(v0.shape[:-2] + (4, 4) + v0.shape[-2:], dtype=complex)
        for (a, b), f in zip(PAIRS, self.comps):
            out[..., a, b, :, :] = f.values
            out[..., b, a, :, :] = -f.values
        return out

    @classmethod
    def from_array(cls, arr, domain):
        return cls([Field(domain, {(0, 0, 0, 0): arr[..., a, b, :, :]}, 0, "analytic")
                    for a, b in PAIRS])

    def max_norm(self, margin=None):
        return max(max_norm(c, margin) for c in self.comps)


def exterior_derivative_1form(f):
    """d of the 1-form f_a dx^a (f a list of four fields) as a TwoForm."""
    return TwoForm([derive(f[b], a) - derive(f[a], b) for a, b in PAIRS])


def exterior_derivative(omega):
    """d of a TwoForm: components on dz^dw^dzt, dz^dw^dwt, dz^dzt^dwt, dw^dzt^dwt."""
    c = {p: f for p, f in zip(PAIRS, omega.comps)}
    out = []
    for a, b, cc in TRIPLES:
        out.append(derive(c[(b, cc)], a) - derive(c[(a, cc)], b) + derive(c[(a, b)], cc))
    return out


def wedge_1_2(f, omega):
    c = {p: v for p, v in zip(PAIRS, omega.comps)}
    out = []
    for a, b, cc in TRIPLES:
        out.append(f[a] @ c[(b, cc)] - f[b] @ c[(a, cc)] + f[cc] @ c[(a, b)])
    return out


def fundamental_form(g):
    """kappa = i (g_zzt dz^dzt + g_zwt dz^dwt + g_wzt dw^dzt + g_wwt dw^dwt)."""
    z = g.g["zzt"].scale(0)
    return TwoForm([z, g.g["zzt"].scale(1j), g.g["zwt"].scale(1j),
                    g.g["wzt"].scale(1j), g.g["wwt"].scale(1j), z])


def asd_basis(g):
    """dz^dw, kappa, dzt^dwt as TwoForms."""
    one = Field.constant(g.domain, [[1.0]], g.order)
    zero = one.scale(0)
    e1 = TwoForm([one, zero, zero, zero, zero, zero])
    e3 = TwoForm([zero, zero, zero, zero, zero, one])
    return e1, fundamental_form(g), e3


def _inverse_tensor(gc):
    return np.linalg.inv(gc)


def _volume(g):
    det = (g.g["zzt"].values * g.g["wwt"].values - g.g["zwt"].values * g.g["wzt"].values)[..., 0, 0]
    # orientation fixed so that the fundamental form is anti-self-dual
    return conventions.ORIENTATION * det


def hodge_star(g, omega):
    """(*w)_ab = 1/2 eps_abcd g^ce g^df w_ef, pointwise on values."""
    gc = g.complex_tensor()
    valid = ~g.domain.excluded
    gi = np.linalg.inv(np.where(valid[..., None, None], gc, np.eye(4)))
    w = omega.array()
    up = np.einsum("...ce,...df,...efrs->...cdrs", gi, gi, w)
    vol = _volume(g)
    star = 0.5 * np.einsum("abcd,...,...cdrs->...abrs", EPS, vol, up)
    return TwoForm.from_array(star, g.domain)


def hodge_star_real(G, omega_real, orientation=1.0):
    """Reference star in real coordinates: omega_real has shape (*pts, 4, 4)."""
    Gi = np.linalg.inv(G)
    vol = orientation * np.sqrt(np.linalg.det(G))
    up = np.einsum("...ik,...jl,...kl->...ij", Gi, Gi, omega_real)
    return 0.5 * np.einsum("ijkl,...,...kl->...ij", EPS, vol, up)


def form_to_real(omega_arr):
    """Complex-basis antisymmetric array (*pts, 4, 4) to real-coordinate components."""
    return np.einsum("ai,...ab,bj->...ij", _JAC, omega_arr, _JAC)


def form_from_real(omega_real):
    jinv = np.linalg.inv(_JAC)
    return np.einsum("ia,...ij,jb->...ab", jinv, omega_real, jinv)


def inner(g, a, b):
    """Complex bilinear pairing <a, b> = 1/2 a_ab b^ab of scalar two-forms."""
    gc = g.complex_tensor()
    gi = np.linalg.inv(gc)
    A = a.array()[..., 0, 0]
    B = b.array()[..., 0, 0]
    return 0.5 * np.einsum("...ab,...ac,...bd,...cd->...", A, gi, gi, B)


# ---------------------------------------------------------------- conformal data

@dataclass
class ConformalData:
    f: list
    phi: Field | None
    closedness: float
    conformally_kahler: bool
    base_point: Point | None = None
    consistency: float = 0.0

    def to_dict(self, margin=None):
        return {"closedness": self.closedness, "conformally_kahler": self.conformally_kahler,
                "lee_norm": max(max_norm(c, margin) for c in self.f),
                "consistency": self.consistency}


def _lee_solve(g):
    """Pointwise solve of d kappa = -2 f ^ kappa; returns f as four fields."""
    from .fieldcore import block
    kap = fundamental_form(g)
    dk = exterior_derivative(kap)
    c = {p: v for p, v in zip(PAIRS, kap.comps)}
    zero = kap.comps[0]
    rows = []  # coefficient of f_d in (f ^ kappa)_abc
    for a, b, cc in TRIPLES:
        row = []
        for d in range(4):
            if d == a:
                row.append(c[(b, cc)])
            elif d == b:
                row.append(-c[(a, cc)])
            elif d == cc:
                row.append(c[(a, b)])
            else:
                row.append(zero)
        rows.append(row)
    L = block(rows)
    rhs = block([[v.scale(-0.5)] for v in dk])
    sol = inverse(L) @ rhs
    f = [sol[i, 0] for i in range(4)]
    # the square system is exact; report how well it reproduces d kappa
    back = wedge_1_2(f, kap)
    cons = max(max_norm(dk[i] + back[i].scale(2.0)) for i in range(4))
    return f, cons


def lee_form(g, tol=1e-8, base_point=None, nodes=24):
    """Lee form, closedness of df and (when closed) the conformal factor phi."""
    if g.order < 2 and g.is_analytic:
        raise MetricError("lee_form needs second derivatives of the metric")
    f, cons = _lee_solve(g)
    df = exterior_derivative_1form(f)
    closed = df.max_norm()
    ok = closed <= tol
    phi = None
    if ok:
        base = base_point or _default_base(g)
        log_phi = line_integral(g, base, lambda gg: _lee_solve(gg)[0], nodes)
        phi0 = np.exp(log_phi.real)
        if g.is_analytic:
            phi = _jet_from_derivs(phi0[..., None, None].astype(complex),
                                   lambda F: [F @ f[i].truncate(F.order) for i in range(4)],
                                   f[0].order + 1, f[0])
        else:
            phi = Field.from_values(g.domain, phi0, provenance="line-integral")
    else:
        base = None
    return ConformalData(f, phi, closed, ok, base, cons)


def _default_base(g):
    dom = g.domain
    if isinstance(dom, Lattice):
        return dom.point(tuple(n // 2 for n in dom.shape))
    i = 0
    return Point(*[float(c.reshape(-1)[i]) for c in dom.x])


def line_integral(g, base, oneform_fn, nodes=24):
    """Integrate a closed 1-form along straight lines from ``base``.

    ``oneform_fn(metric)`` returns the 1-form components (four fields) on
    any domain the metric is rebound to; returned values are complex.
    """
    dom = g.domain
    t, wts = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    wts = 0.5 * wts
    pts = np.stack([c.reshape(-1) for c in dom.x], axis=-1)
    b = np.array(base.coords)
    out = np.zeros(len(pts), dtype=complex)
    step = max(1, CHUNK * 8 // nodes)
    for s in range(0, len(pts), step):
        p = pts[s:s + step]
        delta = p - b
        q = b[None, None, :] + t[None, :, None] * delta[:, None, :]
        sub = PointSet(tuple(q[..., i] for i in range(4)))
        gg = g.rebind(sub, order=1)
        f = oneform_fn(gg)
        dz = delta[:, 0] + 1j * delta[:, 1]
        dw = delta[:, 2] + 1j * delta[:, 3]
        dirs = (dz, dw, np.conj(dz), np.conj(dw))
        integrand = sum(f[i].values[..., 0, 0] * dirs[i][:, None] for i in range(4))
        out[s:s + step] = integrand @ wts
    return out.reshape(dom.shape)


# ---------------------------------------------------------------- auxiliary scalar s

@dataclass
class AuxScalarS:
    s: Field
    st: Field
    residuals: dict
    compatibility: float = 0.0

    def max_residual(self):
        return max(self.residuals.values())


def validate_s(g, s, margin=None):
    """C1, C2 and their mirrored pair; all vanish for an admissible s."""
    c = s_conditions(g, s)
    return {k: max_norm(v, margin) for k, v in c.items()}


def s_conditions(g, s, st=None):
    G = g.g
    st = s.conj() if st is None else st
    c1 = derive(s @ G["wzt"], "z") - derive(s @ G["zzt"], "w")
    c2 = derive(s @ G["zwt"], "w") - derive(s @ G["wwt"], "z")
    c1t = derive(st @ G["zwt"], "zt") - derive(st @ G["zzt"], "wt")
    c2t = derive(st @ G["wzt"], "wt") - derive(st @ G["wwt"], "zt")
    return {"C1": c1, "C2": c2, "C1~": c1t, "C2~": c2t}


def _log_s_gradient(g):
    """(d_z log s, d_w log s) from C1 = C2 = 0."""
    G = g.g
    dzgz = derive(G["wzt"], "z")
    dwgz = derive(G["zzt"], "w")
    dwgw = derive(G["zwt"], "w")
    dzgw = derive(G["wwt"], "z")
    a, b = G["wzt"].truncate(dzgz.order), G["zzt"].truncate(dzgz.order).scale(-1)
    c, d = G["wwt"].truncate(dzgz.order).scale(-1), G["zwt"].truncate(dzgz.order)
    r1 = dwgz - dzgz
    r2 = dzgw - dwgw
    det = a @ d - b @ c
    inv = inverse(det)
    p = (d @ r1 - b @ r2) @ inv
    q = (a @ r2 - c @ r1) @ inv
    return p, q


def solve_s(g, base_point=None, nodes=24):
    """Real s with C1 = C2 = 0, normalized to 1 at the base point."""
    p, q = _log_s_gradient(g)
    comp = 0.0
    if p.order >= 1:
        forms = [p, q, p.conj(), q.conj()]
        comp = exterior_derivative_1form(forms).max_norm()
    base = base_point or _default_base(g)

    def oneform(gg):
        pp, qq = _log_s_gradient(gg)
        return [pp, qq, pp.conj(), qq.conj()]

    logs = line_integral(g, base, oneform, nodes).real
    s0 = np.exp(logs)[..., None, None].astype(complex)
    if g.is_analytic:
        # d s = s d log s, so the jet of s follows from the gradient jets
        forms = [p, q, p.conj(), q.conj()]
        s = _jet_from_derivs(s0, lambda F: [F @ forms[i].truncate(F.order) for i in range(4)],
                             p.order + 1, p)
    else:
        s = Field.from_values(g.domain, s0[..., 0, 0])
    return AuxScalarS(s, s.conj(), validate_s(g, s), comp)


# ---------------------------------------------------------------- curvature

@dataclass
class CurvatureDiagnostics:
    weyl_minus: np.ndarray          # (*pts, 3, 3) operator in the basis dz^dw, kappa, dzt^dwt
    weyl_norm: np.ndarray           # sqrt(sum |eigenvalues|^2)
    ricci_tf_norm: np.ndarray
    scalar: np.ndarray
    type_d_gap: np.ndarray
    psi2: np.ndarray
    alignment: np.ndarray           # coupling between kappa and its complement
    trace: np.ndarray
    asymmetry: np.ndarray
    domain: object = None

    def _m(self, a, margin=None):
        dom = self.domain
        mask = dom.interior(margin) if isinstance(dom, Lattice) else ~dom.excluded
        return a[mask]

    def summary(self, margin=None):
        m = lambda a: self._m(a, margin)
        sc = m(self.scalar)
        ps = m(self.psi2)
        return {
            "weyl_minus_max": float(np.abs(m(self.weyl_norm)).max()),
            "ricci_traceless_max": float(np.abs(m(self.ricci_tf_norm)).max()),
            "scalar_max_abs": float(np.abs(sc).max()),
            "scalar_min": float(sc.real.min()),
            "scalar_max": float(sc.real.max()),
            "scalar_spread": float(sc.real.max() - sc.real.min()),
            "type_d_gap_max": float(np.abs(m(self.type_d_gap)).max()),
            "psi2_min_abs": float(np.abs(ps).min()),
            "psi2_max_abs": float(np.abs(ps).max()),
            "alignment_max": float(np.abs(m(self.alignment)).max()),
            "trace_max": float(np.abs(m(self.trace)).max()),
            "asymmetry_max": float(np.abs(m(self.asymmetry)).max()),
        }


def _riemann_chunk(G, dG, ddG):
    """Riemann tensor, all indices down, from metric jets at a batch of points.

    G[p,a,b]; dG[p,c,a,b] = d_c G_ab; ddG[p,c,d,a,b] = d_c d_d G_ab.
    """
    Gi = np.linalg.inv(G)
    # Christoffel of the first kind: Gamma_{d,bc} = 1/2 (d_b G_dc + d_c G_db - d_d G_bc)
    g1 = 0.5 * (np.einsum("pbdc->pdbc", dG) + np.einsum("pcdb->pdbc", dG) - np.einsum("pdbc->pdbc", dG))
    gam = np.einsum("pad,pdbc->pabc", Gi, g1)
    # R_abcd = 1/2 (d_b d_c g_ad + d_a d_d g_bc - d_a d_c g_bd - d_b d_d g_ac)
    #          + g_ef (Gam^e_bc Gam^f_ad - Gam^e_bd Gam^f_ac)
    R = 0.5 * (np.einsum("pbcad->pabcd", ddG) + np.einsum("padbc->pabcd", ddG)
               - np.einsum("pacbd->pabcd", ddG) - np.einsum("pbdac->pabcd", ddG))
    low = np.einsum("pef,pebc->pfbc", G, gam)  # g_ef Gam^e_bc
    R = R + np.einsum("pfbc,pfad->pabcd", low, gam) - np.einsum("pfbd,pfac->pabcd", low, gam)
    return R, Gi


def _basis_arrays(gc_vals, kap_vals):
    e1 = np.zeros(gc_vals.shape, complex)
    e1[..., 0, 1], e1[..., 1, 0] = 1, -1
    e3 = np.zeros(gc_vals.shape, complex)
    e3[..., 2, 3], e3[..., 3, 2] = 1, -1
    return [e1, kap_vals, e3]


def curvature_diagnostics(g):
    """W^-, traceless Ricci, scalar curvature, type-D gap and psi2 proxy."""
    if g.order < 2:
        raise MetricError("curvature needs the metric to second order")
    shape = g.domain.shape
    P = int(np.prod(shape))
    G = g.complex_tensor().reshape(P, 4, 4)
    unit = [tuple(1 if i == c else 0 for i in range(4)) for c in range(4)]
    dG = np.stack([g.complex_tensor(u).reshape(P, 4, 4) for u in unit], axis=1)
    ddG = np.empty((P, 4, 4, 4, 4), complex)
    for c in range(4):
        for d in range(4):
            a = [0, 0, 0, 0]
            a[c] += 1
            a[d] += 1
            ddG[:, c, d] = g.complex_tensor(tuple(a)).reshape(P, 4, 4)
    kap = fundamental_form(g).array()[..., 0, 0].reshape(P, 4, 4)
    excl = g.domain.excluded.reshape(P)
    out = {k: np.zeros(P, complex) for k in ("wn", "rtf", "sc", "gap", "psi2", "align", "tr", "asym")}
    W = np.zeros((P, 3, 3), complex)
    for s in range(0, P, CHUNK):
        sl = slice(s, min(P, s + CHUNK))
        Gs = G[sl].copy()
        bad = excl[sl]
        Gs[bad] = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
        R, Gi = _riemann_chunk(Gs, np.where(bad[:, None, None, None], 0, dG[sl]),
                               np.where(bad[:, None, None, None, None], 0, ddG[sl]))
        ric = np.einsum("pac,pabcd->pbd", Gi, R)
        sc = np.einsum("pbd,pbd->p", Gi, ric)
        tf = ric - 0.25 * sc[:, None, None] * Gs
        rtf = np.sqrt(np.abs(np.einsum("pab,pcd,pac,pbd->p", tf, tf, Gi, Gi)))
        Gg = Gs
        weyl = (R
                - 0.5 * (np.einsum("pac,pbd->pabcd", Gg, ric) - np.einsum("pad,pbc->pabcd", Gg, ric)
                         - np.einsum("pbc,pad->pabcd", Gg, ric) + np.einsum("pbd,pac->pabcd", Gg, ric))
                + (sc / 6.0)[:, None, None, None, None]
                * (np.einsum("pac,pbd->pabcd", Gg, Gg) - np.einsum("pad,pbc->pabcd", Gg, Gg)))
        kp = kap[sl].copy()
        kp[bad] = np.array([[0, 0, 1j, 0], [0, 0, 0, 1j], [-1j, 0, 0, 0], [0, -1j, 0, 0]])
        basis = _basis_arrays(Gs, kp)
        ups = [np.einsum("pac,pbd,pcd->pab", Gi, Gi, e) for e in basis]
        gram = np.empty((len(Gs), 3, 3), complex)
        S = np.empty((len(Gs), 3, 3), complex)
        for i in range(3):
            for j in range(3):
                gram[:, i, j] = 0.5 * np.einsum("pab,pab->p", basis[i], ups[j])
                # <e_i, W e_j> = 1/4 e_i^ab C_abcd e_j^cd
                S[:, i, j] = 0.25 * np.einsum("pab,pabcd,pcd->p", ups[i], weyl, ups[j])
        M = np.linalg.solve(gram, S)
        ev = np.linalg.eigvals(M)
        blk = M[:, [0, 2]][:, :, [0, 2]]
        bev = np.linalg.eigvals(blk)
        out["wn"][sl] = np.sqrt((np.abs(ev) ** 2).sum(axis=-1))
        out["rtf"][sl] = rtf
        out["sc"][sl] = sc
        out["gap"][sl] = np.abs(bev[:, 0] - bev[:, 1])
        out["psi2"][sl] = S[:, 1, 1] / gram[:, 1, 1]
        out["align"][sl] = np.abs(M[:, 0, 1]) + np.abs(M[:, 2, 1]) + np.abs(M[:, 1, 0]) + np.abs(M[:, 1, 2])
        out["tr"][sl] = np.trace(M, axis1=1, axis2=2)
        out["asym"][sl] = np.abs(S - np.swapaxes(S, 1, 2)).max(axis=(1, 2))
        W[sl] = M
    r = lambda k: out[k].reshape(shape)
    sc = r("sc")
    return CurvatureDiagnostics(W.reshape(shape + (3, 3)), r("wn").real, r("rtf").real, sc.real,
                                r("gap").real, r("psi2"), r("align").real, r("tr"), r("asym").real,
                                g.domain)


__all__ = [
    "MetricSpec", "HermitianMetric", "MetricError", "TwoForm", "ConformalData", "AuxScalarS",
    "CurvatureDiagnostics", "flat_metric", "to_real_metric", "fundamental_form", "asd_basis",
    "hodge_star", "hodge_star_real", "form_to_real", "form_from_real", "inner",
    "exterior_derivative", "exterior_derivative_1form", "wedge_1_2", "lee_form",
    "line_integral", "validate_s", "s_conditions", "solve_s", "curvature_diagnostics",
    "PAIRS", "PAIR_NAMES", "COMPONENTS",
]
