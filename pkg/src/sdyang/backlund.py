"""Block decomposition of Yang matrices and the Backlund transformation.

A Yang matrix is written as

    J = [[A^-1 - Bt At B, -Bt At],
         [At B,            At   ]]

with A (k x k), At (kt x kt), B (kt x k), Bt (k x kt).  The transform
replaces (A, At, B, Bt) by (r^-1 At^-1, r^-1 A^-1, B', Bt') where B' and
Bt' are primitives obtained from the first-order systems in rhs_fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.sparse.linalg import LinearOperator, lsqr

from . import conventions, kernels
from .fieldcore import (Field, FieldError, Lattice, Point, block, derive, inverse, max_norm,
                        multi_indices, region_mask)
from .gauge import (SAMPLED_COEFF, c2_density, curvature, region_stats, scalar_yang_residual,
                    weighted_div, yang_residual)


class BacklundError(Exception):
    pass


class SplitError(BacklundError):
    pass


class IncompatibleSystemError(BacklundError):
    def __init__(self, residual, tol):
        super().__init__(f"primitive system is incompatible: residual {residual:.3e} > {tol:.3e}")
        self.residual = residual
        self.tol = tol


class SeedError(BacklundError):
    pass


class SolverError(BacklundError):
    pass


@dataclass
class BlockSplit:
    k: int
    kt: int
    A: Field
    At: Field
    B: Field
    Bt: Field


@dataclass
class TransformConfig:
    r: Field
    s: Field
    st: Field | None = None
    tol: float = 1e-12
    maxiter: int = 20000
    base_point: Point | None = None
    threshold_coeff: float = SAMPLED_COEFF
    method: str = "auto"
    degree: int | None = None
    order: int = 2
    check_compat: bool = True

    def scaled(self, c):
        """Rescale r and s together by a positive constant."""
        if c <= 0:
            raise BacklundError("scale factor must be positive")
        st = None if self.st is None else self.st.scale(c)
        return replace(self, r=self.r.scale(c), s=self.s.scale(c), st=st)

    def mirror_s(self):
        return self.s.conj() if self.st is None else self.st


@dataclass
class PrimedData:
    B: Field
    Bt: Field
    compatibility: float
    compatibility_mirror: float
    solver_residual: float
    iterations: tuple
    base_point: Point | None
    method: str = "spectral"

    def to_dict(self):
        return {"compatibility": self.compatibility, "compatibility_mirror": self.compatibility_mirror,
                "method": self.method,
                "solver_residual": self.solver_residual, "iterations": list(self.iterations),
                "base_point": None if self.base_point is None else list(self.base_point.coords)}


@dataclass
class ObstructionReport:
    yang: dict | None
    weyl_minus: float | None
    d_r_max: float
    d_r_min: float
    psi2_min: float | None
    psi2_max: float | None
    probe_zero: bool
    probe_nonvanishing: bool
    psi2_zero: bool | None
    psi2_nonvanishing: bool | None
    thresholds: dict = dc_field(default_factory=dict)

    @property
    def consistent(self):
        if self.psi2_zero is None:
            return True
        return (self.probe_zero and self.psi2_zero) or (self.probe_nonvanishing and self.psi2_nonvanishing)

    def to_dict(self):
        return {"yang": self.yang, "weyl_minus": self.weyl_minus, "D_r_max": self.d_r_max,
                "D_r_min": self.d_r_min, "psi2_min": self.psi2_min, "psi2_max": self.psi2_max,
                "probe_zero": self.probe_zero, "probe_nonvanishing": self.probe_nonvanishing,
                "psi2_zero": self.psi2_zero, "psi2_nonvanishing": self.psi2_nonvanishing,
                "consistent": self.consistent, "thresholds": self.thresholds}


@dataclass
class TransformResult:
    J: Field
    k: int
    primed: PrimedData
    report: dict
    verdict: str
    obstruction: ObstructionReport | None = None
    seed_split: BlockSplit | None = None

    def to_dict(self):
        out = {"k": self.k, "primed": self.primed.to_dict(), "yang": self.report,
               "verdict": self.verdict}
        if self.obstruction is not None:
            out["obstruction"] = self.obstruction.to_dict()
        return out


# ---------------------------------------------------------------- split / reconstruct

def split(J, k=None):
    n = J.rows
    k = n // 2 if k is None else int(k)
    if not 1 <= k <= n - 1:
        raise SplitError(f"block size k={k} outside 1..{n - 1}")
    kt = n - k
    J11, J12 = J[:k, :k], J[:k, k:]
    J21, J22 = J[k:, :k], J[k:, k:]
    try:
        At = J22
        Ati = inverse(At)
        B = Ati @ J21
        Bt = -(J12 @ Ati)
        A = inverse(J11 + Bt @ At @ B)
    except FieldError as exc:
        raise SplitError(f"split undefined: {exc}") from exc
    return BlockSplit(k, kt, A, At, B, Bt)


def reconstruct(bs):
    Ai = inverse(bs.A)
    return block([[Ai - bs.Bt @ bs.At @ bs.B, -(bs.Bt @ bs.At)],
                  [bs.At @ bs.B, bs.At]])


# ---------------------------------------------------------------- primitive systems

def rhs_fields(g, s, bs, st=None):
    """Right-hand sides of d B' = R and d~ Bt' = Rt.

    R_z = s A (g_zzt d_wt Bt - g_zwt d_zt Bt) At,
    R_w = s A (g_wzt d_wt Bt - g_wwt d_zt Bt) At,
    Rt_zt = st At (g_zzt d_w B - g_wzt d_z B) A,
    Rt_wt = st At (g_zwt d_w B - g_wwt d_z B) A.
    """
    G = g.g
    st = s.conj() if st is None else st
    dzt, dwt = derive(bs.Bt, "zt"), derive(bs.Bt, "wt")
    dz, dw = derive(bs.B, "z"), derive(bs.B, "w")
    a = conventions.BACKLUND_SIGN
    b = conventions.BACKLUND_MIRROR_SIGN
    Rz = (s @ bs.A @ (G["zzt"] @ dwt - G["zwt"] @ dzt) @ bs.At).scale(a)
    Rw = (s @ bs.A @ (G["wzt"] @ dwt - G["wwt"] @ dzt) @ bs.At).scale(a)
    Rzt = (st @ bs.At @ (G["zzt"] @ dw - G["wzt"] @ dz) @ bs.A).scale(b)
    Rwt = (st @ bs.At @ (G["zwt"] @ dw - G["wwt"] @ dz) @ bs.A).scale(b)
    return Rz, Rw, Rzt, Rwt


def compatibility(Ra, Rb, dirs=("z", "w")):
    """d_b R_a - d_a R_b as a field."""
    return derive(Ra, dirs[1]) - derive(Rb, dirs[0])


def _compat_tol(f, scale, tol):
    if f.is_analytic:
        return max(1e-8 * max(1.0, scale), 10 * tol)
    h = max(f.domain.h)
    return max(SAMPLED_COEFF * h ** 4 * max(1.0, scale), 10 * tol)


def integrate_primitive(Ra, Rb, dirs=("z", "w"), base_point=None, tol=1e-12, maxiter=20000,
                        check=True, method="auto", degree=None, order=2):
    """Solve d_a B' = Ra, d_b B' = Rb on a lattice, pinned to zero at base_point.

    method "spectral" expands B' in a tensor Chebyshev basis and returns the
    minimal-norm coefficient solution as an analytic field with jets up to
    ``order``; "lattice" solves the finite-difference system by iterative
    least squares and returns sampled values.  "auto" picks spectral for
    analytic right-hand sides on lattices without excluded points.

    Returns (B', info) with the compatibility residual, the solver residual
    and the method used.  With check=False an incompatible system still gets
    its least-squares primitive instead of an IncompatibleSystemError.
    """
    dom = Ra.domain
    if not isinstance(dom, Lattice):
        raise BacklundError("integration needs a lattice domain")
    if dirs not in (("z", "w"), ("zt", "wt")):
        raise BacklundError("dirs must be (z, w) or (zt, wt)")
    if method not in ("auto", "spectral", "lattice"):
        raise BacklundError(f"unknown integration method {method!r}")
    spectral_ok = Ra.is_analytic and Rb.is_analytic and not dom.excluded.any()
    if method == "spectral" and not spectral_ok:
        raise BacklundError("spectral integration needs analytic data on a lattice without holes")
    if method == "auto":
        method = "spectral" if spectral_ok else "lattice"
    va, vb = Ra.values, Rb.values
    mask = dom.interior(max(Ra.margin, Rb.margin) if method == "spectral" else
                        max(dom.spec.margin, Ra.margin, Rb.margin))
    scale = max(float(np.abs(va[mask]).max()), float(np.abs(vb[mask]).max()))
    comp = None  # stays None without derivative data to test compatibility with
    if not (Ra.is_analytic and min(Ra.order, Rb.order) == 0):
        cf = compatibility(Ra, Rb, dirs)
        comp = max_norm(cf, 0 if cf.is_analytic else None)
        ctol = _compat_tol(cf, scale, tol)
        if check and comp > ctol:
            raise IncompatibleSystemError(comp, ctol)
    idx = dom.index_of(base_point) if base_point is not None else tuple(n // 2 for n in dom.shape)
    shape = dom.shape + (Ra.rows, Ra.cols)
    info = {"compatibility": comp, "method": method, "iterations": 0}
    if scale == 0.0:
        info["solver_residual"] = 0.0
        if method == "spectral":
            return Field.zeros(dom, Ra.rows, Ra.cols, order), info
        return Field.from_values(dom, np.zeros(shape, complex), 0, "primitive"), info
    if method == "spectral":
        out, res = _spectral_primitive(va, vb, dom, dirs[0] == "zt", degree, tol, order, idx)
    else:
        out, res, itn = _lattice_primitive(va, vb, dom, mask, dirs[0] == "zt", tol, maxiter, idx)
        info["iterations"] = itn
    info["solver_residual"] = res
    info["relative_residual"] = res / scale
    return out, info


# ---------------------------------------------------------------- spectral solver

def _cheb_axis(x, q):
    """Orthonormalised Chebyshev basis on lattice points and its derivative matrix.

    Basis values are Q (n x q+1, orthonormal columns); the derivative of the
    basis function j is sum_i G[i, j] (basis i).
    """
    c, hw = 0.5 * (x[0] + x[-1]), 0.5 * (x[-1] - x[0])
    V = cheb.chebvander((x - c) / hw, q)
    Q, R = np.linalg.qr(V)
    D = np.zeros((q + 1, q + 1))
    for j in range(1, q + 1):
        e = np.zeros(q + 1)
        e[j] = 1.0
        d = cheb.chebder(e)
        D[:d.size, j] = d
    G = R @ D @ np.linalg.inv(R) / hw
    return Q, G


class _SpectralBasis:
    def __init__(self, dom, degree):
        self.q = [min(degree, n - 1) for n in dom.shape]
        parts = [_cheb_axis(ax, q) for ax, q in zip(dom.axes, self.q)]
        self.Q = [p[0] for p in parts]
        self.G = [p[1] for p in parts]
        self._svd = {}

    def to_coeffs(self, v):
        for k in range(4):
            v = _along(self.Q[k].conj().T, v, k)
        return v

    def to_values(self, c):
        for k in range(4):
            c = _along(self.Q[k], c, k)
        return c

    def wirtinger(self, c, pair, sign):
        a, b = 2 * pair, 2 * pair + 1
        return 0.5 * (_along(self.G[a], c, a) - 1j * sign * _along(self.G[b], c, b))

    def pair_svd(self, pair, sign):
        key = (pair, sign)
        if key not in self._svd:
            a, b = 2 * pair, 2 * pair + 1
            K = 0.5 * (np.kron(self.G[a], np.eye(self.q[b] + 1))
                       - 1j * sign * np.kron(np.eye(self.q[a] + 1), self.G[b]))
            self._svd[key] = np.linalg.svd(K)
        return self._svd[key]


_basis_cache = {}


def _basis(dom, degree):
    key = (dom, degree)
    b = _basis_cache.get(key)
    if b is None:
        if len(_basis_cache) > 8:
            _basis_cache.clear()
        b = _basis_cache[key] = _SpectralBasis(dom, degree)
    return b


def _along(M, x, ax):
    return np.moveaxis(np.tensordot(M, x, axes=([1], [ax])), 0, ax)


DEFAULT_DEGREE = 16
SVD_CUT = 1e-13


def _spectral_primitive(va, vb, dom, conj, degree, tol, order, idx):
    sign = -1.0 if conj else 1.0
    basis = _basis(dom, DEFAULT_DEGREE if degree is None else int(degree))
    ra, rb = basis.to_coeffs(va), basis.to_coeffs(vb)
    cs = ra.shape
    n1, n2 = cs[0] * cs[1], cs[2] * cs[3]
    ne = int(np.prod(cs[4:]))
    U1, S1, V1h = basis.pair_svd(0, sign)
    U2, S2, V2h = basis.pair_svd(1, sign)
    # with C = V1 X V2^T both equations become diagonal in X
    A = np.einsum("ai,abe,bj->ije", U1.conj(), ra.reshape(n1, n2, ne), V2h.T, optimize=True)
    B = np.einsum("ai,abe,bj->ije", V1h.T, rb.reshape(n1, n2, ne), U2.conj(), optimize=True)
    den = S1[:, None] ** 2 + S2[None, :] ** 2
    cut = (SVD_CUT * max(S1.max(), S2.max())) ** 2
    safe = np.where(den > cut, den, 1.0)[..., None]
    X = np.where((den > cut)[..., None], (S1[:, None, None] * A + S2[None, :, None] * B) / safe, 0)
    c = np.einsum("ia,abe,jb->ije", V1h.T.conj(), X, V2h.T.conj(), optimize=True).reshape(cs)
    res = max(float(np.abs(basis.to_values(basis.wirtinger(c, 0, sign)) - va).max()),
              float(np.abs(basis.to_values(basis.wirtinger(c, 1, sign)) - vb).max()))
    steps = {0: (0, 1.0), 1: (1, 1.0), 2: (0, -1.0), 3: (1, -1.0)}
    coeffs = {(0, 0, 0, 0): c}
    jet = {}
    for a in multi_indices(order):
        if a not in coeffs:
            i = next(k for k in range(4) if a[k] > 0)
            prev = list(a)
            prev[i] -= 1
            coeffs[a] = basis.wirtinger(coeffs[tuple(prev)], *steps[i])
        jet[a] = basis.to_values(coeffs[a])
    jet[(0, 0, 0, 0)] = jet[(0, 0, 0, 0)] - jet[(0, 0, 0, 0)][idx]
    return Field(dom, jet, order, "analytic", 0, "primitive"), res


# ---------------------------------------------------------------- lattice solver

def _lattice_primitive(va, vb, dom, mask, conj, tol, maxiter, idx):
    shape = va.shape
    mf = mask[..., None, None].astype(float)
    N = int(np.prod(shape))
    h = dom.h
    # Jacobi column scaling: outer-layer unknowns are reached only through
    # the weak +-2 stencil taps and otherwise dominate the iteration count
    W = _column_weights(mask, h)[..., None, None]

    def op(y):
        x = y.reshape(shape) * W
        out = np.empty(2 * N, complex)
        out[:N] = (kernels.wirtinger(x, 0, h, conj) * mf).ravel()
        out[N:] = (kernels.wirtinger(x, 1, h, conj) * mf).ravel()
        return out

    def rop(v):
        # the adjoint of a zero-padded Wirtinger derivative is minus its mirror
        a = kernels.wirtinger(v[:N].reshape(shape) * mf, 0, h, not conj)
        a += kernels.wirtinger(v[N:].reshape(shape) * mf, 1, h, not conj)
        a *= -W
        return a.ravel()

    lin = LinearOperator((2 * N, N), matvec=op, rmatvec=rop, dtype=complex)
    rhs = np.concatenate([(np.nan_to_num(va) * mf).ravel(), (np.nan_to_num(vb) * mf).ravel()])
    sol = lsqr(lin, rhs, atol=tol, btol=tol, iter_lim=maxiter)
    istop, itn = sol[1], sol[2]
    if istop == 7:
        raise SolverError(f"least-squares solver hit the iteration limit ({maxiter})")
    x = sol[0].reshape(shape) * W
    x = x - x[idx]
    da = kernels.wirtinger(x, 0, h, conj)
    db = kernels.wirtinger(x, 1, h, conj)
    res = max(float(np.abs(da - va)[mask].max()), float(np.abs(db - vb)[mask].max()))
    return Field.from_values(dom, x, 0, "primitive"), res, int(itn)


_STENCIL = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))


def _column_weights(mask, h):
    """Inverse column norms of the masked Wirtinger system (0 for unused unknowns)."""
    m = mask.astype(float)
    cn = np.zeros(mask.shape)
    for ax in range(4):
        for off, c in _STENCIL:
            # the mask vanishes on the outer layers, so rolling never wraps a 1
            cn += np.roll(m, off, axis=ax) * (0.5 * c / h[ax]) ** 2
    return np.where(cn > 0, 1.0 / np.sqrt(np.where(cn > 0, cn, 1.0)), 0.0)


# ---------------------------------------------------------------- transform

def transform_threshold(dom, config, scale=1.0):
    h = max(dom.h)
    return max(10 * config.tol, config.threshold_coeff * h ** 4 * max(1.0, scale))


def check_seed(g, J, margin=None):
    rep = yang_residual(g, J, margin=margin)
    if not rep.passed:
        raise SeedError(f"seed does not solve the Yang equation (residual {rep.worst:.3e})")
    return rep


def transform(g, config, J, k=None, check=True, probe=False):
    """One Backlund step.  Returns a TransformResult with the new Yang matrix."""
    if check:
        check_seed(g, J)
    bs = split(J, k)
    st = config.mirror_s()
    Rz, Rw, Rzt, Rwt = rhs_fields(g, config.s, bs, st)
    opts = dict(base_point=config.base_point, tol=config.tol, maxiter=config.maxiter,
                method=config.method, degree=config.degree, order=config.order,
                check=config.check_compat)
    Bp, info = integrate_primitive(Rz, Rw, ("z", "w"), **opts)
    Btp, info_t = integrate_primitive(Rzt, Rwt, ("zt", "wt"), **opts)
    primed = PrimedData(Bp, Btp, info["compatibility"], info_t["compatibility"],
                        max(info["solver_residual"], info_t["solver_residual"]),
                        (info["iterations"], info_t["iterations"]), config.base_point,
                        info["method"])
    res = finish_transform(g, config, assemble(config, bs, Bp, Btp), bs.kt, primed, probe)
    res.seed_split = bs
    return res


def assemble(config, bs, Bp, Btp):
    """J' from the seed blocks and the primitives: A' = r^-1 At^-1, At' = r^-1 A^-1."""
    rinv = inverse(config.r)
    Ap = rinv @ inverse(bs.At)
    Atp = rinv @ inverse(bs.A)
    return reconstruct(BlockSplit(bs.kt, bs.k, Ap, Atp, Bp, Btp))


def vary(g, config, result, C=None, Ct=None, r_scale=1.0, probe=False):
    """Re-assemble a transform with shifted primitives and/or r, s scaled by r_scale.

    C must be anti-holomorphic (killed by d_z, d_w) and Ct holomorphic; both
    are added to the primitives unchecked.  Scaling r and s together by c
    scales R, hence B' and Bt', by c, so the stored primitives are reused.
    """
    if result.seed_split is None:
        raise BacklundError("result does not carry its seed split")
    cfg = config.scaled(r_scale) if r_scale != 1.0 else config
    Bp = result.primed.B.scale(r_scale)
    Btp = result.primed.Bt.scale(r_scale)
    if C is not None:
        Bp = Bp + C
    if Ct is not None:
        Btp = Btp + Ct
    primed = replace(result.primed, B=Bp, Bt=Btp)
    res = finish_transform(g, cfg, assemble(cfg, result.seed_split, Bp, Btp), result.k, primed,
                           probe)
    res.seed_split = result.seed_split
    return res


def finish_transform(g, config, Jp, k, primed, probe=False):
    if Jp.is_analytic and Jp.order < 2:
        # too few jets for the analytic residual: evaluate with stencils
        rep = yang_residual(g.to_sampled(), Jp.to_sampled(), margin=4)
    else:
        rep = yang_residual(g, Jp, margin=4)
    scale = max_norm(Jp, 4)
    thr = transform_threshold(g.domain, config, scale)
    report = rep.to_dict()
    report["threshold"] = thr
    report["scale"] = scale
    obs = obstruction_probe(g, config) if probe else None
    if rep.worst <= thr:
        verdict = "pass"
    elif obs is None or obs.probe_nonvanishing:
        verdict = "obstructed"
    else:
        verdict = "fail"
    report["pass"] = rep.worst <= thr
    return TransformResult(Jp, k, primed, report, verdict, obs)


def conjugate(J, C1, C2):
    C1 = np.atleast_2d(np.asarray(C1, dtype=complex))
    C2 = np.atleast_2d(np.asarray(C2, dtype=complex))
    for c in (C1, C2):
        if c.shape[0] != c.shape[1] or abs(np.linalg.det(c)) < 1e-12 * max(1.0, np.abs(c).max()) ** c.shape[0]:
            raise BacklundError("conjugating constants must be invertible")
    return Field.constant(J.domain, C1, J.order) @ J @ Field.constant(J.domain, C2, J.order)


@dataclass
class OrbitStep:
    move: dict
    J: Field
    report: dict
    c2: dict
    verdict: str
    primed: dict | None = None

    def to_dict(self):
        out = {"move": self.move, "yang": self.report, "c2": self.c2, "verdict": self.verdict}
        if self.primed is not None:
            out["primed"] = self.primed
        return out


def c2_stats(g, J, margin=4):
    from .gauge import potential_from_yang
    F = curvature(potential_from_yang(J))
    return region_stats(c2_density(F), margin)


def orbit(g, config, seed, moves):
    """Apply transform / conjugate moves in order; stops at the first failure."""
    J = seed
    rep = yang_residual(g, J, margin=4 if not J.is_analytic else None)
    steps = [OrbitStep({"kind": "seed"}, J, rep.to_dict(), c2_stats(g, J), "pass" if rep.passed else "fail")]
    for mv in moves:
        kind = mv.get("kind")
        if kind == "conjugate":
            J = conjugate(J, mv["C1"], mv["C2"])
            r = yang_residual(g, J, margin=4 if not J.is_analytic else None)
            thr = r.tol if J.is_analytic else transform_threshold(g.domain, config, max_norm(J, 4))
            d = r.to_dict()
            d["threshold"] = thr
            ok = r.worst <= thr
            steps.append(OrbitStep({"kind": "conjugate"}, J, d, c2_stats(g, J), "pass" if ok else "fail"))
        elif kind == "transform":
            res = transform(g, config, J, mv.get("k"), check=False)
            J = res.J
            steps.append(OrbitStep({"kind": "transform", "k": mv.get("k")}, J, res.report,
                                   c2_stats(g, J), res.verdict, res.primed.to_dict()))
            ok = res.verdict == "pass"
        else:
            raise BacklundError(f"unknown move {kind!r}")
        if not ok:
            break
    return steps


# ---------------------------------------------------------------- obstruction

PROBE_ZERO_TOL = 1e-8
PROBE_NONZERO_MIN = 1e-6


def d_r_field(g, config):
    """Divergence-form operator with weight s/r applied to r."""
    r = config.r
    return scalar_yang_residual(g, config.s @ inverse(r), r)


def obstruction_probe(g, config, diagnostics=None, margin=None):
    D = d_r_field(g, config)
    mask = region_mask(D, margin)
    vals = np.abs(D.values[..., 0, 0][mask])
    dmax, dmin = float(vals.max()), float(vals.min())
    psi_min = psi_max = wn = None
    psi_zero = psi_nonzero = None
    if diagnostics is None and g.is_analytic and g.order >= 2:
        from .geometry import curvature_diagnostics
        diagnostics = curvature_diagnostics(g)
    if diagnostics is not None:
        sm = diagnostics.summary(margin)
        psi_min, psi_max, wn = sm["psi2_min_abs"], sm["psi2_max_abs"], sm["weyl_minus_max"]
        psi_zero = psi_max <= PROBE_ZERO_TOL
        psi_nonzero = psi_min > PROBE_NONZERO_MIN
    return ObstructionReport(None, wn, dmax, dmin, psi_min, psi_max, dmax <= PROBE_ZERO_TOL,
                             dmin > PROBE_NONZERO_MIN, psi_zero, psi_nonzero,
                             {"zero": PROBE_ZERO_TOL, "nonzero_min": PROBE_NONZERO_MIN})


__all__ = [
    "BlockSplit", "TransformConfig", "PrimedData", "ObstructionReport", "TransformResult",
    "BacklundError", "SplitError", "IncompatibleSystemError", "SeedError", "SolverError",
    "split", "reconstruct", "rhs_fields", "compatibility", "integrate_primitive", "transform",
    "conjugate", "orbit", "obstruction_probe", "d_r_field", "c2_stats", "transform_threshold",
    "check_seed", "OrbitStep", "assemble", "vary", "finish_transform",
]
