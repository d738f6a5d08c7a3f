import numpy as np
import pytest

from sdyang import conventions
from sdyang import expr as ex
from sdyang import geometry as geo
from sdyang.fieldcore import ChartBox, Field, lattice, max_norm

BOX = ChartBox((-0.4,) * 4, (0.4,) * 4)
GENERIC_K = "z*zt + w*wt + 0.3*(z*zt)^2 + 0.2*z*zt*w*wt + 0.1*(w*wt)^3 + 0.1*(z*wt + w*zt)^2"


@pytest.fixture(scope="module")
def generic():
    dom = lattice(BOX, 9)
    spec = geo.MetricSpec.from_potential(GENERIC_K)
    return spec, spec.bind(dom, 2)


def _kahler_scalar(spec, dom):
    """-2 g^{i jbar} d_i d_jbar log det H, written out symbolically."""
    G = spec.comps
    det = ex.sub(ex.mul(G["zzt"], G["wwt"]), ex.mul(G["zwt"], G["wzt"]))
    L = ex.log(det)

    def dd(a, b):
        return ex.wirtinger_diff(ex.wirtinger_diff(L, a), b)

    tr = ex.sub(ex.add(ex.mul(G["wwt"], dd("z", "zt")), ex.mul(G["zzt"], dd("w", "wt"))),
                ex.add(ex.mul(G["zwt"], dd("w", "zt")), ex.mul(G["wzt"], dd("z", "wt"))))
    return -2 * ex.evaluate(ex.div(tr, det), dom.x)


def test_scalar_curvature_matches_kahler_formula(generic):
    spec, g = generic
    d = geo.curvature_diagnostics(g)
    ref = _kahler_scalar(spec, g.domain)
    assert np.abs(d.scalar - ref).max() <= 1e-10 * np.abs(ref).max()
    # a generic Kahler metric has W- = 0 only when scalar flat
    assert d.summary()["weyl_minus_max"] > 1e-3


def test_flat_metric_has_no_curvature():
    g = geo.flat_metric(lattice(BOX, 9), 2)
    sm = geo.curvature_diagnostics(g).summary()
    assert max(sm["weyl_minus_max"], sm["ricci_traceless_max"], sm["scalar_max_abs"]) <= 1e-14


def test_hodge_star_matches_real_coordinates(generic):
    _, g = generic
    dom = g.domain
    coeffs = [0.3, 1j, -0.2, 0.5 + 0.1j, 0.7, -0.4j]
    om = geo.TwoForm([Field.constant(dom, [[c]], 2) for c in coeffs])
    a = geo.form_to_real(geo.hodge_star(g, om).array()[..., 0, 0])
    b = geo.hodge_star_real(geo.to_real_metric(g), geo.form_to_real(om.array()[..., 0, 0]),
                            conventions.ORIENTATION)
    assert np.abs(a - b).max() <= 1e-13


def test_asd_basis_eigenvalue(generic):
    _, g = generic
    for form in geo.asd_basis(g):
        star = geo.hodge_star(g, form)
        assert np.abs(star.array() + form.array()).max() <= 1e-13
        assert np.abs(geo.hodge_star(g, star).array() - form.array()).max() <= 1e-13


def test_kahler_form_is_closed(generic):
    _, g = generic
    dk = geo.exterior_derivative(geo.fundamental_form(g))
    assert max(max_norm(c) for c in dk) <= 1e-13


def test_lee_form_recovers_conformal_factor():
    dom = lattice(BOX, 9)
    u = "0.2*(z*zt + w*wt) + 0.1*z*wt + 0.1*w*zt"
    comps = {"zzt": f"exp(2*({u}))", "zwt": "0", "wzt": "0", "wwt": f"exp(2*({u}))"}
    spec = geo.MetricSpec({k: ex.parse(v) for k, v in comps.items()}, {}, "conformal")
    cd = geo.lee_form(spec.bind(dom, 2))
    assert cd.conformally_kahler
    ratio = cd.phi.values[..., 0, 0] / ex.evaluate(ex.parse(f"exp(-({u}))"), dom.x)
    assert np.abs(ratio / ratio.mean() - 1).max() <= 1e-10


def test_solve_s_satisfies_its_conditions(generic):
    _, g = generic
    aux = geo.solve_s(g)
    assert aux.max_residual() <= 1e-9
    # on a Kahler metric the conditions reduce to dkappa = 0, so s is constant
    v = aux.s.values[..., 0, 0]
    assert np.abs(v / v.mean() - 1).max() <= 1e-9


def test_metric_check_rejects_bad_blocks():
    dom = lattice(BOX, 9)
    bad = geo.MetricSpec({"zzt": ex.parse("-1"), "zwt": ex.const(0), "wzt": ex.const(0),
                          "wwt": ex.ONE}).bind(dom, 0)
    with pytest.raises(geo.MetricError):
        bad.check()
    skew = geo.MetricSpec({"zzt": ex.ONE, "zwt": ex.parse("0.5"), "wzt": ex.parse("0.2"),
                           "wwt": ex.ONE}).bind(dom, 0)
    with pytest.raises(geo.MetricError):
        skew.check()
