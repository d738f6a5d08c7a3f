import numpy as np
import pytest

from sdyang import gauge as ga
from sdyang.fieldcore import ChartBox, Field, lattice, max_norm
from sdyang.geometry import flat_metric

BOX = ChartBox((-0.5,) * 4, (0.5,) * 4)


@pytest.fixture(scope="module")
def flat():
    dom = lattice(BOX, 9)
    return dom, flat_metric(dom, 2)


def test_non_solution_has_unit_r3(flat):
    dom, g = flat
    J = Field.from_exprs([["exp(z*zt)", "0"], ["0", "exp(z*zt)"]], dom, order=2)
    rep = ga.yang_residual(g, J)
    assert rep.r1 == 0 and rep.r2 == 0
    assert rep.r3 == pytest.approx(1.0, rel=1e-12)
    assert not rep.passed and rep.profile == "analytic"


def test_harmonic_abelian_solution(flat):
    dom, g = flat
    J = Field.from_exprs([["exp(z*zt - w*wt)", "0"], ["0", "1"]], dom, order=2)
    assert ga.yang_residual(g, J).passed
    psi = Field.from_expr("z*zt - w*wt", dom, order=2)
    assert max_norm(ga.scalar_yang_residual(g, None, psi)) <= 1e-14


def test_triangular_solution_and_sampled_profile(flat):
    dom, g = flat
    J = Field.from_exprs([["1", "-zt^2*wt"], ["0", "1"]], dom, order=2)
    assert ga.yang_residual(g, J).worst <= 1e-14
    rep = ga.yang_residual(g.to_sampled(), J.to_sampled(), margin=4)
    assert rep.profile == "sampled"
    assert rep.tol == pytest.approx(50 * 0.125 ** 4)
    assert rep.passed


def test_coordinate_form_equals_metric_form(flat):
    dom, g = flat
    J = Field.from_exprs([["1 + 0.3*z*wt", "0.2*zt"], ["0.1*w*zt", "1 - 0.2*w*wt"]], dom, order=2)
    rep = ga.yang_residual(g, J, keep_fields=True)
    coord = ga.yang_residual_coord(g, None, J)
    # flat, s = 1: the divergence form is -R3
    assert max_norm(coord + rep.fields["R3"]) <= 1e-13 * max_norm(coord)


def test_k_matrix_flat_cases(flat):
    dom, g = flat
    # constant, commuting gradients give a flat connection
    lin = Field.from_exprs([["z + zt", "0"], ["wt", "2*w"]], dom, order=2)
    assert max_norm(ga.kmatrix_residual(g, lin)) <= 1e-15
    K = Field.from_exprs([["z*w*zt", "zt^2"], ["w*wt", "z"]], dom, order=2)
    assert max_norm(ga.kmatrix_residual(g, K)) > 1e-3
    with pytest.raises(ga.GaugeError):
        ga.kmatrix_residual(g, K, "kahler")


def test_gauge_transform_covariance(flat):
    dom, g = flat
    J = Field.from_exprs([["1 + 0.3*z*wt", "0.2*zt"], ["0.1*w*zt", "1 - 0.2*w*wt"]], dom, order=3)
    A = ga.potential_from_yang(J)
    h = Field.from_exprs([["1", "0.2*z*zt"], ["0.1*w", "1 + 0.1*wt"]], dom, order=3)
    F = ga.curvature(A)
    Fh = ga.curvature(ga.gauge_transform(A, h))
    from sdyang.fieldcore import inverse
    hi = inverse(h.truncate(1))
    for a, b in zip(F.comps(), Fh.comps()):
        assert max_norm(hi @ a @ h.truncate(1) - b) <= 1e-12
    assert max_norm(ga.c2_density(Fh) - ga.c2_density(F)) <= 1e-12


def test_pure_gauge_is_flat(flat):
    dom, _ = flat
    h = Field.from_exprs([["exp(z*wt)", "zt"], ["w*w", "1 + zt*w"]], dom, order=2)
    assert ga.curvature(ga.pure_gauge(h)).max_norm() <= 1e-12


def test_region_stats_deterministic(flat):
    dom, _ = flat
    f = Field.from_expr("z*zt + 1", dom, order=0)
    a, b = ga.region_stats(f), ga.region_stats(f)
    assert a == b and a["min_abs"] >= 1.0


def test_scalar_yang_sign(flat):
    dom, g = flat
    # divergence form taken literally: the flat operator is -(d_z d_zt + d_w d_wt)
    res = ga.scalar_yang_residual(g, None, Field.from_expr("z*zt", dom, order=2))
    assert np.allclose(res.values, -1.0, atol=1e-14)
