import pytest

from sdyang import catalog as cat
from sdyang import heavenly as hv
from sdyang.fieldcore import ChartBox, Field, lattice, max_norm
from sdyang.gauge import yang_residual
from sdyang.geometry import flat_metric

BOX = ChartBox((-0.5,) * 4, (0.5,) * 4)


@pytest.fixture(scope="module")
def flat():
    dom = lattice(BOX, 9)
    return dom, flat_metric(dom, 1)


def _theta(dom, text):
    return Field.from_expr(text, dom, order=4)


def test_residual_formula(flat):
    dom, _ = flat
    # zz-ww Hessian term only: Theta = z^2/2 + w^2/2 gives residual 1
    res = hv.second_heavenly_residual(_theta(dom, "0.5*z^2 + 0.5*w^2"))
    assert max_norm(res, 0) == pytest.approx(1.0)
    res = hv.second_heavenly_residual(_theta(dom, "z*zt + w*wt"))
    assert max_norm(res, 0) == pytest.approx(2.0)


def test_rank_one_family_solves_both(flat):
    dom, g = flat
    for text in ("exp(0.6*z + 0.8*w)*(0.8*zt - 0.6*wt)", "(z - w)^4*(-zt - wt)^2"):
        r = hv.chain_residuals(g, _theta(dom, text))
        assert r["heavenly"] <= 1e-12 and r["kmatrix"] <= 1e-12


def test_k_from_theta_is_symmetric(flat):
    dom, _ = flat
    K = hv.k_from_theta(_theta(dom, "exp(z*w) + z^3*wt"))
    assert max_norm(K - K.T, 0) == 0.0


def test_hessian_kernel_terms(flat):
    """Terms whose holomorphic Hessian has no holomorphic dependence are invisible to K."""
    dom, g = flat
    r = hv.chain_residuals(g, _theta(dom, "0.3*z*zt"))
    assert r["heavenly"] == pytest.approx(0.3) and r["kmatrix"] == 0.0


def test_exponential_solutions_break_the_chain(flat):
    """Theta = z^2/2 + exp(a (w - wt)) solves the heavenly equation, not the K equation."""
    dom, g = flat
    r = hv.chain_residuals(g, _theta(dom, "0.5*z^2 + exp(0.8*(w - wt))"))
    assert r["heavenly"] <= 1e-14
    assert r["kmatrix"] == pytest.approx(0.8 ** 4, rel=1e-12)


def test_potential_validation(flat):
    dom, _ = flat
    with pytest.raises(hv.HeavenlyError):
        hv.HeavenlyPotential(_theta(dom, "z"), background="hyperkahler")
    with pytest.raises(hv.HeavenlyError):
        hv.HeavenlyPotential(Field.identity(dom, 2, 4))


def test_spin_yang_matrix_needs_hyperkahler():
    c = cat.default_catalog()
    eh = c.entry("eguchi_hanson")
    g = eh.metric(eh.lattice(9), 3)
    assert yang_residual(g, hv.spin_yang_matrix(g)).passed
    burns = c.entry("burns")
    with pytest.raises(hv.HeavenlyError) as info:
        hv.spin_yang_matrix(burns.metric(burns.lattice(9), 2))
    assert info.value.report["hyperkahler"] is False
