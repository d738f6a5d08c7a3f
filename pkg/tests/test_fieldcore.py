import numpy as np
import pytest

from sdyang import fieldcore as fc
from sdyang.fieldcore import ChartBox, Field, derive, lattice, max_norm

BOX = ChartBox((-0.5,) * 4, (0.5,) * 4)
F_TEXT = "exp(z*wt) + z^3*zt - 2*i*w*wt^2"


@pytest.fixture(scope="module")
def lat9():
    return lattice(BOX, 9)


def test_grid_validation():
    with pytest.raises(fc.FieldError):
        lattice(BOX, 8)
    with pytest.raises(fc.FieldError):
        lattice(BOX, 7)
    with pytest.raises(fc.FieldError):
        ChartBox((0, 0, 0, 0), (1, 1, 0, 1))


def test_analytic_jets_follow_the_expression(lat9):
    f = Field.from_expr(F_TEXT, lat9, order=2)
    ref = Field.from_expr("wt^2*exp(z*wt) + 6*z*zt", lat9, order=0)
    assert max_norm(derive(derive(f, "z"), "z") - ref, 0) <= 1e-14
    with pytest.raises(fc.FieldError):
        derive(Field.from_expr("z", lat9, order=0), "z")


def test_sampled_derivative_is_fourth_order():
    errs = []
    for n in (9, 17, 33):
        lat = lattice(BOX, n)
        f = Field.from_expr(F_TEXT, lat, order=1)
        for d in ("z", "wt"):
            err = (derive(f.to_sampled(), d) - Field.from_values(lat, derive(f, d).values)).values
            c = 3 * (n - 1) // 4  # x = 0.25 on every grid
            errs.append((n, d, abs(err[c, c, c, c, 0, 0])))
    for d in ("z", "wt"):
        e = [v for n, dd, v in errs if dd == d]
        order = np.log2(e[0] / e[1]), np.log2(e[1] / e[2])
        assert min(order) > 3.8


def test_margins_grow_and_run_out(lat9):
    f = Field.from_expr("z*w", lat9, order=0).to_sampled()
    d1 = derive(f, "z")
    d2 = derive(d1, "w")
    assert (d1.margin, d2.margin) == (2, 4)
    with pytest.raises(fc.MarginError):
        derive(d2, "zt")
    with pytest.raises(fc.EmptyRegionError):
        max_norm(d2, 5)


def test_point_sets_are_analytic_only():
    ps = fc.PointSet.from_points([(0.1, 0.2, 0.3, 0.4), (0.0, 0.1, -0.2, 0.3)])
    f = Field.from_expr("z*zt", ps, order=1)
    assert np.allclose(derive(f, "z").values[:, 0, 0], [0.1 - 0.2j, 0.0 - 0.1j])
    with pytest.raises(fc.FieldError):
        derive(f.to_sampled(), "z")


def test_matrix_algebra(lat9):
    J = Field.from_exprs([["1 + z*zt", "w"], ["wt", "2"]], lat9, order=2)
    Ji = fc.inverse(J)
    eye = Field.identity(lat9, 2, 2)
    assert max_norm(J @ Ji - eye, 0) <= 1e-14
    # the jets of the inverse are correct too
    dJi = -(Ji @ derive(J, "z") @ Ji)
    assert max_norm(derive(Ji, "z") - dJi, 0) <= 1e-13
    assert max_norm(fc.commutator(J, J), 0) == 0.0
    assert max_norm(fc.trace(J) - Field.from_expr("3 + z*zt", lat9, order=2), 0) <= 1e-15


def test_matrix_exp_of_nilpotent(lat9):
    N = Field.from_exprs([["0", "z*wt"], ["0", "0"]], lat9, order=1)
    E = fc.matrix_exp(N)
    ref = Field.from_exprs([["1", "z*wt"], ["0", "1"]], lat9, order=1)
    assert max_norm(E - ref, 0) <= 1e-15
    s = fc.scalar_exp(Field.from_expr("z", lat9, order=1))
    assert max_norm(derive(s, "z") - s.truncate(0), 0) <= 1e-15


def test_singular_inverse_reports_location(lat9):
    J = Field.from_exprs([["z", "0"], ["0", "1"]], lat9, order=0)
    with pytest.raises(fc.SingularMatrixError) as info:
        fc.inverse(J)
    assert "x=(" in str(info.value) or "singular" in str(info.value)


def test_conj_mirrors_jets(lat9):
    f = Field.from_expr("z^2*wt", lat9, order=1)
    g = Field.from_expr("zt^2*w", lat9, order=1)
    assert max_norm(f.conj() - g, 0) <= 1e-15


def test_domain_mismatch(lat9):
    other = lattice(BOX, 9)
    with pytest.raises(fc.FieldError):
        Field.from_expr("z", lat9, order=0) + Field.from_expr("z", other, order=0)


def test_binary_and_csv_roundtrip(lat9, tmp_path):
    f = Field.from_exprs([["z", "w"], ["zt", "1"]], lat9, order=0).to_sampled()
    p = tmp_path / "f.sdyf"
    fc.write_binary(f, p)
    g = fc.read_binary(p)
    assert np.array_equal(g.values, f.values)
    assert g.domain.box == lat9.box and g.domain.spec == lat9.spec
    q = tmp_path / "f.csv"
    fc.write_csv(f, q, margin=0)
    data = np.loadtxt(q, delimiter=",", skiprows=1)
    assert data.shape == (9 ** 4, 4 + 8)
    assert np.allclose(data[:, 4] + 1j * data[:, 5], data[:, 0] + 1j * data[:, 1])
