import numpy as np
import pytest

from sdyang import backlund as bl
from sdyang import catalog as cat
from sdyang.fieldcore import ChartBox, Field, derive, lattice, max_norm
from sdyang.geometry import flat_metric
from sdyang.heavenly import spin_yang_matrix

BOX = ChartBox((-0.5,) * 4, (0.5,) * 4)
CAT = cat.default_catalog()


@pytest.fixture(scope="module")
def flat9():
    dom = lattice(BOX, 9)
    one = Field.constant(dom, [[1.0]], 2)
    return dom, flat_metric(dom, 2), bl.TransformConfig(r=one, s=one)


def test_split_reconstruct_roundtrip(flat9):
    dom, _, _ = flat9
    J = Field.from_exprs([["2 + z*wt", "0.3*zt", "w"], ["0.1", "1 + w*wt", "0.2*z"],
                          ["zt", "0.5", "3"]], dom, order=1)
    for k in (1, 2):
        bs = bl.split(J, k)
        assert (bs.k, bs.kt) == (k, 3 - k)
        assert max_norm(bl.reconstruct(bs) - J.truncate(0), 0) <= 1e-13
    with pytest.raises(bl.SplitError):
        bl.split(J, 3)


def test_split_fails_where_the_lower_block_vanishes():
    e = CAT.entry("euclidean_flat")
    dom = e.lattice(9)
    J = spin_yang_matrix(e.metric(dom, 2))
    with pytest.raises(bl.SplitError):
        bl.split(J, 1)


@pytest.mark.parametrize("method", ["spectral", "lattice"])
def test_integrate_primitive_recovers_exact_potential(flat9, method):
    dom, _, _ = flat9
    P = Field.from_expr("z^2*zt + 0.5*w^3 - i*z*w*wt", dom, order=3)
    Ra, Rb = derive(P, "z"), derive(P, "w")
    if method == "lattice":
        Ra, Rb = Ra.to_sampled(), Rb.to_sampled()
    B, info = bl.integrate_primitive(Ra, Rb, method=method)
    assert info["method"] == method
    # B is pinned at the centre, P vanishes there; the kernel is anti-holomorphic
    for d in ("z", "w"):
        if method == "spectral":
            err = max_norm(derive(B, d) - derive(P, d).truncate(0), 0)
            assert err <= 1e-10
        else:
            err = max_norm(derive(B, d) - derive(P, d).to_sampled(), 4)
            assert err <= 5e-3


def test_incompatible_system_is_refused(flat9):
    dom, _, _ = flat9
    Ra = Field.from_expr("w", dom, order=2)
    Rb = Field.from_expr("0", dom, order=2)
    with pytest.raises(bl.IncompatibleSystemError):
        bl.integrate_primitive(Ra, Rb)
    B, info = bl.integrate_primitive(Ra, Rb, check=False)
    assert info["compatibility"] == pytest.approx(1.0)


def test_flat_triangular_transform(flat9):
    dom, g, cfg = flat9
    J = CAT.seed("triangular").build(CAT.entry("euclidean_flat"), dom, 2)
    res = bl.transform(g, cfg, J, k=1)
    assert res.verdict == "pass"
    zt, wt = dom.x[0] - 1j * dom.x[1], dom.x[2] - 1j * dom.x[3]
    assert np.abs(derive(res.primed.B, "z").values[..., 0, 0] - zt ** 2).max() <= 1e-9
    assert np.abs(derive(res.primed.B, "w").values[..., 0, 0] + 2 * zt * wt).max() <= 1e-9


def test_non_solution_seed_is_refused(flat9):
    dom, g, cfg = flat9
    J = Field.from_exprs([["exp(z*zt)", "0"], ["0", "1"]], dom, order=2)
    with pytest.raises(bl.SeedError):
        bl.transform(g, cfg, J, k=1)


def test_double_transform_restores_diagonal_blocks(flat9):
    dom, g, cfg = flat9
    J = CAT.seed("dressed").build(CAT.entry("euclidean_flat"), dom, 2)
    steps = bl.orbit(g, cfg, J, [{"kind": "transform", "k": 1}, {"kind": "transform", "k": 1}])
    assert [s.verdict for s in steps] == ["pass", "pass", "pass"]
    a, b = bl.split(J, 1), bl.split(steps[-1].J, 1)
    assert max_norm(a.A.truncate(0) - b.A.truncate(0), 0) <= 1e-10
    assert max_norm(a.At.truncate(0) - b.At.truncate(0), 0) <= 1e-10


def test_orbit_conjugation_and_c2(flat9):
    dom, g, cfg = flat9
    J = CAT.seed("harmonic").build(CAT.entry("euclidean_flat"), dom, 2)
    moves = [{"kind": "conjugate", "C1": [[1, 0.3], [0.5j, 1]], "C2": [[1, 0.2], [0.3, 1]]},
             {"kind": "transform", "k": 1}]
    steps = bl.orbit(g, cfg, J, moves)
    assert all(s.verdict == "pass" for s in steps)
    assert abs(steps[0].c2["max_abs"] - steps[1].c2["max_abs"]) <= 1e-10
    d = steps[-1].to_dict()
    assert set(d) >= {"move", "yang", "c2", "verdict", "primed"}


def test_scaled_config_and_vary(flat9):
    dom, g, cfg = flat9
    J = CAT.seed("triangular").build(CAT.entry("euclidean_flat"), dom, 2)
    res = bl.transform(g, cfg, J, k=1)
    with pytest.raises(bl.BacklundError):
        cfg.scaled(-1.0)
    C = Field.from_expr("0.3 + zt*wt", dom, order=2)
    new = bl.vary(g, cfg, res, C=C, r_scale=1.7)
    assert new.verdict == "pass"


def test_obstruction_probe_on_curved_entries():
    for name, half_flat in (("burns", True), ("fubini_study", False)):
        e = CAT.entry(name)
        dom = e.lattice(9)
        _, s, r = e.aux(dom, 2)
        p = bl.obstruction_probe(e.metric(dom, 2), bl.TransformConfig(r=r, s=s))
        assert p.consistent
        assert p.probe_zero == half_flat and p.probe_nonvanishing == (not half_flat)
