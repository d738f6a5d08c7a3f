import shutil

import numpy as np
import pytest

from sdyang import catalog as cat
from sdyang.fieldcore import max_norm


def test_default_catalog_contents():
    c = cat.load()
    assert [e.name for e in cat.entries(c)] == ["euclidean_flat", "conformal_flat", "eguchi_hanson",
                                                 "burns", "fubini_study"]
    assert {"triangular", "harmonic", "perturbative"} <= {s.name for s in cat.seeds(c)}
    assert c.checksum.startswith("sha256:")
    fs = c.entry("fubini_study")
    assert fs.flags["einstein"] and not fs.flags["half_flat"]


def test_unknown_names():
    with pytest.raises(cat.CatalogError):
        cat.get("taub_nut")
    with pytest.raises(cat.CatalogError):
        cat.default_catalog().seed("nope")
    with pytest.raises(cat.CatalogError):
        cat.get("burns", q=2.0)


def test_parameters_override():
    e = cat.get("burns", m=2.0)
    assert e.params["m"] == 2.0
    dom = e.lattice(9)
    r = e.aux(dom, 0)[2].values[..., 0, 0]
    x = dom.x
    t = sum(c ** 2 for c in x)
    assert np.allclose(r, np.sqrt(1 + 2.0 / t), rtol=1e-13)


def _copy(tmp_path):
    dst = tmp_path / "catalog.ini"
    shutil.copy(cat.default_path(), dst)
    return dst


def test_checksum_detects_edits(tmp_path):
    p = _copy(tmp_path)
    text = p.read_text().replace("params = c = 0.1", "params = c = 0.2")
    p.write_text(text)
    with pytest.raises(cat.CatalogError):
        cat.load(p)
    cat.update_checksum(p)
    assert cat.load(p).entry("conformal_flat").params["c"] == 0.2


def test_environment_override(tmp_path, monkeypatch):
    p = _copy(tmp_path)
    monkeypatch.setenv(cat.ENV_VAR, str(p))
    assert cat.default_path() == str(p)
    assert cat.load().path == str(p)


@pytest.mark.parametrize("name", ["euclidean_flat", "burns", "fubini_study"])
def test_validate_entries(name):
    rep = cat.validate(cat.get(name), n=9)
    assert rep["ok"] and all(rep["checks"].values())


def test_wrong_flag_is_reported(tmp_path):
    p = _copy(tmp_path)
    text = p.read_text()
    head, tail = text.split("[metric burns]", 1)
    block, rest = tail.split("\n\n", 1)
    block = block.replace("einstein, ", "").replace("scalar_flat", "scalar_flat, einstein")
    p.write_text(head + "[metric burns]" + block + "\n\n" + rest)
    cat.update_checksum(p)
    e = cat.load(p).entry("burns")
    with pytest.raises(cat.ValidationError) as info:
        cat.validate(e, n=9)
    assert info.value.report["checks"]["flags"] is False
    assert info.value.report["measured"]["einstein"] is False


def test_seed_builders():
    c = cat.default_catalog()
    e = c.entry("burns")
    dom = e.lattice(9)
    rng = np.random.default_rng(0)
    for seed in cat.seeds(c):
        if not seed.applies_to(e):
            continue
        J = seed.build(e, dom, 2, rng=rng)
        assert J.shape == (2, 2) and np.isfinite(J.values).all()
    pert = cat.perturbative_seed(dom, 0.1, np.random.default_rng(1), 1)
    assert max_norm(pert - cat.perturbative_seed(dom, 0.1, np.random.default_rng(1), 1), 0) == 0.0
