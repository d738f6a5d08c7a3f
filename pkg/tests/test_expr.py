import numpy as np
import pytest
import sympy as sp

from sdyang import expr as ex

SYM = {n: sp.Symbol(n) for n in ("z", "w", "zt", "wt", "a", "m")}
SYM.update(exp=sp.exp, log=sp.log, sqrt=sp.sqrt, i=sp.I)

SAMPLES = [
    "z*zt + w*wt",
    "log(1 + z*zt + w*wt)",
    "exp(z*w - 0.5*zt)/(2 + wt^2)",
    "sqrt(4 + z*zt)*w^3 - i*zt*wt",
    "(z*zt + w*wt)^-2 + a*z",
]


def to_sympy(e):
    return sp.sympify(ex.to_string(e).replace("^", "**"), locals=SYM)


def test_parse_print_roundtrip():
    for text in SAMPLES:
        e = ex.parse(text, ["a"])
        assert ex.parse(ex.to_string(e), ["a"]) is e


def test_precedence_and_unary_minus():
    e = ex.parse("-z^2 + 3*w/2 - (zt - wt)")
    x = (0.3, -0.2, 0.7, 0.1)
    z, w = complex(x[0], x[1]), complex(x[2], x[3])
    ref = -z ** 2 + 1.5 * w - (z.conjugate() - w.conjugate())
    assert ex.eval_at(e, x) == pytest.approx(ref)


def test_hash_consing():
    assert ex.parse("z*w + 1") is ex.parse("z * w+1")
    assert ex.parse("z") - ex.parse("z") is ex.ZERO


@pytest.mark.parametrize("text", SAMPLES)
@pytest.mark.parametrize("v", ["z", "w", "zt", "wt"])
def test_wirtinger_diff_matches_sympy(text, v):
    e = ex.parse(text, ["a"])
    d = ex.wirtinger_diff(e, v)
    assert sp.simplify(to_sympy(d) - sp.diff(to_sympy(e), SYM[v])) == 0


def test_diff_multi_commutes():
    e = ex.parse(SAMPLES[2])
    a = ex.diff_multi(e, (1, 0, 1, 0))
    b = ex.wirtinger_diff(ex.wirtinger_diff(e, "zt"), "z")
    x = [np.array([0.1, 0.2]), np.array([0.3, -0.1]), np.array([0.0, 0.4]), np.array([-0.2, 0.2])]
    assert np.allclose(ex.evaluate(a, x), ex.evaluate(b, x), rtol=1e-14, atol=0)


def test_evaluate_on_real_slice():
    e = ex.parse("conj(z)*w + exp(i*zt)")
    x = np.random.default_rng(0).normal(size=(4, 50))
    z, w = x[0] + 1j * x[1], x[2] + 1j * x[3]
    assert np.allclose(ex.evaluate(e, x), np.conj(z) * w + np.exp(1j * np.conj(z)))


def test_expand_conj_swaps_variables():
    e = ex.parse("conj(2*i*z + wt^2)")
    assert ex.expand_conj(e) is ex.parse("-2*i*zt + w^2")


def test_substitute_and_free_symbols():
    e = ex.parse("a*z + m", None)
    assert ex.free_symbols(e) == {"a", "m"}
    f = ex.substitute(e, {"a": 2, "m": "w"})
    assert ex.free_symbols(f) == set()
    assert ex.eval_at(f, (1, 0, 0, 1)) == pytest.approx(2 + 1j)


def test_parse_errors_carry_offsets():
    with pytest.raises(ex.ParseError) as info:
        ex.parse("z + * w")
    assert info.value.offset == 4
    with pytest.raises(ex.ParseError):
        ex.parse("q*z")
    with pytest.raises(ex.ParseError):
        ex.parse("   ")


def test_unbound_and_singular_evaluation():
    with pytest.raises(ex.UnboundParameterError):
        ex.evaluate(ex.parse("a*z", ["a"]), (0.0, 0.0, 0.0, 0.0))
    with pytest.raises(ex.SingularEvaluationError) as info:
        ex.evaluate(ex.parse("1/(z*zt)"), (np.zeros(3), np.zeros(3), np.ones(3), np.ones(3)))
    assert "x=(0" in str(info.value)
    with pytest.raises(ex.SingularEvaluationError):
        ex.evaluate(ex.parse("log(z - 1)"), (0.5, 0.0, 0.0, 0.0))


def test_evaluator_budget_keeps_results_exact():
    e = ex.parse("log(1 + z*zt + w*wt)")
    jets = [ex.diff_multi(e, (a, b, 0, 1)) for a in range(3) for b in range(3)]
    x = np.random.default_rng(1).normal(size=(4, 200))
    small = ex.Evaluator(x, budget=4 * 200 * 16)
    big = ex.Evaluator(x)
    for j in jets:
        assert np.array_equal(small(j), big(j))
    assert small._bytes <= 4 * 200 * 16 + 200 * 16
