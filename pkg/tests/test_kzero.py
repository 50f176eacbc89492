import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from klrcrystal.cartan import RootVector, load_datum
from klrcrystal.kzero import (
    DEFAULT_CONVENTION,
    SHIFT_CONVENTIONS,
    K0,
    DividedPowerUnsupported,
    K0Elem,
    K0Error,
)
from klrcrystal.qarith import QLaurent, QRat

from conftest import sym_equal
from test_qalgebra import oracle_pairing

P = K0Elem.symbol


@pytest.fixture(scope="module")
def K1(D1):
    return K0(D1)


def test_mult_examples(K1):
    assert K1.mult(P("1"), P("2")) == P(("1", "2"))
    x = P(("2", "1"), QLaurent({1: 2}))
    assert K1.mult(K0Elem.unit(), x) == x
    assert K1.mult(P("1", QLaurent({1: 1})), P("1")) == P(("1", "1"), QLaurent({1: 1}))


def test_weight_mismatch():
    with pytest.raises(K0Error):
        P("1") + P("2")


def test_phi_examples(K1):
    assert K1.phi([("1", 1)]) == P("1")
    assert K1.phi([("1", 2)]) == P([("1", 2)])
    assert K1.shift((("1", 2),)) == 1
    assert K1.phi([("2", 3)]) == P(("2", "2", "2"))
    assert K1.shift((("2", 1),) * 3) == 0


def test_comult_examples(K1):
    r = K1.comult(P("1"))
    assert r == {((("1", 1),), ()): QLaurent({0: 1}), ((), (("1", 1),)): QLaurent({0: 1})}
    r = K1.comult(P(("1", "2")))
    assert len(r) == 4
    assert r[((("2", 1),), (("1", 1),))] == QLaurent({1: 1})
    assert r[((("1", 1),), (("2", 1),))] == QLaurent({0: 1})
    with pytest.raises(DividedPowerUnsupported):
        K1.comult(P([("1", 2)]))


words = st.lists(st.sampled_from(["1", "2"]), min_size=0, max_size=3).map(tuple)


@settings(max_examples=30, deadline=None)
@given(words)
def test_coassociative(K1, w):
    assert K1.coassociativity(P(w))


@settings(max_examples=30, deadline=None)
@given(words, words)
def test_bialgebra(K1, a, b):
    rep = K1.bialgebra_check(P(a), P(b))
    assert rep.passed, rep.failures()


@settings(max_examples=20, deadline=None)
@given(words, words, st.integers(-3, 3), st.integers(-3, 3))
def test_bar_commutes_with_mult(K1, a, b, m, n):
    x = P(a, QLaurent({m: 1, 0: 2}))
    y = P(b, QLaurent({n: -1}))
    assert K1.mult(x, y).bar() == K1.mult(x.bar(), y.bar())
    assert x.bar().bar() == x


def test_pairing_examples(K1):
    assert K1.pair(P("1"), P("1")) == QRat.parse("1/(1-q^2)")
    assert not K1.pair(P("1"), P("2"))
    assert sym_equal(K1.pair(P(("1", "2")), P(("2", "1"))), "q/(1-q**2)**2")
    assert sym_equal(K1.pair(P(("2", "2")), P(("2", "2"))), "(1+q**2)/(1-q**2)**2")
    assert K1.pair(K0Elem.unit(), K0Elem.unit()) == QRat.one()


@pytest.mark.parametrize("alpha", [{"1": 2, "2": 1}, {"1": 1, "2": 2}, {"2": 3}])
def test_pairing_sympy_oracle(D1, K1, alpha):
    oracle = oracle_pairing(D1)
    ws = D1.enumerate_seq(RootVector(alpha))
    for a in ws:
        for b in ws:
            assert sym_equal(K1.pair(P(a), P(b)), oracle(a, b))


@pytest.mark.parametrize("alpha", [{"1": 2, "2": 1}, {"1": 2, "2": 2}, {"1": 1, "2": 3}])
def test_isometry_words(K1, U1, alpha):
    rep = K1.isometry_check(U1, alpha, divided=False)
    assert rep.passed, rep.failures()[:2]


@pytest.mark.parametrize("alpha", [{"1": 2}, {"1": 2, "2": 1}])
def test_isometry_divided(K1, U1, alpha):
    rep = K1.isometry_check(U1, alpha, order=16)
    assert rep.passed, rep.failures()[:2]


def test_convention_report(K1, U1):
    rep = K1.convention_report(U1, {"1": 2}, order=16)
    assert set(rep) == set(SHIFT_CONVENTIONS)
    assert rep[DEFAULT_CONVENTION]
    assert not rep["none"]


def test_divided_series_vs_closed_form(K1):
    # f1^(2) = f1^2/[2]; pairing with itself is 1/((1-q^2)(1-q^4))
    ser = K1.pair(P([("1", 2)]), P([("1", 2)]), order=16)
    expected = sp.series(1 / ((1 - sp.Symbol("q") ** 2) * (1 - sp.Symbol("q") ** 4)), sp.Symbol("q"), 0, 16).removeO()
    poly = sp.Poly(expected, sp.Symbol("q"))
    assert ser == {m[0]: c for m, c in zip(poly.monoms(), poly.coeffs())}


def test_pairing_compatibility(K1):
    for L, M, N in [(("1", "2"), ("1",), ("2",)), (("2", "1", "2"), ("2",), ("1", "2")), (("1", "2", "1"), ("1", "1"), ("2",))]:
        lhs, rhs = K1.pairing_compatibility(L, M, N)
        assert lhs == rhs


def test_serre(K1, D3):
    assert K1.serre_check("1", "2").passed
    assert K0(D3).serre_check("1", "2").passed
    with pytest.raises(K0Error):
        K1.serre_check("1", "1")
    with pytest.raises(K0Error):
        K1.serre_check("2", "1")


def test_serre_divided(K1):
    assert K1.serre_check_divided("1", "2", order=12).passed


def test_serre_fails_with_wrong_signs(K1, D1):
    d = D1
    acc = QRat.zero()
    from klrcrystal.klr import qdim_block

    for k, seq in enumerate([("2", "1", "1"), ("1", "2", "1"), ("1", "1", "2")]):
        c = (d.qfact(k, "1") * d.qfact(2 - k, "1")).inverse()
        acc = acc + c * qdim_block(d, seq, ("1", "2", "1"))
    assert acc


@pytest.mark.parametrize("alpha", [{"1": 1, "2": 1}, {"1": 2, "2": 1}, {"1": 2, "2": 2}, {"2": 3}])
def test_gram_rank(K1, U1, alpha):
    r, d = K1.gram_rank(U1, alpha)
    assert r == d


def test_json(K1):
    x = P([("1", 2), ("2", 1)], QLaurent({-1: 3}))
    js = x.to_json()
    assert js["terms"][0]["seq"] == [["1", 2], ["2", 1]]
    assert js["terms"][0]["coeff"] == {"-1": "3"}
