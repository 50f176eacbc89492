import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from klrcrystal.cartan import RootVector, load_datum
from klrcrystal.klr import (
    KLRAlgebra,
    KLRElement,
    KLRError,
    KLRFamily,
    NotHomogeneous,
    Poly,
    all_perms,
    correction_polys,
    correction_Q,
    count_basis_by_degree,
    default_params,
    divided_idempotent,
    perm_length,
    qdim_block,
    reduced_word,
    serre_verify,
)
from klrcrystal.klr import correction_polys_raw, perm_from_word

from conftest import q, sym_equal

X = sp.symbols("x1:6")
u, v, w = sp.symbols("u v w")


def poly_to_sympy(p: Poly, names=X):
    return sum(sp.Rational(c.numerator, c.denominator) * sp.Mul(*[names[k] ** e for k, e in enumerate(t)]) for t, c in p.c.items())


def ratfun_to_sympy(f, names=X):
    den = sp.Mul(*[(names[a] - names[b]) ** m for (a, b), m in f.den.items()])
    return poly_to_sympy(f.num, names) / den


def bipoly_to_sympy(f):
    return sum(sp.Rational(c.numerator, c.denominator) * u**a * v**b for (a, b), c in f.items())


def apply_op(op, seq, f_sym, d):
    """Apply an operator to ``f * 1_seq``; returns {target: sympy expr}, convention (w.f)(x) = f(x_w(1), ...)."""
    from klrcrystal.klr import act_on_seq

    out = {}
    for (i, perm), coef in op.terms.items():
        if i != seq:
            continue
        moved = f_sym.subs({X[k]: sp.Symbol(f"_t{k}") for k in range(d)}, simultaneous=True)
        moved = moved.subs({sp.Symbol(f"_t{k}"): X[perm[k]] for k in range(d)}, simultaneous=True)
        tgt = act_on_seq(perm, i)
        out[tgt] = out.get(tgt, 0) + ratfun_to_sympy(coef) * moved
    return {k: sp.cancel(e) for k, e in out.items() if sp.cancel(e) != 0}


# -- parameters ---------------------------------------------------------------


def test_default_params(D1):
    P = default_params(D1)
    assert sp.expand(bipoly_to_sympy(P.Qij("1", "2")) - (u + v)) == 0
    assert sp.expand(bipoly_to_sympy(P.P["2"]) - (u**2 + u * v + v**2)) == 0
    assert sp.expand(bipoly_to_sympy(P.P["1"]) - 1) == 0
    assert P.violations() == []


def test_Q_symmetry(D1):
    P = default_params(D1)
    f, g = P.Qij("1", "2"), P.Qij("2", "1")
    assert {(b, a): c for (a, b), c in f.items()} == g


# -- permutation action ------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(4)), st.lists(st.integers(0, 3), min_size=4, max_size=4))
def test_poly_permute_convention(perm, exps):
    p = Poly.monomial(exps)
    got = poly_to_sympy(p.permute(tuple(perm)))
    want = sp.Mul(*[X[perm[k]] ** e for k, e in enumerate(exps)])
    assert sp.expand(got - want) == 0


def test_reduced_words_lexmin():
    for d in range(1, 5):
        for perm in all_perms(d):
            word = reduced_word(perm)
            assert len(word) == perm_length(perm)
            assert perm_from_word(d, word) == perm
    assert reduced_word((2, 1, 0)) == (1, 2, 1)


# -- generators ----------------------------------------------------------------


def test_tau_equal_colours(D1):
    alg = KLRAlgebra(D1, RootVector({"2": 2}), default_params(D1))
    f = X[0] ** 2 * X[1]
    got = apply_op(alg.tau(1), ("2", "2"), f, 2)
    P = X[0] ** 2 + X[0] * X[1] + X[1] ** 2
    want = P * (f.subs({X[0]: X[1], X[1]: X[0]}, simultaneous=True) - f) / (X[0] - X[1])
    assert sp.cancel(got[("2", "2")] - want) == 0


def test_tau_plain_transposition(D1):
    alg = KLRAlgebra(D1, RootVector({"1": 1, "2": 1}), default_params(D1))
    f = X[0] ** 3
    got = apply_op(alg.tau(1), ("1", "2"), f, 2)
    assert list(got) == [("2", "1")]
    assert sp.expand(got[("2", "1")] - X[1] ** 3) == 0
    got = apply_op(alg.tau(1), ("2", "1"), sp.Integer(1), 2)
    assert sp.expand(got[("1", "2")] - (X[0] + X[1])) == 0


def test_x_generator(D1):
    alg = KLRAlgebra(D1, RootVector({"1": 1, "2": 1}), default_params(D1))
    got = apply_op(alg.x(1), ("2", "1"), X[1], 2)
    assert sp.expand(got[("2", "1")] - X[0] * X[1]) == 0


def test_generator_range(D1):
    alg = KLRAlgebra(D1, RootVector({"1": 1, "2": 1}), default_params(D1))
    with pytest.raises(KLRError):
        alg.tau(0)
    with pytest.raises(KLRError):
        alg.x(3)


def test_compose_examples(D1):
    alg = KLRAlgebra(D1, RootVector({"2": 2}), default_params(D1))
    assert (alg.tau(1) @ alg.tau(1)).is_zero()
    lhs = alg.tau(1) @ alg.x(2) - alg.x(1) @ alg.tau(1)
    got = apply_op(lhs, ("2", "2"), sp.Integer(1), 2)
    assert sp.expand(got[("2", "2")] - (X[0] ** 2 + X[0] * X[1] + X[1] ** 2)) == 0
    assert alg.identity() @ alg.tau(1) == alg.tau(1)


# -- normal forms -------------------------------------------------------------


@pytest.fixture(scope="module")
def A12(D1):
    return KLRAlgebra(D1, RootVector({"1": 1, "2": 1}), default_params(D1))


def test_tau_square_12(A12):
    el = A12.product([A12.gen_tau(1), A12.gen_tau(1), A12.e(("1", "2"))])
    assert el.render() == "(x(1)+x(2))*e(1,2)"


def test_identity_normal_form(A12):
    one = A12.to_normal(A12.identity())
    assert one == A12.e(("1", "2")) + A12.e(("2", "1"))


def test_roundtrip_basis_element(A12):
    v = A12.basis_element((1, 0), (3, 0), ("2", "1"))
    ops = A12.from_normal(v)
    assert A12.to_normal(ops[0]) == v


def test_json_roundtrip(A12):
    v = A12.product([A12.gen_tau(1), A12.gen_x(1), A12.gen_x(1)]).scale(Fraction(3, 2))
    assert KLRElement.from_json(A12.alpha, v.to_json()) == v


def test_degree_examples(D1, A12):
    assert A12.degree(A12.multiply(A12.gen_tau(1), A12.e(("1", "2")))) == 1
    a22 = KLRAlgebra(D1, RootVector({"2": 2}), default_params(D1))
    assert a22.degree(a22.gen_x(1)) == 2
    assert a22.degree(a22.gen_tau(1)) == 2
    with pytest.raises(NotHomogeneous):
        a22.degree(a22.gen_x(1) + a22.one())


def test_tau_squared_vanishes_symmetric_P(D1):
    for alpha in [{"2": 2}, {"2": 3}, {"1": 2}]:
        alg = KLRAlgebra(D1, RootVector(alpha), default_params(D1))
        for t in range(1, alg.d):
            assert not alg.multiply(alg.gen_tau(t), alg.gen_tau(t))


def test_psi_examples(D1):
    alg = KLRAlgebra(D1, RootVector({"1": 2, "2": 1}), default_params(D1))
    x = alg.multiply(alg.gen_x(2), alg.e(("1", "2", "1")))
    assert alg.psi(x) == x
    i = ("1", "2", "1")
    t12 = alg.product([alg.gen_tau(1), alg.gen_tau(2), alg.e(i)])
    t21 = alg.product([alg.e(i), alg.gen_tau(2), alg.gen_tau(1)])
    assert alg.psi(t12) == t21


# -- random products: confluence, psi, degree ---------------------------------

ALPHAS = [{"1": 1, "2": 1}, {"1": 2, "2": 1}, {"1": 1, "2": 2}, {"2": 3}]


def _random_factor(alg, rng):
    kind = rng.choice(["x", "tau", "e"])
    if kind == "x":
        return alg.gen_x(rng.randint(1, alg.d))
    if kind == "tau":
        return alg.gen_tau(rng.randint(1, alg.d - 1))
    return alg.e(rng.choice(alg.seqs))


@pytest.fixture(scope="module")
def algs(D1):
    return {RootVector(a): KLRAlgebra(D1, RootVector(a), default_params(D1)) for a in ALPHAS}


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(ALPHAS), st.integers(0, 10**6))
def test_association_independence(algs, alpha, seed):
    alg = algs[RootVector(alpha)]
    rng = random.Random(seed)
    fs = [_random_factor(alg, rng) for _ in range(4)]
    left = alg.multiply(alg.multiply(alg.multiply(fs[0], fs[1]), fs[2]), fs[3])
    right = alg.multiply(fs[0], alg.multiply(fs[1], alg.multiply(fs[2], fs[3])))
    assert left == right


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(ALPHAS), st.integers(0, 10**6))
def test_psi_reverses_products(algs, alpha, seed):
    alg = algs[RootVector(alpha)]
    rng = random.Random(seed)
    a, b = _random_factor(alg, rng), _random_factor(alg, rng)
    assert alg.psi(alg.multiply(a, b)) == alg.multiply(alg.psi(b), alg.psi(a))
    ab = alg.multiply(a, b)
    assert alg.psi(alg.psi(ab)) == ab


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(ALPHAS), st.integers(0, 10**6))
def test_degree_additive(algs, alpha, seed):
    alg = algs[RootVector(alpha)]
    rng = random.Random(seed)
    # generators mix colours, so cut them down to homogeneous pieces first
    a = alg.multiply(_random_factor(alg, rng), alg.e(rng.choice(alg.seqs)))
    b = alg.multiply(_random_factor(alg, rng), alg.e(rng.choice(alg.seqs)))
    ab = alg.multiply(a, b)
    if ab:
        assert alg.degree(ab) == alg.degree(a) + alg.degree(b)


# -- correction polynomials against the symbolic oracle -----------------------


def oracle_corrections(P):
    P = sp.Lambda((u, v), P)
    p1 = (
        P(v, u) * P(u, w) / ((u - v) * (u - w))
        + P(u, w) * P(v, w) / ((u - w) * (v - w))
        - P(u, v) * P(v, w) / ((u - v) * (v - w))
    )
    p2 = (
        -P(u, v) * P(u, w) / ((u - v) * (u - w))
        - P(u, w) * P(w, v) / ((u - w) * (v - w))
        + P(u, v) * P(v, w) / ((u - v) * (v - w))
    )
    return sp.cancel(p1), sp.cancel(p2)


def to_bipoly(expr):
    poly = sp.Poly(sp.expand(expr), u, v)
    return {m: Fraction(int(sp.fraction(c)[0]), int(sp.fraction(c)[1])) for m, c in poly.terms()}


@pytest.mark.parametrize("P", [u + v, sp.Integer(1), u**2 + u * v + v**2, u - v, 2 * u**3 - u * v**2 + 5 * v**3])
def test_correction_polys_oracle(P):
    p1, p2 = correction_polys_raw(to_bipoly(P))
    o1, o2 = oracle_corrections(P)
    names = (u, v, w)
    assert sp.cancel(ratfun_to_sympy(p1, names) - o1) == 0
    assert sp.cancel(ratfun_to_sympy(p2, names) - o2) == 0


def test_correction_values(D2, D1):
    p1, p2 = correction_polys(default_params(D2), "1")
    assert poly_to_sympy(p1) == 1 and poly_to_sympy(p2) == -1
    p1, p2 = correction_polys(default_params(D1), "1")
    assert not p1.c and not p2.c
    assert poly_to_sympy(correction_Q(default_params(D1), "1", "2")) == 1


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_symmetric_P_gives_opposite_corrections(cs):
    a, b, c = cs
    P = a * u**2 + b * u * v + a * v**2 + c * (u + v)
    p1, p2 = correction_polys_raw(to_bipoly(P) if P != 0 else {})
    assert sp.cancel(ratfun_to_sympy(p1, (u, v, w)) + ratfun_to_sympy(p2, (u, v, w))) == 0


@pytest.mark.parametrize("preset", ["D1", "D2", "Dim"])
def test_correction_polys_certified(preset):
    d = load_datum(preset)
    params = default_params(d)
    for i in d.indices:
        correction_polys(params, i)


# -- relations, idempotents, dimensions ---------------------------------------


@pytest.mark.parametrize("alpha", [{"1": 1}, {"1": 1, "2": 1}, {"1": 2, "2": 1}])
def test_relations_small(D1, alpha):
    rep = KLRAlgebra(D1, RootVector(alpha), default_params(D1)).verify_relations()
    assert rep.passed, rep.failures()[:3]


def test_degenerate_P_relations(D2):
    params = default_params(D2)
    params.P["1"] = {(1, 0): Fraction(1), (0, 1): Fraction(-1)}
    alg = KLRAlgebra(D2, RootVector({"1": 3}), params)
    assert alg.verify_relations().passed
    # the tau^2 relation now carries the divided difference of P
    assert alg.multiply(alg.gen_tau(1), alg.gen_tau(1))


def test_divided_idempotents(D1):
    fam = KLRFamily(D1)
    alg1 = fam(RootVector({"1": 1}))
    assert divided_idempotent(fam, "1", 1) == alg1.e(("1",))
    e2 = divided_idempotent(fam, "1", 2)
    alg2 = fam(RootVector({"1": 2}))
    # tau acts as minus a divided difference here, hence the sign
    assert e2 == alg2.multiply(alg2.gen_tau(1), alg2.gen_x(1)).scale(-1)
    assert alg2.multiply(e2, e2) == e2
    e3 = divided_idempotent(fam, "1", 3)
    alg3 = fam(RootVector({"1": 3}))
    assert alg3.multiply(e3, e3) == e3
    assert alg3.degree(e3) == 0
    assert divided_idempotent(fam, "2", 3) == fam(RootVector({"2": 3})).e(("2", "2", "2"))


@pytest.mark.parametrize(
    "j,i,expected",
    [(("1",), ("1",), "1/(1-q^2)"), (("2", "2"), ("2", "2"), "(1+q^2)/(1-q^2)^2"), (("2", "1"), ("1", "2"), "q/(1-q^2)^2")],
)
def test_qdim_examples(D1, j, i, expected):
    assert sym_equal(qdim_block(D1, j, i), sp.sympify(expected.replace("^", "**"), locals={"q": q}))


@pytest.mark.parametrize("alpha", [{"1": 2, "2": 1}, {"1": 1, "2": 2}, {"1": 2, "2": 2}])
def test_qdim_matches_basis_count(D1, alpha):
    seqs = D1.enumerate_seq(RootVector(alpha))
    for j in seqs:
        for i in seqs:
            ser = qdim_block(D1, j, i).series(20)
            assert ser == {k: v for k, v in count_basis_by_degree(D1, j, i, 20).items() if v}


def test_serre_D1():
    d = load_datum("D1")
    rep = serre_verify(KLRFamily(d), "1", "2")
    assert rep.passed, rep.failures()


def test_serre_commuting(D3):
    rep = serre_verify(KLRFamily(D3), "1", "2")
    assert rep.passed and rep.summary() == {"serre-commuting": (2, 0)}


def test_center(D1):
    alg = KLRAlgebra(D1, RootVector({"2": 2}), default_params(D1))
    assert alg.center_check(Poly.var(2, 0) + Poly.var(2, 1))
    assert not alg.center_check(Poly.var(2, 0))
    alg1 = KLRAlgebra(D1, RootVector({"1": 1}), default_params(D1))
    assert alg1.center_check(Poly.var(1, 0, 3))


def test_element_weight_mismatch(D1, A12):
    other = KLRAlgebra(D1, RootVector({"1": 2}), default_params(D1))
    with pytest.raises(KLRError):
        A12.multiply(A12.one(), other.one())
