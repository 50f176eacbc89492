import json

import pytest

from klrcrystal.cartan import RootVector, WeightVector, load_datum
from klrcrystal.crystal import (
    FRONTIER,
    NEG_INF,
    CrystalError,
    EscapeDetected,
    NotDominant,
    axiom_check,
    binfty_graph,
    blambda,
    blambda_embedding_check,
    connected_component,
    elementary,
    isomorphic,
    morphism_check,
    perfect_graph,
    tensor,
)
from klrcrystal.qalgebra import LatticeData, UqMinus, perfect_check


def binf_of(name, depth):
    U = UqMinus(load_datum(name), height_cap=depth)
    return binfty_graph(LatticeData(U, depth))


@pytest.fixture(scope="module")
def B1(L1):
    return binfty_graph(L1)


# -- elementary crystals --------------------------------------------------------


def test_elementary(D1):
    T = elementary(D1, "T", {"1": 2, "2": 1})
    (t,) = T.nodes.values()
    assert t.eps == {"1": NEG_INF, "2": NEG_INF} and t.phi == t.eps
    assert t.wt.key(D1) == (2, 1)
    C = elementary(D1, "C")
    (c,) = C.nodes.values()
    assert c.eps == {"1": 0, "2": 0} and c.phi == c.eps and c.wt.key(D1) == (0, 0)
    for G in (T, C):
        assert all(v is None for v in G.f[G.root].values())
        assert all(v is None for v in G.e[G.root].values())
        assert axiom_check(G).passed
    with pytest.raises(CrystalError):
        elementary(D1, "X")


def test_neg_inf_arithmetic():
    assert max(NEG_INF, 3) == 3
    assert NEG_INF + 5 == NEG_INF


# -- B(infinity) ---------------------------------------------------------------


def test_binfty_axioms(B1, D1, U1):
    assert axiom_check(B1).passed
    for alpha in [RootVector()] + D1.roots_up_to(4):
        assert sum(1 for n in B1.nodes if n[0] == alpha) == U1.dim(alpha)


def test_binfty_rank_one():
    G = binf_of("D0", 4)
    assert len(G) == 5 and axiom_check(G).passed
    G = binf_of("Dim", 4)
    assert len(G) == 5 and axiom_check(G).passed
    b = G.root
    for k in range(4):
        assert G.nodes[b].eps["1"] == 0
        b = G.ft(b, "1")
    assert G.ft(b, "1") is FRONTIER


def test_axiom3_negative_control(D1):
    G = blambda(binf_of("D0", 4), {"1": 2})
    bad = blambda(binf_of("D0", 4), {"1": 2})
    second = bad.ft(bad.root, "1")
    bad.e[second]["1"] = second  # e~ no longer inverts f~
    assert axiom_check(G).passed
    rep = axiom_check(bad)
    assert not rep.passed
    assert "axiom3" in {f["check"] for f in rep.failures()}


# -- tensor products ------------------------------------------------------------


def test_tensor_with_T(D1, B1):
    G = tensor(B1, elementary(D1, "T", {"1": 0, "2": 0}))
    for (b, t) in G.nodes:
        for i in D1.indices:
            t2 = G.ft((b, t), i)
            assert t2 == FRONTIER or t2 == (B1.ft(b, i), "t") or (t2 is None and B1.ft(b, i) is None)
    assert axiom_check(G).passed


def test_imaginary_zero_weight_kills_f(D1, B1):
    G = tensor(tensor(B1, elementary(D1, "T", {"1": 1, "2": 0})), elementary(D1, "C"))
    assert G.ft(G.root, "2") is None
    assert G.ft(G.root, "1") is not None


def _reassociate(x):
    (a, b), c = x
    return (a, (b, c))


@pytest.mark.parametrize(
    "name,lams,depth",
    [("D0", [{"1": 1}, {"1": 2}, {"1": 1}], 3), ("D1", [{"1": 1, "2": 0}, {"1": 0, "2": 1}, {"1": 1, "2": 1}], 2), ("Dim", [{"1": 1}, {"1": 0}, {"1": 2}], 2)],
)
def test_tensor_associativity(name, lams, depth):
    binf = binf_of(name, depth)
    A, B, C = (blambda(binf, lam) for lam in lams)
    left = tensor(tensor(A, B), C)
    right = tensor(A, tensor(B, C))
    assert len(left) == len(right)
    rep = morphism_check(_reassociate, left, right, strict=True)
    assert rep.passed, rep.failures()[:3]
    assert axiom_check(left).passed and axiom_check(right).passed


def test_tensor_ef_inverse(D0):
    binf = binf_of("D0", 3)
    G = tensor(blambda(binf, {"1": 2}), blambda(binf, {"1": 1}))
    for b in G.nodes:
        t = G.ft(b, "1")
        if t is not None:
            assert G.et(t, "1") == b


# -- connected components ------------------------------------------------------


def test_component_chain(D0):
    G = blambda(binf_of("D0", 5), {"1": 3})
    H = connected_component(G, G.root)
    assert len(H) == len(G) == 4


def test_component_disjoint_union(D0):
    binf = binf_of("D0", 3)
    G = tensor(blambda(binf, {"1": 1}), blambda(binf, {"1": 1}))
    H = connected_component(G, G.root)
    assert len(G) == 4 and len(H) == 3
    with pytest.raises(CrystalError):
        connected_component(G, "nowhere")


def test_component_escape(D0):
    binf = binf_of("D0", 3)
    G = blambda(binf, {"1": 3})
    mid = G.ft(G.root, "1")
    with pytest.raises(EscapeDetected):
        connected_component(G, mid)


# -- B(lambda) -----------------------------------------------------------------


def test_blambda_real_chain():
    binf = binf_of("D0", 5)
    H = blambda(binf, {"1": 3})
    assert len(H) == 4
    b = H.root
    for k in range(3):
        assert H.nodes[b].eps["1"] == k and H.nodes[b].phi["1"] == 3 - k
        b = H.ft(b, "1")
    assert H.ft(b, "1") is None
    assert axiom_check(H).passed


def test_blambda_imaginary():
    binf = binf_of("Dim", 4)
    H = blambda(binf, {"1": 1})
    b, phis = H.root, []
    while b is not FRONTIER and b is not None:
        phis.append(H.nodes[b].phi["1"])
        b = H.ft(b, "1")
    assert b is FRONTIER
    assert phis == [1 + 2 * k for k in range(len(phis))]
    assert len(blambda(binf, {"1": 0})) == 1


def test_blambda_D1(B1, D1):
    H = blambda(B1, {"1": 1, "2": 0})
    assert len(H) == 6
    assert axiom_check(H).passed
    rep = blambda_embedding_check(H, B1, {"1": 1, "2": 0})
    assert rep.passed, rep.failures()[:3]
    assert H.ft(H.root, "2") is None
    assert len(blambda(B1, {"1": 0, "2": 0})) == 1
    with pytest.raises(NotDominant):
        blambda(B1, {"1": -1, "2": 0})


def test_blambda_proper_subcrystal(B1, D1):
    big = tensor(tensor(B1, elementary(D1, "T", {"1": 0, "2": 1})), elementary(D1, "C"))
    H = blambda(B1, {"1": 0, "2": 1})
    assert len(H) < len(big)
    assert blambda_embedding_check(H, B1, {"1": 0, "2": 1}).passed


# -- morphisms and isomorphism ------------------------------------------------


def test_identity_morphism(B1):
    assert morphism_check(lambda b: b, B1, B1, strict=True).passed


def test_weight_shifting_morphism_fails(D0):
    H = blambda(binf_of("D0", 4), {"1": 3})
    shift = {b: H.ft(b, "1") for b in H.nodes}
    rep = morphism_check(shift, H, H)
    assert not rep.passed
    assert "wt" in {f["check"] for f in rep.failures()}


def test_perfect_graph_isomorphic(D1, U1, L1):
    basis = {alpha: L1.global_basis(alpha)[1] for alpha in [RootVector()] + D1.roots_up_to(3)}
    res = perfect_check(U1, basis)
    P = perfect_graph(D1, res, 3)
    lat = binfty_graph(LatticeData(U1, 3))
    ok, info = isomorphic(P, lat)
    assert ok, info
    assert axiom_check(P).passed


def test_isomorphic_negative(D0):
    binf = binf_of("D0", 4)
    ok, _ = isomorphic(blambda(binf, {"1": 2}), blambda(binf, {"1": 3}))
    assert not ok


# -- export ----------------------------------------------------------------------


def test_json_and_dot(B1):
    H = blambda(B1, {"1": 1, "2": 0})
    data = json.loads(H.dumps())
    assert len(data["nodes"]) == 6
    assert data["nodes"][data["root"]]["wt"] == [1, 0]
    dot = H.to_dot()
    assert dot.startswith("digraph crystal {")
    assert dot.count("->") == sum(1 for b in H.nodes for i in ("1", "2") if H.ft(b, i) not in (None, FRONTIER))
    assert "color=red" in dot
