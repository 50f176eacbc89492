"""Abstract crystals for Borcherds-Cartan data.

``NEG_INF`` plays the role of -infinity for epsilon/phi; Python's float
infinity already gives ``max(-inf, n) = n`` and ``-inf + n = -inf``.
Depth-bounded graphs mark missing arrows beyond the generation depth
with ``FRONTIER`` so that they are never confused with ``0``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping

from .cartan import BorcherdsCartanDatum, RootVector, WeightVector

__all__ = [
    "NEG_INF",
    "FRONTIER",
    "Wt",
    "CrystalNode",
    "CrystalGraph",
    "CrystalError",
    "EscapeDetected",
    "NotDominant",
    "axiom_check",
    "elementary",
    "tensor",
    "connected_component",
    "binfty_graph",
    "blambda",
    "perfect_graph",
    "blambda_embedding_check",
    "morphism_check",
    "isomorphic",
]

NEG_INF = float("-inf")


class _Frontier:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "FRONTIER"

    def __bool__(self) -> bool:
        return False


FRONTIER = _Frontier()


class CrystalError(ValueError):
    pass


class EscapeDetected(CrystalError):
    pass


class NotDominant(CrystalError):
    pass


def ext_str(x) -> str:
    if x is None:
        return "?"
    return "-inf" if x == NEG_INF else str(int(x))


def _agree(a, b) -> bool:
    # None marks a value cut off by the depth bound
    return a is None or b is None or a == b


@dataclass(frozen=True)
class Wt:
    """Weight ``lam - root`` with ``lam`` given by its pairings with the ``h_i``."""

    lam: WeightVector = field(default_factory=WeightVector)
    root: RootVector = field(default_factory=RootVector)

    def __add__(self, other: "Wt") -> "Wt":
        return Wt(self.lam + other.lam, self.root + other.root)

    def minus_alpha(self, i: str) -> "Wt":
        return Wt(self.lam, self.root + RootVector({i: 1}))

    def pair(self, datum: BorcherdsCartanDatum, i: str) -> int:
        return self.lam.get(i, 0) - datum.pairing(i, self.root)

    def key(self, datum: BorcherdsCartanDatum) -> tuple:
        return tuple(self.pair(datum, i) for i in datum.indices)

    def render(self, datum: BorcherdsCartanDatum) -> str:
        return "(" + ",".join(str(x) for x in self.key(datum)) + ")"


@dataclass
class CrystalNode:
    id: Hashable
    wt: Wt
    eps: dict
    phi: dict
    payload: object = None


@dataclass
class CrystalGraph:
    """Finite (possibly depth-truncated) crystal."""

    datum: BorcherdsCartanDatum
    nodes: dict = field(default_factory=dict)  # id -> CrystalNode
    f: dict = field(default_factory=dict)  # id -> {i: id | None | FRONTIER}
    e: dict = field(default_factory=dict)
    root: Hashable = None
    depth: int | None = None

    def add(self, node: CrystalNode) -> None:
        self.nodes[node.id] = node
        self.f.setdefault(node.id, {})
        self.e.setdefault(node.id, {})

    def ft(self, b, i):
        return self.f[b].get(i)

    def et(self, b, i):
        return self.e[b].get(i)

    def __len__(self) -> int:
        return len(self.nodes)

    def pair(self, b, i) -> int:
        return self.nodes[b].wt.pair(self.datum, i)

    # -- export ----------------------------------------------------------
    def to_json(self) -> dict:
        ids = {b: k for k, b in enumerate(self.nodes)}

        def ref(x):
            if x is FRONTIER:
                return "frontier"
            return None if x is None else ids[x]

        out = []
        for b, node in self.nodes.items():
            out.append(
                {
                    "id": ids[b],
                    "label": str(b),
                    "wt": list(node.wt.key(self.datum)),
                    "eps": {i: ext_str(v) for i, v in node.eps.items()},
                    "phi": {i: ext_str(v) for i, v in node.phi.items()},
                    "f": {i: ref(self.f[b].get(i)) for i in self.datum.indices},
                    "e": {i: ref(self.e[b].get(i)) for i in self.datum.indices},
                }
            )
        return {"indices": list(self.datum.indices), "root": ids.get(self.root), "nodes": out}

    def to_dot(self) -> str:
        palette = ["red", "blue", "darkgreen", "orange", "purple", "brown", "magenta", "cyan"]
        color = {i: palette[k % len(palette)] for k, i in enumerate(self.datum.indices)}
        ids = {b: k for k, b in enumerate(self.nodes)}
        lines = ["digraph crystal {"]
        for b, node in self.nodes.items():
            label = f"{ids[b]}\\nwt={node.wt.render(self.datum)}"
            lines.append(f'  n{ids[b]} [label="{label}"];')
        for b in self.nodes:
            for i in self.datum.indices:
                t = self.f[b].get(i)
                if t is not None and t is not FRONTIER and t in ids:
                    lines.append(f'  n{ids[b]} -> n{ids[t]} [label="{i}", color={color[i]}];')
        lines.append("}")
        return "\n".join(lines)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# ===========================================================================
# axioms


def axiom_check(G: CrystalGraph):
    """Check the abstract-crystal axioms on every node and arrow."""
    from .klr import Report

    rep = Report()
    d = G.datum
    for b, node in G.nodes.items():
        for i in d.indices:
            eps, phi = node.eps[i], node.phi[i]
            h = G.pair(b, i)
            if phi is not None:
                want = eps + h
                rep.add("axiom1", f"{b},{i}", ext_str(want), ext_str(phi), phi == want)
            fb, eb = G.ft(b, i), G.et(b, i)
            if phi == NEG_INF:
                ok = fb is None and eb is None
                rep.add("axiom4", f"{b},{i}", "0", f"{fb},{eb}", ok)
            for kind, tgt in (("f", fb), ("e", eb)):
                if tgt is None or tgt is FRONTIER:
                    continue
                if tgt not in G.nodes:
                    rep.add("closure", f"{b},{i}", "node", tgt, False)
                    continue
                tn = G.nodes[tgt]
                want_wt = node.wt.minus_alpha(i) if kind == "f" else None
                if kind == "f":
                    ok = tn.wt.key(d) == want_wt.key(d)
                else:
                    ok = tn.wt.minus_alpha(i).key(d) == node.wt.key(d)
                rep.add("axiom2", f"{kind}~_{i} {b}", "wt shift", ok, ok)
                back = G.et(tgt, i) if kind == "f" else G.ft(tgt, i)
                if back is not FRONTIER:
                    rep.add("axiom3", f"{kind}~_{i} {b}", b, back, back == b)
                real = d.is_real(i)
                if kind == "e":
                    we = eps - 1 if real else eps
                    wp = None if phi is None else (phi + 1 if real else phi + d.a(i, i))
                    ok = tn.eps[i] == we and _agree(tn.phi[i], wp)
                    rep.add("axiom5", f"e~_{i} {b}", f"{ext_str(we)},{ext_str(wp)}", f"{ext_str(tn.eps[i])},{ext_str(tn.phi[i])}", ok)
                else:
                    we = eps + 1 if real else eps
                    wp = None if phi is None else (phi - 1 if real else phi - d.a(i, i))
                    ok = tn.eps[i] == we and _agree(tn.phi[i], wp)
                    rep.add("axiom6", f"f~_{i} {b}", f"{ext_str(we)},{ext_str(wp)}", f"{ext_str(tn.eps[i])},{ext_str(tn.phi[i])}", ok)
    return rep


# ===========================================================================
# constructions


def elementary(datum: BorcherdsCartanDatum, kind: str, lam: Mapping[str, int] | None = None) -> CrystalGraph:
    """``T_lambda`` (``kind="T"``) or ``C`` (``kind="C"``)."""
    G = CrystalGraph(datum)
    if kind == "T":
        lam = WeightVector(lam or {})
        node = CrystalNode("t", Wt(lam), {i: NEG_INF for i in datum.indices}, {i: NEG_INF for i in datum.indices})
    elif kind == "C":
        node = CrystalNode("c", Wt(), {i: 0 for i in datum.indices}, {i: 0 for i in datum.indices})
    else:
        raise CrystalError(f"unknown elementary crystal {kind!r}")
    G.add(node)
    for i in datum.indices:
        G.f[node.id][i] = None
        G.e[node.id][i] = None
    G.root = node.id
    return G


def _lift(x, other, left: bool):
    if x is None or x is FRONTIER:
        return x
    return (x, other) if left else (other, x)


def tensor(B1: CrystalGraph, B2: CrystalGraph) -> CrystalGraph:
    """``B1 (x) B2`` under the Borcherds tensor rule."""
    d = B1.datum
    G = CrystalGraph(d)
    for b1, n1 in B1.nodes.items():
        for b2, n2 in B2.nodes.items():
            eps, phi = {}, {}
            for i in d.indices:
                h1, h2 = n1.wt.pair(d, i), n2.wt.pair(d, i)
                eps[i] = max(n1.eps[i], n2.eps[i] - h1)
                p1, p2 = n1.phi[i], n2.phi[i]
                phi[i] = None if p1 is None or p2 is None else max(p1 + h2, p2)
            G.add(CrystalNode((b1, b2), n1.wt + n2.wt, eps, phi, payload=(b1, b2)))
    for b1, n1 in B1.nodes.items():
        for b2, n2 in B2.nodes.items():
            key = (b1, b2)
            for i in d.indices:
                p1, e2 = n1.phi[i], n2.eps[i]
                if p1 is None:
                    # phi cut off by the depth bound: the branch is undecided
                    G.f[key][i] = G.e[key][i] = FRONTIER
                    continue
                if p1 > e2:
                    G.f[key][i] = _lift(B1.ft(b1, i), b2, True)
                else:
                    G.f[key][i] = _lift(B2.ft(b2, i), b1, False)
                if d.is_real(i):
                    if p1 >= e2:
                        G.e[key][i] = _lift(B1.et(b1, i), b2, True)
                    else:
                        G.e[key][i] = _lift(B2.et(b2, i), b1, False)
                else:
                    if p1 > e2 - d.a(i, i):
                        G.e[key][i] = _lift(B1.et(b1, i), b2, True)
                    elif p1 > e2:
                        G.e[key][i] = None
                    else:
                        G.e[key][i] = _lift(B2.et(b2, i), b1, False)
    if B1.root is not None and B2.root is not None:
        G.root = (B1.root, B2.root)
    return G


def connected_component(G: CrystalGraph, start, depth: int | None = None) -> CrystalGraph:
    """f~-closure of ``start`` up to ``depth`` steps, then an e~-closure check."""
    if start not in G.nodes:
        raise CrystalError(f"start node {start} not in graph")
    dist = {start: 0}
    queue = deque([start])
    while queue:
        b = queue.popleft()
        if depth is not None and dist[b] >= depth:
            continue
        for i in G.datum.indices:
            t = G.ft(b, i)
            if t is None or t is FRONTIER or t in dist:
                continue
            dist[t] = dist[b] + 1
            queue.append(t)
    H = CrystalGraph(G.datum, root=start, depth=depth)
    for b in dist:
        H.add(G.nodes[b])
    for b in dist:
        for i in G.datum.indices:
            t = G.ft(b, i)
            if t is not None and t is not FRONTIER and t not in dist:
                t = FRONTIER
            H.f[b][i] = t
            s = G.et(b, i)
            if s is not None and s is not FRONTIER and s not in dist:
                raise EscapeDetected(f"e~_{i} leaves the component at {b}")
            H.e[b][i] = s
    return H


def binfty_graph(lattice) -> CrystalGraph:
    """B(infinity) from a ``qalgebra.LatticeData``."""
    d = lattice.datum
    G = CrystalGraph(d, depth=lattice.depth)
    for node in lattice.nodes:
        eps, phi = lattice.decorations(node)
        G.add(CrystalNode(node, Wt(WeightVector(), node[0]), eps, phi, payload=node))
    for node in lattice.nodes:
        for i in d.indices:
            if node[0].height >= lattice.depth:
                G.f[node][i] = FRONTIER
            else:
                G.f[node][i] = lattice.f[node][i]
            G.e[node][i] = lattice.e[node][i]
    G.root = (RootVector(), 0)
    return G


def perfect_graph(datum: BorcherdsCartanDatum, result, depth: int) -> CrystalGraph:
    """Crystal of a perfect basis from a ``qalgebra.PerfectResult``.

    ``e~_i`` is the perfect-basis map, ``eps_i = l_i`` for real ``i`` and 0
    for imaginary ``i``; ``f~_i`` is the inverse of ``e~_i``.
    """
    G = CrystalGraph(datum, depth=depth)
    for node in result.nodes:
        eps, phi = {}, {}
        wt = Wt(WeightVector(), node[0])
        for i in datum.indices:
            eps[i] = result.ell[(node, i)] if datum.is_real(i) else 0
            phi[i] = eps[i] + wt.pair(datum, i)
        G.add(CrystalNode(node, wt, eps, phi, payload=node))
    for node in result.nodes:
        for i in datum.indices:
            G.e[node][i] = result.e_map.get((node, i))
            G.f[node][i] = FRONTIER if node[0].height >= depth else None
    for (node, i), tgt in result.e_map.items():
        G.f[tgt][i] = node
    G.root = (RootVector(), 0)
    return G


def blambda(binf: CrystalGraph, lam: Mapping[str, int], depth: int | None = None) -> CrystalGraph:
    """Component of ``1 (x) t_lambda (x) c`` in ``B(inf) (x) T_lambda (x) C``.

    Node decorations are recomputed from the component itself: real
    ``eps``/``phi`` as string lengths, imaginary ``eps = 0`` and
    ``phi = <h_i, wt>``; ``None`` marks a real ``phi`` cut off by the depth.
    """
    d = binf.datum
    lam = WeightVector(lam)
    for i in d.indices:
        if lam.get(i, 0) < 0:
            raise NotDominant(f"<h_{i}, lambda> = {lam.get(i, 0)} < 0")
    big = tensor(tensor(binf, elementary(d, "T", lam)), elementary(d, "C"))
    start = ((binf.root, "t"), "c")
    comp = connected_component(big, start, depth if depth is not None else binf.depth)
    H = CrystalGraph(d, root=start, depth=comp.depth)
    for b, node in comp.nodes.items():
        eps, phi = {}, {}
        for i in d.indices:
            if d.is_real(i):
                k, cur = 0, b
                while comp.et(cur, i) is not None:
                    cur = comp.et(cur, i)
                    k += 1
                eps[i] = k
                k, cur = 0, b
                while True:
                    nxt = comp.ft(cur, i)
                    if nxt is None:
                        break
                    if nxt is FRONTIER:
                        k = None
                        break
                    cur = nxt
                    k += 1
                phi[i] = k
            else:
                eps[i] = 0
                phi[i] = node.wt.pair(d, i)
        H.add(CrystalNode(b, node.wt, eps, phi, payload=b))
        H.f[b] = dict(comp.f[b])
        H.e[b] = dict(comp.e[b])
    return H


def morphism_check(
    phi_map: Callable | Mapping,
    B1: CrystalGraph,
    B2: CrystalGraph,
    strict: bool = False,
):
    """Check a crystal morphism ``B1 -> B2 (+) {0}`` (``None`` means 0).

    Decorations equal to ``None`` (unknown at the depth frontier) are skipped.
    """
    from .klr import Report

    rep = Report()
    d = B1.datum
    fn = phi_map if callable(phi_map) else (lambda b: phi_map.get(b))
    for b, node in B1.nodes.items():
        img = fn(b)
        if img is None:
            continue
        if img not in B2.nodes:
            rep.add("image", b, "node of target", img, False)
            continue
        tn = B2.nodes[img]
        ok = tn.wt.key(d) == node.wt.key(d)
        rep.add("wt", b, node.wt.render(d), tn.wt.render(d), ok)
        for i in d.indices:
            for name, a, c in (("eps", node.eps[i], tn.eps[i]), ("phi", node.phi[i], tn.phi[i])):
                if a is None or c is None:
                    continue
                rep.add(name, f"{b},{i}", ext_str(a), ext_str(c), a == c)
        for i in d.indices:
            checks = [("f", B1.ft(b, i), B2.ft(img, i))]
            if strict:
                checks.append(("e", B1.et(b, i), B2.et(img, i)))
            for kind, src, tgt in checks:
                if src is FRONTIER or tgt is FRONTIER:
                    continue
                if kind == "f" and src is None and not strict:
                    continue
                want = None if src is None else fn(src)
                rep.add(f"{kind}~-commute", f"{b},{i}", want, tgt, want == tgt)
    return rep


def blambda_embedding_check(H: CrystalGraph, binf: CrystalGraph, lam: Mapping[str, int]):
    """``Psi_lambda``: recomputed B(lambda) decorations versus the tensor rule."""
    d = H.datum
    big = tensor(tensor(binf, elementary(d, "T", lam)), elementary(d, "C"))
    sub = CrystalGraph(d, root=H.root)
    for b in H.nodes:
        sub.add(big.nodes[b])
        sub.f[b] = {i: (t if (t is None or t is FRONTIER or t in H.nodes) else FRONTIER) for i, t in big.f[b].items()}
        sub.e[b] = dict(big.e[b])
    rep = morphism_check(lambda b: b, H, sub, strict=True)
    from .klr import Report

    # imaginary phi = <h, wt> must agree with eps + <h, wt>
    for b, node in H.nodes.items():
        for i in d.indices:
            if not d.is_real(i):
                want = node.eps[i] + node.wt.pair(d, i)
                rep.add("imaginary-phi-consistency", f"{b},{i}", want, node.phi[i], want == node.phi[i])
    return rep


def isomorphic(G1: CrystalGraph, G2: CrystalGraph) -> tuple[bool, dict | str]:
    """Rooted isomorphism following f~ arrows, comparing wt/eps/phi."""
    d = G1.datum
    if len(G1) != len(G2):
        return False, f"sizes {len(G1)} != {len(G2)}"
    m = {G1.root: G2.root}
    queue = deque([G1.root])

    def deco(G, b):
        n = G.nodes[b]
        return (n.wt.key(d), tuple(n.eps[i] for i in d.indices), tuple(n.phi[i] for i in d.indices))

    while queue:
        b = queue.popleft()
        c = m[b]
        if deco(G1, b) != deco(G2, c):
            return False, f"decorations differ at {b} / {c}"
        for i in d.indices:
            for arrows in ("f", "e"):
                t1 = getattr(G1, arrows)[b].get(i)
                t2 = getattr(G2, arrows)[c].get(i)
                if (t1 is None) != (t2 is None) or (t1 is FRONTIER) != (t2 is FRONTIER):
                    return False, f"{arrows}~_{i} differs at {b} / {c}"
                if t1 is None or t1 is FRONTIER:
                    continue
                if t1 in m:
                    if m[t1] != t2:
                        return False, f"conflict at {t1}"
                else:
                    m[t1] = t2
                    queue.append(t1)
    if len(m) != len(G1):
        return False, "graph not reachable from the root"
    if len(set(m.values())) != len(m):
        return False, "map not injective"
    return True, m
