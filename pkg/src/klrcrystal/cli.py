"""Command line entry point ``klr``.

Exit codes: 0 success, 1 failed verification, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .cartan import CartanError, RootVector, WeightVector, load_datum
from .qarith import QLaurent

__all__ = ["main", "parse_expr", "evaluate", "ExprSyntaxError", "ExprRangeError"]


class ExprSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int, text: str):
        super().__init__(f"{msg} at position {pos}: {text[:pos]}>>{text[pos:]}")
        self.pos = pos


class ExprRangeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# expression grammar
#   expr   := term (('+'|'-') term)*
#   term   := factor ('*' factor)*
#   factor := '-' factor | atom ('^' int)?
#   atom   := 'e(' seq ')' | 'x(' int ')' | 'tau(' int ')' | 'q' | rational | '(' expr ')'

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<name>tau|x|e|q)|(?P<op>[-+*^(),])|(?P<idx>[A-Za-z_]\w*))")


@dataclass(frozen=True)
class Node:
    kind: str  # add sub mul pow neg e x tau q num
    args: tuple = ()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                pos += len(text[pos:]) - len(text[pos:].lstrip())
                raise ExprSyntaxError("unexpected character", pos, text)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.k = 0

    def peek(self):
        return self.toks[self.k] if self.k < len(self.toks) else ("end", "", len(self.text))

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.peek()
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value or kind
            raise ExprSyntaxError(f"expected {want!r}", tok[2], self.text)
        self.k += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError("trailing input", tok[2], self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Node("add" if op == "+" else "sub", (node, self.term()))
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] == "*":
            self.take("*")
            node = Node("mul", (node, self.factor()))
        return node

    def factor(self) -> Node:
        if self.peek()[1] == "-":
            self.take("-")
            return Node("neg", (self.factor(),))
        node = self.atom()
        if self.peek()[1] == "^":
            self.take("^")
            neg = False
            if self.peek()[1] == "-":
                self.take("-")
                neg = True
            tok = self.take(kind="num")
            if "/" in tok[1]:
                raise ExprSyntaxError("exponent must be an integer", tok[2], self.text)
            n = -int(tok[1]) if neg else int(tok[1])
            if n < 0 and node.kind != "q":
                raise ExprSyntaxError("negative exponent only allowed on q", tok[2], self.text)
            node = Node("pow", (node, n))
        return node

    def atom(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Node("num", (Fraction(val),))
        if val == "q":
            self.take()
            return Node("q")
        if val == "(":
            self.take("(")
            node = self.expr()
            self.take(")")
            return node
        if val in ("x", "tau"):
            self.take()
            self.take("(")
            n = int(self.take(kind="num")[1])
            self.take(")")
            return Node(val, (n,))
        if val == "e":
            self.take()
            self.take("(")
            seq = [self._index()]
            while self.peek()[1] == ",":
                self.take(",")
                seq.append(self._index())
            self.take(")")
            return Node("e", tuple(seq))
        raise ExprSyntaxError("expected an atom", pos, self.text)

    def _index(self) -> str:
        kind, val, pos = self.peek()
        if kind in ("num", "idx", "name"):
            self.take()
            return val
        raise ExprSyntaxError("expected an index", pos, self.text)


def parse_expr(text: str) -> Node:
    return _Parser(text).parse()


def evaluate(node: Node, alg):
    """Evaluate to a ``KLRElement`` of ``alg`` (scalars become multiples of 1)."""
    val = _eval(node, alg)
    if isinstance(val, QLaurent):
        return alg.one().scale(val)
    return val


def _eval(node: Node, alg):
    k = node.kind
    if k == "num":
        return QLaurent({0: node.args[0]})
    if k == "q":
        return QLaurent({1: 1})
    if k == "e":
        seq = tuple(node.args)
        if len(seq) != alg.d or RootVector({i: seq.count(i) for i in set(seq)}) != alg.alpha:
            raise ExprRangeError(f"e({','.join(seq)}) is not a sequence of weight {alg.alpha.render()}")
        return alg.e(seq)
    if k == "x":
        n = node.args[0]
        if not 1 <= n <= alg.d:
            raise ExprRangeError(f"x({n}) out of range 1..{alg.d}")
        return alg.gen_x(n)
    if k == "tau":
        n = node.args[0]
        if not 1 <= n < alg.d:
            raise ExprRangeError(f"tau({n}) out of range 1..{alg.d - 1}")
        return alg.gen_tau(n)
    if k == "neg":
        v = _eval(node.args[0], alg)
        return -v
    if k == "pow":
        base, n = node.args
        v = _eval(base, alg)
        if isinstance(v, QLaurent):
            return v**n
        out = alg.one()
        for _ in range(n):
            out = alg.multiply(out, v)
        return out
    a, b = _eval(node.args[0], alg), _eval(node.args[1], alg)
    if k == "mul":
        if isinstance(a, QLaurent) and isinstance(b, QLaurent):
            return a * b
        if isinstance(a, QLaurent):
            return b.scale(a)
        if isinstance(b, QLaurent):
            return a.scale(b)
        return alg.multiply(a, b)
    if isinstance(a, QLaurent) and isinstance(b, QLaurent):
        return a + b if k == "add" else a - b
    if isinstance(a, QLaurent):
        a = alg.one().scale(a)
    if isinstance(b, QLaurent):
        b = alg.one().scale(b)
    return a + b if k == "add" else a - b


# ---------------------------------------------------------------------------
# commands


class InputError(Exception):
    pass


def _alpha(text: str) -> RootVector:
    try:
        return RootVector.parse(text)
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad root vector {text!r}: {exc}") from exc


def _weight(text: str) -> WeightVector:
    try:
        return WeightVector.parse(text)
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad weight {text!r}: {exc}") from exc


def _seq(text: str) -> tuple:
    """``1,2,1`` or ``1^(2),2`` into blocks ``(i, d)``."""
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        m = re.fullmatch(r"(\w+)(?:\^\((\d+)\))?", chunk)
        if not m:
            raise InputError(f"bad sequence entry {chunk!r}")
        out.append((m.group(1), int(m.group(2) or 1)))
    return tuple(out)


def _check_indices(datum, blocks) -> None:
    for i, _ in blocks:
        if i not in datum.indices:
            raise InputError(f"unknown index {i!r}")


def _emit_report(rep, args) -> int:
    if args.json:
        print(json.dumps(rep.records, indent=2))
    else:
        for name, (ok, bad) in sorted(rep.summary().items()):
            print(f"{name}: {ok} passed, {bad} failed")
        for r in rep.failures()[:20]:
            print(f"FAIL {r['check']} [{r['instance']}]: expected {r['expected']}, got {r['got']}")
        print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else 1


def cmd_validate(args, datum) -> int:
    bad = datum.validate()
    if args.json:
        print(json.dumps({"valid": not bad, "violations": [str(v) for v in bad]}))
    else:
        print("valid" if not bad else "\n".join(map(str, bad)))
    return 0 if not bad else 1


def _algebra(args, datum):
    from .klr import KLRAlgebra, default_params

    params = default_params(datum)
    bad = params.violations()
    if bad:
        raise InputError("; ".join(bad))
    alpha = _alpha(args.alpha)
    _check_indices(datum, [(i, 1) for i in alpha])
    if alpha.height > args.height:
        raise InputError(f"height {alpha.height} exceeds --height {args.height}")
    return KLRAlgebra(datum, alpha, params)


def cmd_relcheck(args, datum) -> int:
    return _emit_report(_algebra(args, datum).verify_relations(), args)


def _expr(args, alg):
    try:
        return evaluate(parse_expr(args.expr), alg)
    except (ExprSyntaxError, ExprRangeError) as exc:
        raise InputError(str(exc)) from exc


def cmd_nf(args, datum) -> int:
    alg = _algebra(args, datum)
    el = _expr(args, alg)
    if args.json:
        print(json.dumps({"alpha": alg.alpha.render(), "terms": el.to_json(), "text": el.render()}, indent=2))
    else:
        print(el.render())
    return 0


def cmd_deg(args, datum) -> int:
    from .klr import NotHomogeneous

    alg = _algebra(args, datum)
    el = _expr(args, alg)
    try:
        deg = alg.degree(el)
    except NotHomogeneous as exc:
        print(f"not homogeneous: {exc}")
        return 1
    print(json.dumps({"degree": deg}) if args.json else deg)
    return 0


def cmd_qdim(args, datum) -> int:
    from .cartan import expand_divided
    from .klr import qdim_block

    alpha = _alpha(args.alpha)
    seqs = datum.enumerate_seq(alpha)
    if args.i or args.j:
        i = expand_divided(_seq(args.i or args.j))
        j = expand_divided(_seq(args.j or args.i))
        pairs = [(j, i)]
    else:
        pairs = [(j, i) for j in seqs for i in seqs]
    out = []
    for j, i in pairs:
        val = qdim_block(datum, j, i)
        out.append({"j": ",".join(j), "i": ",".join(i), "qdim": str(val), "series": {str(k): str(v) for k, v in val.series(args.order).items()}})
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for r in out:
            print(f"1_({r['j']}) R 1_({r['i']}): {r['qdim']}")
    return 0


def cmd_pair(args, datum) -> int:
    from .kzero import K0, is_multiplicity_one
    from .qalgebra import UqMinus

    u, v = _seq(args.u), _seq(args.v)
    _check_indices(datum, u + v)
    U = UqMinus(datum, height_cap=args.height)
    K = K0(datum)
    x, y = U.monomial(u), U.monomial(v)
    if x.alpha != y.alpha:
        raise InputError("the two monomials have different weights")
    L = U.pairing_L(x, y)
    px, py = K.phi(u), K.phi(v)
    k0 = K.pair(px, py, args.order)
    if all(is_multiplicity_one(s) for s in list(px.terms) + list(py.terms)):
        ok = k0 == L
        k0_txt = str(k0)
    else:
        ok = k0 == L.series(args.order)
        k0_txt = f"{QLaurent(k0)} + O(q^{args.order})"
    if args.json:
        print(json.dumps({"pairing_L": str(L), "k0_pair": k0_txt, "agree": ok}))
    else:
        print(f"(u, v)_L = {L}")
        print(f"K0 pairing = {k0_txt}")
        print("agree" if ok else "DISAGREE")
    return 0 if ok else 1


def cmd_serre(args, datum) -> int:
    from .klr import KLRFamily, Report, serre_verify
    from .kzero import K0

    if args.i == args.j:
        raise InputError("Serre check needs i != j")
    _check_indices(datum, [(args.i, 1), (args.j, 1)])
    if not datum.is_real(args.i):
        raise InputError(f"{args.i} is not a real index")
    rep = Report()
    rep.extend(serre_verify(KLRFamily(datum), args.i, args.j))
    rep.extend(K0(datum).serre_check(args.i, args.j))
    return _emit_report(rep, args)


def cmd_isometry(args, datum) -> int:
    from .klr import Report
    from .kzero import K0
    from .qalgebra import UqMinus

    U = UqMinus(datum, height_cap=max(args.height, 1))
    K = K0(datum)
    rep = Report()
    weights = [_alpha(args.alpha)] if args.alpha else datum.roots_up_to(args.height)
    for alpha in weights:
        rep.extend(K.isometry_check(U, alpha, args.order, divided=args.divided))
    return _emit_report(rep, args)


def _lattice(args, datum):
    from .qalgebra import LatticeData, UqMinus

    U = UqMinus(datum, height_cap=max(args.depth, args.height))
    return U, LatticeData(U, args.depth)


def _emit_graph(G, args, extra_ok: bool = True, report=None) -> int:
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(G.to_dot() + "\n")
    if args.json:
        data = G.to_json()
        if report is not None:
            data["report"] = report.records
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(f"{len(G)} nodes (depth {G.depth})")
        for b, node in G.nodes.items():
            arrows = ", ".join(f"f{i}->{t}" for i, t in G.f[b].items() if t is not None)
            print(f"  {b}: wt={node.wt.render(G.datum)} {arrows}")
        if report is not None:
            for name, (ok, bad) in sorted(report.summary().items()):
                print(f"{name}: {ok} passed, {bad} failed")
    return 0 if extra_ok else 1


def cmd_binfty(args, datum) -> int:
    from .crystal import axiom_check, binfty_graph

    _, L = _lattice(args, datum)
    G = binfty_graph(L)
    rep = axiom_check(G)
    return _emit_graph(G, args, rep.passed, rep)


def cmd_blambda(args, datum) -> int:
    from .crystal import NotDominant, axiom_check, binfty_graph, blambda, blambda_embedding_check

    lam = _weight(args.lam)
    _check_indices(datum, [(i, 1) for i in lam])
    _, L = _lattice(args, datum)
    binf = binfty_graph(L)
    try:
        H = blambda(binf, lam, args.depth)
    except NotDominant as exc:
        raise InputError(str(exc)) from exc
    rep = axiom_check(H)
    rep.extend(blambda_embedding_check(H, binf, lam))
    return _emit_graph(H, args, rep.passed, rep)


def cmd_globalbasis(args, datum) -> int:
    _, L = _lattice(args, datum)
    alpha = _alpha(args.alpha)
    if alpha not in L.weights:
        raise InputError(f"{alpha.render()} is not reached at depth {args.depth}")
    lower, upper = L.global_basis(alpha)
    if args.json:
        print(json.dumps({"lower": [v.to_json() for v in lower], "upper": [v.to_json() for v in upper]}, indent=2))
    else:
        print("lower global basis:")
        for v in lower:
            print("  " + v.render())
        print("upper global basis:")
        for v in upper:
            print("  " + v.render())
    return 0


def cmd_perfectcheck(args, datum) -> int:
    from .crystal import binfty_graph, isomorphic, perfect_graph
    from .klr import Report
    from .qalgebra import perfect_check

    U, L = _lattice(args, datum)
    basis = {a: L.global_basis(a)[1] for a in L.weights}
    res = perfect_check(U, basis)
    rep = Report()
    rep.add("perfect-basis", f"depth {args.depth}", "no violations", "; ".join(res.violations) or "none", res.ok)
    if res.ok:
        iso, info = isomorphic(perfect_graph(datum, res, args.depth), binfty_graph(L))
        rep.add("isomorphic-to-lattice-crystal", f"depth {args.depth}", True, iso if iso else info, iso)
    return _emit_report(rep, args)


COMMANDS = {
    "validate": cmd_validate,
    "relcheck": cmd_relcheck,
    "nf": cmd_nf,
    "deg": cmd_deg,
    "qdim": cmd_qdim,
    "pair": cmd_pair,
    "serre": cmd_serre,
    "isometry": cmd_isometry,
    "binfty": cmd_binfty,
    "blambda": cmd_blambda,
    "globalbasis": cmd_globalbasis,
    "perfectcheck": cmd_perfectcheck,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="klr", description="KLR algebras, quantum Borcherds algebras and their crystals.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text, *, alpha=False, expr=False, depth=False, order=False, dot=False):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("datum", help="datum JSON file or preset name (D0, D1, Dim, D2, D3, D1s)")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--height", type=int, default=4, help="height cap (default 4)")
        if alpha:
            sp.add_argument("--alpha", required=alpha == "required", help="root vector, e.g. 1:2,2:1")
        if expr:
            sp.add_argument("--expr", required=True, help='element, e.g. "tau(1)*tau(1)*e(1,2)"')
        if depth:
            sp.add_argument("--depth", type=int, default=4, help="generation depth (default 4)")
        if order:
            sp.add_argument("--order", type=int, default=20, help="series order (default 20)")
        if dot:
            sp.add_argument("--dot", metavar="FILE", help="write the graph in DOT format")
        return sp

    add("validate", "check the datum")
    add("relcheck", "verify the defining relations on R(alpha)", alpha="required")
    add("nf", "normal form of an element", alpha="required", expr=True)
    add("deg", "degree of a homogeneous element", alpha="required", expr=True)
    sp = add("qdim", "graded dimensions of idempotent blocks", alpha="required", order=True)
    sp.add_argument("--i", help="source sequence")
    sp.add_argument("--j", help="target sequence")
    sp = add("pair", "compare ( , )_L with the K0 pairing", order=True)
    sp.add_argument("--u", required=True, help="monomial, e.g. 1^(2),2")
    sp.add_argument("--v", required=True, help="monomial")
    sp = add("serre", "Serre complex and K0 Serre relation")
    sp.add_argument("--i", required=True)
    sp.add_argument("--j", required=True)
    sp = add("isometry", "isometry of Phi on word pairs", alpha=True, order=True)
    sp.add_argument("--divided", action="store_true", help="also divided-power monomials (series)")
    add("binfty", "lattice crystal B(infinity)", depth=True, dot=True)
    sp = add("blambda", "B(lambda) inside B(infinity) x T_lambda x C", depth=True, dot=True)
    sp.add_argument("--lambda", dest="lam", required=True, help="dominant weight, e.g. 1:1,2:0")
    add("globalbasis", "lower and upper global bases", alpha="required", depth=True)
    add("perfectcheck", "perfect-basis check of the upper global basis", depth=True)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        datum = load_datum(args.datum, check=args.command != "validate")
        return COMMANDS[args.command](args, datum)
    except (InputError, CartanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
