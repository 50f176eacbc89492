"""Grothendieck-group shadow of the KLR algebras.

Projective classes are kept as symbols: a symbol is a tuple of blocks
``(i, d)`` standing for ``P = R(alpha) e`` with ``e`` the product of
divided idempotents ``e_{i,d}`` (degree 0).  The grading convention is
``q[M] = [M<-1>]``, so a summand ``M<-k>`` contributes ``q^k``.

Everything semantic goes through the pairing ``([P], [Q]) = qdim(e_P R e_Q)``.
For multiplicity-one symbols this is the closed form ``klr.qdim_block``;
when divided powers occur it is computed degreewise as the trace of the
projection ``r -> e_b r e_a`` on each graded piece of ``1_j R 1_i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .cartan import BorcherdsCartanDatum, CartanError, RootVector, expand_divided, weight_of
from .klr import (
    KLRFamily,
    Report,
    act_on_seq,
    all_perms,
    block_idempotent,
    qdim_block,
    tau_degree,
)
from .qarith import QLaurent, QRat, matrix_rank

__all__ = [
    "K0Error",
    "DividedPowerUnsupported",
    "K0Elem",
    "K0",
    "SHIFT_CONVENTIONS",
    "DEFAULT_CONVENTION",
]

Block = tuple[str, int]
Symbol = tuple[Block, ...]

# exponent signs (sigma_a, sigma_b): the pair ([P_a],[P_b]) is multiplied by
# q^(sigma_a*shift(a) + sigma_b*shift(b)), shift being the divided-power shift
SHIFT_CONVENTIONS: dict[str, tuple[int, int]] = {
    "none": (0, 0),
    "bilinear": (-1, -1),
    "bilinear+": (1, 1),
    "hom": (1, -1),
    "hom-": (-1, 1),
}

# the only convention found to make Phi an isometry on divided powers
DEFAULT_CONVENTION = "hom"


class K0Error(ValueError):
    pass


class DividedPowerUnsupported(K0Error):
    pass


def normalize(seq: Iterable) -> Symbol:
    """Blocks from a sequence of indices or ``(i, d)`` pairs; zero blocks dropped."""
    out: list[Block] = []
    for entry in seq:
        i, d = (entry if isinstance(entry, tuple) else (entry, 1))
        if d > 0:
            out.append((str(i), int(d)))
    return tuple(out)


def is_multiplicity_one(sym: Symbol) -> bool:
    return all(d == 1 for _, d in sym)


@dataclass
class K0Elem:
    """``sum c_s [P_s]`` with Laurent coefficients, homogeneous in ``alpha``."""

    alpha: RootVector
    terms: dict = field(default_factory=dict)  # Symbol -> QLaurent

    def __post_init__(self):
        self.alpha = RootVector(self.alpha)
        clean = {}
        for s, c in self.terms.items():
            s = normalize(s)
            if weight_of(s) != self.alpha:
                raise K0Error(f"symbol {s} is not of weight {self.alpha.render()}")
            if not isinstance(c, QLaurent):
                c = QLaurent({0: c}) if isinstance(c, (int, Fraction)) else c.to_laurent()
            c = clean.get(s, QLaurent()) + c
            if c:
                clean[s] = c
            else:
                clean.pop(s, None)
        self.terms = clean

    @classmethod
    def symbol(cls, seq: Iterable, coeff=1) -> "K0Elem":
        s = normalize(seq)
        return cls(weight_of(s), {s: coeff})

    @classmethod
    def unit(cls) -> "K0Elem":
        return cls(RootVector(), {(): 1})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, K0Elem):
            return NotImplemented
        if not self.terms and not other.terms:
            return True
        return self.alpha == other.alpha and self.terms == other.terms

    def __add__(self, other: "K0Elem") -> "K0Elem":
        if not other.terms:
            return self
        if not self.terms:
            return other
        if self.alpha != other.alpha:
            raise K0Error("adding elements of different weight")
        t = dict(self.terms)
        for s, c in other.terms.items():
            t[s] = t.get(s, QLaurent()) + c
        return K0Elem(self.alpha, t)

    def __neg__(self) -> "K0Elem":
        return K0Elem(self.alpha, {s: -c for s, c in self.terms.items()})

    def __sub__(self, other: "K0Elem") -> "K0Elem":
        return self + (-other)

    def scale(self, c) -> "K0Elem":
        if not isinstance(c, QLaurent):
            c = QLaurent({0: c}) if isinstance(c, (int, Fraction)) else c.to_laurent()
        return K0Elem(self.alpha, {s: v * c for s, v in self.terms.items()})

    def bar(self) -> "K0Elem":
        return K0Elem(self.alpha, {s: c.bar() for s, c in self.terms.items()})

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for s, c in sorted(self.terms.items()):
            label = ",".join(i if d == 1 else f"{i}^({d})" for i, d in s)
            parts.append(f"({c})[P_({label})]")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha.render(),
            "terms": [
                {"seq": [[i, d] for i, d in s], "coeff": {str(k): str(v) for k, v in c.items()}}
                for s, c in sorted(self.terms.items())
            ],
        }


# tensor elements: dict (Symbol, Symbol) -> QLaurent
Tensor = dict


def _tadd(acc: Tensor, key, c: QLaurent) -> None:
    v = acc.get(key, QLaurent()) + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


class K0:
    """Symbol calculus for one datum."""

    def __init__(self, datum: BorcherdsCartanDatum, fam: KLRFamily | None = None):
        self.datum = datum
        self.fam = fam or KLRFamily(datum)
        self._idem: dict[Symbol, object] = {}
        self._series: dict[tuple, dict[int, Fraction]] = {}

    # -- shifts and the map Phi -----------------------------------------
    def shift(self, sym: Symbol) -> int:
        """``sum d(d-1)(alpha_i|alpha_i)/4`` over real blocks."""
        tot = 0
        for i, d in sym:
            if self.datum.is_real(i):
                tot += d * (d - 1) * self.datum.sym_form(i, i) // 4
        return tot

    def phi(self, monomial: Sequence[Block]) -> K0Elem:
        """``f_{i_1}^{(d_1)} ... -> [P_(i_1^(d_1) ...)]``; imaginary blocks become plain runs."""
        blocks: list[Block] = []
        for i, d in normalize(monomial):
            if self.datum.is_real(i):
                blocks.append((i, d))
            else:
                blocks.extend([(i, 1)] * d)
        return K0Elem.symbol(blocks)

    # -- algebra structure ------------------------------------------------
    def mult(self, a: K0Elem, b: K0Elem) -> K0Elem:
        if not a.terms or not b.terms:
            return K0Elem(a.alpha + b.alpha)
        out: dict = {}
        for s, c in a.terms.items():
            for t, e in b.terms.items():
                out[s + t] = out.get(s + t, QLaurent()) + c * e
        return K0Elem(a.alpha + b.alpha, out)

    def shuffle_degree(self, k: Sequence[str], S: Sequence[int]) -> int:
        """``deg(tau_w 1_{i*j})`` for the shuffle putting ``i = k|_S`` and ``j`` back into ``k``."""
        Sc = [p for p in range(len(k)) if p not in S]
        i = [k[p] for p in S]
        j = [k[p] for p in Sc]
        w = tuple(S) + tuple(Sc)
        assert act_on_seq(w, tuple(i + j)) == tuple(k)
        return tau_degree(self.datum, w, tuple(i + j))

    def comult(self, a: K0Elem) -> Tensor:
        """``res``: sum over two-block splittings with coefficient ``q^deg``."""
        out: Tensor = {}
        for s, c in a.terms.items():
            if not is_multiplicity_one(s):
                raise DividedPowerUnsupported("res is implemented for multiplicity-one symbols")
            k = [i for i, _ in s]
            n = len(k)
            for r in range(n + 1):
                for S in itertools.combinations(range(n), r):
                    deg = self.shuffle_degree(k, S)
                    left = normalize(k[p] for p in S)
                    right = normalize(k[p] for p in range(n) if p not in S)
                    _tadd(out, (left, right), c * QLaurent({deg: 1}))
        return out

    def tensor_mult(self, x: Tensor, y: Tensor) -> Tensor:
        """``(a (x) b)(c (x) d) = q^{-(|b| | |c|)} ac (x) bd``."""
        out: Tensor = {}
        for (a, b), c1 in x.items():
            for (c, d), c2 in y.items():
                tw = -self._form(weight_of(b), weight_of(c))
                _tadd(out, (a + c, b + d), c1 * c2 * QLaurent({tw: 1}))
        return out

    def _form(self, beta: Mapping[str, int], gamma: Mapping[str, int]) -> int:
        return sum(m * n * self.datum.sym_form(i, j) for i, m in beta.items() for j, n in gamma.items())

    def counit(self, a: K0Elem) -> QLaurent:
        return a.terms.get((), QLaurent())

    # -- pairing ------------------------------------------------------------
    def idempotent(self, sym: Symbol):
        e = self._idem.get(sym)
        if e is None:
            e = block_idempotent(self.fam, list(sym))
            self._idem[sym] = e
        return e

    def symbol_series(self, a: Symbol, b: Symbol, order: int) -> dict[int, Fraction]:
        """Graded dimension of ``e_a R e_b`` up to (excluding) ``q^order``."""
        key = (a, b, order)
        hit = self._series.get(key)
        if hit is not None:
            return hit
        ia, ib = expand_divided(a), expand_divided(b)
        if weight_of(ia) != weight_of(ib):
            raise CartanError("pairing of symbols of different weight")
        if is_multiplicity_one(a) and is_multiplicity_one(b):
            out = qdim_block(self.datum, ia, ib).series(order)
        else:
            alg = self.fam(weight_of(ia))
            ea, eb = self.idempotent(a), self.idempotent(b)
            steps = [2 * self.datum.sym(x) for x in ib]
            out = {}
            for w in all_perms(len(ib)):
                if act_on_seq(w, ib) != ia:
                    continue
                base = tau_degree(self.datum, w, ib)
                for t in _exponents(steps, order - base):
                    deg = base + sum(s * e for s, e in zip(steps, t))
                    v = alg.basis_element(w, t, ib)
                    img = alg.multiply(alg.multiply(ea, v), eb)
                    c = img.terms.get((w, tuple(t), ib))
                    if c is not None:
                        val = c.coeffs.get(0, 0)
                        if val:
                            out[deg] = out.get(deg, Fraction(0)) + val
            out = {k: v for k, v in out.items() if v}
        self._series[key] = out
        return out

    def pair_symbols(self, a: Symbol, b: Symbol, order: int = 20, convention: str = DEFAULT_CONVENTION) -> QRat | dict:
        """Exact ``QRat`` for multiplicity-one symbols, otherwise a series dict."""
        sa, sb = SHIFT_CONVENTIONS[convention]
        shift = sa * self.shift(a) + sb * self.shift(b)
        if is_multiplicity_one(a) and is_multiplicity_one(b):
            return qdim_block(self.datum, expand_divided(a), expand_divided(b)) * QRat.qpow(shift)
        ser = self.symbol_series(a, b, order - shift)
        return {k + shift: v for k, v in ser.items() if k + shift < order}

    def pair(self, x: K0Elem, y: K0Elem, order: int = 20, convention: str = DEFAULT_CONVENTION):
        """Bilinear pairing; ``QRat`` when exact, else a series dict truncated at ``order``."""
        if x.terms and y.terms and x.alpha != y.alpha:
            # distinct weight blocks are orthogonal
            return QRat.zero()
        exact = all(is_multiplicity_one(s) for s in x.terms) and all(is_multiplicity_one(s) for s in y.terms)
        if exact:
            acc = QRat.zero()
            for s, c in x.terms.items():
                for t, e in y.terms.items():
                    acc = acc + (c * e).to_qrat() * self.pair_symbols(s, t)
            return acc
        acc: dict[int, Fraction] = {}
        for s, c in x.terms.items():
            for t, e in y.terms.items():
                coeff = c * e
                span = [k for k, _ in coeff.items()]
                ser = self.pair_symbols(s, t, order - min(span), convention)
                if isinstance(ser, QRat):
                    ser = ser.series(order - min(span))
                for k, v in ser.items():
                    for m, cv in coeff.items():
                        if k + m < order:
                            acc[k + m] = acc.get(k + m, Fraction(0)) + v * cv
        return {k: v for k, v in sorted(acc.items()) if v}

    def pair_tensor(self, x: Tensor, y: Tensor) -> QRat:
        acc = QRat.zero()
        for (a, b), c in x.items():
            for (a2, b2), e in y.items():
                if weight_of(expand_divided(a)) != weight_of(expand_divided(a2)):
                    continue
                acc = acc + (c * e).to_qrat() * self.pair_symbols(a, a2) * self.pair_symbols(b, b2)
        return acc

    # -- checks ---------------------------------------------------------
    def isometry_check(self, U, alpha: Mapping[str, int], order: int = 20, divided: bool = True) -> Report:
        """``(x, y)_L = (Phi x, Phi y)`` on words and, optionally, divided monomials."""
        rep = Report()
        alpha = RootVector(alpha)
        words = self.datum.enumerate_seq(alpha)
        for a in words:
            for b in words:
                want = U.pair_words(a, b)
                got = self.pair(K0Elem.symbol(a), K0Elem.symbol(b))
                rep.add("isometry-words", f"{','.join(a)}|{','.join(b)}", want, got, want == got)
        if divided:
            for mono in divided_monomials(self.datum, alpha):
                x = self.phi(mono)
                for b in words:
                    want = U.pairing_L(U.monomial(mono), U.word(b)).series(order)
                    got = self.pair(x, K0Elem.symbol(b), order)
                    rep.add("isometry-divided", f"{_mono_str(mono)}|{','.join(b)}", want, got, want == got)
        return rep

    def convention_report(self, U, alpha: Mapping[str, int], order: int = 20) -> dict[str, bool]:
        """Which shift convention makes the divided-power pairing an isometry to ``q^order``."""
        alpha = RootVector(alpha)
        words = self.datum.enumerate_seq(alpha)
        monos = divided_monomials(self.datum, alpha)
        out = {}
        for name in SHIFT_CONVENTIONS:
            ok = True
            for m1 in monos:
                targets = [(m2, self.phi(m2)) for m2 in monos] + [(tuple((w, 1) for w in b), K0Elem.symbol(b)) for b in words]
                for m2, y in targets:
                    want = U.pairing_L(U.monomial(m1), U.monomial(m2)).series(order)
                    got = self.pair(self.phi(m1), y, order, name)
                    if want != got:
                        ok = False
                        break
                if not ok:
                    break
            out[name] = ok
        return out

    def serre_check(self, i: str, j: str) -> Report:
        """Alternating Serre sum, divided powers expanded through ``[k]_i!``, pairs to 0."""
        d = self.datum
        if i == j:
            raise K0Error("Serre check needs i != j")
        if not d.is_real(i):
            raise K0Error(f"{i} is not a real index")
        rep = Report()
        N = 1 - d.a(i, j)
        combo: dict[tuple, QRat] = {}
        for k in range(N + 1):
            seq = (i,) * k + (j,) + (i,) * (N - k)
            c = (d.qfact(k, i) * d.qfact(N - k, i)).inverse()
            c = c if k % 2 == 0 else -c
            combo[seq] = combo.get(seq, QRat.zero()) + c
        alpha = d.root(i, N) + d.root(j, 1)
        for b in d.enumerate_seq(alpha):
            acc = QRat.zero()
            for seq, c in combo.items():
                acc = acc + c * qdim_block(d, seq, b)
            rep.add("serre-k0", f"({i},{j})|{','.join(b)}", 0, acc, not acc)
        return rep

    def serre_check_divided(self, i: str, j: str, order: int = 20) -> Report:
        """Same sum with genuine divided-power symbols, by series."""
        d = self.datum
        rep = Report()
        N = 1 - d.a(i, j)
        x = K0Elem(d.root(i, N) + d.root(j, 1))
        for k in range(N + 1):
            x = x + K0Elem.symbol([(i, k), (j, 1), (i, N - k)], (-1) ** k)
        for b in d.enumerate_seq(x.alpha):
            got = self.pair(x, K0Elem.symbol(b), order)
            rep.add("serre-k0-divided", f"({i},{j})|{','.join(b)}", {}, got, got == {})
        return rep

    def bialgebra_check(self, a: K0Elem, b: K0Elem) -> Report:
        rep = Report()
        lhs = self.comult(self.mult(a, b))
        rhs = self.tensor_mult(self.comult(a), self.comult(b))
        rep.add("res-multiplicative", f"{a.render()} * {b.render()}", _tstr(rhs), _tstr(lhs), lhs == rhs)
        for x in (a, b):
            r = self.comult(x)
            left = K0Elem(x.alpha, {s: c * self.counit(K0Elem.symbol(t)) for (s, t), c in r.items() if not t})
            right = K0Elem(x.alpha, {t: c for (s, t), c in r.items() if not s})
            rep.add("counit", x.render(), x.render(), left.render(), left == x)
            rep.add("counit", x.render(), x.render(), right.render(), right == x)
        return rep

    def coassociativity(self, a: K0Elem) -> bool:
        left: dict = {}
        right: dict = {}
        for (x, y), c in self.comult(a).items():
            for (x1, x2), c1 in self.comult(K0Elem.symbol(x)).items():
                _tadd(left, (x1, x2, y), c * c1)
            for (y1, y2), c2 in self.comult(K0Elem.symbol(y)).items():
                _tadd(right, (x, y1, y2), c * c2)
        return left == right

    def pairing_compatibility(self, L: Sequence[str], M: Sequence[str], N: Sequence[str]) -> tuple[QRat, QRat]:
        """``([L], [M][N])`` and ``(res [L], [M] (x) [N])``."""
        lhs = self.pair(K0Elem.symbol(L), K0Elem.symbol(tuple(M) + tuple(N)))
        rhs = self.pair_tensor(self.comult(K0Elem.symbol(L)), {(normalize(M), normalize(N)): QLaurent({0: 1})})
        return lhs, rhs

    def gram_rank(self, U, alpha: Mapping[str, int]) -> tuple[int, int]:
        """Rank of the K0 Gram matrix on pivot words versus ``dim U_alpha``."""
        sp = U.space(alpha)
        piv = sp.pivots
        G = [[self.pair(K0Elem.symbol(a), K0Elem.symbol(b)) for b in piv] for a in piv]
        return matrix_rank(G), sp.dim


def _exponents(steps: Sequence[int], budget: int):
    """Exponent tuples with ``sum steps[k]*t[k] < budget``."""
    if budget <= 0:
        return
    if not steps:
        yield ()
        return
    s0 = steps[0]
    e = 0
    while s0 * e < budget:
        for rest in _exponents(steps[1:], budget - s0 * e):
            yield (e,) + rest
        e += 1


def divided_monomials(datum: BorcherdsCartanDatum, alpha: RootVector) -> list[tuple[Block, ...]]:
    """Monomials with at least one real block ``d >= 2``, blocks of distinct neighbours."""
    out = []

    def rec(rem: RootVector, prefix: tuple):
        if rem.height == 0:
            if any(d >= 2 and datum.is_real(i) for i, d in prefix):
                out.append(prefix)
            return
        for i in datum.indices:
            if prefix and prefix[-1][0] == i:
                continue
            for d in range(1, rem.get(i, 0) + 1):
                if not datum.is_real(i) and d > 1:
                    break
                rec(rem - RootVector({i: d}), prefix + ((i, d),))

    rec(RootVector(alpha), ())
    return out


def _mono_str(mono) -> str:
    return "".join(f"f{i}" if d == 1 else f"f{i}^({d})" for i, d in mono)


def _tstr(t: Tensor) -> str:
    return " + ".join(f"({c})[{a}]x[{b}]" for (a, b), c in sorted(t.items())) or "0"
