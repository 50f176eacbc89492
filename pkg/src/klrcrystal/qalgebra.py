"""The negative half U_q^-(g) as a quotient of the free algebra on f_i.

A weight space is the span of all words of that weight modulo the radical
of the pairing ( , )_L. Vectors are stored by coordinates on a fixed set of
pivot words (lex-first words with independent Gram rows), which makes the
quotient map a matrix product and equality a coordinate comparison.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .cartan import BorcherdsCartanDatum, CapExceeded, RootVector, WeightVector, weight_of
from .qarith import QRat, inverse_matrix, matrix_rank, nullspace, solve_linear

__all__ = [
    "QAlgebraError",
    "SolveFailed",
    "TriangularityFailed",
    "NonIntegralTransition",
    "Word",
    "UqVector",
    "WeightSpace",
    "UqMinus",
    "coproduct_split",
    "LatticeData",
]

Word = tuple  # tuple of index names


class QAlgebraError(ArithmeticError):
    pass


class SolveFailed(QAlgebraError):
    pass


class TriangularityFailed(QAlgebraError):
    pass


class NonIntegralTransition(QAlgebraError):
    pass


ZERO = QRat.zero()
ONE = QRat.one()


def coproduct_split(datum: BorcherdsCartanDatum, w: Sequence[str]) -> list[tuple[Word, Word, int]]:
    """All terms of the twisted coproduct of a word.

    Letters sent right at position ``k`` and left at ``l > k`` contribute
    ``-(alpha_{w_k}|alpha_{w_l})`` to the q-power.
    """
    w = tuple(w)
    out = []
    for mask in itertools.product((0, 1), repeat=len(w)):  # 0 = left, 1 = right
        power = 0
        for k in range(len(w)):
            if mask[k] != 1:
                continue
            for l in range(k + 1, len(w)):
                if mask[l] == 0:
                    power -= datum.sym_form(w[k], w[l])
        left = tuple(a for a, m in zip(w, mask) if m == 0)
        right = tuple(a for a, m in zip(w, mask) if m == 1)
        out.append((left, right, power))
    return out


@dataclass(frozen=True)
class UqVector:
    """Element of ``U_q^-(g)_{-alpha}`` in pivot-word coordinates."""

    alpha: RootVector
    coords: tuple  # tuple[QRat]
    space: "WeightSpace" = field(repr=False, compare=False, hash=False)

    def __add__(self, other: "UqVector") -> "UqVector":
        self._same(other)
        return UqVector(self.alpha, tuple(a + b for a, b in zip(self.coords, other.coords)), self.space)

    def __sub__(self, other: "UqVector") -> "UqVector":
        self._same(other)
        return UqVector(self.alpha, tuple(a - b for a, b in zip(self.coords, other.coords)), self.space)

    def __neg__(self) -> "UqVector":
        return UqVector(self.alpha, tuple(-a for a in self.coords), self.space)

    def scale(self, c) -> "UqVector":
        c = c if isinstance(c, QRat) else QRat.const(c)
        return UqVector(self.alpha, tuple(a * c for a in self.coords), self.space)

    def __bool__(self) -> bool:
        return any(bool(a) for a in self.coords)

    def _same(self, other: "UqVector") -> None:
        if self.alpha != other.alpha:
            raise QAlgebraError("weight mismatch")

    def word_coeffs(self) -> dict[Word, QRat]:
        return {w: c for w, c in zip(self.space.pivots, self.coords) if c}

    def dual_coords(self) -> tuple:
        return self.space.dual_of(self.coords)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha.render(),
            "words": {",".join(w): str(c) for w, c in self.word_coeffs().items()},
        }

    def render(self) -> str:
        parts = []
        for w, c in self.word_coeffs().items():
            mono = "*".join(f"f{a}" for a in w) or "1"
            parts.append(f"({c})*{mono}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"UqVector[{self.alpha.render()}]({self.render()})"


class WeightSpace:
    """Gram data of ( , )_L on the words of one weight."""

    def __init__(self, U: "UqMinus", alpha: RootVector):
        self.U = U
        self.alpha = alpha
        self.words: list[Word] = U.datum.enumerate_seq(alpha) if alpha.height else [()]
        self.gram = [[U.pair_words(a, b) for b in self.words] for a in self.words]
        self.pivots: list[Word] = []
        rows: list[list[QRat]] = []
        for w, row in zip(self.words, self.gram):
            if matrix_rank(rows + [row]) > len(rows):
                rows.append(row)
                self.pivots.append(w)
        self.dim = len(self.pivots)
        self._pidx = [self.words.index(p) for p in self.pivots]
        gpp = [[self.gram[a][b] for b in self._pidx] for a in self._pidx]
        self._gpp = gpp
        self._gpp_inv = inverse_matrix(gpp) if self.dim else []
        self._word_cache: dict[Word, tuple] = {}

    @property
    def rank(self) -> int:
        return self.dim

    def coords_of_word(self, w: Word) -> tuple:
        """Pivot coordinates of the class of the word ``w``."""
        got = self._word_cache.get(w)
        if got is None:
            rhs = [self.U.pair_words(p, w) for p in self.pivots]
            got = tuple(
                sum((self._gpp_inv[a][b] * rhs[b] for b in range(self.dim)), ZERO) for a in range(self.dim)
            )
            self._word_cache[w] = got
        return got

    def vector(self, coeffs: Mapping[Word, QRat]) -> UqVector:
        acc = [ZERO] * self.dim
        for w, c in coeffs.items():
            if not c:
                continue
            c = c if isinstance(c, QRat) else QRat.const(c)
            for k, x in enumerate(self.coords_of_word(tuple(w))):
                if x:
                    acc[k] = acc[k] + c * x
        return UqVector(self.alpha, tuple(acc), self)

    def basis(self) -> list[UqVector]:
        return [self.vector({p: ONE}) for p in self.pivots]

    def zero(self) -> UqVector:
        return UqVector(self.alpha, (ZERO,) * self.dim, self)

    def dual_of(self, coords: Sequence[QRat]) -> tuple:
        return tuple(
            sum((self.gram[a][self._pidx[b]] * coords[b] for b in range(self.dim)), ZERO)
            for a in range(len(self.words))
        )

    def pair(self, x: UqVector, y: UqVector) -> QRat:
        return sum(
            (x.coords[a] * self._gpp[a][b] * y.coords[b] for a in range(self.dim) for b in range(self.dim)),
            ZERO,
        )


class UqMinus:
    """``U_q^-(g)`` for a datum with weight spaces built on demand."""

    def __init__(self, datum: BorcherdsCartanDatum, height_cap: int | None = None):
        self.datum = datum
        self.height_cap = height_cap if height_cap is not None else datum.height_cap
        self._spaces: dict[RootVector, WeightSpace] = {}
        self._pair = lru_cache(maxsize=None)(self._pair_words)

    # -- pairing on words ------------------------------------------------
    def qi2(self, i: str) -> QRat:
        return QRat.qpow(2 * self.datum.sym(i))

    def pair_words(self, x: Sequence[str], y: Sequence[str]) -> QRat:
        x, y = tuple(x), tuple(y)
        if weight_of(x) != weight_of(y):
            raise QAlgebraError(f"pairing of words {x} and {y} of different weight")
        return self._pair(x, y)

    def _pair_words(self, x: Word, y: Word) -> QRat:
        if not y:
            return ONE
        j, rest = y[0], y[1:]
        acc = ZERO
        for p, a in enumerate(x):
            if a != j:
                continue
            power = -sum(self.datum.sym_form(x[k], a) for k in range(p))
            sub = self._pair(x[:p] + x[p + 1 :], rest)
            if sub:
                acc = acc + QRat.qpow(power) * sub
        if not acc:
            return ZERO
        return acc / (ONE - self.qi2(j))

    def k_factor(self, alpha: Mapping[str, int]) -> QRat:
        out = ONE
        for i, k in RootVector(alpha).items():
            out = out * (ONE - self.qi2(i)) ** k
        return out

    def pairing_L(self, x, y) -> QRat:
        if isinstance(x, UqVector) and isinstance(y, UqVector):
            if x.alpha != y.alpha:
                raise QAlgebraError("weight mismatch")
            return x.space.pair(x, y)
        return self.pairing_L(self.as_vector(x), self.as_vector(y))

    def pairing_K(self, x, y) -> QRat:
        x, y = self.as_vector(x), self.as_vector(y)
        return self.k_factor(x.alpha) * self.pairing_L(x, y)

    # -- spaces ----------------------------------------------------------
    def space(self, alpha: Mapping[str, int]) -> WeightSpace:
        alpha = RootVector(alpha)
        sp = self._spaces.get(alpha)
        if sp is None:
            if alpha.height > self.height_cap:
                raise CapExceeded(f"height {alpha.height} exceeds cap {self.height_cap}")
            sp = WeightSpace(self, alpha)
            self._spaces[alpha] = sp
        return sp

    weight_space = space

    def dim(self, alpha: Mapping[str, int]) -> int:
        return self.space(alpha).dim

    def as_vector(self, x) -> UqVector:
        if isinstance(x, UqVector):
            return x
        return self.word(x)

    def word(self, w: Sequence[str], coeff=None) -> UqVector:
        w = tuple(w)
        sp = self.space(weight_of(w))
        return sp.vector({w: coeff if coeff is not None else ONE})

    def one(self) -> UqVector:
        return self.space(RootVector()).vector({(): ONE})

    def zero(self, alpha: Mapping[str, int]) -> UqVector:
        return self.space(alpha).zero()

    def combo(self, terms: Mapping[Sequence[str], object]) -> UqVector:
        terms = {tuple(w): (c if isinstance(c, QRat) else QRat.parse(str(c))) for w, c in terms.items()}
        alphas = {weight_of(w) for w in terms}
        if len(alphas) != 1:
            raise QAlgebraError("combination is not homogeneous")
        return self.space(alphas.pop()).vector(terms)

    # -- word-level operators, then descend ------------------------------
    def _map_words(self, v: UqVector, target: RootVector, fn) -> UqVector:
        sp = self.space(target)
        acc: dict[Word, QRat] = {}
        for w, c in v.word_coeffs().items():
            for w2, c2 in fn(w):
                acc[w2] = acc.get(w2, ZERO) + c * c2
        return sp.vector(acc)

    def fmult(self, j: str, v: UqVector) -> UqVector:
        return self._map_words(v, v.alpha + self.datum.root(j), lambda w: [((j,) + w, ONE)])

    def rmult(self, v: UqVector, j: str) -> UqVector:
        return self._map_words(v, v.alpha + self.datum.root(j), lambda w: [(w + (j,), ONE)])

    def multiply(self, x: UqVector, y: UqVector) -> UqVector:
        sp = self.space(x.alpha + y.alpha)
        acc: dict[Word, QRat] = {}
        for a, ca in x.word_coeffs().items():
            for b, cb in y.word_coeffs().items():
                acc[a + b] = acc.get(a + b, ZERO) + ca * cb
        return sp.vector(acc)

    def _eprime_word(self, i: str, w: Word, sign: int) -> list[tuple[Word, QRat]]:
        out = []
        for p, a in enumerate(w):
            if a == i:
                power = -sign * sum(self.datum.sym_form(i, w[k]) for k in range(p))
                out.append((w[:p] + w[p + 1 :], QRat.qpow(power)))
        return out

    def eprime(self, i: str, v: UqVector) -> UqVector | None:
        """``e_i'`` on the quotient; None when the target weight would be negative."""
        if not v.alpha.can_subtract(self.datum.root(i)):
            return None
        return self._map_words(v, v.alpha - self.datum.root(i), lambda w: self._eprime_word(i, w, 1))

    def eprime2(self, i: str, v: UqVector) -> UqVector:
        """``e_i''`` via ``e_i''(f_j u) = delta_ij u + q_i^{a_ij} f_j e_i''(u)``."""
        if not v.alpha.can_subtract(self.datum.root(i)):
            return None
        return self._map_words(v, v.alpha - self.datum.root(i), lambda w: self._eprime_word(i, w, -1))

    def eprime_power(self, i: str, v: UqVector, n: int):
        for _ in range(n):
            if v is None:
                return None
            v = self.eprime(i, v)
        return v

    def eprime_div(self, i: str, v: UqVector, n: int):
        """``e_i'^(n)``: plain power for real ``i``, divided by ``{n}_i!`` for imaginary ``i``."""
        out = self.eprime_power(i, v, n)
        if out is None or self.datum.is_real(i):
            return out
        return out.scale(self.datum.qfact(n, i).inverse())

    def fdiv(self, i: str, n: int, v: UqVector | None = None) -> UqVector:
        """``f_i^(n) v``: divided by ``[n]_i!`` for real ``i``, plain power otherwise."""
        v = self.one() if v is None else v
        for _ in range(n):
            v = self.fmult(i, v)
        if self.datum.is_real(i):
            v = v.scale(self.datum.qfact(n, i).inverse())
        return v

    def monomial(self, parts: Sequence[tuple[str, int]]) -> UqVector:
        """``f_{i_1}^{(d_1)} ... f_{i_r}^{(d_r)} 1``."""
        v = self.one()
        for i, d in reversed(list(parts)):
            v = self.fdiv(i, d, v)
        return v

    def bar(self, v: UqVector) -> UqVector:
        return UqVector(v.alpha, tuple(c.bar() for c in v.coords), v.space)

    bar_vector = bar

    # -- strings and Kashiwara operators --------------------------------
    def kappa(self, i: str, n: int) -> QRat:
        """``e_i'(f_i^(n) u) = kappa_n f_i^(n-1) u`` for ``u`` in ker e_i'."""
        d = self.datum
        if d.is_real(i):
            return QRat.qpow(-d.sym(i) * (n - 1))
        step = d.sym(i) * int(d.c(i))
        return d.qint(n, i) * QRat.qpow(step * (n - 1))

    def ell(self, i: str, v: UqVector) -> int:
        """Largest ``n`` with ``e_i'^n v != 0`` (``-1`` for ``v = 0``)."""
        if not v:
            return -1
        n = 0
        while True:
            v = self.eprime(i, v)
            if not v:
                return n
            n += 1

    def string_decomp(self, i: str, v: UqVector) -> dict[int, UqVector]:
        """``v = sum_l f_i^(l) u_l`` with every ``u_l`` killed by ``e_i'``."""
        out: dict[int, UqVector] = {}
        rest = v
        while rest:
            n = self.ell(i, rest)
            top = self.eprime_power(i, rest, n)
            c = ONE
            for k in range(1, n + 1):
                c = c * self.kappa(i, k)
            u = top.scale(c.inverse())
            if self.eprime(i, u):
                raise SolveFailed("string component is not killed by e_i'")
            out[n] = u
            rest = rest - self.fdiv(i, n, u)
            if rest and self.ell(i, rest) >= n:
                raise SolveFailed("string decomposition did not shorten")
        return dict(sorted(out.items()))

    def _from_strings(self, i: str, parts: Mapping[int, tuple[int, UqVector, QRat]], alpha: RootVector) -> UqVector:
        acc = self.zero(alpha)
        for _, (n, u, c) in parts.items():
            if n < 0 or not c:
                continue
            acc = acc + self.fdiv(i, n, u).scale(c)
        return acc

    def etilde(self, i: str, v: UqVector) -> UqVector:
        target = v.alpha - self.datum.root(i) if v.alpha.can_subtract(self.datum.root(i)) else None
        if target is None:
            return None
        parts = {l: (l - 1, u, ONE) for l, u in self.string_decomp(i, v).items() if l >= 1}
        return self._from_strings(i, parts, target)

    def ftilde(self, i: str, v: UqVector) -> UqVector:
        parts = {l: (l + 1, u, ONE) for l, u in self.string_decomp(i, v).items()}
        return self._from_strings(i, parts, v.alpha + self.datum.root(i))

    def kashiwara_lower(self, i: str, v: UqVector, direction: str) -> UqVector:
        if direction == "etilde":
            return self.etilde(i, v)
        if direction == "ftilde":
            return self.ftilde(i, v)
        raise ValueError(direction)

    def Etilde(self, i: str, v: UqVector) -> UqVector:
        d = self.datum
        if not v.alpha.can_subtract(d.root(i)):
            return None
        parts = {}
        for l, u in self.string_decomp(i, v).items():
            if l < 1:
                continue
            if d.is_real(i):
                c = QRat.qpow(-d.sym(i) * (l - 1)) / d.qint(l, i)
            else:
                c = d.qint(l, i) * QRat.qpow(d.sym(i) * int(d.c(i)) * (l - 1))
            parts[l] = (l - 1, u, c)
        return self._from_strings(i, parts, v.alpha - d.root(i))

    def Ftilde(self, i: str, v: UqVector) -> UqVector:
        d = self.datum
        parts = {}
        for l, u in self.string_decomp(i, v).items():
            if d.is_real(i):
                c = QRat.qpow(d.sym(i) * l) * d.qint(l + 1, i)
            else:
                c = (d.qint(l + 1, i) * QRat.qpow(d.sym(i) * int(d.c(i)) * l)).inverse()
            parts[l] = (l + 1, u, c)
        return self._from_strings(i, parts, v.alpha + d.root(i))

    def kashiwara_upper(self, i: str, v: UqVector, direction: str) -> UqVector:
        if direction == "Etilde":
            return self.Etilde(i, v)
        if direction == "Ftilde":
            return self.Ftilde(i, v)
        raise ValueError(direction)


# ===========================================================================
# crystal lattice, B(infinity), global bases


def _val(x: QRat) -> float:
    return x.val0() if x else float("inf")


@dataclass
class LatticeWeight:
    """A0-lattice data of one weight."""

    alpha: RootVector
    basis: list[UqVector]  # A0-basis of L(inf)_alpha
    node_reps: list[UqVector]  # one generated representative per node
    node_classes: list[tuple]  # rational coordinates at q = 0 of each node


class LatticeData:
    """L(infinity) and B(infinity) generated by f-tilde strings up to a depth."""

    def __init__(self, U: UqMinus, depth: int):
        if depth > U.height_cap:
            raise CapExceeded(f"depth {depth} exceeds cap {U.height_cap}")
        self.U = U
        self.datum = U.datum
        self.depth = depth
        self.weights: dict[RootVector, LatticeWeight] = {}
        self.nodes: list[tuple[RootVector, int]] = []
        self.f: dict[tuple, dict[str, tuple]] = {}
        self.e: dict[tuple, dict[str, tuple | None]] = {}
        self.eps: dict[tuple, dict[str, int]] = {}
        self._G: dict[tuple, UqVector] = {}
        self._nc: dict[RootVector, list] = {}
        self._build()

    # -- lattice coordinates ---------------------------------------------
    def lattice_coords(self, v: UqVector) -> list[QRat]:
        lw = self.weights[v.alpha]
        if not lw.basis:
            return []
        cols = [list(b.coords) for b in lw.basis]
        mat = [[cols[k][r] for k in range(len(cols))] for r in range(len(v.coords))]
        sol = solve_linear(mat, list(v.coords))
        if sol is None:
            raise SolveFailed("vector outside the weight space span")
        return sol

    def in_lattice(self, v: UqVector) -> bool:
        return all(c.in_A0() for c in self.lattice_coords(v) if c)

    def class_of(self, v: UqVector) -> tuple:
        coords = self.lattice_coords(v)
        if not all(c.in_A0() for c in coords if c):
            raise SolveFailed("vector is not in the crystal lattice")
        return tuple(c.ev0() if c else Fraction(0) for c in coords)

    def node_of(self, v: UqVector) -> tuple | None:
        cls = self.class_of(v)
        if not any(cls):
            return None
        lw = self.weights[v.alpha]
        try:
            return (v.alpha, lw.node_classes.index(cls))
        except ValueError:
            raise SolveFailed("class at q=0 is not a crystal node") from None

    # -- construction ----------------------------------------------------
    @staticmethod
    def _a0_basis(vectors: list[UqVector]) -> list[UqVector]:
        """A0-basis of the A0-span (minimal-valuation pivoting)."""
        rows = [list(v.coords) for v in vectors if v]
        if not rows:
            return []
        proto = vectors[0]
        used_cols: set[int] = set()
        out = []
        while rows:
            best = None
            for r, row in enumerate(rows):
                for c, x in enumerate(row):
                    if c in used_cols or not x:
                        continue
                    v = x.val0()
                    if best is None or v < best[0]:
                        best = (v, r, c)
            if best is None:
                break
            _, r, c = best
            piv = rows.pop(r)
            used_cols.add(c)
            # normalise the pivot row by a unit of A0
            unit = piv[c] / QRat.qpow(piv[c].val0())
            piv = [x / unit for x in piv]
            out.append(UqVector(proto.alpha, tuple(piv), proto.space))
            new_rows = []
            for row in rows:
                if row[c]:
                    f = row[c] / piv[c]
                    row = [a - f * b for a, b in zip(row, piv)]
                if any(row):
                    new_rows.append(row)
            rows = new_rows
        return out

    def _build(self) -> None:
        U = self.U
        root = RootVector()
        one = U.one()
        self.weights[root] = LatticeWeight(root, [one], [one], [(Fraction(1),)])
        frontier: dict[RootVector, list[UqVector]] = {root: [one]}
        for level in range(1, self.depth + 1):
            generated: dict[RootVector, list[UqVector]] = {}
            for alpha, reps in frontier.items():
                for v in reps:
                    for i in self.datum.indices:
                        w = U.ftilde(i, v)
                        if w:
                            generated.setdefault(w.alpha, []).append(w)
            frontier = {}
            for alpha in sorted(generated, key=lambda a: tuple(a.get(i, 0) for i in self.datum.indices)):
                gens = generated[alpha]
                basis = self._a0_basis(gens)
                lw = LatticeWeight(alpha, basis, [], [])
                self.weights[alpha] = lw
                for v in gens:
                    cls = self.class_of(v)
                    if any(cls) and cls not in lw.node_classes:
                        lw.node_classes.append(cls)
                        lw.node_reps.append(v)
                frontier[alpha] = lw.node_reps
        # graph structure
        for alpha, lw in self.weights.items():
            for k in range(len(lw.node_reps)):
                self.nodes.append((alpha, k))
        for node in self.nodes:
            alpha, k = node
            rep = self.weights[alpha].node_reps[k]
            self.f[node] = {}
            self.e[node] = {}
            for i in self.datum.indices:
                if alpha.height < self.depth:
                    w = U.ftilde(i, rep)
                    self.f[node][i] = self.node_of(w)
                ew = U.etilde(i, rep)
                self.e[node][i] = self.node_of(ew) if ew is not None and ew.alpha in self.weights else None
        for node in self.nodes:
            self.eps[node] = {}
            for i in self.datum.indices:
                n, cur = 0, node
                while cur is not None and self.e[cur].get(i) is not None:
                    cur = self.e[cur][i]
                    n += 1
                self.eps[node][i] = n

    # -- accessors -------------------------------------------------------
    def rep(self, node) -> UqVector:
        alpha, k = node
        return self.weights[alpha].node_reps[k]

    def nodes_of(self, alpha: Mapping[str, int]) -> list[tuple]:
        alpha = RootVector(alpha)
        lw = self.weights.get(alpha)
        return [(alpha, k) for k in range(len(lw.node_reps))] if lw else []

    def weight(self, node) -> WeightVector:
        alpha = node[0]
        return WeightVector({i: -sum(self.datum.a(i, j) * alpha.get(j, 0) for j in self.datum.indices) for i in self.datum.indices})

    def decorations(self, node) -> tuple[dict, dict]:
        eps, phi = {}, {}
        wt = self.weight(node)
        for i in self.datum.indices:
            e = self.eps[node][i] if self.datum.is_real(i) else 0
            eps[i] = e
            phi[i] = e + wt[i]
        return eps, phi

    def inverse_check(self) -> list[str]:
        """``f~_i b = b'`` iff ``e~_i b' = b`` on the generated range."""
        bad = []
        for node in self.nodes:
            for i, tgt in self.f[node].items():
                if tgt is not None and self.e[tgt].get(i) != node:
                    bad.append(f"e~_{i} f~_{i} {node} != {node}")
            for i, src in self.e[node].items():
                if src is not None and src[0].height < self.depth and self.f[src].get(i) != node:
                    bad.append(f"f~_{i} e~_{i} {node} != {node}")
        return bad

    def string_of(self, node) -> list[tuple[str, int]]:
        """Greedy f-tilde string: ``b = f~_{i_1}^{n_1} ... 1`` with maximal leading run."""
        parts: list[tuple[str, int]] = []
        cur = node
        while cur[0].height:
            for i in self.datum.indices:
                if self.e[cur].get(i) is not None:
                    n = 0
                    while cur is not None and self.e[cur].get(i) is not None:
                        cur = self.e[cur][i]
                        n += 1
                    parts.append((i, n))
                    break
            else:
                raise SolveFailed(f"node {cur} has no e-tilde predecessor")
        return parts

    # -- global bases ----------------------------------------------------
    def global_basis(self, alpha: Mapping[str, int]) -> tuple[list[UqVector], list[UqVector]]:
        """Lower global basis on the nodes of ``alpha`` and its K-dual."""
        lower = [self.lower_global(node) for node in self.nodes_of(alpha)]
        return lower, self.dual_basis(lower)

    def lower_global(self, node, stack: tuple = ()) -> UqVector:
        got = self._G.get(node)
        if got is not None:
            return got
        if node in stack:
            raise TriangularityFailed(f"cyclic dependency at node {node}")
        U = self.U
        alpha = node[0]
        if not alpha.height:
            self._G[node] = U.one()
            return self._G[node]
        i, n = self.string_of(node)[0]
        low = node
        for _ in range(n):
            low = self.e[low][i]
        x = U.fdiv(i, n, self.lower_global(low, stack + (node,)))
        nodes = self.nodes_of(alpha)
        idx = nodes.index(node)
        for _ in range(64):
            fix = self._node_coords(alpha, self.lattice_coords(x))
            bad = []
            for k, c in enumerate(fix):
                d = c - ONE if k == idx else c
                if d and d.val0() <= 0:
                    bad.append((d.val0(), k, d))
            if not bad:
                break
            _, k, d = min(bad, key=lambda t: t[:2])
            if k == idx:
                raise TriangularityFailed(f"leading coefficient of {node} is {fix[k]}")
            x = x - self.lower_global(nodes[k], stack + (node,)).scale(_principal_bar_symmetric(d))
        else:
            raise TriangularityFailed(f"correction loop did not terminate at {node}")
        if U.bar(x) != x:
            raise TriangularityFailed(f"G{node} is not bar-invariant")
        self._G[node] = x
        return x

    def _node_coords(self, alpha: RootVector, coords: list[QRat]) -> list[QRat]:
        """Change from lattice-basis coordinates to coordinates on node lifts."""
        lw = self.weights[alpha]
        inv = self._nc.get(alpha)
        if inv is None:
            if len(lw.node_classes) != len(lw.basis):
                raise SolveFailed(f"{len(lw.node_classes)} nodes for a rank {len(lw.basis)} lattice")
            m = [[QRat.const(lw.node_classes[b][a]) for b in range(len(lw.node_classes))] for a in range(len(lw.basis))]
            inv = inverse_matrix(m)
            self._nc[alpha] = inv
        return [sum((inv[a][b] * coords[b] for b in range(len(coords))), ZERO) for a in range(len(coords))]

    def dual_basis(self, lower: list[UqVector]) -> list[UqVector]:
        """The ( , )_K-dual basis."""
        if not lower:
            return []
        U = self.U
        gram = [[U.pairing_K(a, b) for b in lower] for a in lower]
        inv = inverse_matrix(gram)
        out = []
        for k in range(len(lower)):
            v = lower[0].scale(ZERO)
            for m in range(len(lower)):
                if inv[m][k]:
                    v = v + lower[m].scale(inv[m][k])
            out.append(v)
        return out


def _principal_bar_symmetric(c: QRat) -> QRat:
    """Bar-invariant Laurent polynomial agreeing with ``c`` in degrees <= 0."""
    v = c.val0()
    if v > 0:
        return ZERO
    head = (c * QRat.qpow(-v)).series(1 - v)
    out = ZERO
    for k, a in head.items():
        k += v
        if k > 0 or not a:
            continue
        if a.denominator != 1:
            raise NonIntegralTransition(f"coefficient {a} of q^{k} is not integral")
        out = out + (QRat.const(a) if k == 0 else QRat.qpow(k, a) + QRat.qpow(-k, a))
    return out


# ===========================================================================
# perfect bases


def _proportional(a: UqVector, b: UqVector) -> QRat | None:
    """``c`` with ``a = c b`` (both nonzero), else None."""
    c = None
    for x, y in zip(a.coords, b.coords):
        if not y:
            if x:
                return None
            continue
        r = x / y
        if c is None:
            c = r
        elif r != c:
            return None
    return c


@dataclass
class PerfectResult:
    ok: bool
    violations: list[str]
    nodes: list[tuple]  # (alpha, index)
    e_map: dict  # (node, i) -> node
    ell: dict  # (node, i) -> int


def perfect_check(U: UqMinus, basis: Mapping[RootVector, Sequence[UqVector]]) -> PerfectResult:
    """Check the perfect-basis axioms on a basis given per weight.

    The quotient by ``U^{< l-1}`` is detected through ``e_i'^{l-1}``: two
    vectors agree modulo that subspace iff their images under
    ``e_i'^{l-1}`` agree.
    """
    viol: list[str] = []
    e_map: dict = {}
    ell: dict = {}
    nodes = [(RootVector(a), k) for a, vs in basis.items() for k in range(len(vs))]
    vec = {(RootVector(a), k): v for a, vs in basis.items() for k, v in enumerate(vs)}
    for alpha, vs in basis.items():
        alpha = RootVector(alpha)
        if len(vs) != U.dim(alpha):
            viol.append(f"weight {alpha.render()}: {len(vs)} vectors for dimension {U.dim(alpha)}")
        elif vs and matrix_rank([list(v.coords) for v in vs]) != len(vs):
            viol.append(f"weight {alpha.render()}: vectors are dependent")
    for node in nodes:
        b = vec[node]
        for i in U.datum.indices:
            l = U.ell(i, b)
            ell[(node, i)] = l
            if l <= 0:
                continue
            target = node[0] - U.datum.root(i)
            top = U.eprime_power(i, b, l)
            hits = []
            for k, b2 in enumerate(basis.get(target, ())):
                img = U.eprime_power(i, b2, l - 1)
                if img and _proportional(top, img) is not None:
                    hits.append((target, k))
            if len(hits) != 1:
                viol.append(f"node {node} index {i}: {len(hits)} candidates for e_i(b)")
                continue
            e_map[(node, i)] = hits[0]
    for i in U.datum.indices:
        seen: dict = {}
        for (node, j), tgt in e_map.items():
            if j != i:
                continue
            if tgt in seen:
                viol.append(f"index {i}: e_i({node}) = e_i({seen[tgt]})")
            seen[tgt] = node
    return PerfectResult(not viol, viol, nodes, e_map, ell)


# ===========================================================================
# boson-module identities


def _neg_root_ok(alpha: RootVector, beta: RootVector) -> bool:
    return alpha.can_subtract(beta)


def verify_boson(U: UqMinus, max_height: int, lattice: "LatticeData | None" = None):
    """Check the boson-module identities on spanning sets of every weight."""
    from .klr import Report

    rep = Report()
    d = U.datum
    I = d.indices
    weights = [RootVector()] + d.roots_up_to(max_height)
    for alpha in weights:
        span = U.space(alpha).basis()
        # special commutation: e_i' f_j = delta + q_i^{-a_ij} f_j e_i'
        if alpha.height < max_height:
            for i in I:
                for j in I:
                    if not (alpha + d.root(j)).can_subtract(d.root(i)):
                        continue
                    for u in span:
                        lhs = U.eprime(i, U.fmult(j, u))
                        inner = U.eprime(i, u)
                        rhs = U.fmult(j, inner).scale(QRat.qpow(-d.sym_form(i, j))) if inner is not None else lhs.scale(0)
                        if i == j:
                            rhs = rhs + u
                        rep.add("special-commute", f"i={i},j={j},u in {alpha.render()}", "equal", lhs == rhs, lhs == rhs)
        # adjointness (e_i' x, y)_L = (1 - q_i^2)(x, f_i y)_L
        for i in I:
            if not alpha.can_subtract(d.root(i)):
                continue
            lower = U.space(alpha - d.root(i)).basis()
            for x in span:
                ex = U.eprime(i, x)
                for y in lower:
                    a = U.pairing_L(ex, y)
                    b = (ONE - U.qi2(i)) * U.pairing_L(x, U.fmult(i, y))
                    rep.add("adjoint-L", f"i={i} in {alpha.render()}", b, a, a == b)
        # highest-vector property
        if alpha.height:
            rows = []
            for i in I:
                if not alpha.can_subtract(d.root(i)):
                    continue
                tgt = U.space(alpha - d.root(i))
                images = [U.eprime(i, v) for v in span]
                for r in range(tgt.dim):
                    rows.append([img.coords[r] for img in images])
            kernel = len(span) - (matrix_rank(rows) if rows else 0)
            rep.add("highest-vector", f"ker in {alpha.render()}", 0, kernel, kernel == 0)
        # e_i'^n u = [n]! E~^n u (real) or E~^n u (imaginary), n = ell_i(u)
        for i in I:
            for u in span:
                n = U.ell(i, u)
                if n <= 0:
                    continue
                lhs = U.eprime_power(i, u, n)
                rhs = u
                for _ in range(n):
                    rhs = U.Etilde(i, rhs)
                if d.is_real(i):
                    rhs = rhs.scale(d.qfact(n, i))
                rep.add("eprime-vs-Etilde", f"i={i},n={n} in {alpha.render()}", rhs, lhs, lhs == rhs)
        # upper/lower adjointness for ( , )_K
        for i in I:
            up = alpha + d.root(i)
            if up.height > max_height:
                continue
            upper_span = U.space(up).basis()
            for u in span:
                fu = U.ftilde(i, u)
                Fu = U.Ftilde(i, u)
                for v in upper_span:
                    a = U.pairing_K(fu, v)
                    b = U.pairing_K(u, U.Etilde(i, v))
                    rep.add("fK-EK", f"i={i} in {alpha.render()}", b, a, a == b)
                    a = U.pairing_K(U.etilde(i, v), u)
                    b = U.pairing_K(v, Fu)
                    rep.add("eK-FK", f"i={i} in {alpha.render()}", b, a, a == b)
    # divided-power commutation relations
    for alpha in weights:
        span = U.space(alpha).basis()
        for i in I:
            for j in I:
                for n in range(1, max_height + 1):
                    for m in range(1, max_height + 1 - alpha.height):
                        if i != j and n > alpha.get(i, 0):
                            continue
                        if i == j and n > alpha.get(i, 0) + m:
                            continue
                        for u in span:
                            ok, lhs, rhs = _commutation_instance(U, i, j, n, m, u)
                            rep.add("divided-commutation", f"i={i},j={j},n={n},m={m} in {alpha.render()}", rhs, lhs, ok)
    return rep


def _apply_f(U: UqMinus, i: str, m: int, v):
    if v is None:
        return None
    return U.fdiv(i, m, v)


def _apply_e(U: UqMinus, i: str, n: int, v):
    if v is None:
        return None
    return U.eprime_div(i, v, n)


def _commutation_instance(U: UqMinus, i: str, j: str, n: int, m: int, u: UqVector):
    d = U.datum
    lhs = _apply_e(U, i, n, U.fdiv(j, m, u))
    target = u.alpha + d.root(j, m) - d.root(i, n)
    rhs = U.zero(target)
    if i != j:
        inner = _apply_e(U, i, n, u)
        if inner is not None:
            rhs = U.fdiv(j, m, inner).scale(QRat.qpow(-n * m * d.sym_form(i, j)))
    elif d.is_real(i):
        si = d.sym(i)
        for k in range(0, n + 1):
            if k > m:
                continue
            inner = _apply_e(U, i, n - k, u)
            if inner is None or not inner:
                continue
            power = si * (-2 * n * m + (n + m) * k - k * (k - 1) // 2)
            term = U.fdiv(i, m - k, inner).scale(QRat.qpow(power) * d.qbinom(n, k, i))
            rhs = rhs + term
    else:
        si, ci = d.sym(i), int(d.c(i))
        for k in range(0, m + 1):
            if k > n:
                continue
            inner = _apply_e(U, i, n - k, u)
            if inner is None or not inner:
                continue
            power = -si * ci * (-2 * n * m + (n + m) * k - k * (k - 1) // 2)
            term = U.fdiv(i, m - k, inner).scale(QRat.qpow(power) * d.qbinom(m, k, i))
            rhs = rhs + term
    if lhs is None:
        return (not rhs), "0", rhs
    return lhs == rhs, lhs, rhs
