"""Exact scalars: Laurent polynomials and rational functions in ``q`` over Q.

``QRat`` is kept in a canonical form (coprime numerator/denominator, the
denominator's lowest nonzero coefficient equal to 1), so ``==`` is
mathematical equality and values hash consistently.

>>> a = QRat.parse("1/(1-q)") + QRat.parse("1/(1+q)")
>>> str(a)
'2/(1-q^2)'
>>> QRat.parse("(q^2-q^3)/(q-q^4)").val0()
1
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

__all__ = [
    "QLaurent",
    "QRat",
    "QArithError",
    "DivisionByZero",
    "ZeroInput",
    "PoleAtZero",
    "ParseError",
    "ONE",
    "ZERO",
    "Q",
    "as_qrat",
    "matrix_rank",
    "solve_linear",
    "nullspace",
    "inverse_matrix",
]


class QArithError(ArithmeticError):
    """Base class for scalar arithmetic errors."""


class DivisionByZero(QArithError):
    pass


class ZeroInput(QArithError):
    pass


class PoleAtZero(QArithError):
    pass


class ParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# dense univariate polynomials: tuples of Fractions, low degree first,
# no trailing zeros; () is the zero polynomial

Poly = tuple


def _trim(c: list) -> tuple:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    c = list(a)
    for k, v in enumerate(b):
        c[k] += v
    return _trim(c)


def _psub(a: Poly, b: Poly) -> Poly:
    c = list(a) + [Fraction(0)] * (len(b) - len(a))
    for k, v in enumerate(b):
        c[k] -= v
    return _trim(c)


def _pmul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    c = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                c[i + j] += x * y
    return _trim(c)


def _pscale(a: Poly, s: Fraction) -> Poly:
    if s == 0:
        return ()
    return tuple(x * s for x in a)


def _pdivmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    if not b:
        raise DivisionByZero("polynomial division by zero")
    r = list(a)
    db = len(b) - 1
    lead = b[-1]
    if len(r) <= db:
        return (), tuple(r)
    quot = [Fraction(0)] * (len(r) - db)
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k]
        if c:
            c = c / lead
            quot[k - db] = c
            for j in range(db + 1):
                r[k - db + j] -= c * b[j]
    return _trim(quot), _trim(r[:db])


def _pmonic(a: Poly) -> Poly:
    return _pscale(a, 1 / Fraction(a[-1]))


def _pgcd(a: Poly, b: Poly) -> Poly:
    while b:
        a, b = b, _pdivmod(a, b)[1]
    return _pmonic(a) if a else ()


def _low(a: Poly) -> int:
    for k, v in enumerate(a):
        if v:
            return k
    raise ZeroInput("zero polynomial")


# ---------------------------------------------------------------------------


class QLaurent:
    """Finite sum of ``c * q^k`` with rational ``c`` and integer ``k``.

    Stored as a mapping exponent -> nonzero Fraction.
    """

    __slots__ = ("_c", "_hash")

    def __init__(self, coeffs: Mapping[int, object] | None = None):
        c = {}
        if coeffs:
            for k, v in coeffs.items():
                v = Fraction(v)
                if v:
                    c[int(k)] = v
        self._c = c
        self._hash = None

    @classmethod
    def _raw(cls, c: dict) -> "QLaurent":
        obj = cls.__new__(cls)
        obj._c = c
        obj._hash = None
        return obj

    @classmethod
    def monomial(cls, k: int, c=1) -> "QLaurent":
        return cls({k: c})

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self._c)

    def items(self):
        return sorted(self._c.items())

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self) -> bool:
        return bool(self._c)

    def __eq__(self, other) -> bool:
        if isinstance(other, QLaurent):
            return self._c == other._c
        if isinstance(other, (int, Fraction)):
            return self._c == ({0: Fraction(other)} if other else {})
        if isinstance(other, QRat):
            return self.to_qrat() == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._c.items()))
        return self._hash

    def __add__(self, other) -> "QLaurent":
        other = _as_laurent(other)
        if other is None:
            return NotImplemented
        c = dict(self._c)
        for k, v in other._c.items():
            s = c.get(k, 0) + v
            if s:
                c[k] = s
            else:
                c.pop(k, None)
        return QLaurent._raw(c)

    __radd__ = __add__

    def __neg__(self) -> "QLaurent":
        return QLaurent._raw({k: -v for k, v in self._c.items()})

    def __sub__(self, other) -> "QLaurent":
        other = _as_laurent(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "QLaurent":
        return (-self) + other

    def __mul__(self, other) -> "QLaurent":
        other = _as_laurent(other)
        if other is None:
            return NotImplemented
        c: dict[int, Fraction] = {}
        for k1, v1 in self._c.items():
            for k2, v2 in other._c.items():
                k = k1 + k2
                c[k] = c.get(k, 0) + v1 * v2
        return QLaurent._raw({k: v for k, v in c.items() if v})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QLaurent":
        if n < 0:
            raise ValueError("negative power of a Laurent polynomial")
        out = QLaurent({0: 1})
        for _ in range(n):
            out = out * self
        return out

    def bar(self) -> "QLaurent":
        return QLaurent._raw({-k: v for k, v in self._c.items()})

    def to_qrat(self) -> "QRat":
        if not self._c:
            return QRat.zero()
        lo = min(self._c)
        hi = max(self._c)
        shift = -lo if lo < 0 else 0
        num = [Fraction(0)] * (hi + shift + 1)
        for k, v in self._c.items():
            num[k + shift] = v
        den = [Fraction(0)] * shift + [Fraction(1)]
        return QRat._make(_trim(num), tuple(den))

    def evaluate(self, x) -> Fraction:
        x = Fraction(x)
        return sum((v * x**k for k, v in self._c.items()), Fraction(0))

    def __str__(self) -> str:
        return _render_laurent(self._c)

    def __repr__(self) -> str:
        return f"QLaurent({self})"


def _as_laurent(x) -> QLaurent | None:
    if isinstance(x, QLaurent):
        return x
    if isinstance(x, (int, Fraction)):
        return QLaurent({0: x})
    if isinstance(x, QRat):
        return x.to_laurent()
    return None


def _fmt_coeff(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _render_laurent(c: Mapping[int, Fraction]) -> str:
    if not c:
        return "0"
    parts = []
    for k in sorted(c):
        v = c[k]
        sign = "-" if v < 0 else "+"
        a = abs(v)
        if k == 0:
            body = _fmt_coeff(a)
        else:
            qk = "q" if k == 1 else f"q^{k}"
            if a == 1:
                body = qk
            elif a.denominator == 1:
                body = f"{a.numerator}*{qk}"
            else:
                body = f"({_fmt_coeff(a)})*{qk}"
        parts.append((sign, body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += sign + body
    return out


def _poly_str(p: Poly) -> str:
    return _render_laurent({k: v for k, v in enumerate(p) if v})


class QRat:
    """Element of Q(q) in canonical form."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Iterable = (), den: Iterable = (1,)):
        n = _trim([Fraction(x) for x in num])
        d = _trim([Fraction(x) for x in den])
        if not d:
            raise DivisionByZero("zero denominator")
        obj = QRat._make(n, d)
        self.num, self.den, self._hash = obj.num, obj.den, None

    # -- construction -----------------------------------------------------
    @classmethod
    def _raw(cls, num: Poly, den: Poly) -> "QRat":
        obj = cls.__new__(cls)
        obj.num = num
        obj.den = den
        obj._hash = None
        return obj

    @classmethod
    def _make(cls, num: Poly, den: Poly) -> "QRat":
        if not den:
            raise DivisionByZero("zero denominator")
        if not num:
            return cls._raw((), (Fraction(1),))
        if len(den) > 1:
            g = _pgcd(num, den)
            if len(g) > 1:
                num = _pdivmod(num, g)[0]
                den = _pdivmod(den, g)[0]
        c = den[_low(den)]
        if c != 1:
            inv = 1 / c
            num = _pscale(num, inv)
            den = _pscale(den, inv)
        return cls._raw(num, den)

    @classmethod
    def zero(cls) -> "QRat":
        return cls._raw((), (Fraction(1),))

    @classmethod
    def one(cls) -> "QRat":
        return cls._raw((Fraction(1),), (Fraction(1),))

    @classmethod
    def const(cls, c) -> "QRat":
        c = Fraction(c)
        return cls._raw((c,) if c else (), (Fraction(1),))

    @classmethod
    def qpow(cls, k: int, c=1) -> "QRat":
        """``c * q^k`` for any integer ``k``."""
        c = Fraction(c)
        if not c:
            return cls.zero()
        if k >= 0:
            return cls._raw((Fraction(0),) * k + (c,), (Fraction(1),))
        return cls._raw((c,), (Fraction(0),) * (-k) + (Fraction(1),))

    @classmethod
    def parse(cls, text: str) -> "QRat":
        return _Parser(text).parse()

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_laurent(self) -> bool:
        """True when the denominator is a pure power of ``q``."""
        return self.den[-1] == 1 and all(v == 0 for v in self.den[:-1])

    def is_const(self) -> bool:
        return len(self.den) == 1 and len(self.num) <= 1

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError(f"{self} is not a constant")
        return self.num[0] if self.num else Fraction(0)

    # -- arithmetic -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, QRat):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self == QRat.const(other)
        if isinstance(other, QLaurent):
            return self == other.to_qrat()
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __add__(self, other) -> "QRat":
        o = as_qrat(other, strict=False)
        if o is None:
            return NotImplemented
        if not o.num:
            return self
        if not self.num:
            return o
        if self.den == o.den:
            return QRat._make(_padd(self.num, o.num), self.den)
        return QRat._make(
            _padd(_pmul(self.num, o.den), _pmul(o.num, self.den)),
            _pmul(self.den, o.den),
        )

    __radd__ = __add__

    def __neg__(self) -> "QRat":
        return QRat._raw(tuple(-x for x in self.num), self.den)

    def __sub__(self, other) -> "QRat":
        o = as_qrat(other, strict=False)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "QRat":
        return (-self) + other

    def __mul__(self, other) -> "QRat":
        o = as_qrat(other, strict=False)
        if o is None:
            return NotImplemented
        if not self.num or not o.num:
            return QRat.zero()
        if len(o.den) == 1 and len(o.num) == 1:
            c = o.num[0]
            return QRat._raw(_pscale(self.num, c), self.den)
        if len(self.den) == 1 and len(self.num) == 1:
            c = self.num[0]
            return QRat._raw(_pscale(o.num, c), o.den)
        return QRat._make(_pmul(self.num, o.num), _pmul(self.den, o.den))

    __rmul__ = __mul__

    def inverse(self) -> "QRat":
        if not self.num:
            raise DivisionByZero("inverse of zero")
        return QRat._make(self.den, self.num)

    def __truediv__(self, other) -> "QRat":
        o = as_qrat(other, strict=False)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other) -> "QRat":
        return as_qrat(other) * self.inverse()

    def __pow__(self, n: int) -> "QRat":
        if n < 0:
            return self.inverse() ** (-n)
        out = QRat.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- structure at q = 0 -----------------------------------------------
    def val0(self) -> int:
        """Order of vanishing at ``q = 0`` (negative for a pole)."""
        if not self.num:
            raise ZeroInput("val0 of zero")
        return _low(self.num) - _low(self.den)

    def ev0(self) -> Fraction:
        """Value at ``q = 0``."""
        if not self.num:
            return Fraction(0)
        v = self.val0()
        if v < 0:
            raise PoleAtZero(f"{self} has a pole at q=0")
        if v > 0:
            return Fraction(0)
        return self.num[_low(self.num)] / self.den[_low(self.den)]

    def in_A0(self) -> bool:
        return not self.num or self.val0() >= 0

    def bar(self) -> "QRat":
        """Image under ``q -> q^{-1}``."""
        if not self.num:
            return self
        n, d = len(self.num) - 1, len(self.den) - 1
        num = tuple(reversed(self.num))
        den = tuple(reversed(self.den))
        # N(1/q)/D(1/q) = q^{d-n} rev(N)/rev(D)
        if d >= n:
            num = (Fraction(0),) * (d - n) + num
        else:
            den = (Fraction(0),) * (n - d) + den
        return QRat._make(_trim(list(num)), _trim(list(den)))

    def evaluate(self, x) -> Fraction:
        x = Fraction(x)
        dv = sum((c * x**k for k, c in enumerate(self.den)), Fraction(0))
        if dv == 0:
            raise DivisionByZero(f"{self} has a pole at q={x}")
        return sum((c * x**k for k, c in enumerate(self.num)), Fraction(0)) / dv

    def series(self, order: int) -> dict[int, Fraction]:
        """Laurent expansion at ``q = 0``: coefficients of ``q^k`` for ``k < order``."""
        if not self.num:
            return {}
        k0 = _low(self.den)
        d = self.den[k0:]  # d[0] == 1
        n = self.num
        out: dict[int, Fraction] = {}
        # a = q^{-k0} n/d ; expand n/d as a power series
        need = order + k0
        s: list[Fraction] = []
        for m in range(max(need, 0)):
            acc = n[m] if m < len(n) else Fraction(0)
            for j in range(1, min(m, len(d) - 1) + 1):
                acc -= d[j] * s[m - j]
            s.append(acc)
        for m, c in enumerate(s):
            if c:
                out[m - k0] = c
        return out

    def to_laurent(self) -> QLaurent:
        if not self.is_laurent():
            raise ValueError(f"{self} is not a Laurent polynomial")
        shift = len(self.den) - 1
        return QLaurent._raw({k - shift: v for k, v in enumerate(self.num) if v})

    # -- text -------------------------------------------------------------
    def __str__(self) -> str:
        if self.is_laurent():
            return str(self.to_laurent())
        n = _poly_str(self.num)
        d = _poly_str(self.den)
        if len([c for c in self.num if c]) > 1:
            n = f"({n})"
        if len([c for c in self.den if c]) > 1 or "*" in d or "/" in d:
            d = f"({d})"
        return f"{n}/{d}"

    def __repr__(self) -> str:
        return f"QRat({self})"


def as_qrat(x, strict: bool = True) -> QRat | None:
    if isinstance(x, QRat):
        return x
    if isinstance(x, (int, Fraction)):
        return QRat.const(x)
    if isinstance(x, QLaurent):
        return x.to_qrat()
    if isinstance(x, str):
        return QRat.parse(x)
    if strict:
        raise TypeError(f"cannot convert {x!r} to QRat")
    return None


ONE = QRat.one()
ZERO = QRat.zero()
Q = QRat.qpow(1)


# ---------------------------------------------------------------------------
# parser for "p(q)/r(q)" style text


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text: str) -> list[tuple[str, object, int]]:
        toks = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                toks.append(("int", int(text[i:j]), i))
                i = j
            elif ch == "q":
                toks.append(("q", None, i))
                i += 1
            elif ch in "+-*/^()":
                toks.append((ch, None, i))
                i += 1
            else:
                raise ParseError(f"unexpected character {ch!r} at position {i}")
        toks.append(("end", None, len(text)))
        return toks

    def _peek(self):
        return self.toks[self.pos]

    def _take(self, kind=None):
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind!r} at position {tok[2]} in {self.text!r}")
        self.pos += 1
        return tok

    def parse(self) -> QRat:
        v = self._expr()
        if self._peek()[0] != "end":
            raise ParseError(f"trailing input at position {self._peek()[2]} in {self.text!r}")
        return v

    def _expr(self) -> QRat:
        v = self._term()
        while self._peek()[0] in "+-":
            op = self._take()[0]
            w = self._term()
            v = v + w if op == "+" else v - w
        return v

    def _term(self) -> QRat:
        v = self._unary()
        while self._peek()[0] in ("*", "/", "int", "q", "("):
            kind = self._peek()[0]
            if kind in ("*", "/"):
                self._take()
            w = self._unary()
            if kind == "/":
                if not w:
                    raise DivisionByZero("division by zero in expression")
                v = v / w
            else:
                v = v * w
        return v

    def _unary(self) -> QRat:
        if self._peek()[0] == "-":
            self._take()
            return -self._unary()
        if self._peek()[0] == "+":
            self._take()
            return self._unary()
        return self._power()

    def _power(self) -> QRat:
        base = self._atom()
        if self._peek()[0] == "^":
            self._take()
            paren = self._peek()[0] == "("
            if paren:
                self._take()
            sign = 1
            if self._peek()[0] == "-":
                self._take()
                sign = -1
            n = self._take("int")[1] * sign
            if paren:
                self._take(")")
            if n < 0 and not base:
                raise DivisionByZero("negative power of zero")
            return base**n
        return base

    def _atom(self) -> QRat:
        kind, val, pos = self._peek()
        if kind == "int":
            self._take()
            return QRat.const(val)
        if kind == "q":
            self._take()
            return Q
        if kind == "(":
            self._take()
            v = self._expr()
            self._take(")")
            return v
        raise ParseError(f"unexpected token {kind!r} at position {pos} in {self.text!r}")


# ---------------------------------------------------------------------------
# linear algebra over Q(q); matrices are lists of rows


def _echelon(rows: list[list[QRat]]) -> tuple[list[list[QRat]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    ncols = len(m[0]) if m else 0
    r = 0
    for c in range(ncols):
        p = next((k for k in range(r, len(m)) if m[k][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv for x in m[r]]
        for k in range(len(m)):
            if k != r and m[k][c]:
                f = m[k][c]
                m[k] = [a - f * b for a, b in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def matrix_rank(rows: Sequence[Sequence[QRat]]) -> int:
    if not rows or not rows[0]:
        return 0
    return len(_echelon([list(r) for r in rows])[1])


def nullspace(rows: Sequence[Sequence[QRat]], ncols: int | None = None) -> list[list[QRat]]:
    """Basis of ``{x : M x = 0}``."""
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    if not rows:
        return [[ONE if k == j else ZERO for k in range(ncols)] for j in range(ncols)]
    ech, piv = _echelon([list(r) for r in rows])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for r, c in enumerate(piv):
            v[c] = -ech[r][f]
        basis.append(v)
    return basis


def solve_linear(rows: Sequence[Sequence[QRat]], rhs: Sequence[QRat]) -> list[QRat] | None:
    """One solution of ``M x = rhs`` (free variables set to 0), or None."""
    ncols = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    ech, piv = _echelon(aug)
    if ncols in piv:
        return None
    x = [ZERO] * ncols
    for r, c in enumerate(piv):
        x[c] = ech[r][ncols]
    return x


def inverse_matrix(rows: Sequence[Sequence[QRat]]) -> list[list[QRat]]:
    n = len(rows)
    aug = [list(r) + [ONE if k == j else ZERO for k in range(n)] for j, r in enumerate(rows)]
    ech, piv = _echelon(aug)
    if piv[:n] != list(range(n)):
        raise DivisionByZero("singular matrix")
    return [row[n:] for row in ech[:n]]
