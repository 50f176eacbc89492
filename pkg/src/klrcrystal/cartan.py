"""Borcherds-Cartan data, root and weight bookkeeping, quantum integers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from math import factorial
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .qarith import ONE, QRat, ZERO

__all__ = [
    "CartanError",
    "CapExceeded",
    "BorcherdsCartanDatum",
    "RootVector",
    "WeightVector",
    "Violation",
    "weight_of",
    "concat",
    "expand_divided",
    "PRESETS",
    "load_datum",
]

DEFAULT_HEIGHT_CAP = 8


class CartanError(ValueError):
    pass


class CapExceeded(CartanError):
    pass


@dataclass(frozen=True)
class Violation:
    cell: str
    message: str

    def __str__(self) -> str:
        return f"{self.cell}: {self.message}"


class RootVector(Mapping[str, int]):
    """Element of Q+ as a finitely supported map index -> count."""

    __slots__ = ("_items", "_height")

    def __init__(self, data: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        pairs = data.items() if isinstance(data, Mapping) else data
        acc: dict[str, int] = {}
        for k, v in pairs:
            v = int(v)
            if v < 0:
                raise CartanError(f"negative coefficient {v} at index {k}")
            if v:
                acc[str(k)] = acc.get(str(k), 0) + v
        self._items = tuple(sorted(acc.items()))
        self._height = sum(acc.values())

    @classmethod
    def parse(cls, text: str) -> "RootVector":
        """Parse ``"1:2,2:1"``; an empty string is the zero root."""
        text = text.strip()
        if not text:
            return cls()
        pairs = []
        for chunk in text.split(","):
            if ":" not in chunk:
                raise CartanError(f"bad root entry {chunk!r}; expected index:count")
            k, v = chunk.split(":", 1)
            pairs.append((k.strip(), int(v)))
        return cls(pairs)

    @classmethod
    def of_sequence(cls, seq: Iterable[str]) -> "RootVector":
        return cls((i, 1) for i in seq)

    def __getitem__(self, key: str) -> int:
        for k, v in self._items:
            if k == key:
                return v
        return 0

    def __iter__(self) -> Iterator[str]:
        return (k for k, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return hash(self._items)

    def __eq__(self, other) -> bool:
        if isinstance(other, RootVector):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self == RootVector(other)
        return NotImplemented

    @property
    def height(self) -> int:
        return self._height

    def __add__(self, other: "RootVector") -> "RootVector":
        return RootVector(list(self._items) + list(RootVector(other)._items))

    def __sub__(self, other: "RootVector") -> "RootVector":
        acc = dict(self._items)
        for k, v in RootVector(other)._items:
            acc[k] = acc.get(k, 0) - v
        return RootVector(acc)

    def can_subtract(self, other: Mapping[str, int]) -> bool:
        return all(self[k] >= v for k, v in other.items())

    def scale(self, n: int) -> "RootVector":
        return RootVector({k: n * v for k, v in self._items})

    def __repr__(self) -> str:
        return f"RootVector({self.render()})"

    def render(self) -> str:
        return ",".join(f"{k}:{v}" for k, v in self._items)


class WeightVector(Mapping[str, int]):
    """A weight recorded through its pairings <h_i, lambda>."""

    __slots__ = ("_p",)

    def __init__(self, data: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        pairs = data.items() if isinstance(data, Mapping) else data
        self._p = tuple(sorted((str(k), int(v)) for k, v in pairs if int(v) != 0))

    @classmethod
    def parse(cls, text: str) -> "WeightVector":
        text = text.strip()
        if not text:
            return cls()
        pairs = []
        for chunk in text.split(","):
            k, v = chunk.split(":", 1)
            pairs.append((k.strip(), int(v)))
        return cls(pairs)

    def __getitem__(self, key: str) -> int:
        for k, v in self._p:
            if k == key:
                return v
        return 0

    def __iter__(self):
        return (k for k, _ in self._p)

    def __len__(self) -> int:
        return len(self._p)

    def __hash__(self) -> int:
        return hash(self._p)

    def __eq__(self, other) -> bool:
        if isinstance(other, WeightVector):
            return self._p == other._p
        if isinstance(other, Mapping):
            return self == WeightVector(other)
        return NotImplemented

    def __add__(self, other: "WeightVector") -> "WeightVector":
        acc = dict(self._p)
        for k, v in other.items():
            acc[k] = acc.get(k, 0) + v
        return WeightVector(acc)

    def __repr__(self) -> str:
        return f"WeightVector({dict(self._p)})"


def weight_of(seq: Iterable) -> RootVector:
    """Weight of a plain or divided sequence.

    Entries are either index names or ``(index, multiplicity)`` pairs.
    """
    acc: dict[str, int] = {}
    for entry in seq:
        if isinstance(entry, tuple):
            i, d = entry
        else:
            i, d = entry, 1
        acc[i] = acc.get(i, 0) + d
    return RootVector(acc)


def concat(a: Sequence, b: Sequence) -> tuple:
    """The concatenation ``a * b`` of two sequences."""
    return tuple(a) + tuple(b)


def expand_divided(seq: Iterable) -> tuple[str, ...]:
    out: list[str] = []
    for entry in seq:
        if isinstance(entry, tuple):
            out.extend([entry[0]] * entry[1])
        else:
            out.append(entry)
    return tuple(out)


@dataclass
class BorcherdsCartanDatum:
    """Index set, matrix ``A`` and symmetrizers ``s``.

    Optional ``P``/``Q`` blocks (raw JSON form) are carried along for the
    KLR parameter layer.
    """

    indices: tuple[str, ...]
    A: tuple[tuple[int, ...], ...]
    s: tuple[int, ...]
    P: dict | None = None
    Q: dict | None = None
    height_cap: int = DEFAULT_HEIGHT_CAP
    _pos: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.indices = tuple(str(i) for i in self.indices)
        self.A = tuple(tuple(int(x) for x in row) for row in self.A)
        self.s = tuple(int(x) for x in self.s)
        self._pos = {i: k for k, i in enumerate(self.indices)}

    # -- construction -----------------------------------------------------
    @classmethod
    def from_json(cls, data: Mapping | str | Path) -> "BorcherdsCartanDatum":
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text())
        try:
            return cls(
                indices=data["indices"],
                A=data["A"],
                s=data.get("s") or [1] * len(data["indices"]),
                P=data.get("P"),
                Q=data.get("Q"),
            )
        except (KeyError, TypeError) as exc:
            raise CartanError(f"malformed datum: {exc}") from exc

    def to_json(self) -> dict:
        out = {"indices": list(self.indices), "A": [list(r) for r in self.A], "s": list(self.s)}
        if self.P is not None:
            out["P"] = self.P
        if self.Q is not None:
            out["Q"] = self.Q
        return out

    @classmethod
    def checked(cls, indices, A, s=None, **kw) -> "BorcherdsCartanDatum":
        d = cls(indices, A, s if s is not None else [1] * len(indices), **kw)
        bad = d.validate()
        if bad:
            raise CartanError("; ".join(map(str, bad)))
        return d

    # -- validation -------------------------------------------------------
    def validate(self) -> list[Violation]:
        """All violated conditions; an empty list means the datum is valid."""
        out: list[Violation] = []
        n = len(self.indices)
        if len(set(self.indices)) != n:
            out.append(Violation("indices", "duplicate index names"))
        if len(self.A) != n or any(len(r) != n for r in self.A):
            out.append(Violation("A", f"matrix must be {n}x{n}"))
            return out
        if len(self.s) != n:
            out.append(Violation("s", f"expected {n} symmetrizers"))
            return out
        for k, i in enumerate(self.indices):
            a = self.A[k][k]
            if not (a == 2 or (a <= 0 and a % 2 == 0)):
                out.append(Violation(f"a_{i}{i}", f"a_{i}{i}={a} not 2 nor even <= 0"))
            if self.s[k] <= 0:
                out.append(Violation(f"s_{i}", "symmetrizer must be positive"))
        for k, i in enumerate(self.indices):
            for l, j in enumerate(self.indices):
                if k == l:
                    continue
                if self.A[k][l] > 0:
                    out.append(Violation(f"a_{i}{j}", f"off-diagonal a_{i}{j}={self.A[k][l]} > 0"))
                if k < l and (self.A[k][l] == 0) != (self.A[l][k] == 0):
                    out.append(Violation(f"a_{i}{j}", f"a_{i}{j}=0 xor a_{j}{i}=0"))
                if k < l and self.s[k] * self.A[k][l] != self.s[l] * self.A[l][k]:
                    out.append(
                        Violation(f"a_{i}{j}", f"s_{i}a_{i}{j} != s_{j}a_{j}{i}: DA not symmetric")
                    )
        return out

    # -- basic data -------------------------------------------------------
    def pos(self, i: str) -> int:
        try:
            return self._pos[str(i)]
        except KeyError:
            raise CartanError(f"unknown index {i!r}") from None

    def a(self, i: str, j: str) -> int:
        return self.A[self.pos(i)][self.pos(j)]

    def sym(self, i: str) -> int:
        return self.s[self.pos(i)]

    def sym_form(self, i: str, j: str) -> int:
        """``(alpha_i | alpha_j) = s_i a_ij``."""
        return self.s[self.pos(i)] * self.A[self.pos(i)][self.pos(j)]

    def root_form(self, a: Mapping[str, int], b: Mapping[str, int]) -> int:
        return sum(x * y * self.sym_form(i, j) for i, x in a.items() for j, y in b.items())

    def is_real(self, i: str) -> bool:
        return self.a(i, i) == 2

    @property
    def real_set(self) -> tuple[str, ...]:
        return tuple(i for i in self.indices if self.is_real(i))

    @property
    def imaginary_set(self) -> tuple[str, ...]:
        return tuple(i for i in self.indices if not self.is_real(i))

    def c(self, i: str) -> Fraction:
        """``c_i = -a_ii / 2`` (imaginary indices)."""
        return Fraction(-self.a(i, i), 2)

    def pairing(self, i: str, alpha: Mapping[str, int]) -> int:
        """``<h_i, alpha>`` for a root vector."""
        return sum(v * self.a(i, j) for j, v in alpha.items())

    def weight_update(self, lam: Mapping[str, int], alpha: Mapping[str, int]) -> WeightVector:
        """Pairings of ``lambda - alpha``."""
        return WeightVector({i: lam.get(i, 0) - self.pairing(i, alpha) for i in self.indices})

    def root(self, i: str, n: int = 1) -> RootVector:
        self.pos(i)
        return RootVector({i: n})

    # -- quantum integers -------------------------------------------------
    def _kind_check(self, i: str, kind: str | None) -> None:
        if kind is None:
            return
        real = self.is_real(i)
        if kind not in ("real", "imaginary") or (kind == "real") != real:
            raise CartanError(f"index {i} is {'real' if real else 'imaginary'}, not {kind}")

    def qint(self, n: int, i: str, kind: str | None = None) -> QRat:
        """``[n]_i`` for real ``i`` and ``{n}_i`` for imaginary ``i``."""
        self._kind_check(i, kind)
        if n < 0:
            raise CartanError("n must be nonnegative")
        if n == 0:
            return ZERO
        if self.is_real(i):
            step = self.sym(i)
        else:
            if self.a(i, i) == 0:
                return QRat.const(n)
            step = self.sym(i) * self.c(i)
            if step.denominator != 1:
                raise CartanError("s_i c_i must be an integer")
            step = int(step)
        # sum_{k=0}^{n-1} q^{step (n-1-2k)}
        acc = ZERO
        for k in range(n):
            acc = acc + QRat.qpow(step * (n - 1 - 2 * k))
        return acc

    def qfact(self, n: int, i: str, kind: str | None = None) -> QRat:
        self._kind_check(i, kind)
        out = ONE
        for k in range(1, n + 1):
            out = out * self.qint(k, i)
        return out

    def qbinom(self, m: int, n: int, i: str, kind: str | None = None) -> QRat:
        self._kind_check(i, kind)
        if n < 0 or n > m:
            return ZERO
        return self.qfact(m, i) / (self.qfact(n, i) * self.qfact(m - n, i))

    def qi(self, i: str, power: int = 1) -> QRat:
        """``q_i^power`` with ``q_i = q^{s_i}``."""
        return QRat.qpow(self.sym(i) * power)

    # -- sequences --------------------------------------------------------
    def _check_root(self, alpha: Mapping[str, int]) -> RootVector:
        alpha = RootVector(alpha)
        for i in alpha:
            self.pos(i)
        if alpha.height > self.height_cap:
            raise CapExceeded(f"height {alpha.height} exceeds cap {self.height_cap}")
        return alpha

    def enumerate_seq(self, alpha: Mapping[str, int]) -> list[tuple[str, ...]]:
        """Seq(alpha) in lexicographic order of the index order."""
        alpha = self._check_root(alpha)
        counts = [alpha[i] for i in self.indices]
        out: list[tuple[str, ...]] = []

        def rec(prefix: list[str]):
            if not any(counts):
                out.append(tuple(prefix))
                return
            for k, i in enumerate(self.indices):
                if counts[k]:
                    counts[k] -= 1
                    prefix.append(i)
                    rec(prefix)
                    prefix.pop()
                    counts[k] += 1

        rec([])
        return out

    def enumerate_seqd(self, alpha: Mapping[str, int]) -> list[tuple[tuple[str, int], ...]]:
        """Seqd(alpha): sequences of (index, multiplicity) pairs."""
        alpha = self._check_root(alpha)
        counts = [alpha[i] for i in self.indices]
        out: list[tuple[tuple[str, int], ...]] = []

        def rec(prefix: list):
            if not any(counts):
                out.append(tuple(prefix))
                return
            for k, i in enumerate(self.indices):
                for d in range(1, counts[k] + 1):
                    counts[k] -= d
                    prefix.append((i, d))
                    rec(prefix)
                    prefix.pop()
                    counts[k] += d

        rec([])
        return out

    def seq_count(self, alpha: Mapping[str, int]) -> int:
        alpha = RootVector(alpha)
        out = factorial(alpha.height)
        for v in alpha.values():
            out //= factorial(v)
        return out

    def roots_up_to(self, height: int) -> list[RootVector]:
        """All nonzero root vectors of height <= ``height``, by height then index order."""
        out: list[RootVector] = []
        n = len(self.indices)

        def rec(k: int, left: int, acc: list[int]):
            if k == n:
                if sum(acc):
                    out.append(RootVector(zip(self.indices, acc)))
                return
            for v in range(left + 1):
                acc.append(v)
                rec(k + 1, left - v, acc)
                acc.pop()

        rec(0, height, [])
        out.sort(key=lambda r: (r.height, [-r[i] for i in self.indices]))
        return out


# Small data used throughout the tests and accepted by name on the command line.
PRESETS: dict[str, dict] = {
    "D0": {"indices": ["1"], "A": [[2]], "s": [1]},
    "D1": {"indices": ["1", "2"], "A": [[2, -1], [-1, -2]], "s": [1, 1]},
    "Dim": {"indices": ["1"], "A": [[-2]], "s": [1]},
    "D2": {"indices": ["1"], "A": [[0]], "s": [1], "P": {"1": {"1,0": 1, "0,1": 1}}},
    "D3": {"indices": ["1", "2"], "A": [[2, 0], [0, -2]], "s": [1, 1]},
    "D1s": {"indices": ["1", "2"], "A": [[2, -2], [-2, -2]], "s": [1, 1]},
}


def load_datum(source: str | Path | Mapping, check: bool = True) -> BorcherdsCartanDatum:
    """Datum from a preset name, a JSON file path or a parsed mapping."""
    if isinstance(source, Mapping):
        d = BorcherdsCartanDatum.from_json(source)
    elif str(source) in PRESETS:
        d = BorcherdsCartanDatum.from_json(PRESETS[str(source)])
    else:
        path = Path(source)
        if not path.exists():
            raise CartanError(f"no datum file or preset named {source!r}")
        try:
            d = BorcherdsCartanDatum.from_json(path)
        except json.JSONDecodeError as exc:
            raise CartanError(f"{path}: invalid JSON ({exc})") from exc
    if check:
        bad = d.validate()
        if bad:
            raise CartanError("; ".join(map(str, bad)))
    return d
