import pytest
import sympy as sp

from klrcrystal.cartan import load_datum
from klrcrystal.qarith import QRat

q = sp.Symbol("q")


def to_sympy(x) -> sp.Expr:
    """Independent route: re-read the printed form with sympy."""
    return sp.sympify(str(x).replace("^", "**"), locals={"q": q})


def from_sympy(expr) -> QRat:
    return QRat.parse(str(sp.sympify(expr)).replace("**", "^"))


def sym_equal(x, expr) -> bool:
    return sp.cancel(to_sympy(x) - sp.sympify(expr)) == 0


@pytest.fixture(scope="session")
def D0():
    return load_datum("D0")


@pytest.fixture(scope="session")
def D1():
    return load_datum("D1")


@pytest.fixture(scope="session")
def Dim():
    return load_datum("Dim")


@pytest.fixture(scope="session")
def D2():
    return load_datum("D2")


@pytest.fixture(scope="session")
def D3():
    return load_datum("D3")


@pytest.fixture(scope="session")
def D1s():
    return load_datum("D1s")


@pytest.fixture(scope="session")
def U1(D1):
    from klrcrystal.qalgebra import UqMinus

    return UqMinus(D1, height_cap=5)


@pytest.fixture(scope="session")
def L1(U1):
    from klrcrystal.qalgebra import LatticeData

    return LatticeData(U1, 4)
