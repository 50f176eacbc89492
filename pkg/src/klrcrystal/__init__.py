"""Quiver Hecke (KLR) algebras for Borcherds-Cartan data, the quantum
Borcherds algebra ``U_q^-``, its Grothendieck-group model and crystals."""

from .cartan import PRESETS, BorcherdsCartanDatum, RootVector, WeightVector, load_datum
from .qarith import QLaurent, QRat

__version__ = "0.1.0"

__all__ = [
    "BorcherdsCartanDatum",
    "RootVector",
    "WeightVector",
    "PRESETS",
    "load_datum",
    "QLaurent",
    "QRat",
]
