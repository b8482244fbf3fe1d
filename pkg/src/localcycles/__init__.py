"""Exact local computations for special cycles on Hilbert-Blumenthal
surfaces at an odd prime p."""

from .padic import PrimeContext
from .qform import DiagonalForm, SymForm, diagonalize, parse_form

__all__ = ["PrimeContext", "DiagonalForm", "SymForm", "diagonalize", "parse_form"]
__version__ = "0.1.0"
