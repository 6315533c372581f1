"""Exact symbolic verifier for a family of bi-Hamiltonian evolutionary
Monge-Ampere systems in four dimensions."""

from .jet_algebra import (  # noqa: F401
    JetExpr,
    DiffPoly,
    Rat,
    ZERO,
    ONE,
    jet,
    var,
    const,
    atom_expr,
    rat,
    fmt,
)

__all__ = [
    "JetExpr",
    "DiffPoly",
    "Rat",
    "ZERO",
    "ONE",
    "jet",
    "var",
    "const",
    "atom_expr",
    "rat",
    "fmt",
]
