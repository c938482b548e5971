"""Exact computation and comparison of L-invariants for filtered (phi, N)-modules."""

from .exactlin import Matrix, Subspace
from .linvariants import compare, fm_invariant, fm_operator, gb_global, gb_local
from .phinmod import FilPhiNModule, WeightedFlag, validate

__all__ = [
    "FilPhiNModule",
    "Matrix",
    "Subspace",
    "WeightedFlag",
    "compare",
    "fm_invariant",
    "fm_operator",
    "gb_global",
    "gb_local",
    "validate",
]
