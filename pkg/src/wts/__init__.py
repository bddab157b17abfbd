"""Weighted regular tree grammars with storage over multioperator monoids."""

from .grammar import Rule, Wrtg, derivations, evaluate
from .storage import StorageType
from .terms import RankedAlphabet, Tree, parse_term
from .weights import MMonoid, Op, StrongBimonoid

__version__ = "0.1.0"

__all__ = ["MMonoid", "Op", "RankedAlphabet", "Rule", "StorageType", "StrongBimonoid", "Tree",
           "Wrtg", "derivations", "evaluate", "parse_term"]
