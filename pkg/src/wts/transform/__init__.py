"""Grammar constructions."""

from .chain import chain_star, eliminate_chain_rules
from .normal import (embed_storage, eliminate_finite_storage, eliminate_finite_storage_unweighted,
                     one_initial)
from .separation import (AlphabeticMapping, Decomposition, alphabetic_preimages, apply_alphabetic,
                         behaviour_sum, decompose, decomposition_value, eval_alphabetic, fuse_storage,
                         fuse_weights, in_language, preimages_in_language, recompose, related,
                         separate_storage, separate_weights)
from .support import (EmptinessResult, SupportTables, cut, oplus, oplus_bar, support_empty,
                      support_grammar, support_tables)

__all__ = [
    "AlphabeticMapping", "Decomposition", "EmptinessResult", "SupportTables",
    "alphabetic_preimages", "apply_alphabetic", "behaviour_sum", "chain_star", "cut", "decompose",
    "decomposition_value", "embed_storage", "eliminate_chain_rules", "eliminate_finite_storage",
    "eliminate_finite_storage_unweighted", "eval_alphabetic", "fuse_storage", "fuse_weights",
    "in_language", "one_initial", "oplus", "oplus_bar", "preimages_in_language", "recompose",
    "related", "separate_storage", "separate_weights", "support_empty", "support_grammar",
    "support_tables",
]
