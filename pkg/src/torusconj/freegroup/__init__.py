"""Exact algebra of finite-rank free groups: words, automorphisms, subgroups."""

from .words import (
    FreeGroup,
    Letter,
    Word,
    canonical_conjugate,
    enumerate_cyclic_words,
    is_conjugate,
    primitive_root,
    reduce_letters,
    root_power,
)
from .autos import (
    BasisExpresser,
    FreeAut,
    inner_conjugator,
    is_automorphism,
    nielsen_generators,
    outer_order,
)
from .stallings import (
    SubgroupGraph,
    congruence_kernel,
    fold,
    is_characteristic,
    subgroups_of_index_at_most,
    whole_group_graph,
)

__all__ = [
    "FreeGroup",
    "Word",
    "reduce_letters",
    "is_conjugate",
    "primitive_root",
    "root_power",
    "canonical_conjugate",
    "enumerate_cyclic_words",
    "FreeAut",
    "is_automorphism",
    "nielsen_generators",
    "inner_conjugator",
    "outer_order",
    "BasisExpresser",
    "SubgroupGraph",
    "fold",
    "whole_group_graph",
    "congruence_kernel",
    "subgroups_of_index_at_most",
    "is_characteristic",
]
