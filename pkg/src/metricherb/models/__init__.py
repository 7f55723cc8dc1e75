"""Desk-scale structures: Hilbert balls with expansions and finite classical structures."""
from .base import ModelError, Structure
from .discrete import (
    DiscreteStructure,
    build_discrete,
    elementary_abelian,
    grid,
    group_structure,
    kpartite,
    path_graph,
    union_complete,
    vector_space_f2,
)
from .groups import FiniteGroup, cyclic, direct_product
from .hilbert import (
    COMPLEX,
    REAL,
    HilbertStructure,
    build_hilbert,
    expand_group_action,
    expand_projection,
    expand_unitary,
    roots_of_unity,
)
from .modelfile import describe, dump_model, load_model, model_from_dict
from .theories import (
    AxiomReport,
    Condition,
    Theory,
    check_axioms,
    group_theory,
    hilbert_theory,
    projection_theory,
    spectrum_axiom,
    theory_for,
    unitary_theory,
)
