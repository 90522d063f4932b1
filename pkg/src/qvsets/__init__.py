"""Forcing semantics over finite spaces, variable sets and finite quantum contexts."""

from __future__ import annotations

from ._kernels import BACKEND
from .errors import (
    CutAxiomError,
    FilterError,
    FormulaSyntaxError,
    InvariantError,
    NonCommutingError,
    NotHermitianError,
    NotInAlgebraError,
    PresheafError,
    QVSetsError,
    RankError,
    SectionDomainError,
    SpaceMismatchError,
    TopologyError,
    UnboundVariableError,
    UnevaluableAtomError,
    UnknownDomainError,
)
from .formula import godel_translate, parse, to_text
from .forcing import Presheaf, Section, Structure, forces, forces_at, is_exact, truth_value
from .generic import (
    OpenFilter,
    collapse_eval,
    collapse_structure,
    collapse_value,
    enumerate_maximal_filters,
    filter_at_history,
    genericity_check,
    is_maximal,
    principal_filter,
)
from .quantum import (
    HermitianOperator,
    QuantumContext,
    StateVector,
    Tolerances,
    born_measure,
    build_context,
    character_eval,
    projection_of,
)
from .takeuti import (
    DedekindCut,
    SpectralFamily,
    check_cut_axioms,
    constant_cut,
    cut_add,
    cut_of_operator,
    cut_scale,
    forced_leq,
    interval_probability,
    interval_truth,
    operator_of_cut,
    spectral_family_of,
)
from .topology import (
    FiniteSpace,
    OpenSet,
    heyting_impl,
    heyting_neg,
    interior,
    lattice_atoms,
    minimal_neighborhood,
)
from .vset import VariableSet, comprehend, hat_embed, member_forced, validate

__version__ = "0.1.0"
