"""Observability of the discrete Schrödinger flow ``∂_t u = iΔu``.

Finite graphs are handled exactly through Gramians, eigenspace restriction
and a Hautus-type sweep; periodic subsets of ℤ through a p×p fiber
reduction; discrete tori through explicit product eigenfunctions.
"""
from .errors import (
    ContractViolationError,
    InvalidInputError,
    InvalidSetError,
    InvalidSpecError,
    ObsGraphError,
)
from .graphs import GraphSpec, ObservationSet, build_graph, laplacian, parse_set
from .observability import (
    exterior_average_norm,
    gramian,
    hautus_sweep,
    observability_constant,
    restriction_test,
)
from .spectral import eigendecompose, evolve, group_eigenspaces

__version__ = "0.1.0"

__all__ = [
    "ContractViolationError",
    "GraphSpec",
    "InvalidInputError",
    "InvalidSetError",
    "InvalidSpecError",
    "ObsGraphError",
    "ObservationSet",
    "build_graph",
    "eigendecompose",
    "evolve",
    "exterior_average_norm",
    "gramian",
    "group_eigenspaces",
    "hautus_sweep",
    "laplacian",
    "observability_constant",
    "parse_set",
    "restriction_test",
]
