"""Numerical toolkit for sign-indefinite Laplacians on finite metric graphs."""

__version__ = "0.1.0"

from .conditions import (  # noqa: E402
    BoundaryConditions,
    NotSelfAdjointError,
    check_laplacian_self_adjoint,
    check_self_adjoint,
    from_unitary,
    standard_conditions,
    subspace_equal,
    to_projector_form,
)
from .graph import GraphError, MetricGraph, build_graph, glue_graphs  # noqa: E402
from .scattering import CriticalSetError, scattering_matrix, star_product_glue  # noqa: E402
from .secular import PoleError, ResonanceError, SpectralParams  # noqa: E402
from .spectral import find_eigenvalues, find_resonances, zero_mode_dimension  # noqa: E402

__all__ = [
    "BoundaryConditions", "CriticalSetError", "GraphError", "MetricGraph", "NotSelfAdjointError",
    "PoleError", "ResonanceError", "SpectralParams", "build_graph", "check_laplacian_self_adjoint",
    "check_self_adjoint", "find_eigenvalues", "find_resonances", "from_unitary", "glue_graphs",
    "scattering_matrix", "standard_conditions", "star_product_glue", "subspace_equal",
    "to_projector_form", "zero_mode_dimension",
]
