"""Volumes of hyperbolic and spherical simplices, their analytic continuation, and flexible polyhedra."""

from __future__ import annotations

from .continuation import (ComplexPath, ContinuationState, MonodromyReport, continue_volume,
                           determinant_linking, init_state, linking_number, linking_table,
                           path_clearance, verify_theorem_key, verify_theorem_key2)
from .errors import ArgumentError, DomainError, FlexvolError, NumericError
from .flexion import (ConstraintSystem, FlexionTrace, FlexReport, bricard_octahedron,
                      flex_analysis, octahedron_complex, quadrilateral, residuals,
                      solve_configuration, trace_flexion)
from .gram import (DomainClass, DomainKind, GramMatrix, HypersurfaceId, Space, classify_domain,
                   components, gram_from_vertices, jacobi_residual, minor, principal_minor,
                   vertices_from_gram, witness_matrix)
from .loops import circuit, loop_family
from .polyhedra import (Configuration, EdgeLengthSet, PseudoManifold, generalized_volume,
                        indicator_volume_mc, oriented_cone_volume, oriented_dihedral_angle,
                        total_mean_curvature, validate_pseudomanifold)
from .volume import (DihedralAngle, Method, VolumeResult, dihedral_angle, schlafli_integrate,
                     volume, volume_oracle_quadrature)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "ComplexPath", "Configuration", "ConstraintSystem", "ContinuationState",
    "DihedralAngle", "DomainClass", "DomainError", "DomainKind", "EdgeLengthSet", "FlexReport",
    "FlexionTrace", "FlexvolError", "GramMatrix", "HypersurfaceId", "Method", "MonodromyReport",
    "NumericError", "PseudoManifold", "Space", "VolumeResult", "bricard_octahedron", "circuit",
    "classify_domain", "components", "continue_volume", "determinant_linking", "dihedral_angle",
    "flex_analysis", "generalized_volume", "gram_from_vertices", "indicator_volume_mc",
    "init_state", "jacobi_residual", "linking_number", "linking_table", "loop_family", "minor",
    "octahedron_complex", "oriented_cone_volume", "oriented_dihedral_angle", "path_clearance",
    "principal_minor", "quadrilateral", "residuals", "schlafli_integrate", "solve_configuration",
    "total_mean_curvature", "trace_flexion", "validate_pseudomanifold", "verify_theorem_key",
    "verify_theorem_key2", "vertices_from_gram", "volume", "volume_oracle_quadrature",
    "witness_matrix",
]
