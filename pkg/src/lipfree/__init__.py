"""Exact computations in Lipschitz-free spaces over groups and metric spaces."""
from .basis import BasisSystem, audit_claim, basis_vector, expand, project, reconstruct, retraction
from .errors import (ConvergenceError, LipfreeError, OutOfRangeError, ResourceError,
                     UnsupportedError, ValidationError)
from .freespace import (Molecule, TransportCertificate, brute_force_norm, kr_norm, kr_norm_float,
                        lip_constant)
from .groups import (CayleyBall, FiniteTable, FreeAbelian, FreeGroup, FreeProductCyclic, GroupSpec,
                     audit_combability, build_ball, word_distance)
from .metric import (HyperboloidPoint, PointedMetricSpace, greedy_net, hyperbolic_distance,
                     snowflake, validate)
from .quotient import (FiniteMetricGroup, QuotientStructure, audit_projection, averaging_projection,
                       biinvariant_majorant, quotient, tower_convergence)

__version__ = "0.1.0"

__all__ = [
    "BasisSystem", "audit_claim", "basis_vector", "expand", "project", "reconstruct", "retraction",
    "ConvergenceError", "LipfreeError", "OutOfRangeError", "ResourceError", "UnsupportedError",
    "ValidationError", "Molecule", "TransportCertificate", "brute_force_norm", "kr_norm",
    "kr_norm_float", "lip_constant", "CayleyBall", "FiniteTable", "FreeAbelian", "FreeGroup",
    "FreeProductCyclic", "GroupSpec", "audit_combability", "build_ball", "word_distance",
    "HyperboloidPoint", "PointedMetricSpace", "greedy_net", "hyperbolic_distance", "snowflake",
    "validate", "FiniteMetricGroup", "QuotientStructure", "audit_projection",
    "averaging_projection", "biinvariant_majorant", "quotient", "tower_convergence",
]
