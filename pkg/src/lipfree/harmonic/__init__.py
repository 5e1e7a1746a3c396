"""Summability kernels on the circle, the 2-torus and the sphere."""
from .circle import (CircleFunction, ConvergenceReport, FejerKernel, TorusFunction, YoungReport,
                     arc_distance, audit_pointwise_convergence, audit_young, fejer_convolve,
                     fejer_convolve_torus, grid, lip_estimate, torus_lip_estimate)
from .sphere import (CesaroKernel, SphereFunction, SphereGrid, SphereKernelSpec, cesaro_kernel,
                     cesaro_numbers, direct_convolve, legendre_p, legendre_series,
                     normalized_legendre, sphere_convolve, weight_constant, weighted_l1)

__all__ = [
    "CircleFunction", "ConvergenceReport", "FejerKernel", "TorusFunction", "YoungReport",
    "arc_distance", "audit_pointwise_convergence", "audit_young", "fejer_convolve",
    "fejer_convolve_torus", "grid", "lip_estimate", "torus_lip_estimate",
    "CesaroKernel", "SphereFunction", "SphereGrid", "SphereKernelSpec", "cesaro_kernel",
    "cesaro_numbers", "direct_convolve", "legendre_p", "legendre_series",
    "normalized_legendre", "sphere_convolve", "weight_constant", "weighted_l1",
]
