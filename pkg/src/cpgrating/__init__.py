"""Casimir-Polder potential of a ground-state atom above a rectangular
dielectric grating: exact scattering computation at imaginary frequency,
plane/PFA references, and geometry diagnostics."""

__version__ = "0.1.0"

from .analysis import RhoPoint, SineFit, aperture_angle, rho, sine_fit, spatial_average
from .channels import DiffractionChannel, Polarization, make_channel, polarization_overlap
from .errors import (AmbiguousBranchError, ConvergenceError, CpGratingError,
                     InputError, RegionError, SingularNodeError, SolverError)
from .grating import (GratingGeometry, ReflectionMatrix, TruncationSpec,
                      eps_fourier, reflection_matrix)
from .materials import (DielectricFunction, Polarizability, alpha_imag_freq,
                        eps_imag_freq)
from .plane import FresnelPair, PlanePotential, fresnel, fresnel_he, pfa_potential, plane_potential
from .potential import (NodeKernel, PotentialField, QuadratureSpec, converge_nmax,
                        evaluate, fourier_coefficients, node_kernel, scan_fields)

__all__ = [
    "AmbiguousBranchError", "ConvergenceError", "CpGratingError",
    "DielectricFunction", "DiffractionChannel", "FresnelPair",
    "GratingGeometry", "InputError", "NodeKernel", "PlanePotential",
    "Polarizability", "Polarization", "PotentialField", "QuadratureSpec",
    "ReflectionMatrix", "RegionError", "RhoPoint", "SineFit",
    "SingularNodeError", "SolverError", "TruncationSpec", "alpha_imag_freq",
    "aperture_angle", "converge_nmax", "eps_fourier", "eps_imag_freq",
    "evaluate", "fourier_coefficients", "fresnel", "fresnel_he",
    "make_channel", "node_kernel", "pfa_potential", "plane_potential",
    "polarization_overlap", "reflection_matrix", "rho", "scan_fields",
    "sine_fit", "spatial_average",
]
