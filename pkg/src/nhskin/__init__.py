"""Spectra, skin-effect diagnostics and phase diagrams of 1D nonreciprocal chains."""

__version__ = "0.1.0"

from .lattice import Boundary, CommensurabilityError, Family, HoppingChain, ModelSpec, assemble, build_chain  # noqa: E402
from .eig import Spectrum, eigenpairs, eigenvalues  # noqa: E402
from .classify import gauge, hermitianize, predict_class, pseudo_hermiticity_residual  # noqa: E402
from .skin import SkinConfig, dipr, dmipr  # noqa: E402
from .nonbloch import beta_magnitude, critical_manifold, solve_beta_unity  # noqa: E402
from .pointgap import gap_transition_scan, pbc_obc_distance, winding_number  # noqa: E402

__all__ = [
    "__version__",
    "Boundary",
    "CommensurabilityError",
    "Family",
    "HoppingChain",
    "ModelSpec",
    "assemble",
    "build_chain",
    "Spectrum",
    "eigenpairs",
    "eigenvalues",
    "gauge",
    "hermitianize",
    "predict_class",
    "pseudo_hermiticity_residual",
    "SkinConfig",
    "dipr",
    "dmipr",
    "beta_magnitude",
    "critical_manifold",
    "solve_beta_unity",
    "gap_transition_scan",
    "pbc_obc_distance",
    "winding_number",
]
