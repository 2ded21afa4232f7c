"""Numerical laboratory for self-similar chemotaxis profiles: steady states,
linearized spectra, functional-inequality harnesses, and nonlinear
perturbation dynamics on a periodic planar grid."""

from .numgrid import (
    ConfigurationError,
    Field,
    ModelParams,
    NormVector,
    PlanarGrid,
    RadialGrid,
    State,
    homogeneous_norm,
    make_radial_grid,
    min_r_max,
    state_norms,
    weighted_norms,
)
from .profiles import (
    DivergenceError,
    RadialProfile,
    closed_form_limit,
    lift_to_plane,
    profile_mass,
    solve_profile,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DivergenceError",
    "Field",
    "ModelParams",
    "NormVector",
    "PlanarGrid",
    "RadialGrid",
    "RadialProfile",
    "State",
    "closed_form_limit",
    "homogeneous_norm",
    "lift_to_plane",
    "make_radial_grid",
    "min_r_max",
    "profile_mass",
    "solve_profile",
    "state_norms",
    "weighted_norms",
    "__version__",
]
