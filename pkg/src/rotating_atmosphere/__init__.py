"""Rotating barotropic atmospheres with a physical vacuum boundary.

Stationary states, the geometry of their free boundary, Lagrangian
kinematics, and a Galerkin model of the linearised waves with its quadratic
eigenvalue pencil and energy-conserving time integration.
"""
import os

# thread count for the BLAS backends; must be set before numpy loads
_threads = os.environ.get("ROTATING_ATMOSPHERE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

from .assembly import PencilMatrices, assemble_pencil  # noqa: E402
from .atmosphere import (PhysicalParams, RotationProfile, StationaryState, check_admissibility,  # noqa: E402
                         reference_params)
from .errors import AtmosphereError  # noqa: E402
from .evolution import EvolutionState, energy, evolve, step  # noqa: E402
from .geometry import LevelSetAnalysis, analyze, analyze_state, classify_case, cubic_roots  # noqa: E402
from .radial import radial_sturm_liouville  # noqa: E402
from .spectrum import SpectrumResult, companion_linearize, reality_check, solve_pencil  # noqa: E402

__all__ = [
    "PencilMatrices", "assemble_pencil", "PhysicalParams", "RotationProfile", "StationaryState",
    "check_admissibility", "reference_params", "AtmosphereError", "EvolutionState", "energy", "evolve",
    "step", "LevelSetAnalysis", "analyze", "analyze_state", "classify_case", "cubic_roots",
    "radial_sturm_liouville", "SpectrumResult", "companion_linearize", "reality_check", "solve_pencil",
]
