"""Lubricated contact in 2D plane strain.

Finite-deformation solids, an averaged thin-film flow on the contact
boundary and regularized frictional contact, all solved in one Newton
loop.  The public pieces most scripts need are re-exported here; the
submodules carry the full surface.
"""

__version__ = "0.1.0"

from .contact import FrictionParams, RegularizationParams, suggest_kappa
from .coupled import ConvergenceError, CoupledModel, CoupledState, advance
from .lubrication import FluidParams
from .material import NeoHookeanParams
from .mesh import InterfaceMesh, Mesh, generate_half_cylinder, generate_pin, read_mesh, write_mesh
from .mortar import RigidPlane
from .scenarios import (
    ConfigError,
    RunArtifacts,
    ScenarioConfig,
    build_model,
    default_config,
    run_scenario,
)
from .solid import DofMap, SolidModel, TimeIntegrator

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "CoupledModel",
    "CoupledState",
    "DofMap",
    "FluidParams",
    "FrictionParams",
    "InterfaceMesh",
    "Mesh",
    "NeoHookeanParams",
    "RegularizationParams",
    "RigidPlane",
    "RunArtifacts",
    "ScenarioConfig",
    "SolidModel",
    "TimeIntegrator",
    "advance",
    "build_model",
    "default_config",
    "generate_half_cylinder",
    "generate_pin",
    "read_mesh",
    "run_scenario",
    "suggest_kappa",
    "write_mesh",
    "__version__",
]
