"""Transient electro-thermal FE simulation of anodic dissolution in ECM.

The simulator keeps one mesh for the entire process: dissolution is an
internal per-integration-point level that mixes metal and electrolyte
properties, driven by the unit-cell electric currents through a
backward-Euler update.
"""

from .config import (ScenarioConfig, build_simulation, get_preset,
                     load_config, PRESETS)
from .dissolution import (CutoffLedger, IpState, activation_update,
                          currents_from_density, update_level)
from .fem import EffectiveProps, element_system, element_systems, shape_trilinear
from .geometry import (Mesh, UnitCellGeom, build_scenario_mesh,
                       element_axis_areas, element_volume, unit_cell_geom)
from .materials import (MaterialTable, PhaseSpec, PolyParam,
                        default_material_table, effective_param, eval_param,
                        faraday_specific_volume, peltier_coeff)
from .postprocess import analytic_gap_width, cathode_potential, roughness
from .solver import DirichletBC, RunResult, Simulation, SolverError

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig", "build_simulation", "get_preset", "load_config",
    "PRESETS", "CutoffLedger", "IpState", "activation_update",
    "currents_from_density", "update_level", "EffectiveProps",
    "element_system", "element_systems", "shape_trilinear", "Mesh",
    "UnitCellGeom", "build_scenario_mesh", "element_axis_areas",
    "element_volume", "unit_cell_geom", "MaterialTable", "PhaseSpec",
    "PolyParam", "default_material_table", "effective_param", "eval_param",
    "faraday_specific_volume", "peltier_coeff", "analytic_gap_width",
    "cathode_potential", "roughness", "DirichletBC", "RunResult",
    "Simulation", "SolverError", "__version__",
]
