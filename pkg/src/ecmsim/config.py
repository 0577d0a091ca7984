"""Scenario configuration: schema, presets, YAML round-trip, run assembly.

A scenario file is a YAML mapping with the sections geometry, mesh,
material, bc, time, tolerances and output. Unknown keys are rejected;
missing required keys raise with the offending key path. The four
presets encode the validation scenarios: stationary gap (ex1), planar
specimen (ex2), curved specimen with elevation (ex3) and pulsed
machining of a rough surface (ex4).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import geometry, materials, postprocess, solver


class ConfigError(ValueError):
    """Configuration parse or validation failure."""


@dataclass
class GeometryConfig:
    case: str  # rect_gap | planar | curved | spikes
    l: float = 0.0  # workpiece edge length, m
    s: float = 0.0  # working gap width, m
    g: float = 0.0  # extrusion thickness, m
    w: float = 0.0  # analyzed surface width (spikes), m
    p: float = 0.0  # initial roughness peak, m
    h: float = 0.0  # metal depth below the profile (spikes), m
    r: float = 0.0  # fillet/tip radius, m
    x1: float = 0.0
    x2: float = 0.0
    y1: float = 0.0
    y2: float = 0.0
    vertex_x: float = 0.0  # parabola vertex (curved case), m
    vertex_y: float = 0.0


@dataclass
class MeshConfig:
    nx: int = 20  # divisions along the surface (bottom edge for rect_gap)
    ny: int | None = None
    nx_top: int | None = None  # distorted rect_gap meshes: top edge divisions
    gap_cols: int | None = None
    metal_rows: int = 22
    metal_ratio: float = 0.85
    fine_layers: int = 6
    fine_h: float | None = None
    elec_rows: int = 4
    elec_ratio: float = 1.3
    fine_floor: float | None = None  # stair meshes: bottom of the uniform zone
    coarse_rows_below: int = 5
    coarse_rows_above: int = 10


@dataclass
class MaterialConfig:
    table: str = "42crmo4_nano3"
    k_e_electrolyte: float | None = None  # constant override, A/(V*m)
    v_eff: float | None = None  # m^3/(A*s)
    efficiency: float = 1.0


@dataclass
class BCConfig:
    delta_v: float = 0.0  # applied voltage, V
    delta_v_pol: float = 0.0  # polarization reduction (taken off the anode)
    feed_rate: float = 0.0  # cathode feed, m/s
    anode: dict = field(default_factory=lambda: {"kind": "constant"})
    cathode: dict = field(default_factory=lambda: {"kind": "ramp"})
    theta: dict = field(default_factory=lambda: {"kind": "uniform",
                                                 "value": 298.15})


@dataclass
class TimeConfig:
    dt: float
    t_end: float


@dataclass
class ToleranceConfig:
    newton_rtol: float = 1e-8
    newton_max_iter: int = 12
    dissolved_threshold: float = 0.999


@dataclass
class OutputConfig:
    record_every: int = 1
    vtk_every: int = 0


@dataclass
class ScenarioConfig:
    name: str
    geometry: GeometryConfig
    mesh: MeshConfig
    material: MaterialConfig
    bc: BCConfig
    time: TimeConfig
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self):
        t = self.time
        if t.dt <= 0.0:
            raise ConfigError("time.dt must be positive")
        if t.t_end < t.dt:
            raise ConfigError("time.t_end must be at least one step")
        geo = self.geometry
        if geo.case not in ("rect_gap", "planar", "curved", "spikes"):
            raise ConfigError(f"geometry.case '{geo.case}' unknown")
        if geo.g <= 0.0 or geo.s <= 0.0:
            raise ConfigError("geometry.s and geometry.g must be positive")
        if geo.case in ("rect_gap", "planar", "curved") and geo.l <= 0.0:
            raise ConfigError("geometry.l must be positive")
        if geo.case == "spikes" and min(geo.w, geo.p, geo.h, geo.x1) <= 0.0:
            raise ConfigError("spike geometry needs positive w, p, h, x1")
        an = self.bc.anode
        if an.get("kind") == "sawtooth":
            if an.get("v_max", 0.0) <= 0.0 or an.get("t_pulse", 0.0) <= 0.0:
                raise ConfigError("sawtooth anode needs v_max > 0, t_pulse > 0")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def copy(self):
        return from_dict(self.to_dict())


_SECTIONS = {
    "geometry": GeometryConfig,
    "mesh": MeshConfig,
    "material": MaterialConfig,
    "bc": BCConfig,
    "time": TimeConfig,
    "tolerances": ToleranceConfig,
    "output": OutputConfig,
}


def _build_section(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    required = [f.name for f in dataclasses.fields(cls)
                if f.default is dataclasses.MISSING
                and f.default_factory is dataclasses.MISSING]
    missing = sorted(set(required) - set(data))
    if missing:
        raise ConfigError(f"{path}: missing required keys {missing}")
    return cls(**data)


def from_dict(data) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    unknown = sorted(set(data) - set(_SECTIONS) - {"name"})
    if unknown:
        raise ConfigError(f"top level: unknown keys {unknown}")
    kwargs = {"name": data.get("name", "custom")}
    for section, cls in _SECTIONS.items():
        if section in data:
            kwargs[section] = _build_section(cls, data[section], section)
        elif section in ("geometry", "time"):
            raise ConfigError(f"missing required section '{section}'")
        else:
            kwargs[section] = cls()
    return ScenarioConfig(**kwargs).validate()


def load_config(path) -> ScenarioConfig:
    """Parse and validate a YAML scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"parse error in {path}: {err}") from err
    return from_dict(data)


def save_config(config: ScenarioConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def apply_override(config: ScenarioConfig, dotted_key, raw_value):
    """Apply one --override key=value pair (YAML-typed) to a config copy."""
    data = config.to_dict()
    try:
        value = yaml.safe_load(raw_value)
    except yaml.YAMLError as err:
        raise ConfigError(f"override value '{raw_value}': {err}") from err
    node = data
    parts = dotted_key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"override path '{dotted_key}' not found")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"override path '{dotted_key}' not found")
    node[parts[-1]] = value
    return from_dict(data)


# ---------------------------------------------------------------------------
# Presets: every number the validation scenarios state, overridable.


def preset_ex1() -> ScenarioConfig:
    """Stationary dissolution against the analytic gap-width solution."""
    return ScenarioConfig(
        name="ex1",
        geometry=GeometryConfig(case="rect_gap", l=1.0e-3, s=0.32e-3,
                                g=0.1e-3),
        mesh=MeshConfig(nx=20),
        material=MaterialConfig(k_e_electrolyte=16.0, v_eff=1.0e-11),
        bc=BCConfig(delta_v=20.0, delta_v_pol=0.0, feed_rate=1.0e-5,
                    anode={"kind": "constant"},
                    cathode={"kind": "ramp"},
                    theta={"kind": "uniform", "value": 323.15}),
        time=TimeConfig(dt=0.01, t_end=60.0),
    ).validate()


def preset_ex2() -> ScenarioConfig:
    """Planar specimen with in/outflow temperature strips."""
    return ScenarioConfig(
        name="ex2",
        geometry=GeometryConfig(case="planar", l=7.0e-3, s=0.36e-3,
                                g=0.1e-3),
        mesh=MeshConfig(nx=56, metal_rows=22, fine_layers=6, fine_h=0.09e-3,
                        elec_rows=4),
        material=MaterialConfig(),
        bc=BCConfig(delta_v=15.0, delta_v_pol=3.0, feed_rate=1.0e-3 / 60.0,
                    anode={"kind": "constant"},
                    cathode={"kind": "ramp"},
                    theta={"kind": "strips", "t_in": 298.15, "t_out": 308.15}),
        time=TimeConfig(dt=0.01, t_end=400.0),
    ).validate()


def preset_ex3() -> ScenarioConfig:
    """Curved specimen with an elevation on the crown."""
    cfg = preset_ex2()
    return ScenarioConfig(
        name="ex3",
        geometry=GeometryConfig(case="curved", l=7.0e-3, s=0.36e-3, g=0.1e-3,
                                x1=0.5e-3, x2=3.0e-3, y1=0.25e-3, y2=0.5e-3,
                                vertex_x=1.5e-3, vertex_y=0.3e-3),
        mesh=MeshConfig(nx=70, metal_rows=20, fine_layers=6, fine_h=0.06e-3,
                        elec_rows=5),
        material=MaterialConfig(),
        bc=cfg.bc,
        time=TimeConfig(dt=0.01, t_end=125.0),
    ).validate()


def preset_ex4() -> ScenarioConfig:
    """Pulsed machining of an idealized rough surface."""
    return ScenarioConfig(
        name="ex4",
        geometry=GeometryConfig(case="spikes", s=51.875e-6, g=1.0e-6,
                                w=20.0e-6, p=6.25e-6, h=21.875e-6,
                                r=0.625e-6, x1=2.5e-6, y1=5.0e-6),
        mesh=MeshConfig(nx=60, fine_h=0.3125e-6, fine_floor=-10.0e-6,
                        coarse_rows_below=5, coarse_rows_above=10),
        material=MaterialConfig(),
        bc=BCConfig(delta_v=20.0, delta_v_pol=0.0, feed_rate=0.0,
                    anode={"kind": "sawtooth", "v_max": 20.0,
                           "t_pulse": 4.0e-3},
                    cathode={"kind": "constant", "value": 0.0},
                    theta={"kind": "uniform", "value": 298.15}),
        time=TimeConfig(dt=1.0e-5, t_end=0.05),
    ).validate()


PRESETS = {
    "ex1": preset_ex1,
    "ex2": preset_ex2,
    "ex3": preset_ex3,
    "ex4": preset_ex4,
}


def get_preset(name) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown preset '{name}' (have {sorted(PRESETS)})") from None


# ---------------------------------------------------------------------------
# Assembly of a runnable simulation


def build_material_table(mat: MaterialConfig) -> materials.MaterialTable:
    if mat.table != "42crmo4_nano3":
        raise ConfigError(f"unknown material table '{mat.table}'")
    return materials.default_material_table(
        k_e_electrolyte=mat.k_e_electrolyte, v_eff=mat.v_eff,
        efficiency=mat.efficiency)


def build_mesh(config: ScenarioConfig) -> geometry.Mesh:
    geo, mesh = config.geometry, config.mesh
    spec = {"case": geo.case}
    if geo.case == "rect_gap":
        spec.update(l=geo.l, s=geo.s, g=geo.g, nx=mesh.nx, ny=mesh.ny,
                    nx_top=mesh.nx_top, gap_cols=mesh.gap_cols)
    elif geo.case == "planar":
        spec.update(l=geo.l, s=geo.s, g=geo.g, nx=mesh.nx,
                    metal_rows=mesh.metal_rows, metal_ratio=mesh.metal_ratio,
                    fine_layers=mesh.fine_layers, fine_h=mesh.fine_h,
                    elec_rows=mesh.elec_rows, elec_ratio=mesh.elec_ratio)
    elif geo.case == "curved":
        spec.update(l=geo.l, s=geo.s, g=geo.g, nx=mesh.nx,
                    x1=geo.x1, x2=geo.x2, y1=geo.y1, y2=geo.y2,
                    vertex_x=geo.vertex_x, vertex_y=geo.vertex_y,
                    metal_rows=mesh.metal_rows, metal_ratio=mesh.metal_ratio,
                    fine_layers=mesh.fine_layers, fine_h=mesh.fine_h,
                    elec_rows=mesh.elec_rows, elec_ratio=mesh.elec_ratio)
    else:
        spec.update(w=geo.w, p=geo.p, h=geo.h, r=geo.r, x1=geo.x1, s=geo.s,
                    g=geo.g, nx=mesh.nx, fine_h=mesh.fine_h,
                    fine_floor=mesh.fine_floor,
                    coarse_rows_below=mesh.coarse_rows_below,
                    coarse_rows_above=mesh.coarse_rows_above)
    return geometry.build_scenario_mesh(spec)


def build_bcs(config: ScenarioConfig, mesh: geometry.Mesh):
    bc = config.bc
    v_anode = bc.delta_v - bc.delta_v_pol
    sets = mesh.node_sets

    def anode_schedule():
        kind = bc.anode.get("kind", "constant")
        if kind == "constant":
            value = bc.anode.get("value", v_anode)
            return lambda t: value
        if kind == "sawtooth":
            v_max, t_pulse = bc.anode["v_max"], bc.anode["t_pulse"]
            return lambda t: v_max * ((t / t_pulse) % 1.0)
        raise ConfigError(f"unknown anode schedule '{kind}'")

    def cathode_schedule():
        kind = bc.cathode.get("kind", "ramp")
        if kind == "constant":
            value = bc.cathode.get("value", 0.0)
            return lambda t: value
        if kind == "ramp":
            s = config.geometry.s
            feed = bc.feed_rate
            return lambda t: postprocess.cathode_potential(t, v_anode, feed, s)
        raise ConfigError(f"unknown cathode schedule '{kind}'")

    bcs = [
        solver.DirichletBC("v", sets["anode"], anode_schedule()),
        solver.DirichletBC("v", sets["cathode"], cathode_schedule()),
    ]
    kind = bc.theta.get("kind", "uniform")
    if kind == "uniform":
        value = bc.theta["value"]
        bcs.append(solver.DirichletBC("theta", sets["t_all"],
                                      lambda t: value))
        theta_init = value
    elif kind == "strips":
        t_in, t_out = bc.theta["t_in"], bc.theta["t_out"]
        bcs.append(solver.DirichletBC("theta", sets["t_in"], lambda t: t_in))
        bcs.append(solver.DirichletBC("theta", sets["t_out"], lambda t: t_out))
        theta_init = t_in
    else:
        raise ConfigError(f"unknown theta boundary kind '{kind}'")
    return bcs, theta_init


def build_simulation(config: ScenarioConfig) -> solver.Simulation:
    """Mesh, material table, schedules and solver for one scenario."""
    config.validate()
    table = build_material_table(config.material)
    mesh = build_mesh(config)
    bcs, theta_init = build_bcs(config, mesh)
    tol = config.tolerances
    out = config.output
    return solver.Simulation(
        mesh=mesh, table=table, bcs=bcs, dt=config.time.dt,
        t_end=config.time.t_end, theta_init=theta_init,
        newton_rtol=tol.newton_rtol, newton_max_iter=tol.newton_max_iter,
        dissolved_threshold=tol.dissolved_threshold,
        record_every=out.record_every, vtk_every=out.vtk_every)


def analytic_dissolved_volume(config: ScenarioConfig, t=None):
    """Reference dissolved volume of the stationary scenario: feed * t * A."""
    if config.geometry.case != "rect_gap":
        raise ConfigError("analytic reference defined for rect_gap only")
    if t is None:
        t = config.time.t_end
    return config.bc.feed_rate * t * config.geometry.l * config.geometry.g
