"""Material data: temperature polynomials, phase-electrolyte mixing, Faraday constants.

All quantities are SI. Temperature-dependent parameters are cubic
polynomials in the absolute temperature; the machining simulation mixes
metal-phase and electrolyte values through the dissolution level of each
unit cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FARADAY_CONSTANT = 96485.0  # A*s/mol
ELECTRIC_CONSTANT = 8.854e-12  # A*s/(V*m)


class MaterialError(ValueError):
    """Invalid material data or invalid evaluation input."""


@dataclass(frozen=True)
class PolyParam:
    """Cubic parameter polynomial f(theta) = c0 + c1*theta + c2*theta^2 + c3*theta^3.

    theta is the absolute temperature in K; coefficients carry the
    parameter's SI unit per K^k.
    """

    c0: float
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0

    def __post_init__(self):
        for c in (self.c0, self.c1, self.c2, self.c3):
            if not np.isfinite(c):
                raise MaterialError("polynomial coefficients must be finite")

    def __call__(self, theta):
        return eval_param(self, theta)


def eval_param(poly: PolyParam, theta):
    """Evaluate a parameter polynomial at absolute temperature theta [K].

    Accepts scalars or arrays; raises MaterialError for non-finite or
    non-positive temperatures.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise MaterialError("temperature must be finite")
    if np.any(theta <= 0.0):
        raise MaterialError("absolute temperature must be positive")
    value = poly.c0 + theta * (poly.c1 + theta * (poly.c2 + theta * poly.c3))
    return value if value.ndim else float(value)


def effective_param(d, metal_values, fractions, electrolyte_value):
    """Dissolution-weighted mixture (1-d) * sum_a lambda_a x_a + d * x_el.

    ``metal_values`` holds one value (scalar or array) per metal phase,
    ``fractions`` the matching volume fractions. ``d`` may be an array;
    values outside [0, 1] are rejected.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0) or np.any(d > 1.0):
        raise MaterialError("dissolution level must lie in [0, 1]")
    fractions = np.asarray(fractions, dtype=float)
    metal = sum(lam * np.asarray(val, dtype=float)
                for lam, val in zip(fractions, metal_values))
    mixed = (1.0 - d) * metal + d * np.asarray(electrolyte_value, dtype=float)
    return mixed if np.ndim(mixed) else float(mixed)


def peltier_coeff(alpha, theta):
    """Peltier coefficient alpha * theta (Seebeck coefficient times temperature)."""
    theta = np.asarray(theta, dtype=float)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(alpha))):
        raise MaterialError("peltier_coeff requires finite inputs")
    if np.any(theta <= 0.0):
        raise MaterialError("absolute temperature must be positive")
    value = np.asarray(alpha, dtype=float) * theta
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class PhaseSpec:
    """One material phase: mixing fraction, transport polynomials, Faraday data.

    The electrolyte is described by the same record without Faraday data
    (``molar_mass`` None, empty ``reactions``).
    """

    name: str
    volume_fraction: float  # dimensionless, in [0, 1]
    c_theta: PolyParam  # specific heat capacity, J/(kg*K)
    k_e: PolyParam  # electric conductivity, A/(V*m)
    k_theta: PolyParam  # thermal conductivity, W/(m*K)
    rho_v: PolyParam  # volume density, kg/m^3
    seebeck: float  # V/K
    eps_r: float  # relative permittivity, dimensionless
    molar_mass: float | None = None  # kg/mol
    reactions: tuple[tuple[float, float], ...] = ()  # (probability nu_b, valency z_ab)
    v_eff: float | None = None  # effectively dissolved volume, m^3/(A*s)

    def __post_init__(self):
        if not 0.0 <= self.volume_fraction <= 1.0:
            raise MaterialError(f"phase {self.name}: volume fraction outside [0, 1]")
        if self.v_eff is not None and self.v_eff <= 0.0:
            raise MaterialError(f"phase {self.name}: v_eff must be positive")
        if self.reactions:
            if sum(nu * z for nu, z in self.reactions) <= 0.0:
                raise MaterialError(
                    f"phase {self.name}: total weighted valency must be positive")


@dataclass(frozen=True)
class MaterialTable:
    """Metal phases plus electrolyte with the global electrochemical constants."""

    phases: tuple[PhaseSpec, ...]
    electrolyte: PhaseSpec
    efficiency: float = 1.0  # eta, dimensionless
    faraday: float = FARADAY_CONSTANT
    eps0: float = ELECTRIC_CONSTANT

    def __post_init__(self):
        if not self.phases:
            raise MaterialError("at least one metal phase is required")
        total = sum(p.volume_fraction for p in self.phases)
        if abs(total - 1.0) > 1e-12:
            raise MaterialError("metal phase volume fractions must sum to 1")
        if not 0.0 < self.efficiency <= 1.0:
            raise MaterialError("efficiency must lie in (0, 1]")

    @property
    def fractions(self) -> np.ndarray:
        return np.array([p.volume_fraction for p in self.phases])

    @property
    def v_eff(self) -> float:
        """Fraction-weighted effectively dissolved volume of the metal."""
        v = 0.0
        for p in self.phases:
            if p.v_eff is None:
                raise MaterialError(f"phase {p.name} has no v_eff")
            v += p.volume_fraction * p.v_eff
        return v

    def mixed(self, attr: str, d, theta):
        """Effective value of polynomial parameter ``attr`` at (d, theta)."""
        metal_values = [getattr(p, attr)(theta) for p in self.phases]
        return effective_param(d, metal_values, self.fractions,
                               getattr(self.electrolyte, attr)(theta))

    def mixed_scalar(self, attr: str, d):
        """Effective value of a temperature-independent parameter at d."""
        metal_values = [getattr(p, attr) for p in self.phases]
        return effective_param(d, metal_values, self.fractions,
                               getattr(self.electrolyte, attr))

    def validate_positivity(self, theta_min=273.15, theta_max=373.15, samples=51):
        """Check that conductivities and capacities stay positive on a temperature range."""
        grid = np.linspace(theta_min, theta_max, samples)
        for p in (*self.phases, self.electrolyte):
            for attr in ("k_e", "k_theta", "rho_v", "c_theta"):
                if np.any(getattr(p, attr)(grid) <= 0.0):
                    raise MaterialError(
                        f"phase {p.name}: {attr} not positive on "
                        f"[{theta_min}, {theta_max}] K")


def faraday_specific_volume(table: MaterialTable, theta_ref: float = 298.15) -> float:
    """Dissolved volume per unit charge from Faraday's law of electrolysis.

    eta * sum_a lambda_a M_a / (F rho_Va(theta_ref) sum_b nu_b z_ab).
    Densities enter at a fixed reference temperature; this is a
    cross-check utility for an experimentally supplied v_eff.
    """
    total = 0.0
    for p in table.phases:
        if p.molar_mass is None or not p.reactions:
            raise MaterialError(f"phase {p.name} lacks Faraday data")
        weighted_valency = sum(nu * z for nu, z in p.reactions)
        if weighted_valency == 0.0:
            raise MaterialError(f"phase {p.name}: zero weighted valency")
        rho = p.rho_v(theta_ref)
        total += p.volume_fraction * p.molar_mass / (
            table.faraday * rho * weighted_valency)
    return table.efficiency * total


def default_material_table(k_e_electrolyte: float | PolyParam | None = None,
                           v_eff: float | None = None,
                           efficiency: float = 1.0) -> MaterialTable:
    """42CrMo4 steel in 20 wt.-% NaNO3 solution.

    ``k_e_electrolyte`` replaces the electrolyte conductivity polynomial by a
    constant (or custom polynomial), ``v_eff`` overrides the effectively
    dissolved volume; both are used by the analytical validation scenario.
    """
    if k_e_electrolyte is None:
        k_e_el = PolyParam(-6.302e1, 2.530e-1)
    elif isinstance(k_e_electrolyte, PolyParam):
        k_e_el = k_e_electrolyte
    else:
        k_e_el = PolyParam(float(k_e_electrolyte))

    steel = PhaseSpec(
        name="42CrMo4",
        volume_fraction=1.0,
        c_theta=PolyParam(3.554e2, 2.848e-1, -5.000e-5),
        k_e=PolyParam(1.131e7, -3.710e4, 6.020e1, -3.994e-2),
        k_theta=PolyParam(3.651e1, 4.899e-2, -1.012e-4, 4.654e-8),
        rho_v=PolyParam(7.849e2, -6.289e-2, -4.167e-4, 1.907e-7),
        seebeck=5.0e-6,
        eps_r=8.0e1,
        molar_mass=55.85e-3,  # iron-dominated alloy, Fe -> Fe(2+) + 2 e-
        reactions=((1.0, 2.0),),
        v_eff=3.650e-11 if v_eff is None else float(v_eff),
    )
    electrolyte = PhaseSpec(
        name="NaNO3-20wt",
        volume_fraction=0.0,
        c_theta=PolyParam(8.145e3, -3.204e1, 8.371e-2, -6.979e-5),
        k_e=k_e_el,
        k_theta=PolyParam(-8.691e-1, 8.949e-3, -1.584e-5, 7.975e-9),
        rho_v=PolyParam(8.385e2, 1.401e0, 3.011e-3, 3.718e-7),
        seebeck=1.0e-6,
        eps_r=1.0,
    )
    return MaterialTable(phases=(steel,), electrolyte=electrolyte,
                         efficiency=efficiency)
