"""Trilinear hexahedral kernel: shape functions, constitutive laws, element systems.

The element residuals and tangent blocks implement the linearized coupled
charge-conservation / heat-conduction weak forms. Effective material
parameters are frozen per integration point from the previous step's
dissolution level and temperature (staggered coupling), which makes every
block below the exact Jacobian of the residuals with respect to the nodal
unknowns of the current step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .materials import MaterialTable

# Reference corner coordinates; node ordering matches VTK hexahedra
# (counterclockwise bottom quad, then top quad).
XI_NODES = np.array([
    [-1.0, -1.0, -1.0],
    [+1.0, -1.0, -1.0],
    [+1.0, +1.0, -1.0],
    [-1.0, +1.0, -1.0],
    [-1.0, -1.0, +1.0],
    [+1.0, -1.0, +1.0],
    [+1.0, +1.0, +1.0],
    [-1.0, +1.0, +1.0],
])

N_GP = 8
GAUSS_POINTS = XI_NODES / np.sqrt(3.0)  # 2x2x2 rule, unit weights
GAUSS_WEIGHTS = np.ones(N_GP)


class AssemblyError(RuntimeError):
    """Non-finite fields or invalid element state during assembly."""


def shape_trilinear(xi):
    """Trilinear shape values (8,) and reference gradients (8, 3) at xi.

    xi must lie in the reference cube [-1, 1]^3. Values sum to one.
    """
    xi = np.asarray(xi, dtype=float)
    sx = 1.0 + XI_NODES[:, 0] * xi[0]
    sy = 1.0 + XI_NODES[:, 1] * xi[1]
    sz = 1.0 + XI_NODES[:, 2] * xi[2]
    values = 0.125 * sx * sy * sz
    grads = 0.125 * np.stack([
        XI_NODES[:, 0] * sy * sz,
        XI_NODES[:, 1] * sx * sz,
        XI_NODES[:, 2] * sx * sy,
    ], axis=1)
    return values, grads


# Shape data at the 2x2x2 Gauss points, shared by every element.
N_AT_GAUSS = np.stack([shape_trilinear(xi)[0] for xi in GAUSS_POINTS])  # (8, 8)
DN_AT_GAUSS = np.stack([shape_trilinear(xi)[1] for xi in GAUSS_POINTS])  # (8, 8, 3)


@dataclass
class GaussPointData:
    """Per-integration-point discretization data of a fixed mesh."""

    N: np.ndarray  # (ngp, 8) shape values
    B: np.ndarray  # (ne, ngp, 3, 8) global shape gradients, 1/m
    wdet: np.ndarray  # (ne, ngp) quadrature weight times det J, m^3

    @property
    def n_elements(self):
        return self.B.shape[0]


def precompute_gauss_data(nodes, elements):
    """Jacobians, global gradients and weights at every Gauss point.

    Raises AssemblyError if any element is inverted (det J <= 0).
    """
    coords = nodes[elements]  # (ne, 8, 3)
    jac = np.einsum('eai,gaj->egij', coords, DN_AT_GAUSS)
    det = np.linalg.det(jac)
    if np.any(det <= 0.0):
        bad = np.unique(np.nonzero(det <= 0.0)[0])
        raise AssemblyError(f"non-positive Jacobian in elements {bad[:10].tolist()}")
    inv = np.linalg.inv(jac)
    # B[e,g,i,a] = dN_a/dx_i = dN_a/dxi_j * dxi_j/dx_i
    B = np.einsum('gaj,egji->egia', DN_AT_GAUSS, inv)
    return GaussPointData(N=N_AT_GAUSS.copy(), B=B, wdet=det)


@dataclass
class EffectiveProps:
    """Frozen effective parameters per integration point (staggered scheme).

    All arrays are (ne, ngp); ``joule`` is a per-element 0/1 factor that
    suppresses the volumetric j.E heating (and its tangent terms) in
    electrolyte and fully dissolved elements.
    """

    k_e: np.ndarray  # A/(V*m)
    k_theta: np.ndarray  # W/(m*K)
    alpha: np.ndarray  # V/K
    peltier: np.ndarray  # alpha * theta at the freezing temperature
    rho_v: np.ndarray  # kg/m^3
    c_theta: np.ndarray  # J/(kg*K)
    eps_r: np.ndarray  # dimensionless
    joule: np.ndarray  # (ne,) 0.0 or 1.0
    eps0: float


def freeze_effective_props(table: MaterialTable, d, theta, joule_active):
    """Mix phase and electrolyte parameters at (d_n, theta_n) per Gauss point."""
    d = np.asarray(d, dtype=float)
    theta = np.asarray(theta, dtype=float)
    alpha = table.mixed_scalar('seebeck', d)
    return EffectiveProps(
        k_e=table.mixed('k_e', d, theta),
        k_theta=table.mixed('k_theta', d, theta),
        alpha=alpha,
        peltier=alpha * theta,
        rho_v=table.mixed('rho_v', d, theta),
        c_theta=table.mixed('c_theta', d, theta),
        eps_r=table.mixed_scalar('eps_r', d),
        joule=np.asarray(joule_active, dtype=float),
        eps0=table.eps0,
    )


def constitutive(gp: GaussPointData, props: EffectiveProps, v_e, theta_e,
                 e_prev, dt):
    """Electric field, current density and heat flux at every Gauss point.

    v_e, theta_e are element nodal vectors (ne, 8); e_prev is the electric
    field of the previous time step (ne, ngp, 3). Returns a dict with E,
    Edot, j_l, j_v, j_s, j, q_p, q_f and q, each (ne, ngp, 3).
    """
    if dt <= 0.0:
        raise AssemblyError("time increment must be positive")
    E = -np.einsum('egia,ea->egi', gp.B, v_e)
    Edot = (E - e_prev) / dt
    grad_theta = np.einsum('egia,ea->egi', gp.B, theta_e)
    j_l = props.k_e[..., None] * E
    j_v = props.eps0 * props.eps_r[..., None] * Edot
    j_s = -(props.k_e * props.alpha)[..., None] * grad_theta
    j = j_l + j_v + j_s
    q_f = -props.k_theta[..., None] * grad_theta
    q_p = props.peltier[..., None] * j
    return {
        'E': E, 'Edot': Edot,
        'j_l': j_l, 'j_v': j_v, 'j_s': j_s, 'j': j,
        'q_p': q_p, 'q_f': q_f, 'q': q_p + q_f,
    }


@dataclass
class ElementSystem:
    """Element tangent blocks and residual vectors of the coupled problem.

    Stiffness-like blocks k_ab and capacity-like blocks c_ab are kept
    separate; the solver adds them. Shapes are (ne, 8, 8) and (ne, 8).
    """

    k_vv: np.ndarray
    k_vth: np.ndarray
    k_thv: np.ndarray
    k_thth: np.ndarray
    c_vv: np.ndarray
    c_thv: np.ndarray
    c_thth: np.ndarray
    r_v: np.ndarray
    r_th: np.ndarray


def element_systems(gp: GaussPointData, props: EffectiveProps, v_e, theta_e,
                    v_e_prev, theta_e_prev, e_prev, dt, q_star=0.0,
                    theta_rows=True):
    """Residuals and consistent tangents for all elements at once.

    The potential residual integrates B^T (j + j_v); the displacement
    current therefore appears twice in its tangent (factor 2 on c_vv).
    Joule heating j.E and the tangent terms it generates carry the
    per-element ``joule`` factor. When every temperature dof is
    prescribed the caller may pass ``theta_rows=False`` to skip the
    temperature-row blocks (returned as zero arrays).
    """
    fields = constitutive(gp, props, v_e, theta_e, e_prev, dt)
    E, j = fields['E'], fields['j']
    j_l, j_v, j_s = fields['j_l'], fields['j_v'], fields['j_s']
    q = fields['q']

    if not (np.all(np.isfinite(v_e)) and np.all(np.isfinite(theta_e))):
        bad = np.nonzero(~np.all(np.isfinite(v_e), axis=1)
                         | ~np.all(np.isfinite(theta_e), axis=1))[0]
        raise AssemblyError(f"non-finite nodal fields in elements {bad[:10].tolist()}")

    w = gp.wdet  # (ne, ngp)
    B, N = gp.B, gp.N
    eps_fac = props.eps0 * props.eps_r  # (ne, ngp)
    jfac = props.joule[:, None]  # (ne, 1)

    def btb(coef):
        return np.einsum('eg,egia,egib->eab', w * coef, B, B)

    def ntvb(vec):
        # N^T vec^T B with the joule factor: rows from shape values,
        # columns from gradients.
        vb = np.einsum('egi,egib->egb', vec, B)
        return np.einsum('eg,ga,egb->eab', w * jfac, N, vb)

    k_vv = btb(props.k_e)
    c_vv = 2.0 * btb(eps_fac / dt)
    r_v = -np.einsum('eg,egia,egi->ea', w, B, j + j_v)

    if not theta_rows:
        zero_m = np.zeros_like(k_vv)
        zero_v = np.zeros_like(r_v)
        return ElementSystem(k_vv=k_vv, k_vth=btb(props.k_e * props.alpha),
                             k_thv=zero_m, k_thth=zero_m, c_vv=c_vv,
                             c_thv=zero_m, c_thth=zero_m,
                             r_v=r_v, r_th=zero_v)

    theta_dot = np.einsum('ga,ea->eg', N, theta_e - theta_e_prev) / dt
    joule_heat = np.einsum('egi,egi->eg', j, E) * jfac

    k_vth = btb(props.k_e * props.alpha)
    k_thv = ntvb(2.0 * j_l + j_s) + btb(props.peltier * props.k_e)
    c_thv = ntvb((eps_fac / dt)[..., None] * E + j_v) \
        + btb(props.peltier * eps_fac / dt)
    k_thth = ntvb((props.k_e * props.alpha)[..., None] * E) \
        + btb(props.peltier * props.k_e * props.alpha + props.k_theta)
    c_thth = np.einsum('eg,ga,gb->eab', w * props.rho_v * props.c_theta / dt, N, N)

    source = props.rho_v * props.c_theta * theta_dot - joule_heat - q_star
    r_th = np.einsum('eg,ga,eg->ea', w, N, source) \
        - np.einsum('eg,egia,egi->ea', w, B, q)

    return ElementSystem(k_vv=k_vv, k_vth=k_vth, k_thv=k_thv, k_thth=k_thth,
                         c_vv=c_vv, c_thv=c_thv, c_thth=c_thth,
                         r_v=r_v, r_th=r_th)


def element_system(nodes, props: EffectiveProps, v_e, theta_e, v_e_prev,
                   theta_e_prev, e_prev, dt, q_star=0.0):
    """Single-element convenience wrapper around :func:`element_systems`."""
    gp = precompute_gauss_data(np.asarray(nodes, dtype=float),
                               np.array([[0, 1, 2, 3, 4, 5, 6, 7]]))
    sys = element_systems(
        gp, props,
        np.asarray(v_e, dtype=float)[None, :],
        np.asarray(theta_e, dtype=float)[None, :],
        np.asarray(v_e_prev, dtype=float)[None, :],
        np.asarray(theta_e_prev, dtype=float)[None, :],
        e_prev, dt, q_star)
    return ElementSystem(**{k: getattr(sys, k)[0] for k in sys.__dataclass_fields__})
