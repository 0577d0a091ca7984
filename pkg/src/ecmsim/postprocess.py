"""Derived quantities and file export: gap width, roughness, CSV and VTK.

The analytic expressions here provide the reference solutions for the
stationary dissolution scenario; the roughness measures operate on the
discrete surface profile sampled from active element centers.
"""

from __future__ import annotations

import numpy as np

CSV_HEADER = "t,Q_per_A,Rz,Ra,V_dis,V_co"


class PostprocessError(ValueError):
    """Invalid postprocessing input."""


def analytic_gap_width(k_e_el, delta_v, delta_v_pol, v_eff, feed_rate):
    """Stationary working gap k_E (dv - dv_pol) V_eff / feed.

    feed_rate is the cathode advance speed in m/s and must be positive.
    """
    if feed_rate <= 0.0:
        raise PostprocessError("feed rate must be positive")
    return k_e_el * (delta_v - delta_v_pol) * v_eff / feed_rate


def cathode_potential(t, v_anode, feed_rate, gap):
    """Cathode-feed emulation: potential ramp -(v_an * feed / gap) * t.

    Keeps the zero-potential isoline moving at the feed rate (theorem of
    intersecting lines for a linear potential drop across the gap).
    """
    if gap <= 0.0:
        raise PostprocessError("gap width must be positive")
    return -(v_anode * feed_rate / gap) * np.asarray(t, dtype=float)


def dissolved_volume(d, v_uc, metal_mask=None):
    """Sum of level times unit-cell volume over (initially metal) points."""
    d = np.asarray(d, dtype=float)
    v_uc = np.broadcast_to(np.asarray(v_uc, dtype=float)[..., None], d.shape)
    if metal_mask is not None:
        d = d[metal_mask]
        v_uc = v_uc[metal_mask]
    return float((d * v_uc).sum())


def cutoff_volume(ledger):
    """Accumulated cut-off volume of a dissolution ledger."""
    return ledger.v_co


def roughness(x, y):
    """Maximum height Rz and arithmetical mean height Ra of a profile.

    Rz is the peak-to-pit distance; Ra averages |y - mean| over the
    profile length by the trapezoid rule. Needs at least two samples.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise PostprocessError("profile needs at least 2 points")
    order = np.argsort(x)
    x, y = x[order], y[order]
    lx = x[-1] - x[0]
    if lx <= 0.0:
        raise PostprocessError("profile length must be positive")
    rz = float(abs(y.max() - y.min()))
    y_mean = np.trapz(y, x) / lx
    ra = float(np.trapz(np.abs(y - y_mean), x) / lx)
    return rz, ra


def write_series_csv(path, series):
    """Write the per-step process series (SI units, '.' decimals)."""
    keys = ('t', 'q_per_a', 'rz', 'ra', 'v_dis', 'v_co')
    n = len(series['t']) if series else 0
    try:
        with open(path, 'w', encoding='ascii') as fh:
            fh.write(CSV_HEADER + "\n")
            for i in range(n):
                fh.write(",".join(repr(float(series[k][i])) for k in keys))
                fh.write("\n")
    except OSError as err:
        raise PostprocessError(f"cannot write CSV {path}: {err}") from err


def write_vtk(path, mesh, point_data=None, cell_data=None):
    """Legacy VTK 3.0 ASCII unstructured grid with hexahedron cells."""
    try:
        with open(path, 'w', encoding='ascii') as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("ecmsim snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {mesh.n_nodes} double\n")
            for p in mesh.nodes:
                fh.write(f"{p[0]:.9e} {p[1]:.9e} {p[2]:.9e}\n")
            ne = mesh.n_elements
            fh.write(f"CELLS {ne} {9 * ne}\n")
            for cell in mesh.elements:
                fh.write("8 " + " ".join(str(i) for i in cell) + "\n")
            fh.write(f"CELL_TYPES {ne}\n")
            fh.write("\n".join(["12"] * ne) + "\n")
            if point_data:
                fh.write(f"POINT_DATA {mesh.n_nodes}\n")
                for name, values in point_data.items():
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    fh.write("\n".join(f"{v:.9e}" for v in values) + "\n")
            if cell_data:
                fh.write(f"CELL_DATA {ne}\n")
                for name, values in cell_data.items():
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    fh.write("\n".join(f"{v:.9e}" for v in values) + "\n")
    except OSError as err:
        raise PostprocessError(f"cannot write VTK {path}: {err}") from err
