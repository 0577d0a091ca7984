"""Per-integration-point dissolution state and its backward-Euler update.

Each integration point owns a unit cell of the element volume. The
electric current density is converted to three scalar currents through
the unit-cell axis areas, sorted in descending order, and fed into the
implicit dissolution-level update, which has a closed-form solution.
Levels capped at one feed the cut-off volume ledger.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DISSOLVED_THRESHOLD = 0.999  # mean level at which an element counts as electrolyte


class DissolutionError(ValueError):
    """Invariant violation in the dissolution state update."""


@dataclass
class CutoffLedger:
    """Accumulated cut-off volume and Faraday charge-volume bookkeeping."""

    v_co: float = 0.0  # m^3 discarded by capping d at 1
    v_faraday: float = 0.0  # m^3, V_eff * effective current * dt, accumulated

    def add(self, cutoff, faraday):
        if cutoff < 0.0:
            raise DissolutionError("cut-off increment must be non-negative")
        self.v_co += float(cutoff)
        self.v_faraday += float(faraday)


def currents_from_density(j, areas):
    """Scalar currents |A_uc * j| per axis, sorted descending.

    j is the current density vector (..., 3); areas the unit-cell axis
    areas, broadcastable against j. Returns (I1, I2, I3) with I1>=I2>=I3.
    """
    currents = np.abs(np.asarray(areas, dtype=float) * np.asarray(j, dtype=float))
    return np.flip(np.sort(currents, axis=-1), axis=-1)


def update_level(d_n, i1, i2, i3, v_eff, v_uc, dt, active=True):
    """Backward-Euler dissolution update with cap at one.

    Solves (d1 - d0)/dt = (V_eff/V_uc) [I1 + (1 - d1)(I2 + I3)] for d1 in
    closed form; levels above one are reset to one and the excess volume
    (d_raw - 1) * V_uc is returned as the cut-off increment. Inactive
    points do not evolve.
    """
    d_n = np.asarray(d_n, dtype=float)
    i1, i2, i3 = (np.asarray(a, dtype=float) for a in (i1, i2, i3))
    if dt <= 0.0 or v_eff <= 0.0:
        raise DissolutionError("dt and v_eff must be positive")
    if np.any(d_n < 0.0) or np.any(d_n > 1.0):
        raise DissolutionError("dissolution level outside [0, 1]")
    if np.any(i1 < 0.0) or np.any(i2 < 0.0) or np.any(i3 < 0.0):
        raise DissolutionError("scalar currents must be non-negative")
    v_uc = np.asarray(v_uc, dtype=float)
    if np.any(v_uc <= 0.0):
        raise DissolutionError("unit cell volume must be positive")

    fac = v_eff * dt / v_uc
    raw = (d_n + fac * (i1 + i2 + i3)) / (1.0 + fac * (i2 + i3))
    active = np.broadcast_to(np.asarray(active, dtype=bool), raw.shape)
    raw = np.where(active, raw, d_n)
    capped = raw > 1.0
    d_new = np.where(capped, 1.0, raw)
    cutoff = np.where(capped, (raw - 1.0) * v_uc, 0.0)
    if d_new.ndim == 0:
        return float(d_new), float(cutoff)
    return d_new, cutoff


def effective_charge_volume(d_raw, i1, i2, i3, v_eff, dt):
    """V_eff * [I1 + (1 - d_raw)(I2 + I3)] * dt, the Faraday volume of a step.

    ``d_raw`` is the uncapped backward-Euler solution, so this equals
    (d_raw - d_n) * V_uc identically: the cap discards exactly the
    cut-off volume.
    """
    return v_eff * (i1 + (1.0 - d_raw) * (i2 + i3)) * dt


def activation_update(neighbors, mean_d, region_electrolyte,
                      threshold=DISSOLVED_THRESHOLD):
    """Element activation flags from face adjacency to dissolved material.

    An element is active if it still carries metal (mean level below the
    dissolved threshold, not an initial electrolyte element) and shares a
    face with an element that started as electrolyte or whose mean level
    reached the threshold.
    """
    mean_d = np.asarray(mean_d, dtype=float)
    region_electrolyte = np.asarray(region_electrolyte, dtype=bool)
    dissolved = region_electrolyte | (mean_d >= threshold)
    nb_dissolved = np.zeros(len(mean_d), dtype=bool)
    for k in range(neighbors.shape[1]):
        nb = neighbors[:, k]
        valid = nb >= 0
        nb_dissolved[valid] |= dissolved[nb[valid]]
    return ~dissolved & nb_dissolved


@dataclass
class IpState:
    """Dissolution state of all integration points of a mesh.

    d and the activation flags are (ne, ngp); e_prev stores the electric
    field of the previous step for the displacement current; charge
    accumulates |A_uc,depth * j_depth| * dt per point.
    """

    d: np.ndarray
    active: np.ndarray
    e_prev: np.ndarray
    charge: np.ndarray
    ledger: CutoffLedger = field(default_factory=CutoffLedger)

    @classmethod
    def initial(cls, n_elements, region_electrolyte, neighbors,
                n_gp=8):
        region_electrolyte = np.asarray(region_electrolyte, dtype=bool)
        d = np.where(region_electrolyte[:, None], 1.0,
                     np.zeros((n_elements, n_gp)))
        active_el = activation_update(neighbors, d.mean(axis=1),
                                      region_electrolyte)
        active = np.broadcast_to(active_el[:, None], d.shape).copy()
        return cls(d=d, active=active,
                   e_prev=np.zeros((n_elements, n_gp, 3)),
                   charge=np.zeros((n_elements, n_gp)))

    def mean_d(self):
        return self.d.mean(axis=1)
