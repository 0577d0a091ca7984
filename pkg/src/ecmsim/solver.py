"""Global assembly, Newton-Raphson stepping and the staggered time loop.

Per time step the effective material parameters are frozen from the
previous step's dissolution level and temperature, the Dirichlet values
are advanced, the coupled potential/temperature system is solved by
Newton's method with a sparse direct factorization, and the converged
current densities drive the per-integration-point dissolution update.
Activation flags are refreshed at the end of every step.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import splu

from . import dissolution as dsl
from . import fem, geometry, postprocess


class SolverError(RuntimeError):
    """Newton failure or invalid boundary conditions."""

    def __init__(self, message, history=None, checkpoint=None):
        super().__init__(message)
        self.history = history or []
        self.checkpoint = checkpoint


@dataclass
class DirichletBC:
    """Uniform Dirichlet value on a node set following a time schedule."""

    field: str  # 'v' or 'theta'
    nodes: np.ndarray
    schedule: object  # callable t -> value

    def value(self, t):
        return float(self.schedule(t))


@dataclass
class FieldState:
    """Nodal fields at the previous step and the current Newton iterate."""

    v: np.ndarray
    theta: np.ndarray
    v_n: np.ndarray
    theta_n: np.ndarray
    t: float = 0.0


class SparsePattern:
    """Fixed sparsity of the coupled two-field tangent on a fixed mesh.

    Element contributions are scatter-added through a precomputed
    unique-entry mapping; reduction to the free degrees of freedom reuses
    the same pattern every step.
    """

    def __init__(self, elements, n_nodes, theta_coupled):
        self.n_nodes = n_nodes
        self.theta_coupled = theta_coupled
        ndof = 2 * n_nodes
        dv = np.asarray(elements, dtype=np.int64)
        dth = dv + n_nodes
        blocks = [(dv, dv)]
        if theta_coupled:
            blocks += [(dv, dth), (dth, dv), (dth, dth)]
        keys = []
        for dr, dc in blocks:
            rows = np.repeat(dr, 8, axis=1).ravel()
            cols = np.tile(dc, (1, 8)).ravel()
            keys.append(rows.astype(np.int64) * ndof + cols)
        keys = np.concatenate(keys)
        self.unique_keys, self.inverse = np.unique(keys, return_inverse=True)
        self.nnz = len(self.unique_keys)
        self._rows = self.unique_keys // ndof
        self._cols = self.unique_keys % ndof

    def reduce(self, free_mask):
        return _ReducedSystem(self, free_mask)

    def accumulate(self, data_blocks):
        """Sum flattened (ne, 8, 8) blocks into the unique-entry vector."""
        flat = np.concatenate([b.ravel() for b in data_blocks])
        return np.bincount(self.inverse, weights=flat, minlength=self.nnz)


class _ReducedSystem:
    """CSR structure of the free-dof submatrix of a SparsePattern."""

    def __init__(self, pattern: SparsePattern, free_mask):
        self.pattern = pattern
        self.free_mask = free_mask
        self.n_free = int(free_mask.sum())
        renum = np.cumsum(free_mask) - 1
        keep = free_mask[pattern._rows] & free_mask[pattern._cols]
        self.keep = keep
        rows = renum[pattern._rows[keep]]
        cols = renum[pattern._cols[keep]]
        # unique keys are row-major sorted, so the masked subset is too
        self.indices = cols.astype(np.int32)
        self.indptr = np.zeros(self.n_free + 1, dtype=np.int32)
        np.add.at(self.indptr, rows + 1, 1)
        self.indptr = np.cumsum(self.indptr, dtype=np.int32)

    def matrix(self, data_unique):
        return csr_matrix((data_unique[self.keep], self.indices, self.indptr),
                          shape=(self.n_free, self.n_free))


@dataclass
class RunResult:
    """Time series, final state and summary of one simulation run."""

    mesh: geometry.Mesh
    series: dict
    state: FieldState
    ip: dsl.IpState
    summary: dict


class Simulation:
    """Fully coupled electro-thermal dissolution run on a fixed mesh."""

    def __init__(self, mesh: geometry.Mesh, table, bcs, dt, t_end,
                 theta_init, newton_rtol=1e-8, newton_max_iter=12,
                 dissolved_threshold=dsl.DISSOLVED_THRESHOLD, q_star=0.0,
                 record_every=1, vtk_every=0):
        if dt <= 0.0 or t_end < dt:
            raise SolverError("need dt > 0 and t_end >= dt")
        self.mesh = mesh
        self.table = table
        self.dt = float(dt)
        self.t_end = float(t_end)
        self.theta_init = float(theta_init)
        self.newton_rtol = newton_rtol
        self.newton_max_iter = newton_max_iter
        self.dissolved_threshold = dissolved_threshold
        self.q_star = q_star
        self.record_every = record_every
        self.vtk_every = vtk_every
        self.v_eff = table.v_eff

        self.gp = fem.precompute_gauss_data(mesh.nodes, mesh.elements)
        self.v_uc, self.a_uc = mesh.unit_cell_table()
        self.neighbors = mesh.face_neighbors()
        self.metal = mesh.region == geometry.METAL
        self.centers = mesh.centers

        nn = mesh.n_nodes
        self.dirichlet_v = self._collect(bcs, 'v', nn)
        self.dirichlet_th = self._collect(bcs, 'theta', nn)
        self.bcs = bcs
        free = np.ones(2 * nn, dtype=bool)
        for bc in bcs:
            off = 0 if bc.field == 'v' else nn
            free[bc.nodes + off] = False
        self.free_mask = free
        self.free_v_idx = np.nonzero(free[:nn])[0]
        self.free_th_idx = np.nonzero(free[nn:])[0] + nn
        self.theta_coupled = len(self.free_th_idx) > 0

        self.pattern = SparsePattern(mesh.elements, nn, self.theta_coupled)
        self.reduced = self.pattern.reduce(free)

        self.state = FieldState(
            v=np.zeros(nn), theta=np.full(nn, self.theta_init),
            v_n=np.zeros(nn), theta_n=np.full(nn, self.theta_init))
        self.ip = dsl.IpState.initial(mesh.n_elements, ~self.metal,
                                      self.neighbors)
        self.records = []
        self.newton_counts = []
        self._anode_layer = self._find_anode_layer()
        self._profile_cols = self._prepare_profile()

    @staticmethod
    def _collect(bcs, fname, nn):
        taken = np.zeros(nn, dtype=bool)
        for bc in bcs:
            if bc.field != fname:
                continue
            if np.any(taken[bc.nodes]):
                raise SolverError(
                    f"overlapping Dirichlet sets for field '{fname}'")
            taken[bc.nodes] = True
        return taken

    def _find_anode_layer(self):
        anode = self.mesh.node_sets.get('anode')
        if anode is None:
            return np.zeros(0, dtype=np.int64)
        mask = np.zeros(self.mesh.n_nodes, dtype=bool)
        mask[anode] = True
        counts = mask[self.mesh.elements].sum(axis=1)
        return np.nonzero((counts >= 4) & self.metal)[0]

    def _prepare_profile(self):
        cols = self.mesh.surf_col
        if cols is None or np.all(cols < 0):
            return None
        ncol = int(cols.max()) + 1
        width = np.full(ncol, np.nan)
        w = self.centers[:, self.mesh.width_axis]
        for c in range(ncol):
            sel = (cols == c) & self.metal
            if sel.any():
                width[c] = w[sel].mean()
        return width

    # ------------------------------------------------------------------
    def _apply_dirichlet(self, t):
        nn = self.mesh.n_nodes
        for bc in self.bcs:
            val = bc.value(t)
            if bc.field == 'v':
                self.state.v[bc.nodes] = val
            else:
                self.state.theta[bc.nodes] = val

    def _freeze_props(self):
        theta_gp = np.einsum('ga,ea->eg', self.gp.N,
                             self.state.theta_n[self.mesh.elements])
        mean_d = self.ip.mean_d()
        suppress = (~self.metal) | (mean_d >= self.dissolved_threshold)
        return fem.freeze_effective_props(self.table, self.ip.d, theta_gp,
                                          ~suppress)

    def _gather(self, vec):
        return vec[self.mesh.elements]

    def _residual_and_blocks(self, props, need_matrix):
        el = self.mesh.elements
        sys = fem.element_systems(
            self.gp, props, self._gather(self.state.v),
            self._gather(self.state.theta), self._gather(self.state.v_n),
            self._gather(self.state.theta_n), self.ip.e_prev, self.dt,
            self.q_star, theta_rows=self.theta_coupled)
        nn = self.mesh.n_nodes
        resid = np.bincount(el.ravel(), weights=sys.r_v.ravel(),
                            minlength=2 * nn)
        if self.theta_coupled:
            resid += np.bincount((el + nn).ravel(), weights=sys.r_th.ravel(),
                                 minlength=2 * nn)
        if not need_matrix:
            return resid, None
        blocks = [sys.k_vv + sys.c_vv]
        if self.theta_coupled:
            blocks += [sys.k_vth, sys.k_thv + sys.c_thv,
                       sys.k_thth + sys.c_thth]
        return resid, self.pattern.accumulate(blocks)

    def _newton(self, props):
        """Iterate until both block residual norms fall below their
        relative tolerance; returns the number of linear solves."""
        solves = 0
        history = []
        rv0 = rth0 = None
        for it in range(self.newton_max_iter + 1):
            resid, data = self._residual_and_blocks(props, need_matrix=True)
            rv = np.linalg.norm(resid[self.free_v_idx])
            rth = np.linalg.norm(resid[self.free_th_idx])
            history.append((rv, rth))
            if rv0 is None:
                rv0, rth0 = rv, rth
            if rv <= self.newton_rtol * rv0 + 1e-300 and \
               rth <= self.newton_rtol * rth0 + 1e-300:
                return solves
            if it == self.newton_max_iter:
                raise SolverError(
                    f"Newton did not converge in {self.newton_max_iter} "
                    f"iterations at t={self.state.t + self.dt:g}",
                    history=history)
            K = self.reduced.matrix(data)
            try:
                lu = splu(K.tocsc())
            except RuntimeError as err:
                raise SolverError(
                    f"singular tangent after Dirichlet reduction: {err}",
                    history=history) from err
            dx = lu.solve(-resid[self.free_mask])
            solves += 1
            nn = self.mesh.n_nodes
            nv = len(self.free_v_idx)
            self.state.v[self.free_v_idx] += dx[:nv]
            self.state.theta[self.free_th_idx - nn] += dx[nv:]

    def _currents(self, props):
        fields = fem.constitutive(
            self.gp, props, self._gather(self.state.v),
            self._gather(self.state.theta), self.ip.e_prev, self.dt)
        return fields['E'], fields['j']

    def _dissolve(self, j):
        """Per-point level update, charge bookkeeping, activation sweep."""
        currents = dsl.currents_from_density(j, self.a_uc[:, None, :])
        i1, i2, i3 = currents[..., 0], currents[..., 1], currents[..., 2]
        v_uc = self.v_uc[:, None]
        d_new, cutoff = dsl.update_level(self.ip.d, i1, i2, i3, self.v_eff,
                                         v_uc, self.dt, self.ip.active)
        delta = (d_new - self.ip.d) * v_uc
        self.ip.ledger.add(cutoff.sum(), delta.sum() + cutoff.sum())
        self.ip.d = d_new
        depth = self.mesh.depth_axis
        self.ip.charge += np.abs(self.a_uc[:, None, depth] * j[..., depth]) \
            * self.dt
        active_el = dsl.activation_update(self.neighbors, self.ip.mean_d(),
                                          ~self.metal,
                                          self.dissolved_threshold)
        self.ip.active = active_el[:, None] & (self.ip.d < 1.0)

    # ------------------------------------------------------------------
    def dissolved_volume(self):
        return float((self.ip.d[self.metal] * self.v_uc[self.metal, None]).sum())

    def charge_per_area(self):
        if len(self._anode_layer) == 0 or not self.mesh.cross_section:
            return 0.0
        return float(self.ip.charge[self._anode_layer].sum()
                     / self.mesh.cross_section)

    def surface_profile(self):
        """(width, depth) samples: per column, the active element center
        closest to the electrolyte."""
        if self._profile_cols is None:
            return None
        cols = self.mesh.surf_col
        ncol = len(self._profile_cols)
        active_el = self.ip.active.any(axis=1)
        sel = active_el & (cols >= 0) & self.metal
        if sel.sum() < 2:
            return None
        depth = np.full(ncol, -np.inf)
        np.maximum.at(depth, cols[sel],
                      self.centers[sel, self.mesh.depth_axis])
        ok = np.isfinite(depth) & np.isfinite(self._profile_cols)
        if ok.sum() < 2:
            return None
        return self._profile_cols[ok], depth[ok]

    def front_profile(self):
        """Sub-element front resolution: remaining metal thickness (m) per
        column, from the level field and the column footprint area."""
        if self._profile_cols is None or not self.mesh.col_footprint:
            return None
        cols = self.mesh.surf_col
        ncol = len(self._profile_cols)
        sel = self.metal & (cols >= 0)
        remaining = ((1.0 - self.ip.d[sel]) * self.v_uc[sel, None]).sum(axis=1)
        vol = np.zeros(ncol)
        np.add.at(vol, cols[sel], remaining)
        return self._profile_cols, vol / self.mesh.col_footprint

    def _record(self):
        profile = self.surface_profile()
        if profile is None:
            rz = ra = np.nan
        else:
            rz, ra = postprocess.roughness(*profile)
        self.records.append({
            't': self.state.t,
            'q_per_a': self.charge_per_area(),
            'rz': rz, 'ra': ra,
            'v_dis': self.dissolved_volume(),
            'v_co': self.ip.ledger.v_co,
        })

    def step(self):
        """Advance one time increment of the staggered scheme."""
        props = self._freeze_props()
        t_new = self.state.t + self.dt
        self._apply_dirichlet(t_new)
        solves = self._newton(props)
        self.newton_counts.append(solves)
        E, j = self._currents(props)
        self._dissolve(j)
        self.ip.e_prev = E
        self.state.v_n = self.state.v.copy()
        self.state.theta_n = self.state.theta.copy()
        self.state.t = t_new

    def run(self, csv_path=None, vtk_dir=None):
        """Execute the time loop; returns a RunResult with the series."""
        started = _time.perf_counter()
        n_steps = int(round(self.t_end / self.dt))
        self._record()
        if vtk_dir:
            self._snapshot(vtk_dir, 0)
        for k in range(1, n_steps + 1):
            try:
                self.step()
            except SolverError as err:
                err.checkpoint = self._checkpoint(csv_path)
                raise
            if k % self.record_every == 0 or k == n_steps:
                self._record()
            if vtk_dir and self.vtk_every and (
                    k % self.vtk_every == 0 or k == n_steps):
                self._snapshot(vtk_dir, k)
        series = {key: np.array([r[key] for r in self.records])
                  for key in self.records[0]}
        if csv_path:
            postprocess.write_series_csv(csv_path, series)
        v_dis = self.dissolved_volume()
        summary = {
            'v_dis': v_dis,
            'v_co': self.ip.ledger.v_co,
            'v_co_ratio': self.ip.ledger.v_co / v_dis if v_dis else 0.0,
            'steps': n_steps,
            'max_newton_solves': int(max(self.newton_counts, default=0)),
            'wall_time': _time.perf_counter() - started,
        }
        return RunResult(mesh=self.mesh, series=series, state=self.state,
                         ip=self.ip, summary=summary)

    def _snapshot(self, vtk_dir, step):
        import os
        os.makedirs(vtk_dir, exist_ok=True)
        path = os.path.join(vtk_dir, f"fields_{step:06d}.vtk")
        postprocess.write_vtk(
            path, self.mesh,
            point_data={'v': self.state.v, 'theta': self.state.theta},
            cell_data={'d': self.ip.mean_d()})

    def _checkpoint(self, csv_path):
        import os
        base = os.path.dirname(csv_path) if csv_path else '.'
        path = os.path.join(base, 'checkpoint_last_good.npz')
        try:
            np.savez(path, v=self.state.v_n, theta=self.state.theta_n,
                     d=self.ip.d, t=self.state.t)
        except OSError:
            return None
        return path
