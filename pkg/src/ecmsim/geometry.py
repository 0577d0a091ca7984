"""Hexahedral meshes for the machining scenarios and unit-cell geometry.

Every scenario is a planar layout extruded one element through the
thickness. The mesh never changes during a simulation; element volumes,
axis-plane section areas and face adjacency are computed once from the
undeformed geometry and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fem

METAL = 0
ELECTROLYTE = 1

# Local node ids of the six hexahedron faces (VTK corner ordering).
HEX_FACES = np.array([
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
])

HEX_EDGES = np.array([
    [0, 1], [1, 2], [2, 3], [3, 0],
    [4, 5], [5, 6], [6, 7], [7, 4],
    [0, 4], [1, 5], [2, 6], [3, 7],
])


class GeometryError(ValueError):
    """Invalid geometry input or degenerate element."""


@dataclass(frozen=True)
class UnitCellGeom:
    """Per-integration-point unit cell: volume and axis-plane areas."""

    v_uc: float  # m^3
    a_ucx: float  # m^2
    a_ucy: float
    a_ucz: float

    def __post_init__(self):
        if min(self.v_uc, self.a_ucx, self.a_ucy, self.a_ucz) <= 0.0:
            raise GeometryError("unit cell requires positive volume and areas")

    @property
    def areas(self):
        return np.array([self.a_ucx, self.a_ucy, self.a_ucz])


@dataclass
class Mesh:
    """Hexahedral mesh with region tags, node sets and scenario metadata."""

    nodes: np.ndarray  # (nn, 3) m
    elements: np.ndarray  # (ne, 8) trilinear hexahedra
    region: np.ndarray  # (ne,) METAL or ELECTROLYTE
    node_sets: dict = field(default_factory=dict)
    # Scenario metadata used by the time loop and postprocessing.
    surf_col: np.ndarray | None = None  # per-element surface column id, -1 if none
    width_axis: int = 0  # coordinate along the machined surface
    depth_axis: int = 1  # coordinate from metal towards the electrolyte
    cross_section: float | None = None  # area for charge-per-area, m^2
    col_footprint: float | None = None  # per-column cross-section, m^2
    _volumes: np.ndarray | None = field(default=None, repr=False)
    _areas: np.ndarray | None = field(default=None, repr=False)
    _neighbors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=np.int64)
        self.region = np.asarray(self.region, dtype=np.int8)
        if self.elements.min() < 0 or self.elements.max() >= len(self.nodes):
            raise GeometryError("element connectivity references missing nodes")
        if len(self.region) != len(self.elements):
            raise GeometryError("one region tag per element required")

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def centers(self):
        return self.nodes[self.elements].mean(axis=1)

    def element_volumes(self):
        if self._volumes is None:
            self._volumes = element_volumes(self.nodes, self.elements)
        return self._volumes

    def element_axis_areas(self):
        if self._areas is None:
            self._areas = element_axis_areas_batch(self.nodes, self.elements)
        return self._areas

    def unit_cell_table(self, n_gp=fem.N_GP):
        """Arrays (V_uc (ne,), A_uc (ne, 3)) shared by each element's points."""
        if n_gp != fem.N_GP:
            raise GeometryError("unit cells are defined for the 2x2x2 rule only")
        return self.element_volumes() / n_gp, self.element_axis_areas() / n_gp

    def face_neighbors(self):
        if self._neighbors is None:
            self._neighbors = face_neighbors(self.elements)
        return self._neighbors

    def validate(self):
        """Positive Jacobians everywhere plus conforming faces."""
        fem.precompute_gauss_data(self.nodes, self.elements)
        self.face_neighbors()
        return self


def element_volume(coords):
    """Volume of one hexahedron by 2x2x2 Gauss integration of det J.

    Exact for trilinear hexahedra (det J has degree <= 2 per reference
    coordinate). Raises on inverted elements.
    """
    return float(element_volumes(np.asarray(coords, dtype=float),
                                 np.array([[0, 1, 2, 3, 4, 5, 6, 7]]))[0])


def element_volumes(nodes, elements):
    coords = nodes[elements]
    jac = np.einsum('eai,gaj->egij', coords, fem.DN_AT_GAUSS)
    det = np.linalg.det(jac)
    if np.any(det <= 0.0):
        bad = np.unique(np.nonzero(det <= 0.0)[0])
        raise GeometryError(f"inverted element(s) {bad[:10].tolist()}")
    return det.sum(axis=1)


def _section_polygon_area(points, axis, scale):
    """Area of the plane-section polygon given its vertices in 3D.

    The points lie in a plane with normal along ``axis``; they are
    deduplicated, ordered by angle about their centroid and integrated by
    the shoelace formula. Sections of convex hexahedra are convex, so the
    angular ordering is exact.
    """
    keep = [i for i in (0, 1, 2) if i != axis]
    pts2 = points[:, keep]
    rounded = np.round(pts2 / (1e-9 * scale))
    _, idx = np.unique(rounded, axis=0, return_index=True)
    pts2 = pts2[np.sort(idx)]
    if len(pts2) < 3:
        raise GeometryError(
            f"degenerate {'xyz'[axis]}-plane section ({len(pts2)} points)")
    c = pts2.mean(axis=0)
    order = np.argsort(np.arctan2(pts2[:, 1] - c[1], pts2[:, 0] - c[0]))
    p = pts2[order]
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def element_axis_areas(coords):
    """Section areas of one element with the axis planes through its center.

    For each of the three planes (normal e_x, e_y, e_z through the corner
    average), the element's twelve edges are intersected with the plane
    and the resulting convex polygon's area is returned, as
    (A_elx, A_ely, A_elz).
    """
    coords = np.asarray(coords, dtype=float)
    center = coords.mean(axis=0)
    scale = float(np.linalg.norm(coords.max(axis=0) - coords.min(axis=0)))
    if scale == 0.0:
        raise GeometryError("element has zero extent")
    areas = np.empty(3)
    for axis in range(3):
        c = center[axis]
        pts = []
        for a, b in HEX_EDGES:
            pa, pb = coords[a], coords[b]
            da, db = pa[axis] - c, pb[axis] - c
            span = pb[axis] - pa[axis]
            if abs(span) < 1e-14 * scale:
                if abs(da) < 1e-12 * scale:  # edge lies in the plane
                    pts.extend((pa, pb))
                continue
            t = -da / span
            if -1e-12 <= t <= 1.0 + 1e-12:
                pts.append(pa + np.clip(t, 0.0, 1.0) * (pb - pa))
        if len(pts) < 3:
            raise GeometryError(
                f"fewer than 3 edge intersections for axis {'xyz'[axis]}")
        areas[axis] = _section_polygon_area(np.asarray(pts), axis, scale)
    return areas


def element_axis_areas_batch(nodes, elements):
    coords = nodes[elements]
    out = np.empty((len(elements), 3))
    for e in range(len(elements)):
        out[e] = element_axis_areas(coords[e])
    return out


def unit_cell_geom(coords, n_gp=fem.N_GP):
    """Unit cell of one integration point: V_el/n_gp and A_el/n_gp."""
    if n_gp != fem.N_GP:
        raise GeometryError("unit cells are defined for the 2x2x2 rule only")
    vol = element_volume(coords)
    ax, ay, az = element_axis_areas(coords) / n_gp
    return UnitCellGeom(v_uc=vol / n_gp, a_ucx=ax, a_ucy=ay, a_ucz=az)


def face_neighbors(elements):
    """(ne, 6) face-adjacent element ids, -1 on boundary faces."""
    ne = len(elements)
    faces = np.sort(elements[:, HEX_FACES].reshape(-1, 4), axis=1)
    _, inverse, counts = np.unique(faces, axis=0, return_inverse=True,
                                   return_counts=True)
    if np.any(counts > 2):
        raise GeometryError("non-conforming mesh: face shared by >2 elements")
    nb = np.full((ne, 6), -1, dtype=np.int64)
    order = np.argsort(inverse, kind='stable')
    paired = inverse[order][:-1] == inverse[order][1:]
    f1 = order[:-1][paired]
    f2 = order[1:][paired]
    nb[f1 // 6, f1 % 6] = f2 // 6
    nb[f2 // 6, f2 % 6] = f1 // 6
    return nb


# ---------------------------------------------------------------------------
# 2D layouts extruded to one-element-thick hexahedral meshes


class _QuadLayout:
    """Planar quad mesh under construction; nodes merged by rounded position."""

    def __init__(self, scale):
        self.scale = scale
        self._ids = {}
        self.points = []
        self.quads = []
        self.region = []
        self.cols = []

    def node(self, x, y):
        key = (round(x / self.scale, 9), round(y / self.scale, 9))
        nid = self._ids.get(key)
        if nid is None:
            nid = len(self.points)
            self._ids[key] = nid
            self.points.append((x, y))
        return nid

    def quad(self, corners, region, col=-1):
        self.quads.append(corners)
        self.region.append(region)
        self.cols.append(col)

    def grid(self, x_edges, y_edges, region, col_offset=None):
        """Regular block of quads; column ids count along x when requested."""
        for i in range(len(x_edges) - 1):
            for j in range(len(y_edges) - 1):
                n0 = self.node(x_edges[i], y_edges[j])
                n1 = self.node(x_edges[i + 1], y_edges[j])
                n2 = self.node(x_edges[i + 1], y_edges[j + 1])
                n3 = self.node(x_edges[i], y_edges[j + 1])
                col = -1 if col_offset is None else col_offset + i
                self.quad((n0, n1, n2, n3), region, col)


def _extrude(layout: _QuadLayout, thickness, node_set_fns, width_axis,
             depth_axis, cross_section, col_footprint=None):
    """Lift a planar layout to hexahedra of one element through thickness."""
    if thickness <= 0.0:
        raise GeometryError("thickness must be positive")
    pts = np.asarray(layout.points, dtype=float)
    n2 = len(pts)
    nodes = np.zeros((2 * n2, 3))
    nodes[:n2, :2] = pts
    nodes[n2:, :2] = pts
    nodes[n2:, 2] = thickness
    quads = np.asarray(layout.quads, dtype=np.int64)
    elements = np.concatenate([quads, quads + n2], axis=1)
    node_sets = {}
    for name, fn in node_set_fns.items():
        mask2 = fn(pts[:, 0], pts[:, 1])
        ids = np.nonzero(mask2)[0]
        node_sets[name] = np.concatenate([ids, ids + n2])
    mesh = Mesh(nodes=nodes, elements=elements,
                region=np.asarray(layout.region),
                node_sets=node_sets,
                surf_col=np.asarray(layout.cols, dtype=np.int64),
                width_axis=width_axis, depth_axis=depth_axis,
                cross_section=cross_section, col_footprint=col_footprint)
    return mesh.validate()


def _graded_sizes(total, n, ratio):
    """n strictly positive interval sizes growing geometrically by ratio."""
    if n < 1:
        return np.zeros(0)
    weights = ratio ** np.arange(n)
    return total * weights / weights.sum()


def rect_gap_mesh(l, s, g, nx, ny=None, nx_top=None, gap_cols=None):
    """Square workpiece with an electrolyte gap strip at its right edge.

    The metal occupies [0, l] x [0, l], the electrolyte [l, l+s] x [0, l];
    everything is extruded by g. ``nx_top`` < ``nx`` requests a distorted
    mesh whose bottom edge carries ``nx`` divisions and top edge
    ``nx_top``, connected by conforming 4-to-2 transition bands.
    """
    if min(l, s, g) <= 0.0:
        raise GeometryError("dimensions must be positive")
    if ny is None:
        ny = nx
    if gap_cols is None:
        gap_cols = max(1, round(s / (l / nx)))
    x_fine = np.linspace(0.0, l, nx + 1)
    x_gap = l + np.linspace(0.0, s, gap_cols + 1)
    layout = _QuadLayout(scale=l)

    if nx_top is None or nx_top == nx:
        y_edges = np.linspace(0.0, l, ny + 1)
        layout.grid(x_fine, y_edges, METAL)
        layout.grid(x_gap, y_edges, ELECTROLYTE)
        # Columns for front profiling run along y: the front moves in -x.
        qy = np.asarray([layout.points[q[0]][1] for q in layout.quads])
        layout.cols = np.rint(qy / (l / ny)).astype(np.int64).tolist()
    else:
        ratio = nx // nx_top
        if nx_top * ratio != nx or ratio & (ratio - 1):
            raise GeometryError("top divisions must halve down from the bottom")
        counts = []
        c = nx
        while c >= nx_top:
            counts.append(c)
            c //= 2
        bands = len(counts) - 1
        band_heights = [l / counts[k + 1] for k in range(bands)]
        span = (l - sum(band_heights)) / len(counts)
        y = 0.0
        for k, count in enumerate(counts):
            rows = max(1, round(span / (l / count)))
            y_edges = y + np.linspace(0.0, span, rows + 1)
            x_edges = x_fine[:: nx // count]
            layout.grid(x_edges, y_edges, METAL)
            layout.grid(x_gap, y_edges, ELECTROLYTE)
            y += span
            if k < bands:
                yt = y + band_heights[k]
                _transition_band(layout, x_fine[:: nx // count], y, yt)
                layout.grid(x_gap, np.array([y, yt]), ELECTROLYTE)
                y = yt

    set_fns = {
        'anode': lambda x, y: x < 1e-12 * l,
        'cathode': lambda x, y: x > l + s - 1e-12 * l,
        't_all': lambda x, y: np.ones_like(x, dtype=bool),
    }
    return _extrude(layout, g, set_fns, width_axis=1, depth_axis=0,
                    cross_section=l * g, col_footprint=(l / ny) * g)


def _transition_band(layout, x_fine, yb, yt):
    """Conforming 4-to-2 coarsening band: six quads per four fine columns."""
    n = len(x_fine) - 1
    if n % 4:
        raise GeometryError("transition band needs a multiple of 4 columns")
    h = yt - yb
    for m in range(n // 4):
        xs = x_fine[4 * m: 4 * m + 5]
        a = [layout.node(x, yb) for x in xs]
        d0 = layout.node(xs[0], yt)
        d2 = layout.node(xs[2], yt)
        d4 = layout.node(xs[4], yt)
        i1 = layout.node(xs[1], yb + 0.45 * h)
        i2 = layout.node(xs[2], yb + 0.55 * h)
        i3 = layout.node(xs[3], yb + 0.45 * h)
        layout.quad((a[0], a[1], i1, d0), METAL)
        layout.quad((a[1], a[2], i2, i1), METAL)
        layout.quad((a[2], a[3], i3, i2), METAL)
        layout.quad((a[3], a[4], d4, i3), METAL)
        layout.quad((d0, i1, i2, d2), METAL)
        layout.quad((i2, i3, d4, d2), METAL)


def mapped_surface_mesh(width, depth, surface_fn, gap, g, nx,
                        metal_rows=24, metal_ratio=0.85, fine_layers=6,
                        fine_h=None, elec_rows=4, elec_ratio=1.3,
                        theta_strips=True, strip_depth=None):
    """Workpiece with a profiled top surface under a flat cathode plane.

    Metal occupies y in [-depth, y_s(x)] with y_s = surface_fn(x) >= 0;
    the electrolyte fills up to the cathode plane at max(y_s) + gap.
    Element rows follow the surface (boundary-fitted); a band of
    ``fine_layers`` rows of uniform thickness ``fine_h`` hugs the surface
    on both sides, the remaining rows are geometrically graded.
    """
    if min(width, depth, gap, g) <= 0.0:
        raise GeometryError("dimensions must be positive")
    x_edges = np.linspace(0.0, width, nx + 1)
    ys = np.array([float(surface_fn(x)) for x in x_edges])
    if np.any(ys < 0.0) or np.any(ys + depth <= 0.0):
        raise GeometryError("surface profile must stay above the metal base")
    y_top = ys.max() + gap
    if fine_h is None:
        fine_h = 0.5 * width / nx
    band = fine_layers * fine_h

    cols = np.empty((nx + 1, metal_rows + fine_layers + elec_rows + 1))
    for i, ysi in enumerate(ys):
        lower_span = ysi + depth - band
        if lower_span <= 0.0:
            raise GeometryError("fine band thicker than the metal")
        sizes = _graded_sizes(lower_span, metal_rows, metal_ratio)
        y_metal = -depth + np.concatenate([[0.0], np.cumsum(sizes)])
        y_metal = np.concatenate([y_metal,
                                  ysi - band + fine_h * np.arange(1, fine_layers + 1)])
        upper_span = y_top - ysi
        if upper_span <= 0.0:
            raise GeometryError("cathode plane below the surface")
        e_sizes = _graded_sizes(upper_span, elec_rows, elec_ratio)
        y_elec = ysi + np.cumsum(e_sizes)
        cols[i] = np.concatenate([y_metal, y_elec])

    n_metal = metal_rows + fine_layers
    layout = _QuadLayout(scale=width)
    n_rows = cols.shape[1] - 1
    for i in range(nx):
        for j in range(n_rows):
            n0 = layout.node(x_edges[i], cols[i, j])
            n1 = layout.node(x_edges[i + 1], cols[i + 1, j])
            n2 = layout.node(x_edges[i + 1], cols[i + 1, j + 1])
            n3 = layout.node(x_edges[i], cols[i, j + 1])
            region = METAL if j < n_metal else ELECTROLYTE
            layout.quad((n0, n1, n2, n3), region, col=i)

    if strip_depth is None:
        strip_depth = 0.25 * depth
    set_fns = {
        'anode': lambda x, y: y < -depth + 1e-12 * width,
        'cathode': lambda x, y: y > y_top - 1e-12 * width,
        't_all': lambda x, y: np.ones_like(x, dtype=bool),
    }
    if theta_strips:
        set_fns['t_in'] = lambda x, y: (x < 1e-12 * width) & (y >= -strip_depth - 1e-9 * width)
        set_fns['t_out'] = lambda x, y: (x > width - 1e-12 * width) & (y >= -strip_depth - 1e-9 * width)
    return _extrude(layout, g, set_fns, width_axis=0, depth_axis=1,
                    cross_section=width * g, col_footprint=(width / nx) * g)


def stair_surface_mesh(width, profile_fn, depth, gap, g, nx, fine_h,
                       fine_floor, coarse_rows_below=5, coarse_rows_above=10,
                       coarse_ratio=1.6):
    """Uniform fine grid around a rough profile with graded far fields.

    Cells between ``fine_floor`` and just above the profile peak have
    uniform height ``fine_h`` and are tagged metal or electrolyte by
    sampling the profile at the cell center (stair-step boundary), so the
    element rows stay flat and a receding surface keeps a well defined
    column profile. Below and above, rows grow geometrically down to
    -depth and up to max(profile) + gap.
    """
    if min(width, depth, gap, g, fine_h) <= 0.0:
        raise GeometryError("dimensions must be positive")
    x_edges = np.linspace(0.0, width, nx + 1)
    xc = 0.5 * (x_edges[:-1] + x_edges[1:])
    ys_c = np.array([float(profile_fn(x)) for x in xc])
    peak = ys_c.max()
    fine_top = (math.floor(peak / fine_h) + 2) * fine_h
    n_fine = round((fine_top - fine_floor) / fine_h)
    y_fine = fine_floor + fine_h * np.arange(n_fine + 1)
    below = _graded_sizes(fine_floor + depth, coarse_rows_below, coarse_ratio)
    y_below = -depth + np.concatenate([[0.0], np.cumsum(below)])[:-1]
    y_top = peak + gap
    above = _graded_sizes(y_top - fine_top, coarse_rows_above, coarse_ratio)
    y_above = fine_top + np.cumsum(above)
    y_edges = np.concatenate([y_below, y_fine, y_above])

    layout = _QuadLayout(scale=width)
    yc = 0.5 * (y_edges[:-1] + y_edges[1:])
    for i in range(nx):
        for j in range(len(yc)):
            n0 = layout.node(x_edges[i], y_edges[j])
            n1 = layout.node(x_edges[i + 1], y_edges[j])
            n2 = layout.node(x_edges[i + 1], y_edges[j + 1])
            n3 = layout.node(x_edges[i], y_edges[j + 1])
            region = METAL if yc[j] < ys_c[i] else ELECTROLYTE
            layout.quad((n0, n1, n2, n3), region, col=i)

    set_fns = {
        'anode': lambda x, y: y < -depth + 1e-12 * width,
        'cathode': lambda x, y: y > y_top - 1e-12 * width,
        't_all': lambda x, y: np.ones_like(x, dtype=bool),
    }
    return _extrude(layout, g, set_fns, width_axis=0, depth_axis=1,
                    cross_section=width * g, col_footprint=(width / nx) * g)


def build_scenario_mesh(spec: dict) -> Mesh:
    """Dispatch a geometry description to the matching mesh builder.

    Supported cases: ``rect_gap`` (workpiece with electrolyte strip,
    optionally distorted), ``planar`` and ``curved`` specimens under a
    flat cathode plane, and ``spikes`` (idealized rough surface for
    pulsed machining).
    """
    spec = dict(spec)
    case = spec.pop('case', None)
    if case == 'rect_gap':
        return rect_gap_mesh(spec['l'], spec['s'], spec['g'], spec['nx'],
                             ny=spec.get('ny'), nx_top=spec.get('nx_top'),
                             gap_cols=spec.get('gap_cols'))
    if case == 'planar':
        return mapped_surface_mesh(
            width=spec['l'], depth=spec['l'], surface_fn=lambda x: 0.0,
            gap=spec['s'], g=spec['g'], nx=spec['nx'],
            metal_rows=spec.get('metal_rows', 22),
            metal_ratio=spec.get('metal_ratio', 0.85),
            fine_layers=spec.get('fine_layers', 6),
            fine_h=spec.get('fine_h'),
            elec_rows=spec.get('elec_rows', 4),
            elec_ratio=spec.get('elec_ratio', 1.3))
    if case == 'curved':
        profile = parabola_elevation_profile(
            spec['x1'], spec['x2'], spec['y1'], spec['y2'],
            spec['vertex_x'], spec['vertex_y'])
        return mapped_surface_mesh(
            width=spec['l'], depth=spec['l'], surface_fn=profile,
            gap=spec['s'], g=spec['g'], nx=spec['nx'],
            metal_rows=spec.get('metal_rows', 20),
            metal_ratio=spec.get('metal_ratio', 0.85),
            fine_layers=spec.get('fine_layers', 6),
            fine_h=spec.get('fine_h'),
            elec_rows=spec.get('elec_rows', 5),
            elec_ratio=spec.get('elec_ratio', 1.3))
    if case == 'spikes':
        profile = spike_profile(spec['x1'], spec['p'], spec['r'])
        fine_h = spec.get('fine_h') or spec['r'] / 2.0
        fine_floor = spec.get('fine_floor')
        if fine_floor is None:
            fine_floor = -0.45 * spec['h']
        return stair_surface_mesh(
            width=spec['w'], profile_fn=profile, depth=spec['h'],
            gap=spec['s'], g=spec['g'], nx=spec['nx'], fine_h=fine_h,
            fine_floor=fine_floor,
            coarse_rows_below=spec.get('coarse_rows_below', 5),
            coarse_rows_above=spec.get('coarse_rows_above', 10))
    raise GeometryError(f"unknown geometry case '{case}'")


# ---------------------------------------------------------------------------
# Scenario surface profiles


def parabola_elevation_profile(x1, x2, y1, y2, vertex_x, vertex_y):
    """Curved crown with a raised tab, clipped to a flat baseline.

    The crown is the downward parabola through (vertex_x, vertex_y) with
    roots at 0 and x2; the elevation is a tab of width x1 centered on the
    vertex whose flat top sits at y2 (about y1 above the local crown).
    """
    if x2 <= 0 or vertex_y <= 0 or y2 <= vertex_y:
        raise GeometryError("elevation must rise above the crown")
    a = vertex_y / (vertex_x * vertex_x)

    def profile(x):
        crown = max(0.0, vertex_y - a * (x - vertex_x) ** 2)
        if abs(x - vertex_x) <= 0.5 * x1:
            return y2
        return crown

    return profile


def spike_profile(pitch_half, peak, fillet_radius):
    """Idealized roughness: triangular spikes on flat valleys.

    Spikes of base ``pitch_half`` alternate with flat valley segments of
    the same width (pitch 2*pitch_half); the flanks rise to a sharp apex
    at ``peak`` and meet the valley floor through tangent fillets of
    ``fillet_radius``. Spike apexes sit at odd multiples of pitch_half,
    valley centers at even multiples.
    """
    if min(pitch_half, peak, fillet_radius) <= 0.0:
        raise GeometryError("profile dimensions must be positive")
    m = 2.0 * peak / pitch_half  # flank slope
    r = fillet_radius
    root = math.sqrt(m * m + 1.0)
    x_cc = r * (1.0 - root) / m  # fillet center offset from the base corner
    x_t = (x_cc + m * r) / (1.0 + m * m)  # fillet-flank tangency offset
    if pitch_half / 2.0 + x_cc < 0.0:
        raise GeometryError("fillets overlap: radius too large for the pitch")

    pitch = 2.0 * pitch_half

    def profile(x):
        # period starts at a valley center; apex at the period midpoint
        u = x % pitch
        apex = pitch_half
        base_l = apex - 0.5 * pitch_half
        base_r = apex + 0.5 * pitch_half
        # distance to nearest base corner for the fillets
        for corner, sgn in ((base_l, 1.0), (base_r, -1.0)):
            dx = (u - corner) * sgn
            if x_cc <= dx <= x_t:
                cy = r
                cx = corner + sgn * x_cc
                return cy - math.sqrt(max(0.0, r * r - (u - cx) ** 2))
        if base_l + x_t < u < base_r - x_t:
            return peak - m * abs(u - apex)
        return 0.0

    return profile
