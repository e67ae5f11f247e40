"""Global DOF enumeration and boundary constraint bookkeeping.

Velocity DOF layout (global):

* ``'br'``: vertex DOFs ``2*v + c`` (component c), then one bubble DOF per
  edge at ``2*NV + e``.
* ``'p2b'``: vertex DOFs ``2*v + c``, edge-midpoint DOFs ``2*(NV + e) + c``,
  then two cell-bubble DOFs ``2*(NV + NE) + 2*cell + c``.

Pressure DOFs are cell-local: ``cell`` for k=1, ``3*cell + j`` for k=2 with
the monomial basis {1, x, y}.  H(div) DOFs follow the global edge order
(RT1: two moments per edge, then two interior DOFs per cell).
"""

import numpy as np

from .elements import velocity_dof_layout, rt_ldof


class VelocitySpace:
    """Velocity DOF tables for one of the two element kinds.

    Attributes
    ----------
    nodal_points : ndarray (NP, 2)
        Interpolation nodes of the nodal block; nodal DOF ``2*p + c`` is
        component ``c`` at point ``p``.
    cell2dof : ndarray (NC, ldof)
        Global DOFs per cell, nodal block first.
    """

    def __init__(self, mesh, kind):
        if kind not in ('br', 'p2b'):
            raise ValueError(f"unknown velocity element kind {kind!r}")
        self.mesh = mesh
        self.kind = kind
        self.k = 1 if kind == 'br' else 2
        self.nodal_ldof, self.bubble_ldof = velocity_dof_layout(kind)
        NV, NE, NC = mesh.num_vertices, mesh.num_edges, mesh.num_cells
        cells = mesh.cells
        if kind == 'br':
            self.nodal_points = mesh.vertices.copy()
            self.num_nodal = 2 * NV
            self.num_bubble = NE
            c2d = np.empty((NC, 9), dtype=np.int64)
            c2d[:, 0:6:2] = 2 * cells
            c2d[:, 1:6:2] = 2 * cells + 1
            c2d[:, 6:9] = 2 * NV + mesh.cell_edges
        else:
            self.nodal_points = np.vstack([mesh.vertices, mesh.edge_midpoints()])
            self.num_nodal = 2 * (NV + NE)
            self.num_bubble = 2 * NC
            c2d = np.empty((NC, 14), dtype=np.int64)
            c2d[:, 0:6:2] = 2 * cells
            c2d[:, 1:6:2] = 2 * cells + 1
            c2d[:, 6:12:2] = 2 * (NV + mesh.cell_edges)
            c2d[:, 7:12:2] = 2 * (NV + mesh.cell_edges) + 1
            base = 2 * (NV + NE)
            c2d[:, 12] = base + 2 * np.arange(NC)
            c2d[:, 13] = base + 2 * np.arange(NC) + 1
        self.cell2dof = c2d
        self.num_dofs = self.num_nodal + self.num_bubble

    def interpolate(self, f):
        """Nodal interpolation: point values on the nodal block, zero bubbles.

        ``f`` maps an (N, 2) array of points to (N, 2) vector values.
        """
        coeffs = np.zeros(self.num_dofs)
        vals = np.asarray(f(self.nodal_points), dtype=float)
        coeffs[:self.num_nodal] = vals.reshape(-1)
        return coeffs


class PressureSpace:
    """Discontinuous P^{k-1} pressure DOFs with mean-value weights."""

    def __init__(self, mesh, k):
        self.mesh = mesh
        self.k = k
        NC = mesh.num_cells
        area = mesh.geom.area
        if k == 1:
            self.cell2dof = np.arange(NC, dtype=np.int64)[:, None]
            self.num_dofs = NC
            self.mean_weights = area.copy()
        elif k == 2:
            self.cell2dof = (3 * np.arange(NC, dtype=np.int64)[:, None]
                             + np.arange(3)[None, :])
            self.num_dofs = 3 * NC
            cent = mesh.vertices[mesh.cells].mean(axis=1)
            m = np.empty(3 * NC)
            m[0::3] = area
            m[1::3] = area * cent[:, 0]
            m[2::3] = area * cent[:, 1]
            self.mean_weights = m
        else:
            raise ValueError(f"unsupported pressure order k={k}")


class HdivSpace:
    """Raviart-Thomas DOF tables (global edge moments, then interior)."""

    def __init__(self, mesh, order):
        self.mesh = mesh
        self.order = order
        NE, NC = mesh.num_edges, mesh.num_cells
        ge = mesh.cell_edges
        if order == 0:
            self.cell2dof = ge.astype(np.int64)
            self.num_dofs = NE
        elif order == 1:
            c2d = np.empty((NC, 8), dtype=np.int64)
            c2d[:, 0:6:2] = 2 * ge
            c2d[:, 1:6:2] = 2 * ge + 1
            c2d[:, 6] = 2 * NE + 2 * np.arange(NC)
            c2d[:, 7] = 2 * NE + 2 * np.arange(NC) + 1
            self.cell2dof = c2d
            self.num_dofs = 2 * NE + 2 * NC
        else:
            raise ValueError(f"unsupported RT order {order}")
        self.ldof = rt_ldof(order)


def build_spaces(mesh, kind):
    """Velocity, pressure and H(div) spaces for element family `kind`."""
    V = VelocitySpace(mesh, kind)
    return V, PressureSpace(mesh, V.k), HdivSpace(mesh, V.k - 1)


def _boundary_edge_axes(mesh, tol=1e-12):
    """Constrained component (0 or 1) per boundary edge; errors if skewed."""
    be = mesh.boundary_edges
    t = mesh.vertices[mesh.edges[be, 1]] - mesh.vertices[mesh.edges[be, 0]]
    elen = np.linalg.norm(t, axis=1)
    comp = np.full(be.shape[0], -1, dtype=np.int64)
    comp[np.abs(t[:, 0]) <= tol * elen] = 0   # vertical edge, normal = e_x
    comp[np.abs(t[:, 1]) <= tol * elen] = 1   # horizontal edge, normal = e_y
    if np.any(comp < 0):
        raise ValueError("no_penetration mode requires an axis-aligned boundary")
    return comp


def dirichlet_dofs(space, mode='full'):
    """Constrained velocity DOF indices (sorted, unique).

    ``full``: every boundary nodal component plus every boundary-edge bubble.
    ``no_penetration``: normal components only (both components at corners,
    where two boundary directions meet); boundary-edge bubbles are always
    constrained since they are purely normal.
    """
    mesh = space.mesh
    NV, NE = mesh.num_vertices, mesh.num_edges
    be = mesh.boundary_edges
    dofs = []
    if mode == 'full':
        bpts = mesh.boundary_vertices.tolist()
        if space.kind == 'p2b':
            bpts += (NV + be).tolist()
        bpts = np.asarray(bpts, dtype=np.int64)
        dofs.append(2 * bpts)
        dofs.append(2 * bpts + 1)
        if space.kind == 'br':
            dofs.append(2 * NV + be)
    elif mode == 'no_penetration':
        comp = _boundary_edge_axes(mesh)
        nodal = set()
        for e, c in zip(be, comp):
            va, vb = mesh.edges[e]
            nodal.add(2 * va + c)
            nodal.add(2 * vb + c)
            if space.kind == 'p2b':
                nodal.add(2 * (NV + e) + c)
        dofs.append(np.fromiter(nodal, dtype=np.int64))
        if space.kind == 'br':
            dofs.append(2 * NV + be)
    else:
        raise ValueError(f"unknown boundary mode {mode!r}")
    return np.unique(np.concatenate(dofs))


def boundary_values(space, dofs, f):
    """Vector g with g[dof] = f value for constrained nodal DOFs, else 0.

    Bubble DOFs among `dofs` stay zero: the lift interpolates the trace on
    the nodal block only.
    """
    g = np.zeros(space.num_dofs)
    nod = dofs[dofs < space.num_nodal]
    pts = space.nodal_points[nod // 2]
    vals = np.asarray(f(pts), dtype=float)
    g[nod] = vals[np.arange(nod.size), nod % 2]
    return g
