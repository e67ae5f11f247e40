"""Divergence-free velocity reconstruction onto Raviart-Thomas spaces.

The operator is Pi_h = Pi_h^1 + Pi_h^R with Pi_h^1 = I_h (nodal
interpolation onto the continuous [P^k]^2 block, which simply drops the
bubbles) and Pi_h^R = Pi_h^RT (1 - I_h) (RT interpolation of the bubble
remainder).  Both are realized as sparse coefficient maps.

Edge moments of the bubble remainder are accumulated from the edge's owner
cell only; traces are single-valued so either side gives the same number.
"""

import numpy as np
from scipy import sparse

from .elements import RTBasis, velocity_basis, physical_points
from .quadrature import quadrature_rule, edge_gauss_rule

_NEXT = ((1, 2), (2, 0), (0, 1))   # local edge i: start/end local vertices


def _edge_bary(i, s):
    """Barycentric coordinates along local edge i at parameters s."""
    lam = np.zeros((s.size, 3))
    a, b = _NEXT[i]
    lam[:, a] = 1.0 - s
    lam[:, b] = s
    return lam


def _bubble_rt_moments(V, X):
    """RAW[c, rt_dof_local, v_dof_local]: RT moments of (1 - I_h) basis.

    Nodal columns are identically zero; bubble columns hold the RT DOF
    functionals of the bubble evaluated within each cell.
    """
    mesh = V.mesh
    NC = mesh.num_cells
    nn = V.nodal_ldof
    raw = np.zeros((NC, X.ldof, nn + V.bubble_ldof))
    s, w = edge_gauss_rule(4)
    geom = mesh.geom
    for i in range(3):
        bary = _edge_bary(i, s)
        val, _ = velocity_basis(V.kind, mesh, bary)       # (NC, NS, ldof, 2)
        nglob = geom.normal[:, i, :] * mesh.cell_edge_signs[:, i, None]
        vn = np.einsum('csja,ca->csj', val[:, :, nn:, :], nglob)
        elen = geom.edge_length[:, i]
        if X.order == 0:
            raw[:, i, nn:] = np.einsum('s,csj->cj', w, vn) * elen[:, None]
        else:
            raw[:, 2 * i, nn:] = np.einsum('s,csj->cj', w, vn) * elen[:, None]
            raw[:, 2 * i + 1, nn:] = (np.einsum('s,csj->cj', w * (s - 0.5), vn)
                                      * elen[:, None])
    if X.order == 1:
        rule = quadrature_rule(8)
        val, _ = velocity_basis(V.kind, mesh, rule.points)
        for c in range(2):
            raw[:, 6 + c, nn:] = np.einsum('q,cqj->cj', rule.weights,
                                           val[:, :, nn:, c]) * geom.area[:, None]
    return raw


class ReconstructionOperators:
    """Sparse maps P1 (V_h -> nodal coefficients) and PR (V_h -> RT).

    `PRloc` holds the same data as per-cell dense blocks
    (NC, rt_ldof, v_ldof) for fast tabulation in form assembly.
    """

    def __init__(self, V, X):
        self.V = V
        self.X = X
        self.mesh = V.mesh
        self.rt = RTBasis(X.order, V.mesh)
        n = V.num_dofs
        self.P1 = sparse.hstack(
            [sparse.eye(V.num_nodal, format='csr'),
             sparse.csr_matrix((V.num_nodal, V.num_bubble))], format='csr')
        raw = _bubble_rt_moments(V, X)
        self.PRloc = raw
        # scatter to the global matrix; edge rows from the owner side only
        own = V.mesh.cell_edge_signs > 0                      # (NC, 3)
        if X.order == 0:
            rowmask = own
        else:
            rowmask = np.ones((V.mesh.num_cells, 8), dtype=bool)
            rowmask[:, 0:6:2] = own
            rowmask[:, 1:6:2] = own
        rows = np.broadcast_to(X.cell2dof[:, :, None], raw.shape)
        cols = np.broadcast_to(V.cell2dof[:, None, :], raw.shape)
        keep = np.broadcast_to(rowmask[:, :, None], raw.shape) & (raw != 0.0)
        self.PR = sparse.coo_matrix(
            (raw[keep], (rows[keep], cols[keep])),
            shape=(X.num_dofs, n)).tocsr()


def build_reconstruction(V, X):
    return ReconstructionOperators(V, X)


class ReconstructedField:
    """Pi_h v_h split into its continuous and RT parts."""

    def __init__(self, ops, nodal, rt):
        self.ops = ops
        self.nodal = nodal
        self.rt = rt

    def eval(self, bary):
        """Point values (NC, NQ, 2) of nodal_part + rt_part."""
        V, X = self.ops.V, self.ops.X
        val, _ = velocity_basis(V.kind, V.mesh, bary)
        nn = V.nodal_ldof
        loc = self.nodal[V.cell2dof[:, :nn]]
        out = np.einsum('cqja,cj->cqa', val[:, :, :nn, :], loc)
        rtv, _ = self.ops.rt.eval(bary)
        out += np.einsum('cqja,cj->cqa', rtv, self.rt[X.cell2dof])
        return out

    def div(self, bary):
        """Cellwise divergence values (NC, NQ)."""
        V, X = self.ops.V, self.ops.X
        _, grad = velocity_basis(V.kind, V.mesh, bary)
        nn = V.nodal_ldof
        loc = self.nodal[V.cell2dof[:, :nn]]
        out = np.einsum('cqjaa,cj->cq', grad[:, :, :nn, :, :], loc)
        _, rtd = self.ops.rt.eval(bary)
        out += np.einsum('cqj,cj->cq', rtd, self.rt[X.cell2dof])
        return out


def reconstruct(ops, v):
    """Apply the reconstruction to a V_h coefficient vector."""
    v = np.asarray(v, dtype=float)
    if v.shape != (ops.V.num_dofs,):
        raise ValueError(f"expected {ops.V.num_dofs} velocity coefficients, "
                         f"got shape {v.shape}")
    return ReconstructedField(ops, ops.P1 @ v, ops.PR @ v)


def l2_project_divergence(P, values, rule):
    """L2 projection P_h of a cellwise scalar field into the pressure space.

    `values` are samples (NC, NQ) at the points of `rule`.
    """
    mesh = P.mesh
    from .elements import pressure_basis
    q = pressure_basis(P.k, mesh, rule.points)                # (NC, NQ, ldof)
    wq = rule.weights
    M = np.einsum('q,cqi,cqj->cij', wq, q, q) * mesh.geom.area[:, None, None]
    b = np.einsum('q,cqi,cq->ci', wq, q, values) * mesh.geom.area[:, None]
    coeffs = np.linalg.solve(M, b[..., None])[..., 0]
    out = np.zeros(P.num_dofs)
    out[P.cell2dof] = coeffs
    return out


def seminorm_star(ops, v):
    """sqrt( sum_K h_K^-2 ||Pi_h^R v||^2_K )."""
    mesh = ops.mesh
    rule = quadrature_rule(5)
    rtv, _ = ops.rt.eval(rule.points)
    r = (ops.PR @ np.asarray(v, dtype=float))[ops.X.cell2dof]
    vals = np.einsum('cqja,cj->cqa', rtv, r)
    norm2 = np.einsum('q,cqa,cqa->c', rule.weights, vals, vals) * mesh.geom.area
    return float(np.sqrt(np.sum(norm2 / mesh.geom.h ** 2)))
