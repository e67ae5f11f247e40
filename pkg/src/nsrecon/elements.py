"""Shape functions for the velocity, pressure and H(div) families.

Velocity elements (2D):

* ``'br'`` (k=1): [P1]^2 enriched with the three normal-directed face bubbles
  b_i = (prod_{j != i} lambda_j) n_i.  9 local DOFs.
* ``'p2b'`` (k=2): [P2 (+) b_K P~0]^2 with b_K = lambda_1 lambda_2 lambda_3.
  14 local DOFs.

Local DOF order: nodal block first (vertex-major, component-minor; for k=2
vertex DOFs then edge-midpoint DOFs), then the bubble block (edge-major for
k=1; the two b_K components for k=2).  Bubbles attached to edges use the
*global* edge normal so the assembled functions are single-valued.

Pressure: discontinuous P^{k-1}, constants for k=1 and the monomials
{1, x, y} in physical coordinates for k=2.

Raviart-Thomas bases of order 0 and 1 are constructed per cell as the dual
basis of the global edge/interior moment functionals, which makes H(div)
conformity and DOF signs automatic.
"""

import numpy as np

from .quadrature import quadrature_rule, edge_gauss_rule

KINDS = {'br': 1, 'p2b': 2}

_EDGE_VERTS = np.array([[1, 2], [2, 0], [0, 1]])   # local edge i, CCW order


def velocity_dof_layout(kind):
    """(nodal_ldof, bubble_ldof) for one cell."""
    if kind == 'br':
        return 6, 3
    if kind == 'p2b':
        return 12, 2
    raise ValueError(f"unknown velocity element kind {kind!r}")


def physical_points(mesh, bary):
    """Map barycentric points (NQ, 3) to physical coordinates (NC, NQ, 2)."""
    return np.einsum('qi,cik->cqk', bary, mesh.vertices[mesh.cells])


def _scalar_p1(mesh, bary):
    NQ = bary.shape[0]
    NC = mesh.num_cells
    val = np.broadcast_to(bary[None, :, :], (NC, NQ, 3)).copy()
    grad = np.broadcast_to(mesh.geom.grad_lambda[:, None, :, :], (NC, NQ, 3, 2)).copy()
    return val, grad


def _scalar_p2(mesh, bary):
    # vertex functions lambda_i(2 lambda_i - 1), then midpoint functions
    # 4 lambda_j lambda_k on edge i = (j, k)
    gl = mesh.geom.grad_lambda                     # (NC, 3, 2)
    NQ = bary.shape[0]
    NC = mesh.num_cells
    val = np.empty((NC, NQ, 6))
    grad = np.empty((NC, NQ, 6, 2))
    lam = bary[None, :, :]                         # (1, NQ, 3)
    for i in range(3):
        val[:, :, i] = lam[:, :, i] * (2 * lam[:, :, i] - 1)
        grad[:, :, i, :] = (4 * lam[:, :, i] - 1)[:, :, None] * gl[:, None, i, :]
    for i in range(3):
        j, k = _EDGE_VERTS[i]
        val[:, :, 3 + i] = 4 * lam[:, :, j] * lam[:, :, k]
        grad[:, :, 3 + i, :] = 4 * (lam[:, :, j, None] * gl[:, None, k, :]
                                    + lam[:, :, k, None] * gl[:, None, j, :])
    return val, grad


def _vectorize_scalar(val_s, grad_s):
    """Interleave a scalar basis into vector DOFs (node-major, component-minor)."""
    NC, NQ, n = val_s.shape
    val = np.zeros((NC, NQ, 2 * n, 2))
    grad = np.zeros((NC, NQ, 2 * n, 2, 2))
    for c in range(2):
        val[:, :, c::2, c] = val_s
        grad[:, :, c::2, c, :] = grad_s
    return val, grad


def velocity_basis(kind, mesh, bary):
    """Evaluate the velocity basis.

    Returns
    -------
    val : ndarray (NC, NQ, ldof, 2)
    grad : ndarray (NC, NQ, ldof, 2, 2) with grad[..., a, b] = d_b phi_a.
    """
    bary = np.atleast_2d(bary)
    lam = bary[None, :, :]
    gl = mesh.geom.grad_lambda
    if kind == 'br':
        val_n, grad_n = _vectorize_scalar(*_scalar_p1(mesh, bary))
        # bubble on edge i: (lambda_j lambda_k) n_e with the global normal
        nglob = mesh.geom.normal * mesh.cell_edge_signs[:, :, None]
        NC, NQ = val_n.shape[:2]
        val_b = np.empty((NC, NQ, 3, 2))
        grad_b = np.empty((NC, NQ, 3, 2, 2))
        for i in range(3):
            j, k = _EDGE_VERTS[i]
            prod = lam[:, :, j] * lam[:, :, k]                    # (1|NC, NQ)
            dprod = (lam[:, :, j, None] * gl[:, None, k, :]
                     + lam[:, :, k, None] * gl[:, None, j, :])    # (NC, NQ, 2)
            val_b[:, :, i, :] = prod[:, :, None] * nglob[:, None, i, :]
            grad_b[:, :, i, :, :] = (nglob[:, None, i, :, None]
                                     * dprod[:, :, None, :])
        return (np.concatenate([val_n, val_b], axis=2),
                np.concatenate([grad_n, grad_b], axis=2))
    if kind == 'p2b':
        val_n, grad_n = _vectorize_scalar(*_scalar_p2(mesh, bary))
        bk = (lam[:, :, 0] * lam[:, :, 1] * lam[:, :, 2])
        dbk = (lam[:, :, 1, None] * lam[:, :, 2, None] * gl[:, None, 0, :]
               + lam[:, :, 0, None] * lam[:, :, 2, None] * gl[:, None, 1, :]
               + lam[:, :, 0, None] * lam[:, :, 1, None] * gl[:, None, 2, :])
        NC, NQ = val_n.shape[:2]
        val_b = np.zeros((NC, NQ, 2, 2))
        grad_b = np.zeros((NC, NQ, 2, 2, 2))
        for c in range(2):
            val_b[:, :, c, c] = bk
            grad_b[:, :, c, c, :] = dbk
        return (np.concatenate([val_n, val_b], axis=2),
                np.concatenate([grad_n, grad_b], axis=2))
    raise ValueError(f"unknown velocity element kind {kind!r}")


def pressure_basis(k, mesh, bary):
    """Discontinuous P^{k-1} basis values, (NC, NQ, ldof).

    k=1: the constant 1.  k=2: monomials [1, x, y] in physical coordinates.
    """
    bary = np.atleast_2d(bary)
    NC = mesh.num_cells
    NQ = bary.shape[0]
    if k == 1:
        return np.ones((NC, NQ, 1))
    if k == 2:
        pts = physical_points(mesh, bary)
        out = np.empty((NC, NQ, 3))
        out[:, :, 0] = 1.0
        out[:, :, 1] = pts[:, :, 0]
        out[:, :, 2] = pts[:, :, 1]
        return out
    raise ValueError(f"unsupported pressure order k={k}")


# ---------------------------------------------------------------------------
# Raviart-Thomas dual bases
# ---------------------------------------------------------------------------

def _rt_generators(order, pts, centroid):
    """Evaluate RT generator fields at physical points.

    pts: (..., 2), centroid: broadcastable (..., 2).  Returns values
    (..., ngen, 2) and divergences (..., ngen).  Generators use
    cell-centered coordinates for conditioning.
    """
    x = pts[..., 0] - centroid[..., 0]
    y = pts[..., 1] - centroid[..., 1]
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    if order == 0:
        vals = [np.stack([one, zero], axis=-1),
                np.stack([zero, one], axis=-1),
                np.stack([x, y], axis=-1)]
        divs = [zero, zero, 2 * one]
    elif order == 1:
        vals = [np.stack([one, zero], axis=-1),
                np.stack([x, zero], axis=-1),
                np.stack([y, zero], axis=-1),
                np.stack([zero, one], axis=-1),
                np.stack([zero, x], axis=-1),
                np.stack([zero, y], axis=-1),
                np.stack([x * x, x * y], axis=-1),
                np.stack([x * y, y * y], axis=-1)]
        divs = [zero, one, zero, zero, zero, one, 3 * x, 3 * y]
    else:
        raise ValueError(f"unsupported RT order {order}")
    return np.stack(vals, axis=-2), np.stack(divs, axis=-1)


def rt_ldof(order):
    return 3 if order == 0 else 8


def _rt_moment_matrix(order, mesh):
    """M[c, dof, gen] = global DOF functional applied to each generator."""
    NC = mesh.num_cells
    nd = rt_ldof(order)
    verts = mesh.vertices
    cent = verts[mesh.cells].mean(axis=1)                    # (NC, 2)
    ge = mesh.cell_edges                                     # (NC, 3)
    va = verts[mesh.edges[ge, 0]]                            # (NC, 3, 2)
    vb = verts[mesh.edges[ge, 1]]
    elen = np.linalg.norm(vb - va, axis=-1)
    t = vb - va
    nvec = np.stack([t[..., 1], -t[..., 0]], axis=-1) / elen[..., None]

    s, ws = edge_gauss_rule(4)
    epts = va[:, :, None, :] + s[None, None, :, None] * t[:, :, None, :]  # (NC,3,NS,2)
    gvals, _ = _rt_generators(order, epts, cent[:, None, None, :])        # (NC,3,NS,ng,2)
    vn = np.einsum('cesga,cea->cesg', gvals, nvec)                        # (NC,3,NS,ng)

    M = np.empty((NC, nd, gvals.shape[-2]))
    if order == 0:
        # one moment per edge: int_e v.n ds
        M[:, :3, :] = np.einsum('s,cesg->ceg', ws, vn) * elen[..., None]
    else:
        M[:, 0:6:2, :] = np.einsum('s,cesg->ceg', ws, vn) * elen[..., None]
        M[:, 1:6:2, :] = np.einsum('s,cesg->ceg', ws * (s - 0.5), vn) * elen[..., None]
        rule = quadrature_rule(4)
        qpts = physical_points(mesh, rule.points)
        gq, _ = _rt_generators(order, qpts, cent[:, None, :])             # (NC,NQ,ng,2)
        area = mesh.geom.area
        for c in range(2):
            M[:, 6 + c, :] = np.einsum('q,cqg->cg', rule.weights,
                                       gq[..., c]) * area[:, None]
    return M


class RTBasis:
    """Dual RT basis on every cell; evaluate values and divergences."""

    def __init__(self, order, mesh):
        self.order = order
        self.mesh = mesh
        M = _rt_moment_matrix(order, mesh)
        nd = rt_ldof(order)
        eye = np.broadcast_to(np.eye(nd), (mesh.num_cells, nd, nd))
        # coeff[c, gen, dof]: columns are basis functions in generator coords
        self.coeff = np.linalg.solve(M, eye)
        self.cent = mesh.vertices[mesh.cells].mean(axis=1)

    def eval(self, bary):
        """Values (NC, NQ, ldof, 2) and divergences (NC, NQ, ldof)."""
        bary = np.atleast_2d(bary)
        pts = physical_points(self.mesh, bary)
        gv, gd = _rt_generators(self.order, pts, self.cent[:, None, :])
        val = np.einsum('cqga,cgj->cqja', gv, self.coeff)
        div = np.einsum('cqg,cgj->cqj', gd, self.coeff)
        return val, div


def rt_basis(order, mesh, bary):
    """Convenience wrapper: dual-basis values/divergences at given points."""
    return RTBasis(order, mesh).eval(bary)
