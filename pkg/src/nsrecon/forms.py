"""Sparse assembly of the bilinear and trilinear forms.

All assembly is cellwise einsum over cached basis tabulations at a fixed
quadrature rule (degree 8 by default, exact for every integrand that
appears with these elements).

Convection variants, advecting field beta in the first slot, trial j,
test i, c(u,v,w) = ((u.grad)v, w):

* ``classical``  ((beta.grad)phi_j, phi_i)
* ``skew``       classical + 1/2 ((div beta) phi_j, phi_i)
* ``emac``       2(D(phi_j)beta, phi_i) + ((div phi_j)beta, phi_i)
* ``conv_reco``  ((beta.grad)phi_j, Pi phi_i)
* ``rot_reco``   ((curl beta) x Pi phi_j, Pi phi_i)
* ``emapr``      c(Pi beta, Pi1 phi_j, Pi phi_i) - c(Pi beta, Pi1 phi_i, PiR phi_j)

The emac and skew formulas follow the convention of the literature they
are usually quoted from (symmetric gradient D, divergence correction);
they act on plain fields and pair with the plain mass matrix.
"""

import numpy as np
from scipy import sparse

from .elements import velocity_basis, pressure_basis, physical_points
from .quadrature import quadrature_rule

CONVECTION_FORMS = ('classical', 'skew', 'emac', 'conv_reco', 'rot_reco',
                    'emapr')

_RECONSTRUCTED = {'classical': False, 'skew': False, 'emac': False,
                  'conv_reco': True, 'rot_reco': True, 'emapr': True}


def uses_reconstruction(form):
    """Whether a convection form pairs with d_h mass and (f, Pi v) loads."""
    if form not in _RECONSTRUCTED:
        raise ValueError(f"unknown convection form {form!r}")
    return _RECONSTRUCTED[form]


class FormAssembler:
    """Cellwise assembler bound to one mesh/element/reconstruction setup."""

    def __init__(self, V, P, X, ops, degree=8):
        self.V, self.P, self.X, self.ops = V, P, X, ops
        self.rule = quadrature_rule(degree)
        mesh = V.mesh
        pts = self.rule.points
        self.phys = physical_points(mesh, pts)
        self.wdet = self.rule.weights[None, :] * mesh.geom.area[:, None]
        self.phi, self.grad = velocity_basis(V.kind, mesh, pts)
        self.div = np.einsum('cqjaa->cqj', self.grad)
        self.phip = pressure_basis(P.k, mesh, pts)
        nn = V.nodal_ldof
        rtval, rtdiv = ops.rt.eval(pts)
        # Pi^R phi: zero on the nodal block, RT moments on the bubbles
        self.rphi = np.zeros_like(self.phi)
        self.rphi[:, :, nn:, :] = np.einsum('cqia,cij->cqja', rtval,
                                            ops.PRloc[:, :, nn:])
        self.rphi_div = np.zeros_like(self.div)
        self.rphi_div[:, :, nn:] = np.einsum('cqi,cij->cqj', rtdiv,
                                             ops.PRloc[:, :, nn:])
        # Pi^1 phi: nodal block unchanged, bubbles dropped
        self.phi1 = self.phi.copy()
        self.phi1[:, :, nn:, :] = 0.0
        self.grad1 = self.grad.copy()
        self.grad1[:, :, nn:, :, :] = 0.0
        self.rec = self.phi1 + self.rphi
        self.rec_div = np.einsum('cqjaa->cqj', self.grad1) + self.rphi_div

    # -- local-to-global scatter ------------------------------------------

    def _scatter(self, loc, rows_c2d, cols_c2d, shape):
        NC, ni, nj = loc.shape
        rows = np.repeat(rows_c2d, nj, axis=1).ravel()
        cols = np.tile(cols_c2d, (1, ni)).ravel()
        return sparse.coo_matrix((loc.ravel(), (rows, cols)),
                                 shape=shape).tocsr()

    def _scatter_vv(self, loc):
        n = self.V.num_dofs
        return self._scatter(loc, self.V.cell2dof, self.V.cell2dof, (n, n))

    # -- matrices -----------------------------------------------------------

    def gradgrad(self):
        loc = np.einsum('cq,cqiab,cqjab->cij', self.wdet, self.grad,
                        self.grad, optimize=True)
        return self._scatter_vv(loc)

    def div_pressure(self, reconstructed=False):
        """B with B[q, j] = (div phi_j, q); optionally (div Pi phi_j, q)."""
        dv = self.rec_div if reconstructed else self.div
        loc = np.einsum('cq,cqg,cqj->cgj', self.wdet, self.phip, dv,
                        optimize=True)
        return self._scatter(loc, self.P.cell2dof, self.V.cell2dof,
                             (self.P.num_dofs, self.V.num_dofs))

    def mass_plain(self):
        loc = np.einsum('cq,cqia,cqja->cij', self.wdet, self.phi, self.phi,
                        optimize=True)
        return self._scatter_vv(loc)

    def dh_mass(self, alpha):
        """(Pi u, Pi v) + alpha (PiR u, PiR v)."""
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        loc = np.einsum('cq,cqia,cqja->cij', self.wdet, self.rec, self.rec,
                        optimize=True)
        if alpha:
            loc += alpha * np.einsum('cq,cqia,cqja->cij', self.wdet,
                                     self.rphi, self.rphi, optimize=True)
        return self._scatter_vv(loc)

    # -- fields at quadrature points ---------------------------------------

    def _local(self, coeffs):
        return np.asarray(coeffs, dtype=float)[self.V.cell2dof]

    def field_values(self, coeffs, which='plain'):
        tab = {'plain': self.phi, 'rec': self.rec, 'p1': self.phi1,
               'rphi': self.rphi}[which]
        return np.einsum('cqja,cj->cqa', tab, self._local(coeffs))

    def field_gradients(self, coeffs, which='plain'):
        tab = {'plain': self.grad, 'p1': self.grad1}[which]
        return np.einsum('cqjab,cj->cqab', tab, self._local(coeffs))

    # -- convection ----------------------------------------------------------

    def convection(self, form, beta):
        """N(beta) with trial in the convected slot; see module docstring."""
        w = self.wdet
        if form == 'classical' or form == 'skew':
            b = self.field_values(beta, 'plain')
            loc = np.einsum('cq,cqb,cqjab,cqia->cij', w, b, self.grad,
                            self.phi, optimize=True)
            if form == 'skew':
                db = np.einsum('cqaa->cq',
                               self.field_gradients(beta, 'plain'))
                loc += 0.5 * np.einsum('cq,cq,cqja,cqia->cij', w, db,
                                       self.phi, self.phi, optimize=True)
        elif form == 'emac':
            b = self.field_values(beta, 'plain')
            # 2 D(phi_j) beta = (grad phi_j + grad phi_j^T) beta
            loc = np.einsum('cq,cqjab,cqb,cqia->cij', w, self.grad, b,
                            self.phi, optimize=True)
            loc += np.einsum('cq,cqjba,cqb,cqia->cij', w, self.grad, b,
                             self.phi, optimize=True)
            loc += np.einsum('cq,cqj,cqa,cqia->cij', w, self.div, b,
                             self.phi, optimize=True)
        elif form == 'conv_reco':
            b = self.field_values(beta, 'plain')
            loc = np.einsum('cq,cqb,cqjab,cqia->cij', w, b, self.grad,
                            self.rec, optimize=True)
        elif form == 'rot_reco':
            gb = self.field_gradients(beta, 'plain')
            omega = gb[:, :, 1, 0] - gb[:, :, 0, 1]     # d_x b_y - d_y b_x
            br = self.rec
            # omega x v = (-omega v_y, omega v_x)
            loc = np.einsum('cq,cq,cqj,cqi->cij', w, omega, br[..., 0],
                            br[..., 1], optimize=True)
            loc -= np.einsum('cq,cq,cqj,cqi->cij', w, omega, br[..., 1],
                             br[..., 0], optimize=True)
        elif form == 'emapr':
            b = self.field_values(beta, 'rec')
            loc = np.einsum('cq,cqb,cqjab,cqia->cij', w, b, self.grad1,
                            self.rec, optimize=True)
            loc -= np.einsum('cq,cqb,cqiab,cqja->cij', w, b, self.grad1,
                             self.rphi, optimize=True)
        else:
            raise ValueError(f"unknown convection form {form!r}")
        return self._scatter_vv(loc)

    def convection_derivative(self, form, beta):
        """D with D[i, j] = same form, advecting phi_j, convected beta.

        The Jacobian of N(u) u at beta is N(beta) + D(beta).
        """
        w = self.wdet
        if form == 'classical' or form == 'skew':
            gb = self.field_gradients(beta, 'plain')
            loc = np.einsum('cq,cqjb,cqab,cqia->cij', w, self.phi, gb,
                            self.phi, optimize=True)
            if form == 'skew':
                b = self.field_values(beta, 'plain')
                loc += 0.5 * np.einsum('cq,cqj,cqa,cqia->cij', w, self.div,
                                       b, self.phi, optimize=True)
        elif form == 'emac':
            gb = self.field_gradients(beta, 'plain')
            b = self.field_values(beta, 'plain')
            loc = np.einsum('cq,cqab,cqjb,cqia->cij', w, gb, self.phi,
                            self.phi, optimize=True)
            loc += np.einsum('cq,cqba,cqjb,cqia->cij', w, gb, self.phi,
                             self.phi, optimize=True)
            db = np.einsum('cqaa->cq', gb)
            loc += np.einsum('cq,cq,cqja,cqia->cij', w, db, self.phi,
                             self.phi, optimize=True)
        elif form == 'conv_reco':
            gb = self.field_gradients(beta, 'plain')
            loc = np.einsum('cq,cqjb,cqab,cqia->cij', w, self.phi, gb,
                            self.rec, optimize=True)
        elif form == 'rot_reco':
            br = self.field_values(beta, 'rec')
            gph = self.grad
            omega_j = gph[:, :, :, 1, 0] - gph[:, :, :, 0, 1]   # (NC,NQ,ldof)
            loc = np.einsum('cq,cqj,cq,cqi->cij', w, omega_j, br[..., 0],
                            self.rec[..., 1], optimize=True)
            loc -= np.einsum('cq,cqj,cq,cqi->cij', w, omega_j, br[..., 1],
                             self.rec[..., 0], optimize=True)
        elif form == 'emapr':
            gb1 = self.field_gradients(beta, 'p1')
            br = self.field_values(beta, 'rphi')
            loc = np.einsum('cq,cqjb,cqab,cqia->cij', w, self.rec, gb1,
                            self.rec, optimize=True)
            loc -= np.einsum('cq,cqjb,cqiab,cqa->cij', w, self.rec,
                             self.grad1, br, optimize=True)
        else:
            raise ValueError(f"unknown convection form {form!r}")
        return self._scatter_vv(loc)

    # -- right-hand side -----------------------------------------------------

    def rhs(self, f, reconstructed):
        """Load vector (f, phi_i) or (f, Pi phi_i) for callable f(points)."""
        fv = np.asarray(f(self.phys.reshape(-1, 2)), dtype=float)
        fv = fv.reshape(self.phys.shape)
        tab = self.rec if reconstructed else self.phi
        loc = np.einsum('cq,cqa,cqia->ci', self.wdet, fv, tab, optimize=True)
        out = np.zeros(self.V.num_dofs)
        np.add.at(out, self.V.cell2dof, loc)
        return out

    def rhs_gradient(self, gfun):
        """Load vector (G, grad phi_i) for a matrix field G(points) -> (N,2,2).

        Right-hand side of the discrete Stokes projection, where G is the
        gradient of the field being projected.
        """
        gv = np.asarray(gfun(self.phys.reshape(-1, 2)), dtype=float)
        gv = gv.reshape(self.phys.shape[:2] + (2, 2))
        loc = np.einsum('cq,cqab,cqiab->ci', self.wdet, gv, self.grad,
                        optimize=True)
        out = np.zeros(self.V.num_dofs)
        np.add.at(out, self.V.cell2dof, loc)
        return out
