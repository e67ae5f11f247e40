"""Conserved quantities, error norms, EOC rates and the CSV schema.

All conserved quantities are evaluated on the reconstructed field
Pi_h u_h (degree-8 quadrature); error norms use degree 10.  Angular
momentum is the scalar third component of int u x x in the 2D embedding,
int (u_1 y - u_2 x); reported "momentum" is the sum of the two components
of int u.
"""

import numpy as np

from .forms import FormAssembler
from .quadrature import quadrature_rule
from .reconstruction import l2_project_divergence
from .elements import pressure_basis, physical_points

CSV_COLUMNS = ('t', 'E', 'E_d', 'M_sum', 'M_x', 'err_L2_u', 'err_L2_Pu',
               'err_H1_u', 'err_L2_p', 'err_L2_Php', 'seminorm_star')


def conserved_quantities(fa, u, alpha):
    """(E, E_d, M, M_x) of the reconstructed field Pi_h u_h.

    E = kinetic energy of Pi_h u_h; E_d = (1/2) d_h(u, u) adds the
    alpha-weighted RT part; M is the 2-vector of linear momentum.
    """
    w = fa.wdet
    uv = fa.field_values(u, 'rec')
    E = 0.5 * float(np.einsum('cq,cqa,cqa->', w, uv, uv))
    ur = fa.field_values(u, 'rphi')
    E_d = E + 0.5 * alpha * float(np.einsum('cq,cqa,cqa->', w, ur, ur))
    M = np.einsum('cq,cqa->a', w, uv)
    x = fa.phys
    M_x = float(np.einsum('cq,cq->', w,
                          uv[..., 0] * x[..., 1] - uv[..., 1] * x[..., 0]))
    return E, E_d, M, M_x


def conserved_quantities_field(mesh, ufunc, degree=8):
    """Same functionals for a callable field, by mesh quadrature."""
    rule = quadrature_rule(degree)
    pts = physical_points(mesh, rule.points)
    uv = np.asarray(ufunc(pts.reshape(-1, 2))).reshape(pts.shape)
    w = rule.weights[None, :] * mesh.geom.area[:, None]
    E = 0.5 * float(np.einsum('cq,cqa,cqa->', w, uv, uv))
    M = np.einsum('cq,cqa->a', w, uv)
    M_x = float(np.einsum('cq,cq->', w,
                          uv[..., 0] * pts[..., 1] - uv[..., 1] * pts[..., 0]))
    return E, M, M_x


class ErrorNorms:
    """Degree-10 error evaluator bound to one discretization."""

    def __init__(self, V, P, X, ops):
        self.fa = FormAssembler(V, P, X, ops, degree=10)
        self.P = P

    def __call__(self, u, p, exact, t):
        """dict of L2/H1 velocity errors and pressure errors at time t.

        `exact` needs callables u(t, pts) and grad_u(t, pts); pressure
        errors require p(t, pts) and are NaN otherwise.  Passing p=None
        skips pressure errors as well.
        """
        fa = self.fa
        w = fa.wdet
        pts2 = fa.phys.reshape(-1, 2)
        ue = np.asarray(exact.u(t, pts2)).reshape(fa.phys.shape)
        uh = fa.field_values(u, 'plain')
        uPh = fa.field_values(u, 'rec')
        out = {}
        out['err_L2_u'] = np.sqrt(np.einsum('cq,cqa,cqa->', w, ue - uh,
                                            ue - uh))
        out['err_L2_Pu'] = np.sqrt(np.einsum('cq,cqa,cqa->', w, ue - uPh,
                                             ue - uPh))
        ge = np.asarray(exact.grad_u(t, pts2)).reshape(fa.phys.shape + (2,))
        gh = fa.field_gradients(u, 'plain')
        out['err_H1_u'] = np.sqrt(np.einsum('cq,cqab,cqab->', w, ge - gh,
                                            ge - gh))
        pe_fn = getattr(exact, 'p', None)
        if pe_fn is None or p is None:
            out['err_L2_p'] = np.nan
            out['err_L2_Php'] = np.nan
            return out
        pe = np.asarray(pe_fn(t, pts2)).reshape(fa.phys.shape[:2])
        qtab = pressure_basis(self.P.k, self.P.mesh, fa.rule.points)
        ph = np.einsum('cqg,cg->cq', qtab, np.asarray(p)[self.P.cell2dof])
        out['err_L2_p'] = np.sqrt(np.einsum('cq,cq,cq->', w, pe - ph,
                                            pe - ph))
        php = l2_project_divergence(self.P, pe, fa.rule)
        dp = np.einsum('cqg,cg->cq', qtab, php[self.P.cell2dof]) - ph
        out['err_L2_Php'] = np.sqrt(np.einsum('cq,cq,cq->', w, dp, dp))
        return out


def eoc(hs, errors):
    """Rates log(e_{i-1}/e_i)/log(h_{i-1}/h_i); None where undefined."""
    rates = []
    for i in range(1, len(errors)):
        e0, e1 = errors[i - 1], errors[i]
        if e0 > 0 and e1 > 0:
            rates.append(np.log(e0 / e1) / np.log(hs[i - 1] / hs[i]))
        else:
            rates.append(None)
    return rates


def format_record(rec):
    """One CSV line in the fixed column order; NaN for absent entries."""
    vals = []
    for c in CSV_COLUMNS:
        v = rec.get(c, np.nan)
        vals.append(f'{float(v):.16e}' if v == v else 'nan')
    return ','.join(vals)


def write_csv(path, records):
    with open(path, 'w') as fh:
        fh.write(','.join(CSV_COLUMNS) + '\n')
        for rec in records:
            fh.write(format_record(rec) + '\n')


def read_csv(path):
    """Read a diagnostics CSV back into a list of dicts."""
    with open(path) as fh:
        header = fh.readline().strip().split(',')
        out = []
        for line in fh:
            parts = line.strip().split(',')
            out.append({k: float(v) for k, v in zip(header, parts)})
    return out
