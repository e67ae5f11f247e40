"""End-to-end acceptance gates, one test per property.

Seven integration-level checks: the operator identity suite on small
meshes, the potential-flow convergence study, the pressure-robustness
comparison, the Gresho conservation runs, the lattice-vortex error
growth comparison, dense-oracle agreement on a two-cell mesh, and the
closed-form Gresho invariants.  Everything else in tests/ is unit
level; these are the runs that take minutes.

The Gresho test honors NSRECON_ACCEPTANCE_SCALE: 'full' (default)
integrates to T=10 on the production meshes, 'ci' shrinks the runs to
24x24 and T=5.  The reduced scale is quick but known to violate the
angular momentum gate: at h=1/24 the first-order vortex smears onto
the walls before t=5 and the wall reactions exert torque.  The drift
is physics of the coarse mesh, not a conservation bug, so the gate is
left in place rather than loosened.
"""

import os
import time

import numpy as np
import pytest

from nsrecon.benchmarks import (BenchmarkConfig, run_potential_flow,
                                run_time_series)
from nsrecon.diagnostics import (conserved_quantities,
                                 conserved_quantities_field, eoc)
from nsrecon.elements import pressure_basis
from nsrecon.forms import FormAssembler, CONVECTION_FORMS
from nsrecon.mesh import build_uniform_square_mesh, perturb_interior_vertices
from nsrecon.problems import gresho
from nsrecon.quadrature import quadrature_rule
from nsrecon.reconstruction import (build_reconstruction,
                                    l2_project_divergence, reconstruct)
from nsrecon.solver import NonConvergenceError
from nsrecon.spaces import build_spaces, dirichlet_dofs
from nsrecon.timestepping import Stepper

from oracles import DenseAssembler


def _scale():
    mode = os.environ.get('NSRECON_ACCEPTANCE_SCALE', 'full')
    if mode not in ('full', 'ci'):
        raise ValueError("NSRECON_ACCEPTANCE_SCALE must be 'full' or 'ci'")
    return mode


def _interior_divfree_basis(fa):
    """Orthonormal basis (rows) of the discretely divergence-free fields
    with zero boundary trace."""
    B = fa.div_pressure().toarray()
    fixed = dirichlet_dofs(fa.V, 'full')
    free = np.setdiff1d(np.arange(fa.V.num_dofs), fixed)
    _, s, Vt = np.linalg.svd(B[:, free])
    null = Vt[np.sum(s > 1e-10 * s[0]):]
    out = np.zeros((null.shape[0], fa.V.num_dofs))
    out[:, free] = null
    return out


def _worst_normal_jump(mesh, ops, v):
    """Largest jump of the normal component of the reconstruction of v
    across any interior edge, sampled at three points per edge."""
    field = reconstruct(ops, v)
    interior = np.setdiff1d(np.arange(mesh.num_edges), mesh.boundary_edges)
    # invert cell_edges once: the two cells flanking each edge
    flanks = {e: [] for e in interior}
    for c, row in enumerate(mesh.cell_edges):
        for e in row:
            if e in flanks:
                flanks[e].append(c)
    verts = mesh.vertices
    corners = verts[mesh.cells]                               # (NC, 3, 2)
    worst = 0.0
    for e in interior:
        ca, cb = flanks[e]
        a, b = mesh.edges[e]
        t = verts[b] - verts[a]
        nrm = np.array([t[1], -t[0]]) / np.hypot(t[0], t[1])
        for s in (0.23, 0.5, 0.81):
            x = verts[a] + s * t
            vals = []
            for c in (ca, cb):
                # barycentric coordinates of x in cell c
                T = np.column_stack([corners[c, 1] - corners[c, 0],
                                     corners[c, 2] - corners[c, 0]])
                lam12 = np.linalg.solve(T, x - corners[c, 0])
                lam = np.array([1.0 - lam12.sum(), lam12[0], lam12[1]])
                vals.append(field.eval(lam[None, :])[c, 0])
            worst = max(worst, abs((vals[0] - vals[1]) @ nrm))
    return worst


def test_operator_identities():
    t0 = time.monotonic()
    rng = np.random.default_rng(5)
    for kind in ('br', 'p2b'):
        for n, jiggle, seed in ((6, 0.15, 3), (8, 0.10, 11)):
            mesh = perturb_interior_vertices(build_uniform_square_mesh(n),
                                             jiggle, seed=seed)
            assert mesh.num_cells <= 200
            V, P, X = build_spaces(mesh, kind)
            ops = build_reconstruction(V, X)
            fa = FormAssembler(V, P, X, ops)
            tag = f"{kind} n={n}"

            # reconstructions of discretely divergence-free fields are
            # pointwise divergence free
            basis = _interior_divfree_basis(fa)
            pts = quadrature_rule(2).points
            for row in basis:
                field = reconstruct(ops, row / np.abs(row).max())
                dmax = np.abs(field.div(pts)).max()
                assert dmax <= 1e-11, f"{tag}: cellwise div {dmax:.2e}"

            # the divergence pairing cannot tell a field from its
            # reconstruction
            Bp = fa.div_pressure().toarray()
            Br = fa.div_pressure(reconstructed=True).toarray()
            bgap = np.abs(Br - Bp).max()
            assert bgap <= 1e-12, f"{tag}: pairing gap {bgap:.2e}"

            # reconstruction commutes with the divergence: div of the
            # reconstruction equals the pressure-space projection of the
            # plain divergence, for arbitrary fields
            rule = fa.rule
            qtab = pressure_basis(P.k, mesh, rule.points)
            for _ in range(3):
                v = rng.standard_normal(V.num_dofs)
                v /= np.abs(v).max()
                dv = np.einsum('cqaa->cq', fa.field_gradients(v, 'plain'))
                proj = l2_project_divergence(P, dv, rule)
                want = np.einsum('cqi,ci->cq', qtab, proj[P.cell2dof])
                got = reconstruct(ops, v).div(rule.points)
                cgap = np.abs(got - want).max()
                assert cgap <= 1e-12, f"{tag}: commuting gap {cgap:.2e}"

            # trilinear form is skew in its last two arguments whenever
            # the convecting field is divergence free with zero trace
            beta = basis.T @ rng.standard_normal(basis.shape[0])
            beta /= np.abs(beta).max()
            N = fa.convection('emapr', beta).toarray()
            sgap = np.abs(N + N.T).max()
            assert sgap <= 1e-11, f"{tag}: skew defect {sgap:.2e}"

            # normal component of the reconstruction is single valued
            # across interior edges
            for k in range(2):
                v = rng.standard_normal(V.num_dofs)
                jump = _worst_normal_jump(mesh, ops, v / np.abs(v).max())
                assert jump <= 1e-12, f"{tag}: normal jump {jump:.2e}"
    print(f"\noperator identities: ok ({time.monotonic() - t0:.1f}s)")


# final-level EOC windows for the potential flow study
_EOC_GATES = {
    'br': {'err_L2_u': (1.85, 2.15), 'err_H1_u': (0.9, 1.1),
           'err_L2_p': (0.9, 1.1)},
    'p2b': {'err_L2_u': (2.8, 3.1), 'err_H1_u': (1.9, 2.1)},
}


def test_potential_flow_convergence_rates(tmp_path, monkeypatch):
    monkeypatch.setenv('NSRECON_OUTPUT_DIR', str(tmp_path))
    t0 = time.monotonic()
    lines = []
    for element in ('br', 'p2b'):
        for alpha in (0.0, 1.0):
            cfg = BenchmarkConfig('potential_flow', element=element,
                                  alpha=alpha)
            rows, _ = run_potential_flow(cfg)
            hs = [r['h'] for r in rows]
            shown = []
            for col, (lo, hi) in _EOC_GATES[element].items():
                rate = eoc(hs, [r[col] for r in rows])[-1]
                shown.append(f"{col} {rate:.2f}")
                assert lo <= rate <= hi, (
                    f"{element} alpha={alpha:g}: {col} rate {rate:.3f} "
                    f"outside [{lo}, {hi}]")
            lines.append(f"  {element} alpha={alpha:g}: " + ', '.join(shown))
    print(f"\nconvergence rates ({time.monotonic() - t0:.0f}s)")
    for line in lines:
        print(line)


def test_pressure_robust_velocity_errors(tmp_path, monkeypatch):
    monkeypatch.setenv('NSRECON_OUTPUT_DIR', str(tmp_path))
    t0 = time.monotonic()
    base = BenchmarkConfig('potential_flow', n=32, levels=1, dt=0.01, T=2.0,
                           error_times='0.5,1,1.5,2')
    mesh = base.build_mesh()
    steps = sorted(base.error_steps(200))

    def series(cfg):
        records, _ = run_time_series(cfg, mesh=mesh)
        return np.array([records[k]['err_L2_u'] for k in steps])

    plain = series(base)
    loaded = series(base.replaced(f_amplitude=100.0))
    # a 100x stronger gradient load must not move the velocity at all
    rel = np.abs(loaded - plain) / plain
    assert rel.max() <= 1e-6, f"velocity series moved by {rel.max():.2e}"

    classical = series(base.replaced(f_amplitude=100.0, form='classical'))
    ratio = classical[-1] / loaded[-1]
    assert ratio >= 100.0, (
        f"classical/emapr error ratio {ratio:.1f} at t=2, expected >= 100")
    print(f"\npressure robustness ({time.monotonic() - t0:.0f}s): "
          f"series shift {rel.max():.1e}, "
          f"t=2 errors emapr {loaded[-1]:.2e} vs classical "
          f"{classical[-1]:.2e} ({ratio:.0f}x)")


def _gresho_history(element, alpha, form, n, T):
    """Per-step (E, E_d, Mx, My, M_x) for a Gresho run; E is the plain
    kinetic energy, the natural invariant of the unreconstructed forms."""
    sol = gresho()
    mesh = build_uniform_square_mesh(n, box=sol.box)
    st = Stepper(mesh, element, form, alpha, sol.nu, 0.01, scheme='cn',
                 bc_mode='no_penetration', f=sol.f, g=sol.u)
    hist = []

    def on_step(k, t, u, p):
        E, E_d, M, M_x = conserved_quantities(st.fa, u, alpha)
        E_plain = 0.5 * float(u @ (st.M_plain @ u))
        hist.append((E_plain, E_d, M[0], M[1], M_x))

    st.run(st.leray_projection(sol.u0), T, on_step=on_step)
    return np.asarray(hist)


def test_gresho_conservation():
    t0 = time.monotonic()
    scale = _scale()
    n_br, n_p2b, T = (48, 24, 10.0) if scale == 'full' else (24, 24, 5.0)

    emapr_drift = {}
    for element, alpha, n in (('br', 0.0, n_br), ('p2b', 1.0, n_p2b)):
        S = _gresho_history(element, alpha, 'emapr', n, T)
        ed = np.abs(S[:, 1] - S[0, 1]).max() / S[0, 1]
        mx = np.abs(S[:, 4] - S[0, 4]).max() / abs(S[0, 4])
        m = np.abs(S[:, 2:4]).max()
        emapr_drift[element] = ed
        tag = f"{element} {n}x{n} T={T:g}"
        print(f"\ngresho {tag}: E_d drift {ed:.2e}, M_x drift {mx:.2e}, "
              f"|M| {m:.2e} ({time.monotonic() - t0:.0f}s)")
        assert ed < 1e-5, f"{tag}: E_d drift {ed:.2e}"
        assert mx < 1e-5, f"{tag}: M_x drift {mx:.2e}"
        assert m < 1e-7, f"{tag}: |M| reached {m:.2e}"

    # the plain convective form has no discrete energy balance; a run
    # that loses the nonlinear iteration has a fortiori lost it
    try:
        C = _gresho_history('br', 0.0, 'classical', n_br, T)
        classical = np.abs(C[:, 0] - C[0, 0]).max() / C[0, 0]
    except NonConvergenceError:
        classical = np.inf
    print(f"gresho classical baseline: E drift {classical:.2e}")
    assert classical >= 10 * emapr_drift['br']


def test_lattice_vortex_error_growth(tmp_path, monkeypatch):
    monkeypatch.setenv('NSRECON_OUTPUT_DIR', str(tmp_path))
    t0 = time.monotonic()
    cfg = BenchmarkConfig('lattice_vortex', element='p2b', alpha=1.0,
                          n=16, error_times='final')
    mesh = cfg.build_mesh()

    def final_error(c):
        records, _ = run_time_series(c, mesh=mesh)
        return records[-1]['err_L2_u']

    e_emapr = final_error(cfg)
    e_skew = final_error(cfg.replaced(form='skew', alpha=0.0))
    print(f"\nlattice vortex ({time.monotonic() - t0:.0f}s): T=2 errors "
          f"emapr {e_emapr:.3e} vs skew {e_skew:.3e}")
    assert e_emapr <= e_skew / 10.0


def test_two_cell_assembly_matches_dense_oracle():
    rng = np.random.default_rng(12)
    for kind in ('br', 'p2b'):
        mesh = build_uniform_square_mesh(1)
        assert mesh.num_cells == 2
        V, P, X = build_spaces(mesh, kind)
        ops = build_reconstruction(V, X)
        fa = FormAssembler(V, P, X, ops)
        dense = DenseAssembler(mesh, kind)

        pairs = {'A': (fa.gradgrad(), dense.gradgrad()),
                 'B': (fa.div_pressure(), dense.div_pressure()),
                 'M_d(0)': (fa.dh_mass(0.0), dense.dh_mass(0.0)),
                 'M_d(1)': (fa.dh_mass(1.0), dense.dh_mass(1.0))}
        beta = rng.standard_normal(V.num_dofs)
        beta /= np.abs(beta).max()
        for form in CONVECTION_FORMS:
            pairs[f'N[{form}]'] = (fa.convection(form, beta),
                                   dense.convection(form, beta))
        for name, (got, want) in pairs.items():
            gap = np.abs(got.toarray() - want).max()
            assert gap <= 1e-12, f"{kind} {name}: gap {gap:.2e}"


def test_gresho_invariants_by_quadrature():
    sol = gresho()
    mesh = build_uniform_square_mesh(96, box=sol.box)
    E, M, M_x = conserved_quantities_field(mesh, sol.u0, degree=8)
    E_exact = 2 * np.pi / 75          # pi*(1/100 + 1/60), the two shells
    Mx_exact = -7 * np.pi / 375       # -2*pi*(1/500 + 11/1500)
    print(f"\ngresho invariants: E={E:.8f} ({E - E_exact:+.1e}), "
          f"M_x={M_x:.8f} ({M_x - Mx_exact:+.1e})")
    assert abs(E - E_exact) <= 1e-6
    assert abs(M_x - Mx_exact) <= 1e-6
    assert np.abs(M).max() <= 1e-9
