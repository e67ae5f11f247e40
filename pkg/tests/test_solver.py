import numpy as np
import pytest
from scipy import sparse

from nsrecon.mesh import build_uniform_square_mesh, perturb_interior_vertices
from nsrecon.spaces import build_spaces, dirichlet_dofs, boundary_values
from nsrecon.reconstruction import build_reconstruction
from nsrecon.forms import FormAssembler
from nsrecon.solver import (saddle_matrix, apply_constraints, solve_saddle,
                            h1_norm, nonlinear_solve, SolverError,
                            NonConvergenceError)


def stokes_setup(kind, n=3, jiggle=0.1, seed=21):
    mesh = perturb_interior_vertices(build_uniform_square_mesh(n), jiggle,
                                     seed=seed)
    V, P, X = build_spaces(mesh, kind)
    ops = build_reconstruction(V, X)
    fa = FormAssembler(V, P, X, ops)
    return mesh, V, P, fa


def test_bordered_system_recovers_prescribed_solution():
    # pick (u*, p*) with mean(p*) = 0, build compatible right-hand sides
    # and check the unconstrained solve returns them; exercises every sign
    # in the block layout
    mesh, V, P, fa = stokes_setup('br', n=2)
    M = fa.mass_plain()
    B = fa.div_pressure()
    rng = np.random.default_rng(0)
    u_star = rng.standard_normal(V.num_dofs)
    p_star = rng.standard_normal(P.num_dofs)
    p_star -= (P.mean_weights @ p_star) / P.mean_weights.sum()
    F = M @ u_star - B.T @ p_star
    G = B @ u_star
    u, p, lam = solve_saddle(M, B, P.mean_weights, F,
                             np.array([], dtype=np.int64), np.array([]), G=G)
    assert np.abs(u - u_star).max() < 1e-10
    assert np.abs(p - p_star).max() < 1e-10
    assert abs(lam) < 1e-10


@pytest.mark.parametrize("kind", ['br', 'p2b'])
def test_stokes_reproduces_linear_divfree_field(kind):
    # u = (y, x) is harmonic and divergence-free, so it solves the Stokes
    # problem with f = 0 and p = 0; the discrete solution must be its
    # interpolant exactly
    mesh, V, P, fa = stokes_setup(kind)
    A = fa.gradgrad()
    B = fa.div_pressure()
    exact = lambda p: np.stack([p[:, 1], p[:, 0]], -1)
    cdofs = dirichlet_dofs(V, 'full')
    g = boundary_values(V, cdofs, exact)
    u, p, lam = solve_saddle(A, B, P.mean_weights, np.zeros(V.num_dofs),
                             cdofs, g[cdofs])
    assert np.abs(u - V.interpolate(exact)).max() < 1e-11
    assert np.abs(p).max() < 1e-11


def test_zero_data_gives_zero_solution():
    mesh, V, P, fa = stokes_setup('br', n=2)
    A = fa.gradgrad()
    B = fa.div_pressure()
    cdofs = dirichlet_dofs(V, 'full')
    u, p, lam = solve_saddle(A, B, P.mean_weights, np.zeros(V.num_dofs),
                             cdofs, np.zeros(cdofs.size))
    assert np.abs(u).max() == 0.0
    assert np.abs(p).max() < 1e-14


@pytest.mark.parametrize("kind", ['br', 'p2b'])
def test_pressure_mean_is_pinned(kind):
    mesh, V, P, fa = stokes_setup(kind, n=2, seed=33)
    A = fa.gradgrad()
    B = fa.div_pressure()
    f = lambda p: np.stack([np.sin(3 * p[:, 0]), p[:, 1] ** 2], -1)
    cdofs = dirichlet_dofs(V, 'full')
    u, p, lam = solve_saddle(A, B, P.mean_weights, fa.rhs(f, False),
                             cdofs, np.zeros(cdofs.size))
    assert abs(P.mean_weights @ p) < 1e-12 * np.abs(p).max()
    assert np.abs(u[cdofs]).max() == 0.0


def test_constraint_reduction_keeps_symmetry_and_values():
    rng = np.random.default_rng(5)
    n = 12
    S = rng.standard_normal((n, n))
    S = sparse.csr_matrix(S + S.T + 10 * np.eye(n))
    rhs = rng.standard_normal(n)
    cdofs = np.array([0, 4, 7])
    gvals = np.array([1.5, -2.0, 0.25])
    Sc, rc = apply_constraints(S, rhs.copy(), cdofs, gvals)
    d = (Sc - Sc.T).toarray()
    assert np.abs(d).max() < 1e-14
    x = np.linalg.solve(Sc.toarray(), rc)
    assert np.abs(x[cdofs] - gvals).max() < 1e-12
    # free equations see the eliminated data on the right-hand side
    free = np.setdiff1d(np.arange(n), cdofs)
    res = S.toarray()[free] @ x - rhs[free]
    assert np.abs(res).max() < 1e-12


def test_saddle_matrix_block_layout():
    K = sparse.eye(3, format='csr')
    B = sparse.csr_matrix(np.array([[1.0, 2.0, 0.0]]))
    m = np.array([4.0])
    S = saddle_matrix(K, B, m).toarray()
    expect = np.array([[1, 0, 0, -1, 0],
                       [0, 1, 0, -2, 0],
                       [0, 0, 1, 0, 0],
                       [-1, -2, 0, 0, -4],
                       [0, 0, 0, -4, 0]], dtype=float)
    assert np.array_equal(S, expect)


def test_singular_factorization_raises():
    K = sparse.csr_matrix((3, 3))
    B = sparse.csr_matrix((2, 3))
    with pytest.raises(SolverError):
        solve_saddle(K, B, np.zeros(2), np.zeros(3),
                     np.array([], dtype=np.int64), np.array([]))


def test_h1_norm_matches_quadratic_form():
    H = sparse.csr_matrix(np.diag([1.0, 4.0, 9.0]))
    assert h1_norm(H, np.array([1.0, 1.0, 1.0])) == pytest.approx(
        np.sqrt(14.0))


def test_fixed_point_driver_counts_and_converges():
    H = sparse.eye(4, format='csr')
    target = np.array([2.0, -1.0, 0.5, 3.0])

    def step(u):
        return 0.5 * u + 0.5 * target, None, 0.0

    # increments shrink geometrically by 1/2: |u_k - u_{k-1}| =
    # 0.5^k |target|; first k with that below tol
    u0 = np.zeros(4)
    tol = 1e-6
    expect_k = int(np.ceil(np.log2(np.linalg.norm(target) / tol)))
    u, p, lam, k = nonlinear_solve(step, u0, H, tol=tol, max_iterations=60)
    assert k == expect_k
    assert np.abs(u - target).max() < tol

    # starting at the fixed point stops after one confirming solve
    u, p, lam, k = nonlinear_solve(step, target.copy(), H, tol=tol)
    assert k == 1


def test_nonconvergence_reports_iterations_and_increment():
    H = sparse.eye(2, format='csr')

    def step(u):
        return u + np.array([1.0, 0.0]), None, 0.0

    with pytest.raises(NonConvergenceError) as err:
        nonlinear_solve(step, np.zeros(2), H, tol=1e-8, max_iterations=7)
    assert err.value.iterations == 7
    assert err.value.increment == pytest.approx(1.0)
    assert isinstance(err.value, SolverError)
