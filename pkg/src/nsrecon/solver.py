"""Constrained saddle-point solves and the nonlinear iteration driver.

One time-discrete step leads to

    [ K   -B^T   0 ] [u]   [F ]
    [-B    0    -m ] [p] = [-G]
    [ 0   -m^T   0 ] [l]   [0 ]

with K = c_m*M + nu*A + N(beta), B the divergence block, m the pressure
mean-value weights and l a scalar multiplier pinning the pressure mean.
Dirichlet constraints are applied by the identity-row/column reduction,
which keeps symmetric blocks symmetric.
"""

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, gmres, splu


class SolverError(RuntimeError):
    pass


class SaddleCache:
    """Reusable factorization for a sequence of nearby saddle solves.

    A time loop changes only the convection block between steps, so the
    LU of one step's matrix is an excellent preconditioner for the next.
    solve_saddle keeps the last factorization here and refactors only
    when the preconditioned iteration stops reaching direct-solve
    accuracy.
    """

    def __init__(self):
        self.lu = None


class NonConvergenceError(SolverError):
    def __init__(self, iterations, increment):
        super().__init__(f"nonlinear iteration did not converge in "
                         f"{iterations} iterations (last H1 increment "
                         f"{increment:.3e})")
        self.iterations = iterations
        self.increment = increment


def saddle_matrix(K, B, m):
    """Assemble the bordered block matrix."""
    nu_, np_ = B.shape[1], B.shape[0]
    mcol = sparse.csr_matrix(np.asarray(m, dtype=float)[:, None])
    Z = sparse.csr_matrix((nu_, 1))
    return sparse.bmat([[K, -B.T, Z],
                        [-B, None, -mcol],
                        [Z.T, -mcol.T, None]], format='csr')


def apply_constraints(S, rhs, cdofs, gvals):
    """Identity-row/column constraint reduction.

    `cdofs` index rows of the full bordered system (velocity DOFs in
    practice); `gvals` are their prescribed values.
    """
    n = S.shape[0]
    gfull = np.zeros(n)
    gfull[cdofs] = gvals
    rhs = rhs - S @ gfull
    rhs[cdofs] = gvals
    keep = np.ones(n)
    keep[cdofs] = 0.0
    R = sparse.diags(keep)
    S = R @ S @ R + sparse.diags(1.0 - keep)
    return S.tocsc(), rhs


def solve_saddle(K, B, m, F, constrained, gvals, G=None, residual_tol=1e-9):
    """Solve one constrained saddle step.

    Returns (u, p, multiplier).  Raises SolverError if the factored
    solution fails the residual check.
    """
    nu_, np_ = B.shape[1], B.shape[0]
    rhs = np.zeros(nu_ + np_ + 1)
    rhs[:nu_] = F
    if G is not None:
        rhs[nu_:nu_ + np_] = -G
    S = saddle_matrix(K, B, m)
    Sc, rhsc = apply_constraints(S, rhs.copy(), constrained, gvals)
    try:
        lu = splu(Sc)
    except RuntimeError as exc:
        raise SolverError(f"saddle factorization failed: {exc}") from exc
    x = lu.solve(rhsc)
    res = np.linalg.norm(Sc @ x - rhsc)
    scale = max(np.linalg.norm(rhsc), 1e-30)
    if res > residual_tol * scale:
        raise SolverError(f"saddle solve residual {res:.3e} exceeds "
                          f"{residual_tol:.1e} * ||rhs|| = "
                          f"{residual_tol * scale:.3e}")
    return x[:nu_], x[nu_:nu_ + np_], x[-1]


def h1_norm(Hmat, v):
    """sqrt(v^T (M + A) v); Hmat is the precomputed sum."""
    return float(np.sqrt(abs(v @ (Hmat @ v))))


def nonlinear_solve(step, u0, Hmat, tol=1e-6, max_iterations=40):
    """Fixed-point driver: u_{k+1} = step(u_k) until the H1 increment drops
    below `tol`.

    `step` returns (u, p, multiplier); Picard or Newton behavior lives
    inside the closure.  Returns (u, p, multiplier, n_solves).
    """
    u_prev = u0
    p = lam = None
    inc = np.inf
    for k in range(1, max_iterations + 1):
        u, p, lam = step(u_prev)
        inc = h1_norm(Hmat, u - u_prev)
        u_prev = u
        if inc < tol:
            return u, p, lam, k
    raise NonConvergenceError(max_iterations, inc)
