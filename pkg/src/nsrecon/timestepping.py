"""Time integrators: BDF2 with extrapolated advection, Crank-Nicolson
(nonlinear midpoint via Picard or Newton), and linearized Crank-Nicolson.

Extrapolations: BDF2 uses beta* = 2 u^n - u^{n-1}; linearized CN uses
beta* = (3 u^n - u^{n-1})/2 (midpoint-consistent).  BDF2 bootstraps its
second level with one nonlinear CN step; linearized CN freezes beta* = u^0
on its first step.

Inhomogeneous Dirichlet data are applied by interpolating the exact
velocity trace on the constrained nodal DOFs at each time level (bubble
DOFs lifted as zero) and solving for the homogeneous remainder.
"""

import numpy as np

from .forms import FormAssembler, uses_reconstruction
from .reconstruction import build_reconstruction
from .spaces import build_spaces, dirichlet_dofs, boundary_values
from .solver import solve_saddle, nonlinear_solve, h1_norm


class Stepper:
    """Discrete operators plus the time loop for one configuration.

    Parameters
    ----------
    mesh, kind : triangulation and velocity element ('br' | 'p2b').
    form : convection form name (see module forms).
    alpha : d_h stabilization weight (reconstructed forms only).
    nu : viscosity, may be zero.
    scheme : 'bdf2' | 'cn' | 'cn_lin'.
    bc_mode : 'full' or 'no_penetration'.
    f : callable f(t, points) -> (N, 2) body force, or None for zero.
    g : callable g(t, points) -> (N, 2) boundary velocity, or None for
        homogeneous data.
    newton : use Newton instead of Picard inside nonlinear CN steps.
    """

    def __init__(self, mesh, kind, form, alpha, nu, dt, scheme='cn',
                 bc_mode='full', f=None, g=None, newton=False, tol=1e-6,
                 max_iterations=40, degree=8):
        self.mesh = mesh
        self.V, self.P, self.X = build_spaces(mesh, kind)
        self.ops = build_reconstruction(self.V, self.X)
        self.fa = FormAssembler(self.V, self.P, self.X, self.ops, degree)
        self.form = form
        self.alpha = alpha
        self.nu = nu
        self.dt = dt
        self.scheme = scheme
        self.f = f
        self.g = g
        self.newton = newton
        self.tol = tol
        self.max_iterations = max_iterations
        self.reconstructed = uses_reconstruction(form)

        self.A = self.fa.gradgrad()
        self.B = self.fa.div_pressure()
        self.mw = self.P.mean_weights
        self.M_plain = self.fa.mass_plain()
        self.M = self.fa.dh_mass(alpha) if self.reconstructed else self.M_plain
        self.H = self.M_plain + self.A
        self.cdofs = dirichlet_dofs(self.V, bc_mode)

    # -- helpers -------------------------------------------------------------

    def _gvals(self, t):
        if self.g is None:
            return np.zeros(self.cdofs.size)
        lift = boundary_values(self.V, self.cdofs,
                               lambda pts: self.g(t, pts))
        return lift[self.cdofs]

    def _load(self, t):
        if self.f is None:
            return np.zeros(self.V.num_dofs)
        return self.fa.rhs(lambda pts: self.f(t, pts), self.reconstructed)

    def initial_condition(self, u0):
        """Nodal interpolation of a callable initial field."""
        return self.V.interpolate(u0)

    def stokes_projection(self, grad_u0, t=0.0):
        """Discretely divergence-free initial field by Stokes projection.

        Solves a(u_h, v) - b(v, p) = (G, grad v) with b(u_h, q) = 0, where
        G = grad_u0(points) is the gradient of the projected field, so the
        result lies in the discretely divergence-free subspace.  Boundary
        values come from the configured Dirichlet data at time t.
        """
        F = self.fa.rhs_gradient(grad_u0)
        u, _, _ = solve_saddle(self.A, self.B, self.mw, F, self.cdofs,
                               self._gvals(t))
        return u

    def leray_projection(self, u0, t=0.0):
        """Discrete Leray projection of a callable initial field.

        L2-projects the canonical interpolant onto the discretely
        divergence-free subspace.  Unlike the H1-based Stokes projection the
        mass-matrix solve decays on the mesh scale, so a compactly supported
        field stays compactly supported up to a small tail; conservation
        runs of isolated vortices want exactly that combination.
        """
        uI = self.V.interpolate(u0)
        u, _, _ = solve_saddle(self.M_plain, self.B, self.mw,
                               self.M_plain @ uI, self.cdofs, self._gvals(t))
        return u

    # -- single steps ----------------------------------------------------------

    def cn_step(self, u_n, t_n):
        """Nonlinear Crank-Nicolson midpoint step; returns (u, p, iters)."""
        dt, nu = self.dt, self.nu
        F = self._load(t_n + 0.5 * dt)
        gv = self._gvals(t_n + dt)
        base_rhs = self.M @ (u_n / dt) - 0.5 * nu * (self.A @ u_n) + F

        def picard(u_k):
            beta = 0.5 * (u_k + u_n)
            N = self.fa.convection(self.form, beta)
            K = self.M / dt + 0.5 * nu * self.A + 0.5 * N
            rhs = base_rhs - 0.5 * (N @ u_n)
            u, p, lam = solve_saddle(K, self.B, self.mw, rhs,
                                     self.cdofs, gv)
            return u, p, lam

        def newton(u_k):
            beta = 0.5 * (u_k + u_n)
            N = self.fa.convection(self.form, beta)
            D = self.fa.convection_derivative(self.form, beta)
            J = self.M / dt + 0.5 * nu * self.A + 0.5 * (N + D)
            resid = (self.M @ ((u_k - u_n) / dt) + nu * (self.A @ beta)
                     + N @ beta - F)
            u, p, lam = solve_saddle(J, self.B, self.mw,
                                     J @ u_k - resid, self.cdofs, gv)
            return u, p, lam

        step = newton if self.newton else picard
        guess = u_n.copy()
        guess[self.cdofs] = gv
        u, p, lam, iters = nonlinear_solve(step, guess, self.H,
                                           self.tol, self.max_iterations)
        return u, p, iters

    def _linear_step(self, K, rhs, gv):
        u, p, lam = solve_saddle(K, self.B, self.mw, rhs, self.cdofs, gv)
        return u, p

    def cn_lin_step(self, u_n, beta_star, t_n):
        dt, nu = self.dt, self.nu
        N = self.fa.convection(self.form, beta_star)
        K = self.M / dt + 0.5 * nu * self.A + 0.5 * N
        rhs = (self.M @ (u_n / dt) - 0.5 * nu * (self.A @ u_n)
               - 0.5 * (N @ u_n) + self._load(t_n + 0.5 * dt))
        return self._linear_step(K, rhs, self._gvals(t_n + dt))

    def bdf2_step(self, u_n, u_nm1, t_n):
        dt, nu = self.dt, self.nu
        beta_star = 2.0 * u_n - u_nm1
        N = self.fa.convection(self.form, beta_star)
        K = 1.5 / dt * self.M + nu * self.A + N
        rhs = self.M @ ((4.0 * u_n - u_nm1) / (2.0 * dt)) + self._load(t_n + dt)
        return self._linear_step(K, rhs, self._gvals(t_n + dt))

    # -- loop --------------------------------------------------------------

    def run(self, u0, T, on_step=None):
        """March from t=0 to T.  u0: coefficients or callable field.

        `on_step(step_index, t, u, p)` is called at t=0 (p=None) and after
        every step.  Returns (u, p) at the final time.
        """
        dt = self.dt
        nsteps = int(round(T / dt))
        if abs(nsteps * dt - T) > 1e-10 * max(T, 1.0):
            raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
        u = u0 if isinstance(u0, np.ndarray) else self.initial_condition(u0)
        u = u.copy()
        # make the start admissible for constrained DOFs
        u[self.cdofs] = self._gvals(0.0)
        if on_step:
            on_step(0, 0.0, u, None)
        u_prev = None
        p = None
        for n in range(nsteps):
            t_n = n * dt
            if self.scheme == 'cn':
                u_new, p, _ = self.cn_step(u, t_n)
            elif self.scheme == 'cn_lin':
                beta = u if u_prev is None else 1.5 * u - 0.5 * u_prev
                u_new, p = self.cn_lin_step(u, beta, t_n)
            elif self.scheme == 'bdf2':
                if u_prev is None:
                    u_new, p, _ = self.cn_step(u, t_n)
                else:
                    u_new, p = self.bdf2_step(u, u_prev, t_n)
            else:
                raise ValueError(f"unknown scheme {self.scheme!r}")
            u_prev = u
            u = u_new
            if on_step:
                on_step(n + 1, t_n + dt, u, p)
        return u, p
