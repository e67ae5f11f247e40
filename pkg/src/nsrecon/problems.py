"""Benchmark problem definitions: exact fields, forcings, domains.

Each factory returns an ExactSolution with vectorized callables
u(t, pts) -> (N, 2), grad_u(t, pts) -> (N, 2, 2), p(t, pts) -> (N,)
(None when unused), f(t, pts) -> (N, 2) (None when zero).
"""

import numpy as np


class ExactSolution:
    def __init__(self, name, box, nu, u, grad_u=None, p=None, f=None):
        self.name = name
        self.box = box
        self.nu = nu
        self.u = u
        self.grad_u = grad_u
        self.p = p
        self.f = f

    def u0(self, pts):
        return self.u(0.0, pts)


def potential_flow(nu=5e-4, f_amplitude=0.0):
    """Gradient-field flow u = min(t,1) grad(chi), chi = x^3 y - y^3 x.

    chi is harmonic, so the velocity solves the unsteady Stokes part
    exactly and the pressure absorbs the time derivative, the convection
    (a full gradient for potential flow) and any gradient forcing
    f = f_amplitude * grad(chi).  chi has zero mean on the unit square;
    the |grad chi|^2 term is centered by its exact mean 24/35.
    """

    def m(t):
        return min(t, 1.0)

    def mprime(t):
        # right-continuous at the kink
        return 1.0 if t < 1.0 else 0.0

    def gradchi(pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([3 * x * x * y - y ** 3, x ** 3 - 3 * x * y * y],
                        axis=-1)

    def u(t, pts):
        return m(t) * gradchi(pts)

    def grad_u(t, pts):
        x, y = pts[:, 0], pts[:, 1]
        h11 = 6 * x * y
        h12 = 3 * x * x - 3 * y * y
        H = np.empty((len(pts), 2, 2))
        H[:, 0, 0] = h11
        H[:, 0, 1] = h12
        H[:, 1, 0] = h12
        H[:, 1, 1] = -h11
        return m(t) * H

    def chi(pts):
        x, y = pts[:, 0], pts[:, 1]
        return x ** 3 * y - y ** 3 * x

    def p(t, pts):
        g = gradchi(pts)
        speed2 = (g * g).sum(axis=-1)
        return ((f_amplitude - mprime(t)) * chi(pts)
                - m(t) ** 2 * 0.5 * (speed2 - 24.0 / 35.0))

    f = None
    if f_amplitude:
        def f(t, pts):
            return f_amplitude * gradchi(pts)

    return ExactSolution('potential_flow', (0.0, 1.0, 0.0, 1.0), nu,
                         u, grad_u, p, f)


def gresho():
    """Standing Gresho vortex on (-1/2, 1/2)^2, inviscid, steady.

    Angular velocity 5r for r < 0.2, 2 - 5r for 0.2 <= r < 0.4, zero
    beyond.  The pressure constants follow the usual printed formulas;
    pressure is unused in conservation runs.
    """
    # p = 12.5 r^2 - 20 r + 4 ln r + beta on the annulus; beta makes the
    # pressure vanish together with the velocity at r = 0.4
    beta = -12.5 * 0.4 ** 2 + 20 * 0.4 - 4 * np.log(0.4)
    gamma = beta - 20 * 0.2 + 4 * np.log(0.2)

    def u(t, pts):
        x, y = pts[:, 0], pts[:, 1]
        r = np.hypot(x, y)
        out = np.zeros_like(pts)
        inner = r < 0.2
        out[inner, 0] = -5.0 * y[inner]
        out[inner, 1] = 5.0 * x[inner]
        mid = (r >= 0.2) & (r < 0.4)
        rm = r[mid]
        out[mid, 0] = (5.0 - 2.0 / rm) * y[mid]
        out[mid, 1] = (2.0 / rm - 5.0) * x[mid]
        return out

    def grad_u(t, pts):
        x, y = pts[:, 0], pts[:, 1]
        r = np.hypot(x, y)
        G = np.zeros((len(pts), 2, 2))
        inner = r < 0.2
        G[inner, 0, 1] = -5.0
        G[inner, 1, 0] = 5.0
        mid = (r >= 0.2) & (r < 0.4)
        rm, xm, ym = r[mid], x[mid], y[mid]
        r3 = rm ** 3
        # u1 = 5y - 2y/r, u2 = 2x/r - 5x
        G[mid, 0, 0] = 2.0 * xm * ym / r3
        G[mid, 0, 1] = 5.0 - 2.0 / rm + 2.0 * ym * ym / r3
        G[mid, 1, 0] = 2.0 / rm - 5.0 - 2.0 * xm * xm / r3
        G[mid, 1, 1] = -2.0 * xm * ym / r3
        return G

    def p(t, pts):
        x, y = pts[:, 0], pts[:, 1]
        r = np.hypot(x, y)
        out = np.zeros(len(pts))
        inner = r < 0.2
        out[inner] = 12.5 * r[inner] ** 2 + gamma
        mid = (r >= 0.2) & (r < 0.4)
        out[mid] = (12.5 * r[mid] ** 2 - 20 * r[mid]
                    + 4 * np.log(r[mid]) + beta)
        return out

    return ExactSolution('gresho', (-0.5, 0.5, -0.5, 0.5), 0.0,
                         u, grad_u, p, None)


def lattice_vortex(nu=1e-5):
    """Decaying vortex lattice u = u0 exp(-8 pi^2 nu t) on the unit square.

    u0 = (sin 2pi x sin 2pi y, cos 2pi x cos 2pi y).  The diffusion and
    time derivative cancel; the convection is balanced by
    p = exp(-16 pi^2 nu t)/4 (cos 4pi x - cos 4pi y), zero-mean.
    """
    w = 2 * np.pi

    def decay(t):
        return np.exp(-8 * np.pi ** 2 * nu * t)

    def u(t, pts):
        x, y = pts[:, 0], pts[:, 1]
        return decay(t) * np.stack([np.sin(w * x) * np.sin(w * y),
                                    np.cos(w * x) * np.cos(w * y)], axis=-1)

    def grad_u(t, pts):
        x, y = pts[:, 0], pts[:, 1]
        s, c = np.sin(w * x), np.cos(w * x)
        S, C = np.sin(w * y), np.cos(w * y)
        G = np.empty((len(pts), 2, 2))
        G[:, 0, 0] = w * c * S
        G[:, 0, 1] = w * s * C
        G[:, 1, 0] = -w * s * C
        G[:, 1, 1] = -w * c * S
        return decay(t) * G

    def p(t, pts):
        x, y = pts[:, 0], pts[:, 1]
        return decay(t) ** 2 / 4.0 * (np.cos(2 * w * x) - np.cos(2 * w * y))

    return ExactSolution('lattice_vortex', (0.0, 1.0, 0.0, 1.0), nu,
                         u, grad_u, p, None)


def manufactured(nu=1.0):
    """Steady linear field u = (y, x), p = 0, with matching forcing.

    u is divergence-free and inside every velocity space here, so
    discrete solutions reproduce it to solver accuracy.
    """

    def u(t, pts):
        return pts[:, ::-1].copy()

    def grad_u(t, pts):
        G = np.zeros((len(pts), 2, 2))
        G[:, 0, 1] = 1.0
        G[:, 1, 0] = 1.0
        return G

    def p(t, pts):
        return np.zeros(len(pts))

    def f(t, pts):
        # u_t = 0, -nu Lap u = 0, (u.grad)u = (x, y)
        return pts.copy()

    return ExactSolution('manufactured', (0.0, 1.0, 0.0, 1.0), nu,
                         u, grad_u, p, f)


PROBLEMS = {'potential_flow': potential_flow, 'gresho': gresho,
            'lattice_vortex': lattice_vortex, 'manufactured': manufactured}
