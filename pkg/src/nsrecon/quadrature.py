"""Symmetric positive quadrature on the reference triangle and on edges.

Triangle rules are stored in barycentric coordinates with weights summing to
one, so that ``sum_q w_q f(x_q)`` approximates the *mean* of f over the cell;
multiply by the cell area at the use site.  All rules are invariant under
permutations of the barycentric coordinates and have strictly positive
weights and interior points.  The degree-8 and degree-10 tables were obtained
by solving the symmetric moment equations to 60 digits; exactness is checked
against the factorial moment formula in the test suite.
"""

import numpy as np


def _orbit1(w):
    return [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, w)]


def _orbit3(a, w):
    b = (1.0 - a) / 2.0
    return [(a, b, b, w), (b, a, b, w), (b, b, a, w)]


def _orbit6(a, b, w):
    c = 1.0 - a - b
    return [(a, b, c, w), (a, c, b, w), (b, a, c, w),
            (b, c, a, w), (c, a, b, w), (c, b, a, w)]


_RULES = {
    1: _orbit1(1.0),
    2: _orbit3(2.0 / 3.0, 1.0 / 3.0),
    4: (_orbit3(0.10810301816807022736, 0.2233815896780114657)
        + _orbit3(0.81684757298045851308, 0.10995174365532186764)),
    5: (_orbit1(0.225)
        + _orbit3(0.059715871789769820459, 0.13239415278850618074)
        + _orbit3(0.79742698535308732240, 0.12593918054482715260)),
    8: (_orbit1(0.14431560767778716825)
        + _orbit3(0.08141482341455368794, 0.09509163426728462479)
        + _orbit3(0.89890554336593804908, 0.03245849762319808031)
        + _orbit3(0.65886138449647958676, 0.10321737053471825028)
        + _orbit6(0.26311282963463811342, 0.00839477740995760534,
                  0.02723031417443499426)),
    10: (_orbit1(0.09081799038275358010)
         + _orbit3(0.02884473323268524526, 0.03672595775646670472)
         + _orbit3(0.78103684902992589041, 0.04532105943552793478)
         + _orbit6(0.14170721941487995476, 0.30793983876412095016,
                   0.07275791684542010860)
         + _orbit6(0.02500353476268638607, 0.24667256063990269392,
                   0.02832724253105748484)
         + _orbit6(0.00954081540029945758, 0.06680325101220026577,
                   0.00942166696373282346)),
}

# smallest stored rule covering each requested degree
_COVER = {1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 8, 7: 8, 8: 8, 9: 10, 10: 10}


class QuadratureRule:
    """Barycentric points (NQ, 3) and weights (NQ,) summing to 1."""

    def __init__(self, degree, points, weights):
        self.degree = degree
        self.points = points
        self.weights = weights

    def __len__(self):
        return len(self.weights)


def quadrature_rule(degree):
    """Symmetric positive rule exact for polynomials up to ``degree`` <= 10."""
    if not (1 <= degree <= 10):
        raise ValueError(f"unsupported quadrature degree {degree}")
    rows = np.array(_RULES[_COVER[degree]])
    return QuadratureRule(degree, np.ascontiguousarray(rows[:, :3]),
                          np.ascontiguousarray(rows[:, 3]))


def edge_gauss_rule(npoints):
    """Gauss-Legendre rule on [0, 1]: points and weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w


def bary_moment(p, q, r):
    """Mean of lambda1^p lambda2^q lambda3^r over a triangle (exact)."""
    from math import factorial
    return 2.0 * factorial(p) * factorial(q) * factorial(r) / factorial(p + q + r + 2)
