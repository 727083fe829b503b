"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest


def prox_objective(v, b, q, alpha, k1):
    """The V-update subproblem objective, evaluated directly.

    (k1/2)||v||^2 + alpha ||v||_2^q + v'b  for q > 0, with the q = 0 penalty
    alpha * 1{||v|| != 0}.  Independent of the solver's internals.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    nv = float(np.linalg.norm(v))
    if q == 0.0:
        pen = alpha if nv != 0.0 else 0.0
    else:
        pen = alpha * nv**q
    return 0.5 * k1 * nv**2 + pen + float(v @ b)


def oracle_magnitude_objective(k3, q, alpha, k1, grid_points=4001, golden_iters=90):
    """Brute-force minimum of the subproblem along the optimal direction.

    For fixed ||v|| = x the linear term is minimized by v = -x b/||b||, so the
    problem reduces to g(x) = (k1/2) x^2 + pen(x) - k3 x on x >= 0.  A dense
    grid localizes the minimizer and golden-section search refines it; the
    discontinuity of the q = 0 penalty at x = 0 is handled by comparing with
    g(0) = 0 explicitly.  Returns the oracle objective value.
    """

    def g(x):
        if x <= 0.0:
            return 0.0
        pen = alpha if q == 0.0 else alpha * x**q
        return 0.5 * k1 * x * x + pen - k3 * x

    hi = 1.5 * k3 / k1 + 1e-9
    xs = np.linspace(0.0, hi, grid_points)
    pens = np.where(xs > 0, alpha if q == 0.0 else alpha * np.where(xs > 0, xs, 1.0) ** q, 0.0)
    vals = 0.5 * k1 * xs**2 + pens - k3 * xs
    vals[0] = 0.0
    i = int(np.argmin(vals))
    lo = xs[max(i - 1, 0)]
    up = xs[min(i + 1, grid_points - 1)]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, bnd = lo, up
    c1 = bnd - invphi * (bnd - a)
    c2 = a + invphi * (bnd - a)
    f1, f2 = g(c1), g(c2)
    for _ in range(golden_iters):
        if f1 < f2:
            bnd, c2, f2 = c2, c1, f1
            c1 = bnd - invphi * (bnd - a)
            f1 = g(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (bnd - a)
            f2 = g(c2)
    refined = min(g((a + bnd) / 2.0), g(c1), g(c2))
    return min(0.0, float(vals[i]), float(refined))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
