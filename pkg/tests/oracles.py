"""Independent reference computations used by the test-suite.

The Riemann oracle bisects the wave-curve mismatch written in density form
(Hugoniot locus ``u = u_L - (rho - rho_L)/sqrt(rho rho_L)`` and rarefaction
``u = u_L - log(rho/rho_L)``) over ``log rho in [-745, 100]``.  It shares no
code with the package solver.
"""

import numpy as np


def curve1(rho, rho_l, u_l):
    shock = u_l - (rho - rho_l) / np.sqrt(rho * rho_l)
    raref = u_l - np.log(rho / rho_l)
    return np.where(rho > rho_l, shock, raref)


def curve2(rho, rho_r, u_r):
    shock = u_r + (rho - rho_r) / np.sqrt(rho * rho_r)
    raref = u_r + np.log(rho / rho_r)
    return np.where(rho > rho_r, shock, raref)


def bisect_middle(rho_l, u_l, rho_r, u_r, iters=2000):
    rho_l, u_l, rho_r, u_r = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho_l, u_l, rho_r, u_r)))
    lo = np.full(rho_l.shape, -745.0)
    hi = np.full(rho_l.shape, 100.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        rho = np.exp(mid)
        f = curve1(rho, rho_l, u_l) - curve2(rho, rho_r, u_r)
        lo = np.where(f > 0.0, mid, lo)
        hi = np.where(f > 0.0, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid))):
            break
    rho = np.exp(0.5 * (lo + hi))
    return rho, 0.5 * (curve1(rho, rho_l, u_l) + curve2(rho, rho_r, u_r))


def random_pairs(rng, n):
    """Riemann data with rho log-uniform on [1e-4, 10] and u uniform on [-5, 5]."""
    rho = np.exp(rng.uniform(np.log(1e-4), np.log(10.0), (2, n)))
    u = rng.uniform(-5.0, 5.0, (2, n))
    return rho[0], u[0], rho[1], u[1]


def midpoint_integral(f, a, b, n=10_000):
    x = a + (np.arange(n) + 0.5) * (b - a) / n
    return np.sum(f(x), axis=-1) * (b - a) / n
