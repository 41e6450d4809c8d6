"""Refinement study of the Gaussian collapse at l = 1/50, 1/100, 1/200.

Prints the quantities the scheme's convergence argument relies on: the bound
monitor growth rate, the consistency sum, the weak residuals against the
standard bump, entropy production and the wall momentum trace.
"""

import sys
import time

import numpy as np

from sphgrav import Diagnostics, SchemeConfig, run


def rho0(x):
    return 0.5 * np.exp(-((x - 3.0) ** 2)) * x ** -2.0


def main(levels=(1 / 50, 1 / 100, 1 / 200)):
    header = ("l", "steps", "secs", "C_rate", "consistency", "r_mass", "r_momentum",
              "r_entropy", "E_prod", "trace_0.1")
    print(" ".join(f"{h:>12}" for h in header))
    for l in levels:
        cfg = SchemeConfig(l=l, T=0.5, L_max=10.0, rho0=rho0)
        diag = Diagnostics(trace_eps=(0.1,))
        t0 = time.perf_counter()
        run(cfg, observers=[diag])
        rep = diag.finish()
        res = rep.weak_residuals["standard"]
        row = (l, rep.n_steps, time.perf_counter() - t0, rep.monitor_rate, rep.consistency_sum,
               res["mass"], res["momentum"], res["entropy"],
               rep.entropy_production["mechanical"], rep.boundary_trace["0.1"]["time_average"])
        print(" ".join(f"{v:>12.5g}" for v in row))


if __name__ == "__main__":
    main(tuple(float(a) for a in sys.argv[1:]) or (1 / 50, 1 / 100, 1 / 200))
