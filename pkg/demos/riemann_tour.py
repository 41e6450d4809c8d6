"""Walk through the exact Riemann solver on a few classic data sets."""

import numpy as np

from sphgrav import State, solve_boundary_riemann, solve_riemann
from sphgrav.riemann import cell_average


def show(title, fan):
    print(title)
    for w in fan.waves:
        print(f"  {w.family}-{w.kind:<11} speeds [{w.speed_lo:+.6f}, {w.speed_hi:+.6f}]")
    m = fan.middle
    print(f"  middle rho={m.vrho:.9f} u={m.velocity:+.9f}")


def main():
    show("collision (1, 1) | (1, -1)", solve_riemann(State(1.0, 1.0), State(1.0, -1.0)))
    show("expansion (1, -1) | (1, 1)", solve_riemann(State(1.0, -1.0), State(1.0, 1.0)))
    show("dam break (4, 0) | (0.01, 0)", solve_riemann(State(4.0, 0.0), State(0.01, 0.0)))
    wall = solve_boundary_riemann(State(1.0, -1.0))
    show("inflow onto the wall (1, -1)", wall)
    avg = cell_average(wall, 1.0, 3.0, 1.0)
    print(f"  average over [1, 3] at t=1: rho={avg.vrho:.9f} omega={avg.omega:+.9f}")
    print(f"  golden ratio squared: {((1 + np.sqrt(5)) / 2) ** 2:.9f}")


if __name__ == "__main__":
    main()
