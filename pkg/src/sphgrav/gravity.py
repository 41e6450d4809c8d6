"""Self-gravity and geometric source terms.

The potential gradient has the closed form
``Phi_x(x) = -x**(1-N) * int_1^x vrho(s) ds``, so no Poisson solve is needed.
The nonlocal integral is taken over the piecewise-constant cell averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "MassPrefix",
    "prefix_mass",
    "source_term",
    "source_arrays",
    "potential_gradient",
    "total_mass",
    "weighted_mass",
    "unit_ball_volume",
]


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)


@dataclass(frozen=True)
class MassPrefix:
    """Cumulative ``int_1^x vrho ds`` at the cell edges, linear inside cells."""

    cumulative: np.ndarray
    cell_edges: np.ndarray

    def at(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.cell_edges[0]):
            raise DomainError("prefix mass queried left of the wall")
        return np.interp(x, self.cell_edges, self.cumulative)

    def at_centers(self) -> np.ndarray:
        # midpoint of the linear piece inside each cell
        return 0.5 * (self.cumulative[:-1] + self.cumulative[1:])

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])


def _edges_and_density(cells):
    return np.asarray(cells.edges, dtype=float), np.asarray(cells.vrho, dtype=float)


def prefix_mass(cells) -> MassPrefix:
    edges, vrho = _edges_and_density(cells)
    cum = np.empty(edges.shape)
    cum[0] = 0.0
    np.cumsum(vrho * np.diff(edges), out=cum[1:])
    return MassPrefix(cum, edges)


def source_arrays(vrho, x, prefix_at_x, N: int):
    """Second component of the source, ``(N-1)/x*vrho - vrho*x**(1-N)*prefix``."""
    x = np.asarray(x, dtype=float)
    return vrho * ((N - 1) / x - prefix_at_x / x ** (N - 1))


def source_term(s, x: float, prefix_at_x: float, N: int) -> tuple[float, float]:
    """Source increment ``(0, g2)``; the density component is identically zero."""
    if not x >= 1.0:
        raise DomainError(f"radius must satisfy x >= 1, got {x!r}")
    return 0.0, float(source_arrays(s.vrho, x, prefix_at_x, N))


def potential_gradient(cells, x: float, N: int) -> float:
    if not x >= 1.0:
        raise DomainError(f"radius must satisfy x >= 1, got {x!r}")
    return -float(prefix_mass(cells).at(x)) / x ** (N - 1)


def weighted_mass(cells) -> float:
    edges, vrho = _edges_and_density(cells)
    return float(np.sum(vrho * np.diff(edges)))


def total_mass(cells, N: int) -> float:
    return unit_ball_volume(N) * weighted_mass(cells)
