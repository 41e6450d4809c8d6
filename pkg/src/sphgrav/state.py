"""State variables for radially symmetric isothermal flow (pressure p = rho).

Two sets of variables are used. Physical ones ``(rho, m)`` and the weighted
ones ``(vrho, omega) = x**(N-1) * (rho, m)`` in which the geometric source of
the continuity equation disappears. The scheme works in weighted variables.

Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "PhysicalState",
    "State",
    "Invariants",
    "RegionTheta",
    "to_weighted",
    "from_weighted",
    "riemann_invariants",
    "from_invariants",
    "eigenvalues",
    "in_region",
    "flux",
    "invariants_array",
]


@dataclass(frozen=True)
class PhysicalState:
    rho: float
    m: float

    def __post_init__(self):
        if not self.rho >= 0.0:
            raise DomainError(f"density must be nonnegative, got {self.rho!r}")
        if self.rho == 0.0 and self.m != 0.0:
            raise DomainError("vacuum state must carry zero momentum")


@dataclass(frozen=True)
class State:
    """Weighted state ``(vrho, omega)``."""

    vrho: float
    omega: float

    def __post_init__(self):
        if not self.vrho >= 0.0:
            raise DomainError(f"weighted density must be nonnegative, got {self.vrho!r}")

    @property
    def velocity(self) -> float:
        # undefined at vacuum; returning 0 there would hide misuse
        if self.vrho <= 0.0:
            raise DomainError("velocity is undefined at vacuum")
        return self.omega / self.vrho

    @classmethod
    def from_velocity(cls, vrho: float, u: float) -> "State":
        return cls(vrho, vrho * u)

    def as_array(self) -> np.ndarray:
        return np.array([self.vrho, self.omega])


@dataclass(frozen=True)
class Invariants:
    w: float
    z: float


@dataclass(frozen=True)
class RegionTheta:
    """Invariant region ``{w <= w_max, z >= z_min}``."""

    w_max: float
    z_min: float

    def contains(self, s: State, tol: float = 0.0) -> bool:
        return in_region(s, self, tol=tol)


def _check_radius(x: float) -> None:
    if not x >= 1.0:
        raise DomainError(f"radius must satisfy x >= 1, got {x!r}")


def to_weighted(p: PhysicalState, x: float, N: int) -> State:
    _check_radius(x)
    wgt = x ** (N - 1)
    return State(wgt * p.rho, wgt * p.m)


def from_weighted(s: State, x: float, N: int) -> PhysicalState:
    _check_radius(x)
    wgt = x ** (N - 1)
    return PhysicalState(s.vrho / wgt, s.omega / wgt)


def riemann_invariants(s: State) -> Invariants:
    if not s.vrho > 0.0:
        raise DomainError("Riemann invariants are undefined at vacuum")
    u = s.omega / s.vrho
    lr = math.log(s.vrho)
    return Invariants(u + lr, u - lr)


def from_invariants(inv: Invariants) -> State:
    vrho = math.exp(0.5 * (inv.w - inv.z))
    return State(vrho, vrho * 0.5 * (inv.w + inv.z))


def eigenvalues(s: State) -> tuple[float, float]:
    u = s.velocity
    return u - 1.0, u + 1.0


def in_region(s: State, theta: RegionTheta, tol: float = 0.0) -> bool:
    inv = riemann_invariants(s)
    return inv.w <= theta.w_max + tol and inv.z >= theta.z_min - tol


def flux(vrho, omega):
    """Isothermal flux ``(omega, omega**2/vrho + vrho)``; works on arrays."""
    return omega, omega * omega / vrho + vrho


def invariants_array(vrho, omega):
    """Vectorized ``(w, z)``; ``vrho`` must be positive."""
    vrho = np.asarray(vrho, dtype=float)
    if np.any(vrho <= 0.0):
        raise DomainError("Riemann invariants are undefined at vacuum")
    u = omega / vrho
    lr = np.log(vrho)
    return u + lr, u - lr
