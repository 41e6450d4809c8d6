"""Entropy/entropy-flux pairs of the isothermal system in weighted variables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .state import State

__all__ = [
    "EntropyPair",
    "weak_entropy_pair",
    "weak_entropy_arrays",
    "weak_entropy_hessian",
    "weak_entropy_hessian_det",
    "mechanical_entropy",
    "mechanical_entropy_arrays",
    "MECHANICAL",
    "DEFAULT_XI_GRID",
]

DEFAULT_XI_GRID = (0.0, 0.1, -0.1, 0.25, -0.25, 0.4, -0.4, 0.49, -0.49)


def _check_xi(xi: float) -> None:
    if not abs(xi) < 1.0:
        raise DomainError(f"weak entropy parameter must satisfy |xi| < 1, got {xi!r}")


def weak_entropy_arrays(vrho, omega, xi: float):
    """``eta = vrho**a * exp(b*u)`` and ``q = (u + xi) * eta``.

    Here ``a = 1/(1 - xi**2)`` and ``b = xi/(1 - xi**2)``.
    """
    _check_xi(xi)
    vrho = np.asarray(vrho, dtype=float)
    if np.any(~(vrho > 0.0)):
        raise DomainError("weak entropy is evaluated away from vacuum only")
    u = omega / vrho
    k = 1.0 / (1.0 - xi * xi)
    eta = np.exp(k * (np.log(vrho) + xi * u))
    return eta, (u + xi) * eta


def weak_entropy_pair(s: State, xi: float) -> tuple[float, float]:
    eta, q = weak_entropy_arrays(s.vrho, s.omega, xi)
    return float(eta), float(q)


def weak_entropy_hessian(s: State, xi: float) -> np.ndarray:
    """Analytic Hessian of ``eta`` with respect to ``(vrho, omega)``."""
    eta, _ = weak_entropy_pair(s, xi)
    u = s.velocity
    k = xi * xi / ((1.0 - xi * xi) ** 2 * s.vrho ** 2) * eta
    return k * np.array([[1.0 - 2.0 * xi * u + u * u, xi - u], [xi - u, 1.0]])


def weak_entropy_hessian_det(s: State, xi: float) -> float:
    """Closed-form determinant of the Hessian; nonnegative for every state."""
    _check_xi(xi)
    if not s.vrho > 0.0:
        raise DomainError("weak entropy is evaluated away from vacuum only")
    d = 1.0 - xi * xi
    u = s.omega / s.vrho
    return xi ** 4 / d ** 3 * s.vrho ** (2.0 * xi * xi / d - 2.0) * np.exp(2.0 * xi / d * u)


def mechanical_entropy_arrays(vrho, omega):
    """Energy pair; extends by zero at vacuum."""
    vrho = np.asarray(vrho, dtype=float)
    omega = np.asarray(omega, dtype=float)
    pos = vrho > 0.0
    safe = np.where(pos, vrho, 1.0)
    lr = np.log(safe)
    u = omega / safe
    eta = np.where(pos, 0.5 * omega * u + safe * lr, 0.0)
    q = np.where(pos, 0.5 * omega * u * u + omega + omega * lr, 0.0)
    return eta, q


def mechanical_entropy(s: State) -> tuple[float, float]:
    eta, q = mechanical_entropy_arrays(s.vrho, s.omega)
    return float(eta), float(q)


@dataclass(frozen=True)
class EntropyPair:
    """A named entropy pair. ``xi=None`` selects the mechanical (energy) pair."""

    xi: float | None = None

    def __post_init__(self):
        if self.xi is not None:
            _check_xi(self.xi)

    @property
    def name(self) -> str:
        return "mechanical" if self.xi is None else f"xi={self.xi:g}"

    def arrays(self, vrho, omega):
        if self.xi is None:
            return mechanical_entropy_arrays(vrho, omega)
        return weak_entropy_arrays(vrho, omega, self.xi)

    def __call__(self, s: State) -> tuple[float, float]:
        if self.xi is None:
            return mechanical_entropy(s)
        return weak_entropy_pair(s, self.xi)

    @property
    def evaluator(self) -> Callable[[State], tuple[float, float]]:
        return self.__call__


MECHANICAL = EntropyPair(None)
