"""Exact Riemann solutions of the isothermal system ``v_t + f(v)_x = 0``.

With ``p = rho`` the sound speed is one and the wave curves are explicit in
``y = log(rho)``. Through a left state the 1-curve is::

    u = u_L - (y - y_L)                     y <= y_L   (rarefaction)
    u = u_L - 2 sinh((y - y_L) / 2)         y >  y_L   (shock)

and through a right state the 2-curve is the mirror image with ``+``.  Both
curves are strictly monotone in ``y`` so the middle state is the unique root
of ``u1(y) - u2(y)``.

Most work happens on :class:`FanBatch`, which holds many fans in parallel
arrays. :class:`WaveFan` is the single-fan view used by the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, RootFindingError
from .state import State, flux

__all__ = [
    "Wave",
    "WaveFan",
    "FanBatch",
    "middle_state",
    "solve_batch",
    "solve_boundary_batch",
    "solve_riemann",
    "solve_boundary_riemann",
    "sample",
    "cell_average",
    "rh_residual",
    "entropy_production",
    "entropy_production_arrays",
    "jump_strengths",
    "three_piece_variance",
]

# waves weaker than this (in log-density) are dropped from WaveFan.waves
_NEGLIGIBLE_STRENGTH = 1e-13
_MAX_ITER = 200


def _curve_terms(y, y_side):
    """Return ``(c, dc)`` with ``u = u_side -/+ c(y)`` along the 1/2-curve."""
    d = y - y_side
    shock = d > 0.0
    half = 0.5 * np.where(shock, d, 0.0)
    c = np.where(shock, 2.0 * np.sinh(half), d)
    dc = np.where(shock, np.cosh(half), 1.0)
    return c, dc


def middle_state(rho_l, u_l, rho_r, u_r):
    """Intersect the 1-curve through the left state with the 2-curve through the right.

    Works elementwise on arrays. Returns ``(rho_m, u_m, y_m)``.

    The root is bracketed by ``[min(y_L, y_R, y*), y*]`` where ``y*`` is the
    double-rarefaction root: shock branches lie below (1-curve) or above
    (2-curve) the extended rarefaction lines, so the difference of the curves
    is nonpositive at ``y*``. The difference is concave and decreasing, hence
    Newton started from the right end approaches the root monotonically
    without overshoot. Iterates leaving the bracket fall back to bisection.
    """
    rho_l = np.asarray(rho_l, dtype=float)
    rho_r = np.asarray(rho_r, dtype=float)
    if np.any(~(rho_l > 0.0)) or np.any(~(rho_r > 0.0)):
        raise DomainError("Riemann data must have positive density")
    u_l = np.asarray(u_l, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    y_l = np.log(rho_l)
    y_r = np.log(rho_r)
    y_star = 0.5 * (u_l - u_r + y_l + y_r)
    lo = np.minimum(np.minimum(y_l, y_r), y_star)
    hi = y_star.copy()
    y = hi.copy()
    done = np.zeros(y.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        c1, d1 = _curve_terms(y, y_l)
        c2, d2 = _curve_terms(y, y_r)
        F = (u_l - c1) - (u_r + c2)
        dF = -(d1 + d2)
        lo = np.where(F >= 0.0, y, lo)
        hi = np.where(F <= 0.0, y, hi)
        y_new = y - F / dF
        outside = ~((y_new >= lo) & (y_new <= hi))
        y_new = np.where(outside, 0.5 * (lo + hi), y_new)
        tol = 4.0 * np.finfo(float).eps * (1.0 + np.abs(y))
        step_small = np.abs(y_new - y) <= tol
        done = done | step_small | (hi - lo <= tol)
        y = np.where(done, y, y_new)
        if done.all():
            break
    else:
        raise RootFindingError("wave-curve intersection did not converge")
    c1, _ = _curve_terms(y, y_l)
    c2, _ = _curve_terms(y, y_r)
    u_m = 0.5 * ((u_l - c1) + (u_r + c2))
    # reuse the data density when the root lands on it, so constants stay exact
    rho_m = np.where(y == y_l, rho_l, np.where(y == y_r, rho_r, np.exp(y)))
    return rho_m, u_m, y


@dataclass(frozen=True)
class FanBatch:
    """Many Riemann fans stored as parallel arrays (density is weighted).

    Speeds satisfy ``s1_lo <= s1_hi <= s2_lo <= s2_hi``; for a shock the lo
    and hi speeds coincide with the shock speed.  For boundary batches the
    left state is the mirror image of the right one and only rays ``xi >= 0``
    are physical.
    """

    rho_l: np.ndarray
    u_l: np.ndarray
    rho_m: np.ndarray
    u_m: np.ndarray
    rho_r: np.ndarray
    u_r: np.ndarray
    shock1: np.ndarray
    shock2: np.ndarray
    s1_lo: np.ndarray
    s1_hi: np.ndarray
    s2_lo: np.ndarray
    s2_hi: np.ndarray
    boundary: bool = False

    def __len__(self) -> int:
        return self.rho_m.shape[0] if self.rho_m.ndim else 1

    @property
    def w_l(self):
        return self.u_l + np.log(self.rho_l)

    @property
    def z_r(self):
        return self.u_r - np.log(self.rho_r)

    @property
    def min_speed(self):
        if self.boundary:
            return self.s2_lo
        return self.s1_lo

    @property
    def max_speed(self):
        return self.s2_hi

    def sample(self, xi):
        """Exact ``(vrho, omega)`` on rays ``xi``, broadcast against the batch."""
        xi = np.asarray(xi, dtype=float)
        if self.boundary and np.any(xi < 0.0):
            raise DomainError("boundary fans are defined for xi >= 0 only")
        u1 = xi + 1.0
        u2 = xi - 1.0
        # clamp the exponent inside unused branches to avoid overflow warnings
        r1 = np.exp(np.minimum(self.w_l - u1, 700.0))
        r2 = np.exp(np.minimum(u2 - self.z_r, 700.0))
        conds = [
            xi < self.s1_lo,
            xi < self.s1_hi,
            xi < self.s2_lo,
            xi < self.s2_hi,
        ]
        rho = np.select(conds, [self.rho_l, r1, self.rho_m, r2], default=self.rho_r)
        u = np.select(conds, [self.u_l, u1, self.u_m, u2], default=self.u_r)
        return rho, rho * u

    def trace(self):
        """State on the ray ``xi = 0``; constant in time at the fan center."""
        return self.sample(np.zeros_like(self.rho_m))

    def fan(self, k: int, origin: tuple[float, float] = (0.0, 0.0)) -> "WaveFan":
        idx = (k,) if self.rho_m.ndim else ()
        left = State.from_velocity(float(self.rho_l[idx]), float(self.u_l[idx]))
        middle = State.from_velocity(float(self.rho_m[idx]), float(self.u_m[idx]))
        right = State.from_velocity(float(self.rho_r[idx]), float(self.u_r[idx]))
        lm = np.log(self.rho_m[idx])
        waves = []
        if not self.boundary and abs(lm - np.log(self.rho_l[idx])) > _NEGLIGIBLE_STRENGTH:
            waves.append(Wave(1, "shock" if self.shock1[idx] else "rarefaction",
                              left, middle, float(self.s1_lo[idx]), float(self.s1_hi[idx])))
        if abs(lm - np.log(self.rho_r[idx])) > _NEGLIGIBLE_STRENGTH:
            waves.append(Wave(2, "shock" if self.shock2[idx] else "rarefaction",
                              middle, right, float(self.s2_lo[idx]), float(self.s2_hi[idx])))
        return WaveFan(left, middle, right, tuple(waves), self.boundary, origin)


@dataclass(frozen=True)
class Wave:
    family: int
    kind: str
    left_state: State
    right_state: State
    speed_lo: float
    speed_hi: float

    @property
    def is_shock(self) -> bool:
        return self.kind == "shock"


@dataclass(frozen=True)
class WaveFan:
    """Self-similar solution of one (boundary) Riemann problem.

    ``origin`` is the similarity center ``(x0, t0)``.  For boundary fans
    ``left`` is the mirror state used in the reflection construction and the
    wave list holds only the outgoing 2-wave.
    """

    left: State
    middle: State
    right: State
    waves: tuple[Wave, ...] = ()
    is_boundary: bool = False
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def speed_range(self) -> tuple[float, float] | None:
        if not self.waves:
            return None
        return min(w.speed_lo for w in self.waves), max(w.speed_hi for w in self.waves)

    @property
    def shocks(self) -> list[Wave]:
        return [w for w in self.waves if w.is_shock]

    def at(self, xi: float) -> State:
        return sample(self, xi)


def _split(states_or_arrays):
    vrho, omega = states_or_arrays
    vrho = np.asarray(vrho, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(~(vrho > 0.0)):
        raise DomainError("Riemann data must have positive density")
    return vrho, omega / vrho


def _assemble(rho_l, u_l, rho_r, u_r, boundary=False) -> FanBatch:
    rho_m, u_m, y_m = middle_state(rho_l, u_l, rho_r, u_r)
    if boundary:
        # reflection symmetry: the wall trace is exactly at rest
        u_m = np.zeros_like(u_m)
    y_l = np.log(rho_l)
    y_r = np.log(rho_r)
    shock1 = y_m > y_l
    shock2 = y_m > y_r
    sig1 = u_l - np.exp(0.5 * np.where(shock1, y_m - y_l, 0.0))
    sig2 = u_r + np.exp(0.5 * np.where(shock2, y_m - y_r, 0.0))
    s1_lo = np.where(shock1, sig1, u_l - 1.0)
    s1_hi = np.where(shock1, sig1, u_m - 1.0)
    s2_lo = np.where(shock2, sig2, u_m + 1.0)
    s2_hi = np.where(shock2, sig2, u_r + 1.0)
    return FanBatch(rho_l, u_l, rho_m, u_m, rho_r, u_r, shock1, shock2,
                    s1_lo, s1_hi, s2_lo, s2_hi, boundary)


def solve_batch(vrho_l, omega_l, vrho_r, omega_r) -> FanBatch:
    """Solve many interior Riemann problems at once."""
    rho_l, u_l = _split((vrho_l, omega_l))
    rho_r, u_r = _split((vrho_r, omega_r))
    rho_l, u_l, rho_r, u_r = np.broadcast_arrays(rho_l, u_l, rho_r, u_r)
    return _assemble(rho_l, u_l, rho_r, u_r)


def solve_boundary_batch(vrho_r, omega_r) -> FanBatch:
    """Solve many reflecting-wall problems (wall on the left, ``omega = 0``)."""
    rho_r, u_r = _split((vrho_r, omega_r))
    return _assemble(rho_r, -u_r, rho_r, u_r, boundary=True)


def solve_riemann(left: State, right: State, origin=(0.0, 0.0)) -> WaveFan:
    if not (left.vrho > 0.0 and right.vrho > 0.0):
        raise DomainError("Riemann data must have positive density")
    batch = solve_batch(left.vrho, left.omega, right.vrho, right.omega)
    return batch.fan(0, origin)


def solve_boundary_riemann(right: State, origin=(1.0, 0.0)) -> WaveFan:
    if not right.vrho > 0.0:
        raise DomainError("Riemann data must have positive density")
    batch = solve_boundary_batch(right.vrho, right.omega)
    return batch.fan(0, origin)


def sample(fan: WaveFan, xi: float) -> State:
    """State on ray ``xi``; a ray exactly on a shock returns the right limit."""
    if fan.is_boundary and xi < 0.0:
        raise DomainError("boundary fans are defined for xi >= 0 only")
    current = fan.middle if fan.is_boundary else fan.left
    for wave in fan.waves:
        if xi < wave.speed_lo:
            return wave.left_state
        if xi < wave.speed_hi:
            if wave.family == 1:
                u = xi + 1.0
                w_l = wave.left_state.velocity + np.log(wave.left_state.vrho)
                rho = float(np.exp(w_l - u))
            else:
                u = xi - 1.0
                z_r = wave.right_state.velocity - np.log(wave.right_state.vrho)
                rho = float(np.exp(u - z_r))
            return State(rho, rho * u)
        current = wave.right_state
    return current


def _edge_state(fan: WaveFan, e: float, t: float) -> State:
    x0 = fan.origin[0]
    if e == x0:
        return sample(fan, 0.0)
    span = fan.speed_range
    xi = (e - x0) / t
    if e < x0:
        if fan.is_boundary:
            raise DomainError("box extends to the left of the wall")
        if span is not None and xi > span[0]:
            raise DomainError("precondition violation: a wave exits [a, b] on the left")
        return fan.left
    if span is not None and xi < span[1]:
        raise DomainError("precondition violation: a wave exits [a, b] on the right")
    return fan.right


def cell_average(fan: WaveFan, a: float, b: float, t: float) -> State:
    """Exact average of the fan over ``[a, b]`` at elapsed time ``t``.

    Uses the integral form of the conservation law on ``[a, b] x [0, t]``.
    The edge states must be time independent: each edge either lies at the
    fan center (where the state is the constant ``xi = 0`` trace) or is never
    reached by a wave before time ``t``.
    """
    if not t > 0.0:
        raise DomainError("elapsed time must be positive")
    if not b > a:
        raise DomainError("empty interval")
    x0 = fan.origin[0]
    va = _edge_state(fan, a, t)
    vb = _edge_state(fan, b, t)
    len_left = max(0.0, min(b, x0) - a)
    len_right = max(0.0, b - max(a, x0))
    fa = flux(va.vrho, va.omega)
    fb = flux(vb.vrho, vb.omega)
    total_rho = len_left * fan.left.vrho + len_right * fan.right.vrho - t * (fb[0] - fa[0])
    total_om = len_left * fan.left.omega + len_right * fan.right.omega - t * (fb[1] - fa[1])
    return State(total_rho / (b - a), total_om / (b - a))


def rh_residual(left: State, right: State, sigma: float) -> tuple[float, float]:
    if not (left.vrho > 0.0 and right.vrho > 0.0):
        raise DomainError("Rankine-Hugoniot residual needs positive densities")
    fl = flux(left.vrho, left.omega)
    fr = flux(right.vrho, right.omega)
    r1 = sigma * (right.vrho - left.vrho) - (fr[0] - fl[0])
    r2 = sigma * (right.omega - left.omega) - (fr[1] - fl[1])
    return r1, r2


EntropyEvaluator = Callable[[State], tuple[float, float]]


def entropy_production(left: State, right: State, sigma: float, eta_q: EntropyEvaluator) -> float:
    """``sigma [eta] - [q]`` across a discontinuity; nonnegative for admissible shocks."""
    if not (left.vrho > 0.0 and right.vrho > 0.0):
        raise DomainError("entropy production needs positive densities")
    eta_l, q_l = eta_q(left)
    eta_r, q_r = eta_q(right)
    return sigma * (eta_r - eta_l) - (q_r - q_l)


def entropy_production_arrays(vl, ol, vr, orr, sigma, eta_q_arrays):
    eta_l, q_l = eta_q_arrays(vl, ol)
    eta_r, q_r = eta_q_arrays(vr, orr)
    return sigma * (eta_r - eta_l) - (q_r - q_l)


def jump_strengths(fan: WaveFan) -> list[float]:
    return [abs(w.right_state.vrho - w.left_state.vrho) for w in fan.waves if w.is_shock]


def three_piece_variance(g_l: float, g_m: float, g_r: float,
                         l1: float, l2: float, l3: float) -> float:
    """``int |g - mean(g)|^2`` for a function taking three constant values.

    The pieces have lengths ``l1, l2, l3`` in left-to-right order.
    """
    if min(l1, l2, l3) < 0.0:
        raise DomainError("lengths must be nonnegative")
    ell = l1 + l2 + l3
    if not ell > 0.0:
        raise DomainError("total length must be positive")
    a, b, c = l1 / ell, l2 / ell, l3 / ell
    return ell * (a * c * (g_r - g_l) ** 2 + b * c * (g_r - g_m) ** 2 + a * b * (g_m - g_l) ** 2)


def fans_from_states(lefts: Sequence[State], rights: Sequence[State]) -> FanBatch:
    """Convenience wrapper building a batch from lists of :class:`State`."""
    vl = np.array([s.vrho for s in lefts])
    ol = np.array([s.omega for s in lefts])
    vr = np.array([s.vrho for s in rights])
    orr = np.array([s.omega for s in rights])
    return solve_batch(vl, ol, vr, orr)
