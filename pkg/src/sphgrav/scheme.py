"""Staggered Lax-Friedrichs construction with exact Riemann fans.

Grid nodes are ``x_j = 1 + j*l``.  Cells alternate between two tilings of
``[1, 1 + J*l]`` (``J`` even):

* parity 0 (initial and even steps): edges ``1, x_3, x_5, ..., x_{J-3}, x_J``;
  wall cell ``[1, 1+3l]``, interior cells of width ``2l``, last cell ``3l``.
* parity 1 (odd steps): edges ``1, x_2, x_4, ..., x_{J-2}, x_J``; all widths ``2l``.

One step solves a Riemann problem at every edge (reflecting wall at ``x=1``,
ghost floor state beyond ``x_J``), averages the evolved solution over the
other tiling, adds ``h * g`` and floors the density at ``l**beta``.  Each new
edge lies where the evolved solution is still constant, so averaging is the
exact conservation identity on each new cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .entropy import mechanical_entropy_arrays
from .errors import CFLViolation, ConfigError, DomainError, InvariantViolation
from .gravity import source_arrays, total_mass
from .riemann import FanBatch, solve_batch, solve_boundary_batch
from .state import State, flux

__all__ = [
    "SchemeConfig",
    "CellArray",
    "StepRecord",
    "Trajectory",
    "mesh_params",
    "cfl_check",
    "apply_cutoff",
    "apply_cutoff_arrays",
    "cfl_threshold",
    "staggered_edges",
    "init_cells",
    "advance",
    "step",
    "run",
    "initial_alpha",
    "default_monitor_constant",
    "fan_invariant_violations",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def mesh_params(l: float) -> tuple[float, float]:
    if not 0.0 < l < 1.0:
        raise DomainError(f"mesh length must lie in (0, 1), got {l!r}")
    return l, l / (10.0 * (1.0 + abs(math.log(l))))


@dataclass(frozen=True)
class SchemeConfig:
    """Run parameters.  ``rho0`` and ``m0`` are vectorized physical profiles.

    ``source``, ``gravity`` and ``cutoff`` switch off parts of a step; they
    exist for conservation checks and are on in every real run.
    """

    l: float
    T: float
    L_max: float = 10.0
    N: int = 3
    beta: float = 3.0
    rho0: Callable = _zero
    m0: Callable = _zero
    alpha0: float | None = None
    monitor_C: float | None = None
    monitor_tol: float = 1e-9
    abort_on_monitor: bool = True
    spot_check_fraction: float = 0.01
    seed: int = 0
    source: bool = True
    gravity: bool = True
    cutoff: bool = True
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.l < 1.0:
            raise ConfigError(f"l must lie in (0, 1), got {self.l!r}")
        if not 3.0 <= self.beta <= 4.0:
            raise ConfigError(f"beta must lie in [3, 4], got {self.beta!r}")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError(f"N must be an integer >= 2, got {self.N!r}")
        if not self.T >= 0.0:
            raise ConfigError(f"T must be nonnegative, got {self.T!r}")
        if not self.L_max > 1.0:
            raise ConfigError(f"L_max must exceed 1, got {self.L_max!r}")
        if self.n_nodes < 6:
            raise ConfigError("domain too short: need at least six mesh lengths")
        if not 0.0 <= self.spot_check_fraction <= 1.0:
            raise ConfigError("spot_check_fraction must lie in [0, 1]")

    @property
    def h(self) -> float:
        return mesh_params(self.l)[1]

    @property
    def floor(self) -> float:
        return self.l ** self.beta

    @property
    def n_nodes(self) -> int:
        """Even ``J`` with ``1 + J*l >= L_max``."""
        return 2 * math.ceil((self.L_max - 1.0) / (2.0 * self.l) - 1e-9)

    @property
    def domain_end(self) -> float:
        return 1.0 + self.n_nodes * self.l

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.h + 1e-9))

    def with_level(self, l: float) -> "SchemeConfig":
        return replace(self, l=l)


def staggered_edges(parity: int, J: int) -> np.ndarray:
    """Integer node indices of the cell edges for the given parity."""
    if parity == 0:
        inner = np.arange(3, J - 2, 2)
    else:
        inner = np.arange(2, J - 1, 2)
    return np.concatenate(([0], inner, [J])).astype(np.int64)


@dataclass(frozen=True)
class CellArray:
    """Cell averages on one staggered tiling.

    ``centers`` are geometric midpoints; for the 3l-wide end cells they sit
    half a mesh length away from the node that labels the cell.
    """

    parity: int
    edge_index: np.ndarray
    vrho: np.ndarray
    omega: np.ndarray
    l: float
    time: float = 0.0
    step: int = 0

    def __post_init__(self):
        for arr in (self.edge_index, self.vrho, self.omega):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, vrho, omega, l: float, parity: int = 0,
                    time: float = 0.0, step: int = 0) -> "CellArray":
        """Cells on the standard tiling whose size matches ``len(vrho)``."""
        vrho = np.array(vrho, dtype=float)
        omega = np.array(omega, dtype=float)
        K = vrho.shape[0]
        J = 2 * (K + 1) if parity == 0 else 2 * K
        if J < 6 or omega.shape != vrho.shape:
            raise DomainError("need matching arrays and at least six mesh lengths")
        return cls(parity, staggered_edges(parity, J), vrho, omega, l, time, step)

    @property
    def edges(self) -> np.ndarray:
        return 1.0 + self.edge_index * self.l

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edge_index) * self.l

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def nodes(self) -> np.ndarray:
        """Labels ``j`` with the cell spanning ``[x_{j-1}, x_{j+1}]`` (end cells widened)."""
        J = int(self.edge_index[-1])
        if self.parity == 0:
            return np.arange(2, J - 1, 2)
        return np.arange(1, J, 2)

    @property
    def velocity(self) -> np.ndarray:
        return self.omega / self.vrho

    def __len__(self) -> int:
        return self.vrho.shape[0]

    def states(self) -> list[State]:
        return [State(float(r), float(o)) for r, o in zip(self.vrho, self.omega)]

    def invariants(self):
        u = self.velocity
        lr = np.log(self.vrho)
        return u + lr, u - lr

    def weighted_mass(self) -> float:
        return float(np.sum(self.vrho * self.widths))

    def momentum_total(self) -> float:
        return float(np.sum(self.omega * self.widths))


def cfl_check(cells: CellArray, l: float, h: float) -> bool:
    if len(cells) == 0:
        return True
    u = cells.omega / cells.vrho
    return bool(np.max(np.abs(u) + 1.0) < l / h)


def cfl_threshold(C: float, beta: float) -> float:
    """Largest ``l0`` with ``C + beta*|log l| + 1 < l/h`` for every ``l < l0``.

    ``C + beta*|log l|`` bounds ``|u|`` once the density is floored at
    ``l**beta`` and the invariants are bounded by ``C``; the extra 1 is the
    sound speed.
    """
    if beta >= 10.0:
        raise DomainError("the mesh ratio only dominates for beta < 10")
    # C + 1 + beta*L < 10 + 10*L  <=>  L > (C - 9)/(10 - beta)
    L = max((C - 9.0) / (10.0 - beta), 0.0)
    return min(math.exp(-L), 1.0)


def apply_cutoff_arrays(vrho, floor: float):
    return np.maximum(vrho, floor)


def apply_cutoff(s: State, l: float, beta: float) -> State:
    return State(max(s.vrho, l ** beta), s.omega)


def _initial_weighted(config: SchemeConfig, x: np.ndarray):
    wgt = x ** (config.N - 1)
    rho = np.asarray(config.rho0(x), dtype=float)
    m = np.asarray(config.m0(x), dtype=float)
    if np.any(rho < 0.0):
        raise ConfigError("initial density must be nonnegative")
    near = x < 1.0 / config.l
    vrho = np.where(near, np.maximum(wgt * rho, config.floor), config.floor)
    omega = np.where(near, wgt * m, 0.0)
    return vrho, omega


def _cell_quadrature(config: SchemeConfig, a: np.ndarray, b: np.ndarray, fn):
    """16-point Gauss-Legendre integrals of ``fn(x) -> (f1, f2)`` over ``[a, b]``.

    Cells straddling the far-field cut-off radius ``1/l`` are split there.
    """
    x_cut = 1.0 / config.l
    pieces = []
    split = (a < x_cut) & (x_cut < b)
    lo = np.where(split, x_cut, a)
    for lo_, hi_ in ((a, np.where(split, x_cut, b)), (lo, b)):
        mid = 0.5 * (lo_ + hi_)
        half = 0.5 * (hi_ - lo_)
        x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        f1, f2 = fn(x)
        pieces.append((half * (f1 @ _GL_WEIGHTS), half * (f2 @ _GL_WEIGHTS)))
    # the second piece duplicates the first on unsplit cells
    i1 = pieces[0][0] + np.where(split, pieces[1][0], 0.0)
    i2 = pieces[0][1] + np.where(split, pieces[1][1], 0.0)
    return i1, i2


def init_cells(config: SchemeConfig) -> CellArray:
    idx = staggered_edges(0, config.n_nodes)
    edges = 1.0 + idx * config.l
    a, b = edges[:-1], edges[1:]
    i_rho, i_om = _cell_quadrature(config, a, b, lambda x: _initial_weighted(config, x))
    widths = b - a
    vrho = apply_cutoff_arrays(i_rho / widths, config.floor)
    return CellArray(0, idx, vrho, i_om / widths, config.l, 0.0, 0)


def initial_variance(config: SchemeConfig, cells: CellArray) -> float:
    """``sum_j int (v0 - vbar_j)**2 dx`` of the initial averaging, both components."""
    e = cells.edges
    a, b = e[:-1], e[1:]
    vb, ob = cells.vrho, cells.omega

    def sq(x):
        v, o = _initial_weighted(config, x)
        return (v - vb[:, None]) ** 2, (o - ob[:, None]) ** 2

    i1, i2 = _cell_quadrature(config, a, b, sq)
    return float(np.sum(i1 + i2))


def initial_alpha(cells: CellArray) -> float:
    w, z = cells.invariants()
    return float(max(np.max(w), np.max(-z)))


def default_monitor_constant(cells: CellArray, N: int) -> float:
    M = total_mass(cells, N)
    from .gravity import unit_ball_volume

    return (N - 1) + M * unit_ball_volume(N)


@dataclass(frozen=True)
class StepRecord:
    """Everything one step produced, for observers and diagnostics.

    ``fans`` holds the Riemann problems at ``before.edges[1:]`` (the last one
    against the ghost floor state) and ``wall`` the reflecting problem at
    ``x = 1``.  ``averaged_*`` are the new cell averages before the source
    and cut-off were applied.
    """

    before: CellArray
    after: CellArray
    fans: FanBatch
    wall: FanBatch
    averaged_vrho: np.ndarray
    averaged_omega: np.ndarray
    injection: float
    wall_flux: tuple[float, float]
    right_flux: tuple[float, float]
    max_speed: float
    h: float

    @property
    def fan_centers(self) -> np.ndarray:
        return self.before.edges[1:]


def fan_invariant_violations(batch: FanBatch, idx: np.ndarray, tol: float = 1e-9,
                             n_rays: int = 64) -> list[str]:
    """Check a subset of fans against the Riemann-solution invariants.

    Covers the invariant-region bounds, wave ordering, Rankine-Hugoniot
    residuals and mechanical entropy production of every shock.
    """
    problems: list[str] = []
    if idx.size == 0:
        return problems
    sub = FanBatch(*(getattr(batch, f)[idx] for f in (
        "rho_l", "u_l", "rho_m", "u_m", "rho_r", "u_r", "shock1", "shock2",
        "s1_lo", "s1_hi", "s2_lo", "s2_hi")), boundary=batch.boundary)
    lo = (0.0 if batch.boundary else sub.s1_lo - 0.5)
    hi = sub.s2_hi + 0.5
    frac = np.linspace(0.0, 1.0, n_rays)
    lo = np.broadcast_to(lo, hi.shape)
    xi = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    cols = [getattr(sub, f)[:, None] for f in (
        "rho_l", "u_l", "rho_m", "u_m", "rho_r", "u_r", "shock1", "shock2",
        "s1_lo", "s1_hi", "s2_lo", "s2_hi")]
    rho, om = FanBatch(*cols, boundary=batch.boundary).sample(xi)
    u = om / rho
    w, z = u + np.log(rho), u - np.log(rho)
    w_l, z_l = sub.u_l + np.log(sub.rho_l), sub.u_l - np.log(sub.rho_l)
    w_r, z_r = sub.u_r + np.log(sub.rho_r), sub.u_r - np.log(sub.rho_r)
    if batch.boundary:
        w_max, z_min = np.maximum(w_r, -z_r), np.minimum(0.0, z_r)
    else:
        w_max, z_min = np.maximum(w_l, w_r), np.minimum(z_l, z_r)
    if np.any(w > w_max[:, None] + tol) or np.any(z < z_min[:, None] - tol):
        problems.append("sampled state left the invariant region")
    if not batch.boundary and np.any(sub.s1_hi > sub.s2_lo + tol):
        problems.append("wave speeds out of order")
    om_m = sub.rho_m * sub.u_m
    checks = []
    if not batch.boundary:
        checks.append((sub.shock1, sub.rho_l, sub.rho_l * sub.u_l, sub.rho_m, om_m, sub.s1_lo))
    checks.append((sub.shock2, sub.rho_m, om_m, sub.rho_r, sub.rho_r * sub.u_r, sub.s2_lo))
    for mask, vl, ol, vr, orr, sig in checks:
        if not np.any(mask):
            continue
        vl, ol, vr, orr, sig = (q[mask] for q in (vl, ol, vr, orr, sig))
        fl, fr = flux(vl, ol), flux(vr, orr)
        r1 = sig * (vr - vl) - (fr[0] - fl[0])
        r2 = sig * (orr - ol) - (fr[1] - fl[1])
        if np.any(np.abs(r1) > 1e-8) or np.any(np.abs(r2) > 1e-8):
            problems.append("Rankine-Hugoniot residual above 1e-8")
        el, ql = mechanical_entropy_arrays(vl, ol)
        er, qr = mechanical_entropy_arrays(vr, orr)
        if np.any(sig * (er - el) - (qr - ql) < -1e-10):
            problems.append("shock with negative mechanical entropy production")
    return problems


def _new_integrals(before: CellArray, new_idx: np.ndarray):
    """Exact integrals of the old piecewise-constant data over the new cells."""
    old_idx = before.edge_index
    l = before.l
    K = len(before)
    a_idx, b_idx = new_idx[:-1], new_idx[1:]
    # old cell containing each new edge; end edges coincide with old end edges
    ka = np.clip(np.searchsorted(old_idx, a_idx, side="right") - 1, 0, K - 1)
    kb = np.clip(np.searchsorted(old_idx, b_idx, side="left") - 1, 0, K - 1)
    same = ka == kb
    left_len = np.where(same, b_idx - a_idx, old_idx[ka + 1] - a_idx) * l
    right_len = np.where(same, 0, b_idx - old_idx[kb]) * l
    out = []
    for v in (before.vrho, before.omega):
        out.append(v[ka] * left_len + np.where(same, 0.0, v[kb] * right_len))
    return out[0], out[1], ka, kb


def advance(cells: CellArray, config: SchemeConfig, alpha0: float | None = None,
            monitor_C: float | None = None, rng: np.random.Generator | None = None) -> StepRecord:
    """One full step of size ``h``; see the module docstring for the stages."""
    l, h = mesh_params(config.l)
    if not cfl_check(cells, l, h):
        raise CFLViolation(f"cell-average characteristic speed reached l/h = {l / h:.6g}")
    floor = config.floor
    vrho, omega = cells.vrho, cells.omega

    wall = solve_boundary_batch(vrho[:1], omega[:1])
    right_v = np.append(vrho[1:], floor)
    right_o = np.append(omega[1:], 0.0)
    fans = solve_batch(vrho, omega, right_v, right_o)
    max_speed = float(max(np.max(np.abs(fans.s1_lo)), np.max(np.abs(fans.s2_hi)),
                          np.max(np.abs(wall.s2_hi))))
    if not max_speed < l / h:
        raise CFLViolation(f"wave speed {max_speed:.6g} reached l/h = {l / h:.6g}")

    new_parity = 1 - cells.parity
    new_idx = staggered_edges(new_parity, int(cells.edge_index[-1]))
    int_rho, int_om, ka, kb = _new_integrals(cells, new_idx)

    # fluxes through the new edges, all constant in time over the step
    f_rho = np.empty(new_idx.shape)
    f_om = np.empty(new_idx.shape)
    inner_cells = ka[1:]
    f_rho[1:-1], f_om[1:-1] = flux(vrho[inner_cells], omega[inner_cells])
    wall_rho = float(wall.rho_m[0])
    f_rho[0], f_om[0] = 0.0, wall_rho
    tr_rho, tr_om = fans.sample(np.zeros(1))
    tr_rho, tr_om = float(tr_rho[-1]), float(tr_om[-1])
    fr = flux(tr_rho, tr_om)
    f_rho[-1], f_om[-1] = fr
    widths = np.diff(new_idx) * l
    avg_rho = (int_rho - h * np.diff(f_rho)) / widths
    avg_om = (int_om - h * np.diff(f_om)) / widths

    new_rho = avg_rho.copy()
    new_om = avg_om.copy()
    if config.source:
        edges = 1.0 + new_idx * l
        centers = 0.5 * (edges[:-1] + edges[1:])
        if config.gravity:
            cum = np.concatenate(([0.0], np.cumsum(avg_rho * widths)))
            prefix = 0.5 * (cum[:-1] + cum[1:])
        else:
            prefix = 0.0
        new_om = new_om + h * source_arrays(avg_rho, centers, prefix, config.N)
    injection = 0.0
    if config.cutoff:
        injection = float(np.sum(np.maximum(floor - new_rho, 0.0) * widths))
        new_rho = apply_cutoff_arrays(new_rho, floor)
    if np.any(~(new_rho > 0.0)):
        raise InvariantViolation("nonpositive density after step")

    n = cells.step + 1
    after = CellArray(new_parity, new_idx, new_rho, new_om, l, n * h, n)

    if alpha0 is not None and monitor_C is not None and config.abort_on_monitor:
        w, z = after.invariants()
        bound = alpha0 + monitor_C * after.time + config.monitor_tol
        if np.max(w) > bound or np.min(z) < -bound:
            raise InvariantViolation(
                f"step {n}: sup w = {np.max(w):.6g}, inf z = {np.min(z):.6g} "
                f"outside +-{bound:.6g}")

    if rng is not None and config.spot_check_fraction > 0.0:
        k = max(1, math.ceil(config.spot_check_fraction * len(fans)))
        pick = np.sort(rng.choice(len(fans), size=min(k, len(fans)), replace=False))
        problems = fan_invariant_violations(fans, pick) + fan_invariant_violations(wall, np.array([0]))
        if problems:
            raise InvariantViolation(f"step {n}: " + "; ".join(sorted(set(problems))))

    return StepRecord(cells, after, fans, wall, avg_rho, avg_om, injection,
                      (0.0, wall_rho), (float(fr[0]), float(fr[1])), max_speed, h)


def step(cells: CellArray, config: SchemeConfig) -> CellArray:
    return advance(cells, config).after


@dataclass
class Trajectory:
    config: SchemeConfig
    initial: CellArray
    alpha0: float
    monitor_C: float
    snapshots: list[CellArray] = field(default_factory=list)
    records: list[StepRecord] | None = None
    final: CellArray | None = None
    max_speed: float = 0.0
    cfl_ok: bool = True

    @property
    def n_steps(self) -> int:
        return self.final.step if self.final is not None else 0


Observer = Callable[[StepRecord], None]


def run(config: SchemeConfig, observers: Sequence[Observer] = (),
        keep_records: bool = False) -> Trajectory:
    """Iterate :func:`advance` ``config.n_steps`` times.

    Observers are called with every :class:`StepRecord`; an observer exposing
    ``start(trajectory)`` is told about the initial data first.
    """
    cells = init_cells(config)
    alpha0 = config.alpha0 if config.alpha0 is not None else initial_alpha(cells)
    C = config.monitor_C if config.monitor_C is not None else default_monitor_constant(cells, config.N)
    traj = Trajectory(config, cells, alpha0, C, records=[] if keep_records else None)
    pending = sorted(config.snapshot_times)
    while pending and pending[0] <= 1e-12:
        traj.snapshots.append(cells)
        pending.pop(0)
    for obs in observers:
        start = getattr(obs, "start", None)
        if start is not None:
            start(traj)
    rng = np.random.default_rng(config.seed)
    for _ in range(config.n_steps):
        rec = advance(cells, config, alpha0, C, rng)
        cells = rec.after
        traj.max_speed = max(traj.max_speed, rec.max_speed)
        if keep_records:
            traj.records.append(rec)
        for obs in observers:
            obs(rec)
        while pending and cells.time >= pending[0] - 1e-12:
            traj.snapshots.append(cells)
            pending.pop(0)
    # times between the last step and T map to the final state
    traj.snapshots.extend(cells for t in pending if t <= config.T + 1e-12)
    traj.final = cells
    return traj


def iter_states(cells: Iterable[CellArray]):
    for c in cells:
        yield from c.states()
