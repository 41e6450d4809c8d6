"""Runtime diagnostics: bound monitor, mass ledger, entropy production,
consistency sum, weak-form residuals and the wall momentum trace.

:class:`Diagnostics` is a streaming observer for :func:`sphgrav.scheme.run`.
The functional helpers (:func:`consistency_sum`, :func:`weak_residual`, ...)
replay stored step records through a fresh observer, so both routes give
bit-identical numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .entropy import DEFAULT_XI_GRID, MECHANICAL, EntropyPair, mechanical_entropy_arrays
from .errors import DomainError
from .gravity import source_arrays
from .riemann import FanBatch, WaveFan, cell_average, sample
from .scheme import CellArray, StepRecord, Trajectory, initial_variance
from .state import flux

__all__ = [
    "MonitorReport",
    "monitor_bounds",
    "BumpTestFunction",
    "standard_bump",
    "Diagnostics",
    "DiagnosticsReport",
    "consistency_sum",
    "entropy_production_total",
    "weak_residual",
    "boundary_trace",
    "fan_cell_variance",
    "evaluate_checks",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


# -- bound monitor -----------------------------------------------------------

@dataclass(frozen=True)
class MonitorReport:
    sup_w: float
    inf_z: float
    bound: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.bound - max(self.sup_w, -self.inf_z)


def monitor_bounds(cells: CellArray, alpha0: float, C: float, t: float,
                   tol: float = 1e-9) -> MonitorReport:
    """Check ``w <= alpha0 + C t + tol`` and ``z >= -(alpha0 + C t) - tol``."""
    w, z = cells.invariants()
    bound = alpha0 + C * t
    sup_w, inf_z = float(np.max(w)), float(np.min(z))
    return MonitorReport(sup_w, inf_z, bound, sup_w <= bound + tol and inf_z >= -bound - tol)


# -- test functions ----------------------------------------------------------

def _quintic(s):
    """``1 - (6r^5 - 15r^4 + 10r^3)`` for ``r = |s| <= 1``, zero outside; C^2."""
    r = np.minimum(np.abs(s), 1.0)
    return 1.0 - r ** 3 * (10.0 - 15.0 * r + 6.0 * r * r)


def _quintic_prime(s):
    r = np.minimum(np.abs(s), 1.0)
    return -30.0 * r * r * (1.0 - r) ** 2 * np.sign(s)


@dataclass(frozen=True)
class BumpTestFunction:
    """Tensor product ``A * b((x - xc)/dx) * b((t - tc)/dt)`` of quintic bumps."""

    x_center: float
    x_half: float
    t_center: float
    t_half: float
    amplitude: float = 1.0

    @property
    def x_support(self) -> tuple[float, float]:
        return self.x_center - self.x_half, self.x_center + self.x_half

    @property
    def t_support(self) -> tuple[float, float]:
        return self.t_center - self.t_half, self.t_center + self.t_half

    def _parts(self, x, t):
        sx = (np.asarray(x, dtype=float) - self.x_center) / self.x_half
        st = (t - self.t_center) / self.t_half
        return sx, st

    def phi(self, x, t):
        sx, st = self._parts(x, t)
        return self.amplitude * _quintic(sx) * _quintic(st)

    def phi_x(self, x, t):
        sx, st = self._parts(x, t)
        return self.amplitude * _quintic_prime(sx) * _quintic(st) / self.x_half

    def phi_t(self, x, t):
        sx, st = self._parts(x, t)
        return self.amplitude * _quintic(sx) * _quintic_prime(st) / self.t_half

    def check_support(self, x_lo: float, x_hi: float, T: float) -> None:
        a, b = self.x_support
        c, d = self.t_support
        if self.amplitude == 0.0:
            return
        if not (x_lo < a and b < x_hi):
            raise DomainError(f"test function x-support [{a}, {b}] not inside ({x_lo}, {x_hi})")
        if not (0.0 <= c and d <= T):
            raise DomainError(f"test function t-support [{c}, {d}] not inside [0, {T}]")


def standard_bump(T: float) -> BumpTestFunction:
    """Fixed test function: x in [1.5, 4.5], t in [0.1 T, 0.9 T]."""
    return BumpTestFunction(3.0, 1.5, 0.5 * T, 0.4 * T)


# -- evolved-solution segments -----------------------------------------------

@dataclass(frozen=True)
class _Segments:
    """Partition of the domain at time ``t_i + h - 0`` into fan-governed pieces.

    Every segment lies in one new cell and is governed by one fan: the wall
    fan (``wall``) or ``fans[fan]``.  Endpoints are in units of half a mesh
    length from ``x = 1``.
    """

    p2: np.ndarray
    q2: np.ndarray
    wall: np.ndarray
    fan: np.ndarray
    center2: np.ndarray
    new_cell: np.ndarray


@lru_cache(maxsize=8)
def _segments(old_idx_key: tuple, new_idx_key: tuple) -> _Segments:
    old2 = 2 * np.asarray(old_idx_key)
    new2 = 2 * np.asarray(new_idx_key)
    mids = 0.5 * (old2[:-1] + old2[1:])
    pts = np.unique(np.concatenate((old2, new2, mids)))
    p2, q2 = pts[:-1], pts[1:]
    k = np.searchsorted(old2, p2, side="right") - 1
    left_half = p2 < mids[k]
    wall = left_half & (k == 0)
    fan = np.where(left_half, k - 1, k)
    center2 = np.where(left_half, old2[k], old2[k + 1])
    new_cell = np.searchsorted(new2, p2, side="right") - 1
    return _Segments(p2, q2, wall, fan, center2, new_cell)


def _take(batch: FanBatch, idx: np.ndarray) -> FanBatch:
    names = ("rho_l", "u_l", "rho_m", "u_m", "rho_r", "u_r", "shock1", "shock2",
             "s1_lo", "s1_hi", "s2_lo", "s2_hi")
    return FanBatch(*(getattr(batch, n)[idx] for n in names), boundary=batch.boundary)


def _squared_error(b: FanBatch, c, p, q, h, tv, to) -> np.ndarray:
    """``int_p^q |v(x, h) - (tv, to)|^2 dx`` for fans centered at ``c``.

    Constant pieces are exact; rarefaction pieces use 16-point Gauss-Legendre.
    """
    knots = np.stack([p, c + h * b.s1_lo, c + h * b.s1_hi, c + h * b.s2_lo, c + h * b.s2_hi, q])
    knots = np.maximum.accumulate(np.clip(knots, p, q), axis=0)
    lens = np.diff(knots, axis=0)
    total = np.zeros(p.shape)
    for k, (rho, u) in zip((0, 2, 4), ((b.rho_l, b.u_l), (b.rho_m, b.u_m), (b.rho_r, b.u_r))):
        total += lens[k] * ((rho - tv) ** 2 + (rho * u - to) ** 2)
    w_l = b.u_l + np.log(b.rho_l)
    z_r = b.u_r - np.log(b.rho_r)
    for k, family in ((1, 1), (3, 2)):
        sel = np.nonzero(lens[k] > 0.0)[0]
        if sel.size == 0:
            continue
        lo, ln = knots[k][sel], lens[k][sel]
        x = lo[:, None] + 0.5 * ln[:, None] * (_GL_NODES[None, :] + 1.0)
        xi = (x - c[sel, None]) / h
        if family == 1:
            u = xi + 1.0
            rho = np.exp(w_l[sel, None] - u)
        else:
            u = xi - 1.0
            rho = np.exp(u - z_r[sel, None])
        f = (rho - tv[sel, None]) ** 2 + (rho * u - to[sel, None]) ** 2
        total[sel] += 0.5 * ln * (f @ _GL_WEIGHTS)
    return total


def step_consistency(rec: StepRecord) -> float:
    """``sum_j int (v(x, t_{i+1} - 0) - vbar_j)**2 dx`` for one step."""
    seg = _segments(tuple(rec.before.edge_index.tolist()), tuple(rec.after.edge_index.tolist()))
    l, h = rec.before.l, rec.h
    p = 1.0 + 0.5 * seg.p2 * l
    q = 1.0 + 0.5 * seg.q2 * l
    c = 1.0 + 0.5 * seg.center2 * l
    tv = rec.averaged_vrho[seg.new_cell]
    to = rec.averaged_omega[seg.new_cell]
    out = np.zeros(p.shape)
    wall = seg.wall
    if np.any(wall):
        idx = np.zeros(int(wall.sum()), dtype=int)
        out[wall] = _squared_error(_take(rec.wall, idx), c[wall], p[wall], q[wall], h, tv[wall], to[wall])
    inner = ~wall
    out[inner] = _squared_error(_take(rec.fans, seg.fan[inner]), c[inner], p[inner], q[inner],
                                h, tv[inner], to[inner])
    return float(np.sum(out))


def fan_cell_variance(fan: WaveFan, a: float, b: float, t: float) -> float:
    """``int_a^b |v(x, t) - vbar|^2 dx`` for one fan, ``vbar`` its exact average."""
    avg = cell_average(fan, a, b, t)
    x0 = fan.origin[0]
    knots = [a]
    kinds = []
    for wave in fan.waves:
        lo = min(max(x0 + t * wave.speed_lo, a), b)
        hi = min(max(x0 + t * wave.speed_hi, a), b)
        knots += [lo, hi]
        kinds += ["const", "raref" if wave.speed_hi > wave.speed_lo else "const"]
    knots.append(b)
    kinds.append("const")
    total = 0.0
    for (lo, hi), kind in zip(zip(knots[:-1], knots[1:]), kinds):
        if hi <= lo:
            continue
        if kind == "const":
            s = sample(fan, (0.5 * (lo + hi) - x0) / t)
            total += (hi - lo) * ((s.vrho - avg.vrho) ** 2 + (s.omega - avg.omega) ** 2)
        else:
            xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL_NODES
            vals = []
            for x in xs:
                s = sample(fan, (x - x0) / t)
                vals.append((s.vrho - avg.vrho) ** 2 + (s.omega - avg.omega) ** 2)
            total += 0.5 * (hi - lo) * float(np.dot(_GL_WEIGHTS, vals))
    return total


# -- entropy production ------------------------------------------------------

def _shock_production(b: FanBatch, pair: EntropyPair, keep_1=None, keep_2=None) -> float:
    total = 0.0
    om_m = b.rho_m * b.u_m
    groups = []
    if not b.boundary:
        groups.append((b.shock1 if keep_1 is None else b.shock1 & keep_1,
                       b.rho_l, b.rho_l * b.u_l, b.rho_m, om_m, b.s1_lo))
    groups.append((b.shock2 if keep_2 is None else b.shock2 & keep_2,
                   b.rho_m, om_m, b.rho_r, b.rho_r * b.u_r, b.s2_lo))
    for mask, vl, ol, vr, orr, sig in groups:
        if not np.any(mask):
            continue
        el, ql = pair.arrays(vl[mask], ol[mask])
        er, qr = pair.arrays(vr[mask], orr[mask])
        total += float(np.sum(sig[mask] * (er - el) - (qr - ql)))
    return total


def step_entropy_production(rec: StepRecord, pair: EntropyPair) -> float:
    """``h * sum (sigma [eta] - [q])`` over shocks inside the domain during one step."""
    fans = rec.fans
    n = len(fans)
    # the ghost fan at the right end only contributes waves moving into the domain
    inside1 = np.ones(n, dtype=bool)
    inside2 = np.ones(n, dtype=bool)
    inside1[-1] = fans.s1_lo[-1] < 0.0
    inside2[-1] = fans.s2_lo[-1] < 0.0
    total = _shock_production(fans, pair, inside1, inside2) + _shock_production(rec.wall, pair)
    return rec.h * total


# -- weak residuals ----------------------------------------------------------

def _source(cells: CellArray, N: int, gravity: bool = True) -> np.ndarray:
    widths = cells.widths
    if gravity:
        cum = np.concatenate(([0.0], np.cumsum(cells.vrho * widths)))
        prefix = 0.5 * (cum[:-1] + cum[1:])
    else:
        prefix = 0.0
    return source_arrays(cells.vrho, cells.centers, prefix, N)


def _residual_integrands(cells: CellArray, phi: BumpTestFunction, N: int, gravity: bool):
    x, t, wdt = cells.centers, cells.time, cells.widths
    pt, px, p0 = phi.phi_t(x, t), phi.phi_x(x, t), phi.phi(x, t)
    v, o = cells.vrho, cells.omega
    g2 = _source(cells, N, gravity)
    f1, f2 = flux(v, o)
    eta, q = mechanical_entropy_arrays(v, o)
    mass = np.sum((v * pt + f1 * px) * wdt)
    mom = np.sum((o * pt + f2 * px + g2 * p0) * wdt)
    ent = np.sum((eta * pt + q * px + (o / v) * g2 * p0) * wdt)
    return np.array([mass, mom, ent])


def _initial_terms(cells: CellArray, phi: BumpTestFunction):
    p0 = phi.phi(cells.centers, 0.0) * cells.widths
    eta, _ = mechanical_entropy_arrays(cells.vrho, cells.omega)
    return np.array([np.sum(cells.vrho * p0), np.sum(cells.omega * p0), np.sum(eta * p0)])


# -- wall trace --------------------------------------------------------------

def trace_value(cells: CellArray, eps: float, N: int) -> float:
    """``(1/eps) int_1^{1+eps} m dx`` with ``m = omega * x**(1-N)``, exact per cell."""
    e = cells.edges
    a = np.minimum(e[:-1], 1.0 + eps)
    b = np.minimum(e[1:], 1.0 + eps)
    if N == 2:
        kern = np.log(b) - np.log(a)
    else:
        kern = (b ** (2 - N) - a ** (2 - N)) / (2 - N)
    return float(np.sum(cells.omega * kern)) / eps


# -- streaming observer and report -------------------------------------------

@dataclass
class DiagnosticsReport:
    """Plain-data summary of a run; serializes to JSON."""

    l: float
    h: float
    N: int
    beta: float
    T: float
    n_steps: int
    alpha0: float
    monitor_C: float
    times: list = field(default_factory=list)
    sup_w: list = field(default_factory=list)
    inf_z: list = field(default_factory=list)
    monitor_pass: bool = True
    monitor_rate: float = 0.0
    min_density: float = math.inf
    max_density: float = 0.0
    max_speed: float = 0.0
    cfl_limit: float = 0.0
    mass: list = field(default_factory=list)
    injection: float = 0.0
    outflow: float = 0.0
    ledger_residual: float = 0.0
    entropy_production: dict = field(default_factory=dict)
    consistency_sum: float | None = None
    weak_residuals: dict = field(default_factory=dict)
    boundary_trace: dict = field(default_factory=dict)

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)

    @classmethod
    def from_json(cls, text: str) -> "DiagnosticsReport":
        return cls(**json.loads(text))

    @property
    def cfl_pass(self) -> bool:
        return self.max_speed < self.cfl_limit


class Diagnostics:
    """Streaming observer accumulating every run diagnostic.

    Parameters
    ----------
    pairs
        Entropy pairs whose shock production is accumulated.  Defaults to the
        mechanical pair plus the weak family on :data:`DEFAULT_XI_GRID`.
    test_functions
        Named test functions for the weak residuals; ``None`` selects the
        standard bump when the domain contains its support, else none.
    trace_eps
        Strip widths for the wall momentum trace.
    consistency
        Accumulate the consistency sum (the most expensive diagnostic).
    """

    def __init__(self, pairs: Sequence[EntropyPair] | None = None,
                 test_functions: dict | None = None,
                 trace_eps: Sequence[float] = (0.1,),
                 consistency: bool = True):
        self.pairs = list(pairs) if pairs is not None else (
            [MECHANICAL] + [EntropyPair(x) for x in DEFAULT_XI_GRID])
        self._test_functions = test_functions
        # strips are keyed by their printed width, so equal widths collapse
        self.trace_eps = tuple({f"{e:g}": float(e) for e in trace_eps}.values())
        self.consistency = consistency
        self.report: DiagnosticsReport | None = None

    def start(self, traj: Trajectory) -> None:
        cfg = traj.config
        self.config = cfg
        cells = traj.initial
        if self._test_functions is not None:
            self.tests = self._test_functions
        else:
            std = standard_bump(cfg.T)
            fits = std.x_support[1] < cfg.domain_end
            self.tests = {"standard": std} if fits else {}
        for eps in self.trace_eps:
            if eps < 2.0 * cfg.l:
                raise DomainError(f"trace strip {eps} is below the mesh resolution 2l")
        for phi in self.tests.values():
            phi.check_support(1.0, cfg.domain_end, cfg.T)
        self.report = DiagnosticsReport(
            l=cfg.l, h=cfg.h, N=cfg.N, beta=cfg.beta, T=cfg.T, n_steps=0,
            alpha0=traj.alpha0, monitor_C=traj.monitor_C, cfl_limit=cfg.l / cfg.h)
        self._alpha0, self._C, self._tol = traj.alpha0, traj.monitor_C, cfg.monitor_tol
        self._prod = {p.name: 0.0 for p in self.pairs}
        self._cons = initial_variance(cfg, cells) if self.consistency else None
        self._mass0 = cells.weighted_mass()
        self._inj = 0.0
        self._out = 0.0
        self._weak_sum = {k: np.zeros(3) for k in self.tests}
        self._weak_first = {k: _residual_integrands(cells, phi, cfg.N, cfg.gravity)
                            for k, phi in self.tests.items()}
        self._weak_last = dict(self._weak_first)
        self._weak_init = {k: _initial_terms(cells, phi) for k, phi in self.tests.items()}
        for k in self.tests:
            self._weak_sum[k] += self._weak_first[k]
        self._trace = {eps: [trace_value(cells, eps, cfg.N)] for eps in self.trace_eps}
        self._observe_cells(cells)

    def _observe_cells(self, cells: CellArray) -> None:
        r = self.report
        m = monitor_bounds(cells, self._alpha0, self._C, cells.time, self._tol)
        r.times.append(cells.time)
        r.sup_w.append(m.sup_w)
        r.inf_z.append(m.inf_z)
        r.monitor_pass = r.monitor_pass and m.passed
        if cells.time > 0.0:
            rate = max(0.0, (m.sup_w - self._alpha0) / cells.time,
                       (-m.inf_z - self._alpha0) / cells.time)
            r.monitor_rate = max(r.monitor_rate, rate)
        r.min_density = min(r.min_density, float(np.min(cells.vrho)))
        r.max_density = max(r.max_density, float(np.max(cells.vrho)))
        r.mass.append(cells.weighted_mass())

    def __call__(self, rec: StepRecord) -> None:
        cfg, cells = self.config, rec.after
        self._observe_cells(cells)
        r = self.report
        r.n_steps += 1
        r.max_speed = max(r.max_speed, rec.max_speed)
        self._inj += rec.injection
        self._out += rec.h * rec.right_flux[0]
        for p in self.pairs:
            self._prod[p.name] += step_entropy_production(rec, p)
        if self.consistency:
            self._cons += step_consistency(rec)
        for k, phi in self.tests.items():
            val = _residual_integrands(cells, phi, cfg.N, cfg.gravity)
            self._weak_sum[k] += val
            self._weak_last[k] = val
        for eps in self.trace_eps:
            self._trace[eps].append(trace_value(cells, eps, cfg.N))

    def finish(self) -> DiagnosticsReport:
        r = self.report
        h = self.config.h
        r.injection = self._inj
        r.outflow = self._out
        r.ledger_residual = r.mass[-1] - (self._mass0 + self._inj - self._out)
        r.entropy_production = dict(self._prod)
        r.consistency_sum = self._cons
        for k in self.tests:
            if r.n_steps == 0:
                integral = np.zeros(3)
            else:
                integral = h * (self._weak_sum[k] - 0.5 * (self._weak_first[k] + self._weak_last[k]))
            res = integral + self._weak_init[k]
            r.weak_residuals[k] = {"mass": float(res[0]), "momentum": float(res[1]),
                                   "entropy": float(res[2])}
        for eps, series in self._trace.items():
            s = np.asarray(series)
            span = r.n_steps * h
            avg = float(h * (np.sum(s) - 0.5 * (s[0] + s[-1])) / span) if r.n_steps else float(s[0])
            r.boundary_trace[f"{eps:g}"] = {"eps": eps, "series": s.tolist(), "time_average": avg}
        return r


def _replay(trajectory: Trajectory, obs: Diagnostics) -> DiagnosticsReport:
    if trajectory.records is None:
        raise ValueError("trajectory was run without keep_records=True")
    obs.start(trajectory)
    for rec in trajectory.records:
        obs(rec)
    return obs.finish()


def consistency_sum(trajectory: Trajectory) -> float:
    obs = Diagnostics(pairs=[], test_functions={}, consistency=True, trace_eps=())
    return _replay(trajectory, obs).consistency_sum


def entropy_production_total(trajectory: Trajectory, pair: EntropyPair) -> float:
    obs = Diagnostics(pairs=[pair], test_functions={}, consistency=False, trace_eps=())
    return _replay(trajectory, obs).entropy_production[pair.name]


def weak_residual(trajectory: Trajectory, testfn: BumpTestFunction) -> tuple[float, float, float]:
    obs = Diagnostics(pairs=[], test_functions={"phi": testfn}, consistency=False, trace_eps=())
    res = _replay(trajectory, obs).weak_residuals["phi"]
    return res["mass"], res["momentum"], res["entropy"]


def boundary_trace(trajectory: Trajectory, eps: float) -> tuple[list[float], float]:
    obs = Diagnostics(pairs=[], test_functions={}, trace_eps=(eps,), consistency=False)
    tr = _replay(trajectory, obs).boundary_trace[f"{eps:g}"]
    return tr["series"], tr["time_average"]


def evaluate_checks(report: DiagnosticsReport, entropy_tol: float = 1e-8,
                    xi0_tol: float = 1e-12) -> dict[str, bool]:
    """Pass/fail of every run-level property a single report can decide."""
    prod = report.entropy_production
    checks = {
        "monitor": report.monitor_pass,
        "cfl": report.cfl_pass,
        "density_floor": report.min_density >= report.l ** report.beta * (1.0 - 1e-12),
        "cutoff_injection": report.injection <= report.T * report.l ** (report.beta - 2.5) + abs(report.outflow),
        "entropy_nonnegative": all(v >= -entropy_tol for k, v in prod.items() if k != "xi=0"),
    }
    if "xi=0" in prod:
        checks["mass_pair_zero"] = abs(prod["xi=0"]) <= xi0_tol
    if report.consistency_sum is not None:
        checks["consistency_nonnegative"] = report.consistency_sum >= 0.0
    for name, res in report.weak_residuals.items():
        checks[f"entropy_residual[{name}]"] = res["entropy"] >= -10.0 * report.l
    return checks


def summarize(reports: Iterable[DiagnosticsReport]) -> list[dict]:
    return [{"l": r.l, "n_steps": r.n_steps, "consistency_sum": r.consistency_sum,
             **{f"r_{k}": v for k, v in r.weak_residuals.get("standard", {}).items()}}
            for r in reports]
