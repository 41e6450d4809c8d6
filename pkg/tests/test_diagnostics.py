import numpy as np
import pytest

from sphgrav.diagnostics import (
    BumpTestFunction,
    Diagnostics,
    DiagnosticsReport,
    boundary_trace,
    consistency_sum,
    entropy_production_total,
    evaluate_checks,
    fan_cell_variance,
    monitor_bounds,
    standard_bump,
    step_consistency,
    step_entropy_production,
    weak_residual,
)
from sphgrav.entropy import MECHANICAL, EntropyPair
from sphgrav.errors import DomainError
from sphgrav.riemann import cell_average, solve_riemann, three_piece_variance
from sphgrav.scheme import CellArray, SchemeConfig, advance, init_cells, run
from sphgrav.state import State


def gaussian(x):
    return 0.5 * np.exp(-(x - 3.0) ** 2) * x ** -2.0


@pytest.fixture(scope="module")
def short_run():
    cfg = SchemeConfig(l=0.05, T=0.2, L_max=6.0, rho0=gaussian, m0=lambda x: -0.3 * gaussian(x))
    return run(cfg, keep_records=True)


def test_monitor_examples():
    cfg = SchemeConfig(l=0.05, T=0.1, L_max=4.0)
    cells = init_cells(cfg)
    w, z = cells.invariants()
    alpha0 = float(max(w.max(), (-z).max()))
    rep = monitor_bounds(cells, alpha0, 2.0, 0.0)
    assert rep.passed and rep.slack == 0.0
    v = np.ones(10)
    bad = CellArray.from_arrays(v, v * (0.5 + 2.0 * 0.3 + 1.0), 0.05)
    assert not monitor_bounds(bad, 0.5, 2.0, 0.3).passed


def test_three_constant_fan_variance():
    fan = solve_riemann(State.from_velocity(1.0, 1.0), State.from_velocity(1.0, -1.0))
    t, a, b = 0.5, -1.0, 1.5
    s1, s2 = fan.waves[0].speed_lo, fan.waves[1].speed_lo
    lens = (t * s1 - a, t * (s2 - s1), b - t * s2)
    expected = sum(three_piece_variance(getattr(fan.left, c), getattr(fan.middle, c),
                                        getattr(fan.right, c), *lens) for c in ("vrho", "omega"))
    assert fan_cell_variance(fan, a, b, t) == pytest.approx(expected, rel=1e-10)


def test_constant_run_has_zero_consistency():
    cfg = SchemeConfig(l=0.05, T=0.1, L_max=4.0, source=False)
    # zero up to rounding in the floor averages
    assert consistency_sum(run(cfg, keep_records=True)) <= 1e-12 * cfg.floor ** 2


def test_step_consistency_matches_per_cell_fans():
    l = 0.05
    cfg = SchemeConfig(l=l, T=1.0, L_max=3.0, source=False, cutoff=False)
    K = 18
    v = np.ones(K)
    u = np.zeros(K)
    v[6:10], u[6:10] = 2.0, -0.5
    v[10:13], u[10:13] = 0.4, 0.8
    # the last cell matches the ghost state so the end cell holds no wave
    v[-1] = cfg.floor
    cells = CellArray.from_arrays(v, v * u, l)
    rec = advance(cells, cfg)
    total = 0.0
    e_old, e_new = cells.edges, rec.after.edges
    for j in range(1, len(rec.after) - 1):
        a, b = e_new[j], e_new[j + 1]
        k = int(np.searchsorted(e_old, a, side="right"))
        c = e_old[k]
        assert a < c < b
        fan = solve_riemann(State(v[k - 1], v[k - 1] * u[k - 1]), State(v[k], v[k] * u[k]), origin=(c, 0.0))
        avg = cell_average(fan, a, b, cfg.h)
        assert avg.vrho == pytest.approx(rec.averaged_vrho[j], rel=1e-12)
        total += fan_cell_variance(fan, a, b, cfg.h)
    assert step_consistency(rec) == pytest.approx(total, rel=1e-10)


def test_rarefaction_only_step_has_no_production():
    l = 0.05
    cfg = SchemeConfig(l=l, T=1.0, L_max=3.0, source=False, cutoff=False)
    K = 18
    u = 0.05 * np.arange(K) + 0.05
    v = np.ones(K)
    rec = advance(CellArray.from_arrays(v, v * u, l), cfg)
    assert not np.any(rec.fans.shock1[:-1]) and not np.any(rec.fans.shock2[:-1])
    assert not rec.wall.shock2[0]
    # the ghost fan only sends a shock out of the domain
    assert not rec.fans.shock1[-1] and rec.fans.s2_lo[-1] > 0
    for pair in (MECHANICAL, EntropyPair(0.3)):
        assert step_entropy_production(rec, pair) == 0.0


def test_collision_step_production():
    l = 0.05
    cfg = SchemeConfig(l=l, T=1.0, L_max=3.0, source=False, cutoff=False)
    K = 18
    v = np.ones(K)
    u = np.where(np.arange(K) < 9, 1.0, -1.0)
    u[0] = 0.0
    u[-1] = 0.0
    v[-1] = 1.0
    cells = CellArray.from_arrays(v, v * u, l)
    rec = advance(cells, cfg)
    assert step_entropy_production(rec, MECHANICAL) > 0.0
    assert step_entropy_production(rec, EntropyPair(0.0)) == pytest.approx(0.0, abs=1e-15)


def test_entropy_totals(short_run):
    assert entropy_production_total(short_run, MECHANICAL) >= -1e-10
    assert abs(entropy_production_total(short_run, EntropyPair(0.0))) <= 1e-12


def test_weak_residual_zero_test_function(short_run):
    zero = BumpTestFunction(3.0, 1.0, 0.1, 0.05, amplitude=0.0)
    assert weak_residual(short_run, zero) == (0.0, 0.0, 0.0)


def test_weak_residual_support_checked(short_run):
    with pytest.raises(DomainError):
        weak_residual(short_run, BumpTestFunction(1.2, 0.5, 0.1, 0.05))
    with pytest.raises(DomainError):
        weak_residual(short_run, BumpTestFunction(3.0, 1.0, 0.15, 0.1))


def test_weak_residual_on_floor_run():
    l = 0.05
    cfg = SchemeConfig(l=l, T=0.2, L_max=6.0)
    traj = run(cfg, keep_records=True)
    r_mass, r_mom, r_ent = weak_residual(traj, standard_bump(cfg.T))
    assert abs(r_mass) <= l * cfg.floor


def test_bump_derivatives():
    phi = BumpTestFunction(3.0, 1.5, 0.25, 0.2)
    x, t, d = 2.6, 0.31, 1e-6
    assert phi.phi_x(x, t) == pytest.approx((phi.phi(x + d, t) - phi.phi(x - d, t)) / (2 * d), rel=1e-6)
    assert phi.phi_t(x, t) == pytest.approx((phi.phi(x, t + d) - phi.phi(x, t - d)) / (2 * d), rel=1e-6)
    assert phi.phi(4.5, t) == 0.0 and phi.phi(3.0, 0.25) == 1.0
    assert phi.phi_x(1.0, t) == 0.0


def test_boundary_trace_rest_state():
    # floor data matches the ghost state, so no wave ever forms
    cfg = SchemeConfig(l=0.05, T=0.1, L_max=4.0, source=False)
    series, avg = boundary_trace(run(cfg, keep_records=True), 0.1)
    assert np.all(np.array(series) == 0.0) and avg == 0.0


def test_boundary_trace_bounded_by_strip_momentum(short_run):
    eps = 0.2
    series, _ = boundary_trace(short_run, eps)
    states = [short_run.initial] + [r.after for r in short_run.records]
    for value, cells in zip(series, states):
        strip = cells.edges[:-1] < 1.0 + eps
        m = np.abs(cells.omega[strip]) / np.minimum(cells.edges[1:][strip], 1 + eps) ** 0
        assert abs(value) <= np.max(m) * (1 + 1e-12)
    with pytest.raises(DomainError):
        boundary_trace(short_run, 0.05)


def test_streaming_matches_replay(short_run):
    obs = Diagnostics()
    traj = run(short_run.config, observers=[obs])
    rep = obs.finish()
    assert rep.consistency_sum == consistency_sum(short_run)
    assert rep.entropy_production["mechanical"] == entropy_production_total(short_run, MECHANICAL)
    r = rep.weak_residuals["standard"]
    assert (r["mass"], r["momentum"], r["entropy"]) == weak_residual(short_run, standard_bump(0.2))
    assert traj.final.step == short_run.final.step


def test_report_json_round_trip(short_run):
    obs = Diagnostics()
    run(short_run.config, observers=[obs])
    rep = obs.finish()
    back = DiagnosticsReport.from_json(rep.to_json())
    assert back.to_json() == rep.to_json()
    checks = evaluate_checks(rep)
    assert all(checks.values()), checks
    assert rep.ledger_residual == pytest.approx(0.0, abs=1e-13)
    bad = DiagnosticsReport.from_json(rep.to_json())
    bad.entropy_production["mechanical"] = -1.0
    assert not evaluate_checks(bad)["entropy_nonnegative"]


def test_reports_are_reproducible(short_run):
    texts = []
    for _ in range(2):
        obs = Diagnostics()
        run(short_run.config, observers=[obs])
        texts.append(obs.finish().to_json())
    assert texts[0] == texts[1]


def test_duplicate_trace_strips_are_merged():
    cfg = SchemeConfig(l=0.05, T=0.05, L_max=4.0, rho0=lambda x: 0.3 + 0.0 * x,
                       m0=lambda x: -0.1 + 0.0 * x)
    single, double = Diagnostics(trace_eps=(0.1,)), Diagnostics(trace_eps=(0.1, 0.1))
    run(cfg, observers=[single, double])
    a, b = single.finish().boundary_trace, double.finish().boundary_trace
    assert a == b
