import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import bisect_middle, midpoint_integral, random_pairs
from sphgrav.entropy import MECHANICAL, EntropyPair
from sphgrav.errors import DomainError
from sphgrav.riemann import (
    cell_average,
    entropy_production,
    jump_strengths,
    middle_state,
    rh_residual,
    sample,
    solve_batch,
    solve_boundary_riemann,
    solve_riemann,
    three_piece_variance,
)
from sphgrav.state import RegionTheta, State, in_region, riemann_invariants

GOLDEN_SQ = ((1 + math.sqrt(5)) / 2) ** 2
densities = st.floats(1e-4, 10.0)
velocities = st.floats(-5.0, 5.0)


def S(rho, u):
    return State.from_velocity(rho, u)


def test_constant_fan():
    fan = solve_riemann(S(1, 0), S(1, 0))
    assert fan.waves == ()
    assert fan.middle == State(1.0, 0.0)
    assert sample(fan, 0.3) == State(1.0, 0.0)


def test_symmetric_collision():
    fan = solve_riemann(S(1, 1), S(1, -1))
    assert [w.kind for w in fan.waves] == ["shock", "shock"]
    assert fan.middle.vrho == pytest.approx(GOLDEN_SQ, rel=1e-14)
    assert fan.middle.omega == pytest.approx(0.0, abs=1e-14)
    rho_o, u_o = bisect_middle(1.0, 1.0, 1.0, -1.0)
    assert float(rho_o) == pytest.approx(GOLDEN_SQ, rel=1e-13)
    assert float(u_o) == pytest.approx(0.0, abs=1e-13)
    s0 = sample(fan, 0.0)
    assert s0.vrho == pytest.approx(GOLDEN_SQ, rel=1e-14)
    assert jump_strengths(fan) == pytest.approx([GOLDEN_SQ - 1, GOLDEN_SQ - 1], rel=1e-13)


def test_double_rarefaction():
    fan = solve_riemann(S(1, -1), S(1, 1))
    assert [w.kind for w in fan.waves] == ["rarefaction", "rarefaction"]
    assert fan.middle.vrho == pytest.approx(math.exp(-1), rel=1e-15)
    assert fan.middle.omega == pytest.approx(0.0, abs=1e-15)
    assert jump_strengths(fan) == []


def test_boundary_examples():
    rest = solve_boundary_riemann(S(1, 0))
    assert rest.waves == () and rest.middle == State(1.0, 0.0)
    shock = solve_boundary_riemann(S(1, -1))
    assert [(w.family, w.kind) for w in shock.waves] == [(2, "shock")]
    assert shock.middle.vrho == pytest.approx(GOLDEN_SQ, rel=1e-14)
    assert shock.middle.omega == 0.0
    raref = solve_boundary_riemann(S(1, 1))
    assert [(w.family, w.kind) for w in raref.waves] == [(2, "rarefaction")]
    assert raref.middle.vrho == pytest.approx(math.exp(-1), rel=1e-15)
    with pytest.raises(DomainError):
        sample(raref, -0.1)


def test_rarefaction_interior_ray():
    # w_L = 0 for the state (1, 0); a 1-rarefaction towards lower density
    fan = solve_riemann(S(1, 0), S(math.exp(-2), 1.5))
    wave = fan.waves[0]
    assert wave.kind == "rarefaction" and wave.speed_lo < -0.5 < wave.speed_hi
    s = sample(fan, -0.5)
    assert s.velocity == pytest.approx(0.5, rel=1e-15)
    assert s.vrho == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_shock_ray_returns_right_limit():
    fan = solve_riemann(S(1, 1), S(1, -1))
    sigma = fan.waves[1].speed_lo
    assert sample(fan, sigma) == fan.right


def test_vacuum_rejected():
    with pytest.raises(DomainError):
        solve_riemann(State(0.0, 0.0), S(1, 0))
    with pytest.raises(DomainError):
        solve_boundary_riemann(State(0.0, 0.0))


def test_matches_bisection_oracle(rng):
    rl, ul, rr, ur = random_pairs(rng, 2000)
    rho_m, u_m, _ = middle_state(rl, ul, rr, ur)
    rho_o, u_o = bisect_middle(rl, ul, rr, ur)
    assert np.max(np.abs(u_m - u_o)) <= 1e-9
    np.testing.assert_allclose(rho_m, rho_o, rtol=1e-9)


@given(densities, velocities, densities, velocities)
def test_fan_structure(rl, ul, rr, ur):
    b = solve_batch(rl, rl * ul, rr, rr * ur)
    assert b.rho_m > 0.0
    assert b.s1_lo <= b.s1_hi <= b.s2_lo <= b.s2_hi
    fan = b.fan(0)
    for w in fan.shocks:
        r1, r2 = rh_residual(w.left_state, w.right_state, w.speed_lo)
        assert abs(r1) <= 1e-8 and abs(r2) <= 1e-8
        assert entropy_production(w.left_state, w.right_state, w.speed_lo, MECHANICAL) >= -1e-10


@given(densities, velocities, densities, velocities, st.floats(-8, 8), st.floats(0.01, 100))
def test_self_similarity(rl, ul, rr, ur, xi, t):
    fan = solve_riemann(S(rl, ul), S(rr, ur))
    dx = xi * t
    assert sample(fan, dx / t) == sample(fan, (2 * dx) / (2 * t))


@given(densities, velocities, densities, velocities)
def test_invariant_region_of_samples(rl, ul, rr, ur):
    fan = solve_riemann(S(rl, ul), S(rr, ur))
    il, ir = riemann_invariants(fan.left), riemann_invariants(fan.right)
    theta = RegionTheta(max(il.w, ir.w), min(il.z, ir.z))
    for xi in np.linspace(-7, 7, 64):
        assert in_region(sample(fan, xi), theta, tol=1e-9)


@given(densities, velocities)
def test_boundary_invariant_region(rr, ur):
    fan = solve_boundary_riemann(S(rr, ur))
    ir = riemann_invariants(fan.right)
    theta = RegionTheta(max(ir.w, -ir.z), min(0.0, ir.z))
    for xi in np.linspace(0, 7, 64):
        assert in_region(sample(fan, xi), theta, tol=1e-9)


def test_cell_average_examples():
    const = solve_riemann(S(2, 0.5), S(2, 0.5))
    assert cell_average(const, -1.0, 2.0, 0.3) == S(2, 0.5)
    coll = solve_riemann(S(1, 1), S(1, -1))
    avg = cell_average(coll, -1.0, 1.0, 0.5)
    assert avg.omega == pytest.approx(0.0, abs=1e-15)


def _fan_integral(fan, a, b, t):
    """Midpoint rule on each smooth piece; pieces end at the wave-front positions."""
    x0 = fan.origin[0]

    def integrand(x):
        vals = [sample(fan, (xx - x0) / t) for xx in x]
        return np.array([[s.vrho for s in vals], [s.omega for s in vals]])

    fronts = sorted({x0 + t * v for w in fan.waves for v in (w.speed_lo, w.speed_hi)})
    knots = [a] + [f for f in fronts if a < f < b] + [b]
    return sum(midpoint_integral(integrand, lo, hi) for lo, hi in zip(knots[:-1], knots[1:]))


@pytest.mark.parametrize("left,right", [((1, 1), (1, -1)), ((1, -1), (1, 1)), ((0.3, 2.0), (4.0, -1.0)),
                                        ((2.0, -0.5), (0.01, 3.0))])
def test_cell_average_matches_quadrature(left, right):
    fan = solve_riemann(S(*left), S(*right), origin=(0.4, 0.0))
    t = 0.7
    lo, hi = fan.speed_range
    a, b = 0.4 + t * lo - 0.3, 0.4 + t * hi + 0.2
    avg = cell_average(fan, a, b, t)
    ref = _fan_integral(fan, a, b, t)
    assert (b - a) * avg.vrho == pytest.approx(ref[0], rel=1e-6)
    assert (b - a) * avg.omega == pytest.approx(ref[1], rel=1e-6, abs=1e-6)


def test_cell_average_at_center_edge():
    fan = solve_riemann(S(1, 1), S(1, -1), origin=(0.0, 0.0))
    t = 0.5
    avg = cell_average(fan, 0.0, 1.0, t)
    ref = _fan_integral(fan, 0.0, 1.0, t)
    assert avg.vrho == pytest.approx(ref[0], rel=1e-6)


def test_boundary_cell_average():
    fan = solve_boundary_riemann(S(1, -1), origin=(1.0, 0.0))
    avg = cell_average(fan, 1.0, 2.0, 0.5)
    ref = _fan_integral(fan, 1.0, 2.0, 0.5)
    assert avg.vrho == pytest.approx(ref[0], rel=1e-6)
    assert avg.omega == pytest.approx(ref[1], rel=1e-6)
    with pytest.raises(DomainError):
        cell_average(fan, 0.5, 2.0, 0.5)


def test_cell_average_precondition():
    fan = solve_riemann(S(1, 1), S(1, -1))
    with pytest.raises(DomainError):
        cell_average(fan, -0.1, 2.0, 1.0)
    with pytest.raises(DomainError):
        cell_average(fan, 1.0, 0.5, 1.0)


@given(densities, velocities, densities, velocities)
def test_averaging_preserves_region(rl, ul, rr, ur):
    fan = solve_riemann(S(rl, ul), S(rr, ur))
    il, ir = riemann_invariants(fan.left), riemann_invariants(fan.right)
    theta = RegionTheta(max(il.w, ir.w), min(il.z, ir.z))
    lo, hi = fan.speed_range or (0.0, 0.0)
    avg = cell_average(fan, min(lo, 0.0) - 0.25, max(hi, 0.0) + 0.5, 1.0)
    assert in_region(avg, theta, tol=1e-9)


def test_rh_examples():
    assert rh_residual(S(1.3, 0.2), S(1.3, 0.2), 7.0) == (0.0, 0.0)
    assert rh_residual(State(1.0, 0.0), State(2.0, 0.0), 0.0) == (0.0, -1.0)


def test_entropy_production_examples():
    s = S(0.7, 0.1)
    assert entropy_production(s, s, 0.3, MECHANICAL) == 0.0
    fan = solve_riemann(S(1, 1), S(1, -1))
    w = fan.waves[0]
    forward = entropy_production(w.left_state, w.right_state, w.speed_lo, MECHANICAL)
    backward = entropy_production(w.right_state, w.left_state, w.speed_lo, MECHANICAL)
    assert forward > 0.0
    assert backward < 0.0
    for xi in (0.1, -0.1, 0.3, -0.3, 0.49, -0.49):
        assert entropy_production(w.left_state, w.right_state, w.speed_lo, EntropyPair(xi)) >= -1e-10


def test_three_piece_examples():
    assert three_piece_variance(0.4, 0.4, 0.4, 1, 2, 3) == pytest.approx(0.0, abs=1e-15)
    assert three_piece_variance(0, 0, 1, 1, 1, 1) == pytest.approx(2 / 3, rel=1e-15)
    with pytest.raises(DomainError):
        three_piece_variance(0, 0, 1, 1, -1, 1)
    with pytest.raises(DomainError):
        three_piece_variance(0, 0, 1, 0, 0, 0)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10),
       st.floats(0, 5), st.floats(0, 5), st.floats(0, 5))
def test_three_piece_direct_sum(gl, gm, gr, l1, l2, l3):
    assume(l1 + l2 + l3 > 1e-3)
    mean = (l1 * gl + l2 * gm + l3 * gr) / (l1 + l2 + l3)
    direct = l1 * (gl - mean) ** 2 + l2 * (gm - mean) ** 2 + l3 * (gr - mean) ** 2
    scale = (l1 + l2 + l3) * max(abs(gl), abs(gm), abs(gr), 1.0) ** 2
    assert three_piece_variance(gl, gm, gr, l1, l2, l3) == pytest.approx(direct, abs=1e-12 * scale)
