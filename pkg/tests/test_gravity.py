import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sphgrav.errors import DomainError
from sphgrav.gravity import (
    potential_gradient,
    prefix_mass,
    source_arrays,
    source_term,
    total_mass,
    unit_ball_volume,
    weighted_mass,
)
from sphgrav.state import State


@dataclass
class Cells:
    edges: np.ndarray
    vrho: np.ndarray


def uniform(n, width, value, start=1.0):
    return Cells(start + width * np.arange(n + 1), np.full(n, float(value)))


def test_unit_ball_volume():
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)


def test_prefix_examples():
    pm = prefix_mass(Cells(np.array([1.0, 1.5]), np.array([2.0])))
    assert pm.at(1.5) == 1.0
    zero = prefix_mass(uniform(5, 0.2, 0.0))
    np.testing.assert_array_equal(zero.cumulative, 0.0)
    with pytest.raises(DomainError):
        pm.at(0.5)


def test_prefix_matches_direct_sum(rng):
    widths = rng.uniform(0.01, 0.3, 400)
    cells = Cells(1.0 + np.concatenate(([0.0], np.cumsum(widths))), rng.uniform(0, 5, 400))
    direct = math.fsum(v * w for v, w in zip(cells.vrho, widths))
    assert prefix_mass(cells).total == pytest.approx(direct, rel=1e-12)


def test_source_examples():
    assert source_term(State(0.0, 0.0), 1.7, 0.3, 3) == (0.0, 0.0)
    assert source_term(State(4.0, 0.0), 2.0, 0.0, 3) == (0.0, 4.0)
    x, N = 2.5, 4
    assert source_term(State(3.0, 1.0), x, (N - 1) * x ** (N - 2), N)[1] == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DomainError):
        source_term(State(1.0, 0.0), 0.9, 0.0, 3)


@given(st.floats(0, 10), st.floats(-10, 10), st.floats(1, 20), st.floats(0, 100), st.integers(2, 5))
def test_source_never_changes_density(v, o, x, prefix, N):
    assert source_term(State(v, o), x, prefix, N)[0] == 0.0


def test_potential_gradient_examples():
    cells = uniform(10, 0.1, 1.0)
    assert potential_gradient(cells, 1.0, 3) == 0.0
    assert potential_gradient(cells, 2.0, 3) == pytest.approx(-0.25, rel=1e-14)
    assert potential_gradient(uniform(10, 0.1, 0.0), 1.6, 3) == 0.0


@given(arrays(float, 20, elements=st.floats(0, 10)), st.floats(1.0, 3.0))
def test_gravity_pulls_inward(vrho, x):
    assert potential_gradient(Cells(1.0 + 0.1 * np.arange(21), vrho), x, 3) <= 0.0


@given(arrays(float, 20, elements=st.floats(0, 10)), st.integers(0, 19), st.floats(0, 5))
def test_prefix_is_lipschitz(vrho, j, delta):
    edges = 1.0 + 0.1 * np.arange(21)
    base = prefix_mass(Cells(edges, vrho)).cumulative
    bumped = vrho.copy()
    bumped[j] += delta
    moved = prefix_mass(Cells(edges, bumped)).cumulative
    assert np.all(np.abs(moved - base) <= delta * 0.1 * (1 + 1e-12) + 1e-12)


def test_total_mass_examples():
    K, l = 37, 0.05
    assert total_mass(uniform(K, l, 1.0), 3) == pytest.approx(4 * math.pi / 3 * K * l, rel=1e-13)
    assert total_mass(Cells(np.array([1.0]), np.array([])), 3) == 0.0


def test_total_mass_agrees_with_prefix(rng):
    cells = Cells(np.sort(rng.uniform(1, 9, 301)), rng.uniform(0, 2, 300))
    assert total_mass(cells, 3) == pytest.approx(prefix_mass(cells).total * unit_ball_volume(3), rel=1e-12)
    assert weighted_mass(cells) == pytest.approx(prefix_mass(cells).total, rel=1e-12)


def test_source_arrays_broadcasts():
    g = source_arrays(np.array([1.0, 2.0]), np.array([1.0, 2.0]), np.array([0.0, 4.0]), 3)
    np.testing.assert_allclose(g, [2.0, 2.0 * (1.0 - 1.0)])
