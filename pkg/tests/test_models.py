import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sequivlab.errors import OutOfDomainError, PreconditionError, UnboundedPotentialError
from sequivlab.models import (HALF_SQUARE, IDENTITY, GridSpec, PhasePoint, PotentialModel,
                              SigmaMap, TimeLattice, eval_potential, shift_to_positive,
                              sigma_eval_and_derivative)


def test_harmonic_value():
    assert eval_potential(PotentialModel.harmonic(1.0), 2.0) == pytest.approx(2.0)


def test_constant_value():
    assert eval_potential(PotentialModel.constant(3.0), -17.0) == 3.0


def test_tabulated_out_of_domain():
    xs = np.linspace(-1, 1, 11)
    V = PotentialModel.tabulated(xs, xs**2)
    assert V(0.5) == pytest.approx(0.25, abs=1e-3)
    with pytest.raises(OutOfDomainError):
        V(2.0)


def test_tabulated_validation():
    with pytest.raises(ValueError):
        PotentialModel.tabulated([0, 1, 2], [0, 1, 2])
    with pytest.raises(ValueError):
        PotentialModel.tabulated([0, 2, 1, 3], [0, 1, 2, 3])


def test_unknown_kind_and_bad_lambda():
    with pytest.raises(ValueError):
        PotentialModel("cubic")
    with pytest.raises(ValueError):
        PotentialModel.quartic_well(-1.0)


def test_non_finite_input_rejected():
    with pytest.raises(ValueError):
        eval_potential(PotentialModel.harmonic(), np.array([0.0, np.nan]))


def test_derivatives_match_finite_differences():
    h = 1e-5
    for V in (PotentialModel.harmonic(1.3), PotentialModel.quartic_well(0.7),
              PotentialModel.shifted_harmonic(2.0, -1.0), PotentialModel.constant(4.0)):
        x = 0.37
        fd = (V(x + h) - V(x - h)) / (2 * h)
        assert V.derivative(x) == pytest.approx(fd, abs=1e-6)


def test_shift_quartic_double_well():
    # x^2 - 1 tabulated finely enough for the spline to be exact
    xs = np.linspace(-2, 2, 81)
    V = PotentialModel.tabulated(xs, xs**2 - 1)
    W = shift_to_positive(V, GridSpec(-2, 2, 401), 0.5)
    assert W.shift == pytest.approx(1.5, abs=1e-9)
    assert W(0.0) == pytest.approx(0.5, abs=1e-9)


def test_shift_harmonic_margin():
    W = shift_to_positive(PotentialModel.harmonic(), GridSpec(-5, 5, 101), 0.1)
    assert W.shift == pytest.approx(0.1, abs=1e-12)


def test_shift_finds_minimum_between_nodes():
    # even node count: no node at 0, the refinement must still find V=0
    W = shift_to_positive(PotentialModel.harmonic(), GridSpec(-5, 5, 100), 0.1)
    assert W(0.0) == pytest.approx(0.1, abs=1e-10)


def test_shift_already_positive_is_noop():
    V = PotentialModel.harmonic(shift=2.0)
    assert shift_to_positive(V, GridSpec(-5, 5, 101), 1.0) is V


def test_shift_rejects_unbounded():
    V = PotentialModel.shifted_harmonic(1.0, 0.0)
    xs = np.linspace(-3, 3, 61)
    down = PotentialModel.tabulated(xs, -xs)
    with pytest.raises(UnboundedPotentialError):
        shift_to_positive(down, GridSpec(-3, 3, 61), 1.0)
    assert shift_to_positive(V, GridSpec(-3, 3, 61), 1.0)(0.0) == pytest.approx(1.0)


def test_shift_needs_positive_margin():
    with pytest.raises(PreconditionError):
        shift_to_positive(PotentialModel.harmonic(), GridSpec(-1, 1, 11), 0.0)


@settings(max_examples=40, deadline=None)
@given(omega=st.floats(0.1, 3.0), c0=st.floats(-5, 5), margin=st.floats(0.01, 3.0))
def test_shift_idempotent(omega, c0, margin):
    grid = GridSpec(-4, 4, 81)
    V = PotentialModel.shifted_harmonic(omega, c0)
    once = shift_to_positive(V, grid, margin)
    twice = shift_to_positive(once, grid, margin)
    assert twice.shift == once.shift
    assert np.min(once(grid.points)) >= margin - 1e-9


def test_sigma_maps():
    assert sigma_eval_and_derivative(HALF_SQUARE, 3.0) == (4.5, 3.0)
    assert sigma_eval_and_derivative(IDENTITY, 7.0) == (7.0, 1.0)
    assert sigma_eval_and_derivative(HALF_SQUARE, 0.0) == (0.0, 0.0)
    assert SigmaMap("identity-affine", 2.0, 1.0)(3.0) == 7.0
    with pytest.raises(ValueError):
        SigmaMap("cubic")


def test_phase_point_and_time_lattice():
    with pytest.raises(ValueError):
        PhasePoint(math.inf, 0.0)
    assert TimeLattice(1.0, 8).dt == 0.125
    with pytest.raises(ValueError):
        TimeLattice(1.0, 0)
    with pytest.raises(ValueError):
        TimeLattice(1.0, 4, "imaginary")


def test_grid_geometry():
    g = GridSpec(-1, 1, 11)
    assert g.dx == pytest.approx(0.2)
    assert g.points[0] == -1 and g.points[-1] == pytest.approx(1)
    assert g.nearest_index(0.01) == 5
    assert g.interior_mask(0.5).sum() == 5
    p = GridSpec(-1, 1, 11, "periodic")
    assert p.length == pytest.approx(2.2)
    # minimum image across the seam
    assert p.displacement(1.0, -1.0) == pytest.approx(0.2)
    assert g.displacement(1.0, -1.0) == pytest.approx(-2.0)
    with pytest.raises(ValueError):
        GridSpec(1, -1, 11)
    with pytest.raises(ValueError):
        GridSpec(-1, 1, 4)
    with pytest.raises(ValueError):
        GridSpec(-1, 1, 11, "open")
