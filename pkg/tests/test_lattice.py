import cmath
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sequivlab.errors import NormalizationError
from sequivlab.lattice import (L_BASE, L_PRIME, NORMALIZATIONS, KernelSpec, compose,
                               convergence_study, euclidean_lagrangian, fit_order, free_kernel,
                               heat_kernel, implied_ground_energy, one_step_matrix, step_kernel)
from sequivlab.models import EUCLIDEAN, REAL_TIME, GridSpec, PotentialModel
from sequivlab.quantum import build_hamiltonian, spectral_propagator

V0 = PotentialModel.constant(0.0)
HARM = PotentialModel.harmonic(1.0)
HARM1 = PotentialModel.harmonic(1.0, shift=1.0)
WIDE = GridSpec(-20, 20, 512, "periodic")
BOX = GridSpec(-10, 10, 256, "periodic")


@settings(max_examples=100, deadline=None)
@given(dt=st.floats(1e-3, 10), x=st.floats(-50, 50), xp=st.floats(-50, 50))
def test_free_kernel_modulus(dt, x, xp):
    assert abs(free_kernel(dt, x, xp)) == pytest.approx((2 * math.pi * dt) ** -0.5, rel=1e-13)


def test_free_kernel_phase_on_diagonal():
    assert cmath.phase(free_kernel(0.3, 1.2, 1.2)) == pytest.approx(-math.pi / 4, abs=1e-15)


@pytest.mark.parametrize("kernel,dt", [(heat_kernel, 0.25), (free_kernel, 0.25 * (1 - 0.1j))])
def test_semigroup(kernel, dt):
    x = WIDE.points
    K = kernel(dt, x[None, :], x[:, None])
    two = K @ K * WIDE.dx
    one = kernel(2 * dt, x[None, :], x[:, None])
    m = np.abs(x) <= 10
    assert np.max(np.abs(two - one)[np.ix_(m, m)]) <= 1e-6


def test_base_kernel_reduces_to_free_kernel():
    spec = KernelSpec(L_BASE, V0, 0.2, REAL_TIME, epsilon=0.0)
    x, xp = np.array([0.0, 1.0, -2.0]), np.array([0.5, 0.0, -1.0])
    assert np.allclose(step_kernel(spec, x, xp), free_kernel(0.2, x, xp), rtol=1e-14)
    e = KernelSpec(L_BASE, V0, 0.2, EUCLIDEAN)
    assert np.allclose(step_kernel(e, x, xp), heat_kernel(0.2, x, xp), rtol=1e-14)


def test_base_kernel_potential_phase():
    spec = KernelSpec(L_BASE, HARM, 0.2, REAL_TIME, epsilon=0.0)
    x, xp = 0.4, 1.0
    expected = free_kernel(0.2, x, xp) * cmath.exp(-1j * HARM(0.7) * 0.2)
    assert step_kernel(spec, x, xp) == pytest.approx(expected, rel=1e-13)
    left = replace(spec, potential_point="left")
    assert step_kernel(left, x, xp) == pytest.approx(
        free_kernel(0.2, x, xp) * cmath.exp(-1j * HARM(0.4) * 0.2), rel=1e-13)


def test_prime_kernel_rest_exponent():
    dt = 0.1
    spec = KernelSpec(L_PRIME, HARM1, dt, REAL_TIME, epsilon=0.0)
    k = step_kernel(spec, 0.5, 0.5)
    expected = (2j * math.pi * dt) ** -0.5 * cmath.exp(1j * (-0.5 * HARM1(0.5) ** 2) * dt)
    assert k == pytest.approx(expected, rel=1e-13)


def test_euclidean_lagrangians():
    assert euclidean_lagrangian(L_BASE, 2.0, 3.0) == pytest.approx(6.5)
    assert euclidean_lagrangian(L_PRIME, 2.0, 2.0) == pytest.approx(16 / 24 + 4 + 2)


def test_stationary_phase_and_calibration_for_base():
    # d2L/dv2 = 1, so all three normalisations coincide up to quadrature error
    values = [step_kernel(KernelSpec(L_BASE, HARM, 0.1, EUCLIDEAN, norm), 0.0, 0.3, BOX)
              for norm in NORMALIZATIONS]
    assert values[1] == pytest.approx(values[0], rel=1e-14)
    assert values[2] == pytest.approx(values[0], rel=1e-10)


def test_calibrated_columns_have_unit_kinetic_mass():
    spec = KernelSpec(L_PRIME, HARM1, 0.1, EUCLIDEAN, "column-sum-calibrated")
    K = one_step_matrix(spec, BOX)
    Vx = HARM1(BOX.points + 0.5 * BOX.displacement(BOX.points[None, :], BOX.points[:, None]))
    kinetic = K * np.exp(0.5 * Vx**2 * 0.1)
    # in the calibrated kernel the rest factor is divided back out per entry
    assert np.allclose(np.sum(kinetic, axis=0) * BOX.dx, 1.0, rtol=1e-12)


def test_stationary_phase_requires_positive_hessian():
    spec = KernelSpec(L_PRIME, PotentialModel.constant(-1.0), 0.1, EUCLIDEAN, "stationary-phase")
    with pytest.raises(NormalizationError):
        step_kernel(spec, 0.0, 0.0)


def test_literal_printed_kernel():
    spec = KernelSpec(L_BASE, HARM, 0.25, REAL_TIME, epsilon=0.0, literal_printed=True)
    x, xp = 0.0, 0.3
    expected = (2j * math.pi * 0.25) ** 0.5 * cmath.exp(1j * ((xp - x) / 0.25) ** 2 * 0.25
                                                         - 1j * HARM(0.15) * 0.25)
    assert step_kernel(spec, x, xp) == pytest.approx(expected, rel=1e-13)
    with pytest.raises(ValueError):
        KernelSpec(L_PRIME, HARM, 0.25, literal_printed=True)


def test_spec_validation():
    for kwargs in ({"lagrangian": "L-other"}, {"mode": "imaginary"}, {"normalization": "none"},
                   {"potential_point": "right"}, {"dt": 0.0}, {"epsilon": -1.0}):
        args = dict(lagrangian=L_BASE, V=HARM, dt=0.1)
        args.update(kwargs)
        with pytest.raises(ValueError):
            KernelSpec(**args)


def test_compose_small_cases():
    spec = KernelSpec(L_BASE, HARM, 0.1, EUCLIDEAN)
    A0 = compose(spec, BOX, 0)
    assert np.allclose(A0.matrix, np.eye(BOX.n_points) / BOX.dx)
    A1 = compose(spec, BOX, 1)
    assert np.allclose(A1.matrix, one_step_matrix(spec, BOX))
    assert A1.source == "lattice-L"
    with pytest.raises(ValueError):
        compose(spec, BOX, -1)


def test_real_time_free_composition():
    spec = KernelSpec(L_BASE, V0, 0.125, REAL_TIME, epsilon=0.1)
    A4 = compose(spec, WIDE, 4)
    A1 = compose(replace(spec, dt=0.5), WIDE, 1)
    m = WIDE.interior_mask(0.5)
    assert A4.reliable
    assert np.max(np.abs(A4.matrix - A1.matrix)[np.ix_(m, m)]) <= 1e-6


def test_unregulated_real_time_is_flagged():
    spec = KernelSpec(L_BASE, V0, 0.125, REAL_TIME, epsilon=0.0)
    assert not compose(spec, WIDE, 4).reliable


def test_boundary_monitor_flags_narrow_box():
    spec = KernelSpec(L_BASE, V0, 0.5, EUCLIDEAN)
    amp = compose(spec, GridSpec(-3, 3, 64, "periodic"), 8)
    assert not amp.reliable
    assert amp.boundary_mass > 1e-3


def test_implied_ground_energy():
    g = GridSpec(-10, 10, 512)
    spec = KernelSpec(L_BASE, HARM, 5 / 64, EUCLIDEAN)
    amp = compose(spec, g, 64)
    assert implied_ground_energy(amp) == pytest.approx(0.5, rel=0.02)
    # the trace estimate also carries the excited states
    assert implied_ground_energy(amp, "trace") < implied_ground_energy(amp)
    with pytest.raises(ValueError):
        implied_ground_energy(compose(replace(spec, mode=REAL_TIME), g, 1))


def test_fit_order():
    n = [8, 16, 32, 64]
    order, note = fit_order(n, [1 / k for k in n])
    assert order == pytest.approx(1.0) and note == "ok"
    assert fit_order(n, [1e-13, 1.1e-13, 0.9e-13, 1e-13])[0] is None
    assert fit_order(n, [1.0, 0.1, 0.5, 0.01])[1].startswith("non-monotone")
    assert fit_order(n, [1.0, np.nan, 0.1, 0.01])[0] is None


def test_base_euclidean_convergence_first_order():
    spec = KernelSpec(L_BASE, HARM, 0.125, EUCLIDEAN)
    ref = spectral_propagator(build_hamiltonian(HARM, BOX), 1.0, EUCLIDEAN)
    res = convergence_study(spec, BOX, ref, [8, 16, 32, 64])
    assert 0.8 <= res.order <= 1.2
    assert all(res.reliable)
    assert res.table()[0]["reference"] == "spectral-H"


def test_free_convergence_is_flat():
    spec = KernelSpec(L_BASE, V0, 0.1, EUCLIDEAN)
    ref = spectral_propagator(build_hamiltonian(V0, BOX), 1.0, EUCLIDEAN)
    res = convergence_study(spec, BOX, ref, [8, 16, 32, 64])
    assert max(res.errors) <= 1e-10
    assert res.order is None


def test_convergence_study_checks_inputs():
    spec = KernelSpec(L_BASE, HARM, 0.1, EUCLIDEAN)
    ref = spectral_propagator(build_hamiltonian(HARM, BOX), 1.0, REAL_TIME)
    with pytest.raises(ValueError):
        convergence_study(spec, BOX, ref, [8])
    other = spectral_propagator(build_hamiltonian(HARM, WIDE), 1.0, EUCLIDEAN)
    with pytest.raises(ValueError):
        convergence_study(spec, BOX, other, [8])


def test_prime_lattice_produces_tables_against_each_reference():
    from sequivlab.quantum import build_hprime_ordered, build_hprime_spectral
    g = GridSpec(-8, 8, 96, "periodic")
    H = build_hamiltonian(HARM1, g)
    refs = [H, build_hprime_spectral(H), build_hprime_ordered(HARM1, g)]
    for norm in NORMALIZATIONS:
        spec = KernelSpec(L_PRIME, HARM1, 0.25, EUCLIDEAN, norm)
        for op in refs:
            res = convergence_study(spec, g, spectral_propagator(op, 1.0, EUCLIDEAN), [4, 8])
            assert len(res.errors) == 2 and all(np.isfinite(res.errors))
