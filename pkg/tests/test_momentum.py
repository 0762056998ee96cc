import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from sequivlab.errors import OutOfDomainError, PreconditionError
from sequivlab.models import PotentialModel
from sequivlab.momentum import (ASYMPTOTIC, HPRIME_SERIES_COEFFICIENTS, MomentumMap,
                                asymptotic_hprime, asymptotic_velocity, cardano_velocity,
                                conjugate_momentum, exact_hprime, hprime_series, invert_momentum,
                                log_approx_coefficients, log_approx_velocity, pde_residual,
                                power_law_pde_residual, series_coefficients, series_velocity)


def _reverted_series(order=7):
    """Velocity as a series in y = p/V via sympy, coefficients of y^(2k+1) V^-k."""
    y, V, v = sp.symbols("y V v", positive=True)
    # p = v^3/6 + v V  with p = y V; iterate the fixed point v = y - v^3/(6V)
    approx = y
    for _ in range(order):
        approx = sp.series(y - approx**3 / (6 * V), y, 0, order + 1).removeO()
    poly = sp.Poly(sp.expand(approx), y)
    return [sp.nsimplify(poly.coeff_monomial(y ** (2 * k + 1)) * V**k) for k in range(4)]


def test_series_coefficients_match_symbolic_reversion():
    coeffs = _reverted_series()
    assert [Fraction(int(c.p), int(c.q)) for c in coeffs] == list(series_coefficients())


def test_log_approximant_coefficients_symbolic():
    y, V = sp.symbols("y V", positive=True)
    expr = y * (1 + sp.log(1 - y**2 / V) / 6)
    ser = sp.Poly(sp.series(expr, y, 0, 8).removeO(), y)
    got = [sp.nsimplify(ser.coeff_monomial(y ** (2 * k + 1)) * V**k) for k in range(4)]
    assert [Fraction(int(c.p), int(c.q)) for c in got] == list(log_approx_coefficients())
    # third order agrees, fifth order has opposite sign
    assert log_approx_coefficients()[1] == series_coefficients()[1]
    assert log_approx_coefficients()[2] == -series_coefficients()[2]


def test_hprime_series_symbolic():
    p, V = sp.symbols("p V", positive=True)
    y = p / V
    v = sum(sp.Rational(c.numerator, c.denominator) * y ** (2 * k + 1) / V**k
            for k, c in enumerate(series_coefficients()))
    Hp = sp.series(sp.Rational(1, 2) * (v**2 / 2 + V) ** 2, p, 0, 5).removeO()
    poly = sp.Poly(sp.expand(Hp), p)
    assert sp.simplify(poly.coeff_monomial(1) - V**2 / 2) == 0
    assert sp.simplify(poly.coeff_monomial(p**2) - 1 / (2 * V)) == 0
    assert sp.simplify(poly.coeff_monomial(p**4) + 1 / (24 * V**4)) == 0
    assert HPRIME_SERIES_COEFFICIENTS == (Fraction(1, 2), Fraction(1, 2), Fraction(-1, 24))


def test_forward_map():
    assert conjugate_momentum(0.0, 1.0, 1.0) == pytest.approx(7 / 6)
    assert conjugate_momentum(0.0, 0.0, 5.0) == 0.0
    assert conjugate_momentum(0.0, 2.0, 0.5) == pytest.approx(7 / 3)
    M = MomentumMap(PotentialModel.harmonic(1.0, 1.0))
    assert M.invert(0.5, M.forward(0.5, 1.7)) == pytest.approx(1.7, rel=1e-14)


def test_inverse_examples():
    assert invert_momentum(0.0, 2.0) == 0.0
    assert invert_momentum(7 / 6, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert invert_momentum(1e6, 1.0) == pytest.approx((6e6) ** (1 / 3), rel=1e-3)
    assert cardano_velocity(7 / 6, 1.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        invert_momentum(1.0, 0.0)
    with pytest.raises(PreconditionError):
        invert_momentum(1.0, -1.0)


def test_inverse_against_numpy_roots():
    for p, V in [(0.3, 1.0), (12.0, 0.2), (-4.0, 3.0), (1e4, 7.0)]:
        roots = np.roots([1 / 6, 0, V, -p])
        real = roots[np.abs(roots.imag) < 1e-9].real
        assert invert_momentum(p, V) == pytest.approx(real[0], rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(p=st.floats(-1e6, 1e6), V=st.floats(1e-2, 1e2))
def test_roundtrip_and_oddness(p, V):
    v = invert_momentum(p, V)
    assert abs(conjugate_momentum(0.0, v, V) - p) <= 1e-12 * (1 + abs(p))
    assert invert_momentum(-p, V) == -v


@settings(max_examples=100, deadline=None)
@given(p1=st.floats(-1e3, 1e3), p2=st.floats(-1e3, 1e3), V=st.floats(0.1, 10))
def test_inverse_monotone(p1, p2, V):
    if p1 < p2:
        assert invert_momentum(p1, V) <= invert_momentum(p2, V)


def test_series_examples():
    assert series_velocity(0.0, 3.0) == 0.0
    assert series_velocity(0.1, 1.0, 3) == pytest.approx(0.1 - 0.1**3 / 6)
    r1 = series_velocity(0.1, 1.0) - invert_momentum(0.1, 1.0)
    r2 = series_velocity(0.05, 1.0) - invert_momentum(0.05, 1.0)
    assert math.log2(abs(r1 / r2)) == pytest.approx(9, abs=0.5)
    with pytest.raises(ValueError):
        series_velocity(0.1, 1.0, 4)


def test_log_approximant():
    assert log_approx_velocity(0.0, 1.0) == 0.0
    assert log_approx_velocity(0.1, 1.0) - series_velocity(0.1, 1.0, 3) == pytest.approx(
        -0.1**5 / 12, rel=1e-2)
    with pytest.raises(OutOfDomainError):
        log_approx_velocity(1.0, 1.0)


def test_hprime_series_residual_order():
    assert hprime_series(0.0, 2.0) == 2.0
    r1 = exact_hprime(0.2, 1.0) - hprime_series(0.2, 1.0)
    r2 = exact_hprime(0.1, 1.0) - hprime_series(0.1, 1.0)
    assert math.log2(abs(r1 / r2)) == pytest.approx(6, abs=0.5)


def test_pde_residual():
    assert abs(pde_residual(1.0, 1.0, 1e-3)) <= 1e-5
    ratio = pde_residual(1.0, 1.0, 0.01) / pde_residual(1.0, 1.0, 0.005)
    assert ratio == pytest.approx(4, abs=0.5)
    with pytest.raises(ValueError):
        pde_residual(1.0, 1.0, 0.0)


def test_power_law_solution():
    assert ASYMPTOTIC.balance_defect() == pytest.approx(0.0, abs=1e-15)
    A = ASYMPTOTIC.hprime_coefficient
    assert (4 / 9) * A == pytest.approx(2**-0.5 * A**-0.5, rel=1e-14)
    assert abs(power_law_pde_residual(100.0)) <= 1e-10
    # the analytic second derivative agrees with a wide-step difference
    h = 1.0
    f = ASYMPTOTIC.leading_hprime
    fd = (f(100 + h) - 2 * f(100) + f(100 - h)) / h**2
    assert fd == pytest.approx(ASYMPTOTIC.leading_hprime_d2(100.0), rel=1e-4)


def test_asymptotic_velocity():
    assert asymptotic_velocity(1e3, 1.0) == pytest.approx(invert_momentum(1e3, 1.0), rel=1e-3)
    assert asymptotic_velocity(5.0, 0.0) == (30.0) ** (1 / 3)
    assert asymptotic_velocity(-1e3, 1.0) == -asymptotic_velocity(1e3, 1.0)
    with pytest.raises(ValueError):
        asymptotic_velocity(0.0, 1.0)


def test_asymptotic_hprime_variants():
    lead = asymptotic_hprime(32 / 81, 0.0).derived
    assert lead == pytest.approx(32 / 81, rel=1e-14)
    p = 1e4
    both = asymptotic_hprime(p, 1.0)
    exact = exact_hprime(p, 1.0)
    # derived form is off by O(1); the printed one by O(p^(2/3))
    assert abs(exact - both.derived) < 2.0
    assert abs(exact - both.printed) > 0.4 * p ** (2 / 3)
    assert ASYMPTOTIC.printed_correction == pytest.approx(math.sqrt(4.5))
    assert ASYMPTOTIC.derived_correction == pytest.approx(4.5 ** (1 / 3))
