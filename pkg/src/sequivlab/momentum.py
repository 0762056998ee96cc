"""Conjugate momentum of the worked alternative Lagrangian and its inversions.

For L' = v^4/24 + v^2 V/2 - V^2/2 the momentum is p = v^3/6 + v V, a cubic
in v. With V > 0 the cubic is strictly increasing, so it has a single real
root; the functions below compute that root exactly and through the small-p
series, the logarithmic approximant and the large-p asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import OutOfDomainError, PreconditionError
from .models import PotentialModel

# v = sum_k a_k (p/V)^(2k+1) V^(-k)
SERIES_COEFFICIENTS = (Fraction(1), Fraction(-1, 6), Fraction(1, 12), Fraction(-1, 18))

# H' = c0 V^2 + c1 p^2/V + c2 p^4/V^4
HPRIME_SERIES_COEFFICIENTS = (Fraction(1, 2), Fraction(1, 2), Fraction(-1, 24))

_SERIES_REGIME = 0.1
_ASYMPTOTIC_REGIME = 10.0


def _potential_value(V, x):
    return V(x) if isinstance(V, PotentialModel) else V


def conjugate_momentum(x, v, V):
    """p' = v^3/6 + v V(x). ``V`` is a PotentialModel or the value V(x)."""
    Vx = _potential_value(V, x)
    return v**3 / 6 + v * Vx


def _cardano_scaled(s):
    # w^3/6 + w = s with s >= 0; product of the two cube roots is -2
    u = np.cbrt(3 * s + np.sqrt(9 * s * s + 8))
    return u - 2 / u


def _solve_scaled(s, tol=1e-14, max_iter=60):
    """Real root of w^3/6 + w = s for s >= 0 by bracketed Newton."""
    s = np.asarray(s, dtype=float)
    lo = np.zeros_like(s)
    hi = np.minimum(s, np.cbrt(6 * s))
    big = np.cbrt(6 * np.maximum(s, _ASYMPTOTIC_REGIME))
    w = np.where(s < _SERIES_REGIME, s - s**3 / 6 + s**5 / 12,
                 np.where(s > _ASYMPTOTIC_REGIME, big - 2 / big, _cardano_scaled(s)))
    w = np.clip(w, lo, hi)
    converged = np.zeros(s.shape, dtype=bool)
    for _ in range(max_iter):
        f = w**3 / 6 + w - s
        lo = np.where(f < 0, w, lo)
        hi = np.where(f > 0, w, hi)
        step = f / (0.5 * w * w + 1)
        w_new = w - step
        outside = (w_new < lo) | (w_new > hi)
        w_new = np.where(outside, 0.5 * (lo + hi), w_new)
        done = np.abs(w_new - w) <= tol * np.maximum(np.abs(w_new), 1e-300)
        w = np.where(converged, w, w_new)
        converged |= done
        if converged.all():
            break
    if not converged.all():
        w = np.where(converged, w, _cardano_scaled(s))
    return w


def invert_momentum(p, V_at_x):
    """Unique real velocity v with v^3/6 + v V = p, for V > 0.

    Works in the scaled variables v = sqrt(V) w, p = V^(3/2) s and solves the
    odd cubic for |p|; the sign is restored afterwards, so oddness is exact.
    """
    V = np.asarray(V_at_x, dtype=float)
    if np.any(V <= 0):
        raise PreconditionError("momentum inversion needs V(x) > 0")
    p = np.asarray(p, dtype=float)
    root = np.sqrt(V)
    w = _solve_scaled(np.abs(p) / (V * root))
    v = np.sign(p) * root * w
    return float(v) if v.ndim == 0 else v


def cardano_velocity(p, V_at_x):
    """Closed-form Cardano root (no Newton polishing)."""
    V = float(V_at_x)
    if V <= 0:
        raise PreconditionError("momentum inversion needs V(x) > 0")
    root = math.sqrt(V)
    return math.copysign(root * float(_cardano_scaled(abs(p) / (V * root))), p)


@dataclass(frozen=True, eq=False)
class MomentumMap:
    V: PotentialModel

    def forward(self, x, v):
        return conjugate_momentum(x, v, self.V)

    def invert(self, x, p):
        return invert_momentum(p, self.V(x))


@dataclass(frozen=True)
class SeriesExpansion:
    coefficients: tuple = SERIES_COEFFICIENTS
    order: int = 7

    def __call__(self, p, V_at_x):
        y = np.asarray(p, dtype=float) / V_at_x
        out = np.zeros_like(y)
        for k, a in enumerate(self.coefficients):
            if 2 * k + 1 > self.order:
                break
            out = out + float(a) * y ** (2 * k + 1) / V_at_x**k
        return float(out) if out.ndim == 0 else out


def series_coefficients():
    return SERIES_COEFFICIENTS


def series_velocity(p, V_at_x, order=7):
    """Small-momentum series for the velocity, truncated after ``order``."""
    if order not in (1, 3, 5, 7):
        raise ValueError("order must be one of 1, 3, 5, 7")
    return SeriesExpansion(order=order)(p, V_at_x)


def log_approx_velocity(p, V_at_x):
    """(p/V) [1 + ln(1 - (p/V)^2 / V) / 6].

    Agrees with the cubic root only through third order in p/V; its fifth
    order coefficient is -1/12 where the exact series has +1/12.
    """
    y = np.asarray(p, dtype=float) / V_at_x
    arg = 1 - y * y / V_at_x
    if np.any(arg <= 0):
        raise OutOfDomainError("log argument 1 - (p/V)^2/V must be positive")
    out = y * (1 + np.log(arg) / 6)
    return float(out) if out.ndim == 0 else out


def log_approx_coefficients(n_terms=4):
    """Taylor coefficients of the logarithmic approximant in the series basis."""
    # ln(1 - z) = -sum z^k / k, so y(1 + ln(1 - y^2/V)/6) = y - sum_k y^(2k+1) V^-k / (6k)
    return (Fraction(1),) + tuple(Fraction(-1, 6 * k) for k in range(1, n_terms))


def exact_hprime(p, V_at_x):
    """H' = (v^2/2 + V)^2 / 2 with v the real momentum inverse."""
    v = invert_momentum(p, V_at_x)
    return 0.5 * (0.5 * v * v + V_at_x) ** 2


def hprime_series(p, V_at_x):
    c0, c1, c2 = (float(c) for c in HPRIME_SERIES_COEFFICIENTS)
    V = V_at_x
    return c0 * V * V + c1 * p * p / V + c2 * p**4 / V**4


def pde_residual(V_at_x, p, h, hprime=None):
    """Residual of d2H'/dp2 - 1/sqrt(2 H') at ``p``.

    The second derivative is the 3-point central difference with step ``h``
    applied to ``hprime`` (the exact H' by default), so the residual is
    O(h^2).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    f = hprime if hprime is not None else (lambda q: exact_hprime(q, V_at_x))
    f0 = f(p)
    d2 = (f(p + h) - 2 * f0 + f(p - h)) / (h * h)
    return d2 - 1 / math.sqrt(2 * f0)


class AsymptoticHprime(NamedTuple):
    printed: float
    derived: float


@dataclass(frozen=True)
class AsymptoticForm:
    """Large-momentum behaviour of the worked family.

    v ~ (6p)^(1/3) - 2 (6p)^(-1/3) V and
    H' ~ A p^(4/3) - (b V + a) p^(2/3) with A = (81/32)^(1/3).
    ``printed_correction`` is the sqrt(9/2) variant of b, ``derived_correction``
    the (9/2)^(1/3) that direct expansion gives.
    """

    velocity_coefficient: float = 6 ** (1 / 3)
    velocity_exponent: float = 1 / 3
    velocity_correction: float = -2.0
    hprime_coefficient: float = (81 / 32) ** (1 / 3)
    hprime_exponent: float = 4 / 3
    printed_correction: float = math.sqrt(9 / 2)
    derived_correction: float = (9 / 2) ** (1 / 3)
    a: float = 0.0

    def balance_defect(self):
        """(4/9) A - A^(-1/2)/sqrt(2); zero when A p^(4/3) solves the PDE."""
        A = self.hprime_coefficient
        return (4 / 9) * A - A**-0.5 / math.sqrt(2)

    def leading_hprime(self, p):
        return self.hprime_coefficient * p**self.hprime_exponent

    def leading_hprime_d2(self, p):
        e = self.hprime_exponent
        return self.hprime_coefficient * e * (e - 1) * p ** (e - 2)


ASYMPTOTIC = AsymptoticForm()


def power_law_pde_residual(p):
    """Residual of the PDE for H' = A p^(4/3), second derivative taken analytically."""
    return ASYMPTOTIC.leading_hprime_d2(p) - 1 / math.sqrt(2 * ASYMPTOTIC.leading_hprime(p))


def asymptotic_velocity(p, V_at_x):
    """Two-term large-p velocity; negative p is handled by oddness."""
    if p == 0:
        raise ValueError("asymptotic velocity is undefined at p = 0")
    if p < 0:
        return -asymptotic_velocity(-p, V_at_x)
    u = (6 * p) ** (1 / 3)
    return u - 2 * V_at_x / u


def asymptotic_hprime(p, V_at_x, a=0.0):
    """Large-p H' with the printed and the derived p^(2/3) coefficient."""
    if p <= 0:
        raise ValueError("asymptotic H' needs p > 0")
    lead = ASYMPTOTIC.hprime_coefficient * p ** (4 / 3)
    p23 = p ** (2 / 3)
    return AsymptoticHprime(
        printed=lead - (ASYMPTOTIC.printed_correction * V_at_x + a) * p23,
        derived=lead - (ASYMPTOTIC.derived_correction * V_at_x + a) * p23,
    )
