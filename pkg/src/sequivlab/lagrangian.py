"""Base and s-equivalent Lagrangians and their energy functions.

A derived Lagrangian is built from a base one and a map Sigma as

    L'(x, v) = v * int_c^v G(x, u) du - Sigma(H(x, v)),
    G(x, u)  = Sigma'(H(x, u)) * d2L/dv2(x, u),

where H = v dL/dv - L.  Its energy is exactly Sigma(H), so L' shares the
solutions of L without differing from it by a total time derivative (unless
Sigma' is constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConstructionError
from .models import HALF_SQUARE, PotentialModel, SigmaMap

EQUIVALENT = "equivalent"
S_EQUIVALENT_ONLY = "s-equivalent-only"

QUAD_EPSABS = 1e-12


def _diff5(f, a, h):
    return (-f(a + 2 * h) + 8 * f(a + h) - 8 * f(a - h) + f(a - 2 * h)) / (12 * h)


def _vstep(v):
    return 1e-4 * (1 + np.abs(v))


class LagrangianForm:
    """Autonomous Lagrangian L(x, v) with derivative channels.

    Subclasses override ``evaluate`` and, where known, the closed-form
    derivatives. Anything not overridden falls back to 5-point central
    differences with step ``1e-4*(1+|arg|)``.
    """

    def evaluate(self, x, v):
        raise NotImplementedError

    def __call__(self, x, v):
        return self.evaluate(x, v)

    def d_dv(self, x, v):
        return _diff5(lambda u: self.evaluate(x, u), v, _vstep(v))

    def d2_dv2(self, x, v):
        return _diff5(lambda u: self.d_dv(x, u), v, _vstep(v))

    def d_dx(self, x, v):
        return _diff5(lambda y: self.evaluate(y, v), x, _vstep(x))

    def d2_dxdv(self, x, v):
        return _diff5(lambda y: self.d_dv(y, v), x, _vstep(x))


class BaseLagrangian(LagrangianForm):
    """L = v^2/2 - V(x)."""

    def __init__(self, V: PotentialModel):
        self.V = V

    def __repr__(self):
        return f"BaseLagrangian({self.V.kind})"

    def evaluate(self, x, v):
        return 0.5 * v * v - self.V(x)

    def d_dv(self, x, v):
        return v

    def d2_dv2(self, x, v):
        return np.ones_like(v, dtype=float) if np.ndim(v) else 1.0

    def d_dx(self, x, v):
        return -self.V.derivative(x) + 0.0 * v

    def d2_dxdv(self, x, v):
        return np.zeros(np.broadcast(x, v).shape) if np.ndim(x) or np.ndim(v) else 0.0


class DerivedLagrangian(LagrangianForm):
    """The s-equivalent Lagrangian built from ``base`` and ``sigma``.

    ``evaluate`` and ``d_dv`` go through adaptive Gauss-Kronrod quadrature of
    G over the velocity; ``d2_dv2`` is G itself.
    """

    def __init__(self, base: LagrangianForm, sigma: SigmaMap, c: float = 0.0):
        self.base = base
        self.sigma = sigma
        self.c = float(c)

    def __repr__(self):
        return f"{type(self).__name__}({self.base!r}, {self.sigma.kind}, c={self.c})"

    def base_energy(self, x, v):
        return legendre_energy(self.base, x, v)

    def G(self, x, v):
        return self.sigma.derivative(self.base_energy(x, v)) * self.base.d2_dv2(x, v)

    def _integral_scalar(self, x, v):
        val, err = quad(lambda u: float(self.G(x, u)), self.c, v,
                        epsabs=QUAD_EPSABS, epsrel=1e-13, limit=200)
        if not (math.isfinite(val) and math.isfinite(err)) or err > 1e-8 * (1 + abs(val)):
            raise ConstructionError(
                f"velocity integral of G from {self.c} to {v} at x={x} did not converge "
                f"(estimate {val}, error {err})")
        return val

    def velocity_integral(self, x, v):
        if np.ndim(x) == 0 and np.ndim(v) == 0:
            return self._integral_scalar(float(x), float(v))
        xb, vb = np.broadcast_arrays(np.asarray(x, float), np.asarray(v, float))
        out = np.empty(xb.shape)
        for idx in np.ndindex(xb.shape):
            out[idx] = self._integral_scalar(float(xb[idx]), float(vb[idx]))
        return out

    def evaluate(self, x, v):
        return v * self.velocity_integral(x, v) - self.sigma(self.base_energy(x, v))

    def d_dv(self, x, v):
        return self.velocity_integral(x, v)

    def d2_dv2(self, x, v):
        return self.G(x, v)


class WorkedPrimeLagrangian(DerivedLagrangian):
    """Closed form of the derived Lagrangian for L = v^2/2 - V, Sigma = z^2/2, c = 0:

        L' = v^4/24 + v^2 V/2 - V^2/2.

    Polynomial in v, so it also evaluates at complex velocities.
    """

    def __init__(self, base: BaseLagrangian):
        super().__init__(base, HALF_SQUARE, 0.0)
        self.V = base.V

    def evaluate(self, x, v):
        V = self.V(x)
        return v**4 / 24 + 0.5 * v * v * V - 0.5 * V * V

    def d_dv(self, x, v):
        return v**3 / 6 + v * self.V(x)

    def d2_dv2(self, x, v):
        return 0.5 * v * v + self.V(x)

    def d_dx(self, x, v):
        return (0.5 * v * v - self.V(x)) * self.V.derivative(x)

    def d2_dxdv(self, x, v):
        return v * self.V.derivative(x)

    def evaluate_by_quadrature(self, x, v):
        return DerivedLagrangian.evaluate(self, x, v)


class TotalDerivativeShift(LagrangianForm):
    """L + dPhi/dt for Phi = Phi(x), i.e. L + Phi'(x) v."""

    def __init__(self, L: LagrangianForm, dphi, d2phi=None):
        self.L = L
        self.dphi = dphi
        self.d2phi = d2phi

    def evaluate(self, x, v):
        return self.L.evaluate(x, v) + self.dphi(x) * v

    def d_dv(self, x, v):
        return self.L.d_dv(x, v) + self.dphi(x)

    def d2_dv2(self, x, v):
        return self.L.d2_dv2(x, v)

    def _d2phi(self, x):
        if self.d2phi is not None:
            return self.d2phi(x)
        return _diff5(self.dphi, x, _vstep(x))

    def d_dx(self, x, v):
        return self.L.d_dx(x, v) + self._d2phi(x) * v

    def d2_dxdv(self, x, v):
        return self.L.d2_dxdv(x, v) + self._d2phi(x)


class ScaledLagrangian(LagrangianForm):
    def __init__(self, L: LagrangianForm, factor: float):
        self.L = L
        self.factor = float(factor)

    def evaluate(self, x, v):
        return self.factor * self.L.evaluate(x, v)

    def d_dv(self, x, v):
        return self.factor * self.L.d_dv(x, v)

    def d2_dv2(self, x, v):
        return self.factor * self.L.d2_dv2(x, v)

    def d_dx(self, x, v):
        return self.factor * self.L.d_dx(x, v)

    def d2_dxdv(self, x, v):
        return self.factor * self.L.d2_dxdv(x, v)


def legendre_energy(L: LagrangianForm, x, v):
    """H = v dL/dv - L."""
    return v * L.d_dv(x, v) - L.evaluate(x, v)


def hessian(L: LagrangianForm, x, v):
    return L.d2_dv2(x, v)


@dataclass(frozen=True, eq=False)
class HamiltonianForm:
    """Energy function of a Lagrangian, in velocity form.

    ``constant_offset`` records the additive constant relating the energy of
    a derived Lagrangian to Sigma of the base energy. The construction used
    here always yields zero.
    """

    source: LagrangianForm
    constant_offset: float = 0.0

    def evaluate_velocity_form(self, x, v):
        return legendre_energy(self.source, x, v)

    __call__ = evaluate_velocity_form

    def predicted_from_base(self, x, v):
        src = self.source
        if not isinstance(src, DerivedLagrangian):
            return self.evaluate_velocity_form(x, v)
        return src.sigma(src.base_energy(x, v)) + self.constant_offset


def build_sprime_lagrangian(L: LagrangianForm, sigma: SigmaMap, c: float = 0.0,
                            closed_form: bool = True) -> DerivedLagrangian:
    """Construct the s-equivalent Lagrangian of ``L`` for the map ``sigma``.

    When the closed form is known (base L = v^2/2 - V, half-square Sigma,
    c = 0) and ``closed_form`` is set, the result carries analytic derivative
    channels; otherwise everything goes through velocity quadrature.
    """
    if (closed_form and isinstance(L, BaseLagrangian) and sigma.kind == "half-square"
            and c == 0.0):
        return WorkedPrimeLagrangian(L)
    return DerivedLagrangian(L, sigma, c)


def equivalence_test(L1: LagrangianForm, L2: LagrangianForm, domain, n=25, tol=1e-8):
    """Classify two Lagrangians as ``equivalent`` or ``s-equivalent-only``.

    A total derivative dPhi(x, t)/dt is at most linear in v, so the pair is
    equivalent iff d2(L1 - L2)/dv2 vanishes on the sample grid. ``domain`` is
    ``((x_lo, x_hi), (v_lo, v_hi))``.
    """
    (xa, xb), (va, vb) = domain
    X, Vv = np.meshgrid(np.linspace(xa, xb, n), np.linspace(va, vb, n), indexing="ij")
    diff = np.asarray(L1.d2_dv2(X, Vv)) - np.asarray(L2.d2_dv2(X, Vv))
    return EQUIVALENT if np.max(np.abs(diff)) <= tol else S_EQUIVALENT_ONLY
