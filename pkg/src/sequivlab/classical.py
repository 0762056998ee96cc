"""Normal-form equations of motion, trajectories and s-equivalence checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegeneratePointError, IntegrationError
from .lagrangian import LagrangianForm

HESSIAN_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class NormalFormRHS:
    """Acceleration f(x, v) = (L_x - v L_xv) / L_vv of an autonomous Lagrangian."""

    lagrangian: LagrangianForm
    hessian_floor: float = HESSIAN_FLOOR

    def __call__(self, x, v):
        L = self.lagrangian
        hess = L.d2_dv2(x, v)
        if np.any(np.abs(hess) < self.hessian_floor):
            raise DegeneratePointError(f"d2L/dv2 vanishes near x={x}, v={v}")
        return (L.d_dx(x, v) - v * L.d2_dxdv(x, v)) / hess


def normal_form(L: LagrangianForm) -> NormalFormRHS:
    return NormalFormRHS(L)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        if len(self.positions) != n or len(self.velocities) != n:
            raise ValueError("trajectory arrays must have equal length")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        for arr in (self.times, self.positions, self.velocities):
            arr.setflags(write=False)

    def rows(self):
        return np.column_stack([self.times, self.positions, self.velocities])


def integrate(rhs: NormalFormRHS, x0, v0, t_span, tol=1e-10, t_eval=None,
              method="RK45") -> TrajectoryRecord:
    """Integrate x'' = f(x, x') with an adaptive embedded Runge-Kutta pair.

    ``tol`` is used for both the relative and the absolute local error
    tolerance. ``t_eval`` selects the dense-output sample times.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0, t1 = map(float, t_span)
    if t_eval is None:
        t_eval = np.linspace(t0, t1, 201)

    def field_(t, y):
        return (y[1], rhs(y[0], y[1]))

    sol = solve_ivp(field_, (t0, t1), [float(x0), float(v0)], method=method,
                    t_eval=np.asarray(t_eval, dtype=float), rtol=tol, atol=tol,
                    dense_output=False)
    if sol.status < 0:
        last = None
        if sol.t.size:
            last = (float(sol.t[-1]), float(sol.y[0, -1]), float(sol.y[1, -1]))
        raise IntegrationError(f"integration failed: {sol.message}", last_state=last)
    meta = {"method": method, "rtol": tol, "atol": tol, "nfev": int(sol.nfev)}
    return TrajectoryRecord(np.array(sol.t), np.array(sol.y[0]), np.array(sol.y[1]), meta)


def s_equivalence_distance(L1: LagrangianForm, L2: LagrangianForm, x0, v0, t_span,
                           tol=1e-10, n_samples=401):
    """Max over sample times of |x1 - x2| + |v1 - v2| for the two flows."""
    t_eval = np.linspace(t_span[0], t_span[1], n_samples)
    a = integrate(normal_form(L1), x0, v0, t_span, tol, t_eval)
    b = integrate(normal_form(L2), x0, v0, t_span, tol, t_eval)
    return float(np.max(np.abs(a.positions - b.positions) + np.abs(a.velocities - b.velocities)))


def conservation_drift(trajectory: TrajectoryRecord, E) -> float:
    """Max |E(x(t), v(t)) - E(x(0), v(0))| along the trajectory."""
    values = np.asarray(E(trajectory.positions, trajectory.velocities), dtype=float)
    return float(np.max(np.abs(values - values[0])))
