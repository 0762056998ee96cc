"""Discretised path integrals as transfer matrices on a position grid.

A one-step kernel K(x -> x') is built from a Lagrangian evaluated at the
step velocity (x' - x)/dt. Composing n steps is the matrix product of
``K * dx`` (the quadrature weight of each intermediate integration), with the
final weight removed so that the result is a kernel density.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NormalizationError
from .lagrangian import BaseLagrangian, WorkedPrimeLagrangian
from .models import EUCLIDEAN, REAL_TIME, TIME_MODES, GridSpec, PotentialModel
from .quantum import PropagatorMatrix

log = logging.getLogger(__name__)

L_BASE = "L-base"
L_PRIME = "L-prime"
NORMALIZATIONS = ("gaussian-constant", "stationary-phase", "column-sum-calibrated")
POTENTIAL_POINTS = ("midpoint", "left")

DEFAULT_EPSILON = 1e-3
BOUNDARY_MASS_LIMIT = 1e-3
_EDGE_FRACTION = 0.1
_MAX_REAL_TIME_GROWTH = 2.0


def free_kernel(dt, x, x_prime):
    """(2 pi i dt)^(-1/2) exp(i (x' - x)^2 / (2 dt)), principal branch.

    ``dt`` may be complex with negative imaginary part (regulated time).
    """
    d = np.asarray(x_prime) - np.asarray(x)
    return (2j * np.pi * dt) ** -0.5 * np.exp(0.5j * d * d / dt)


def heat_kernel(dtau, x, x_prime):
    d = np.asarray(x_prime) - np.asarray(x)
    return (2 * np.pi * dtau) ** -0.5 * np.exp(-0.5 * d * d / dtau)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """One-step kernel definition.

    ``epsilon`` is the relative real-time regulator: the step is continued to
    dt (1 - i epsilon). ``literal_printed`` switches the base kernel to the
    variant with no 1/2 on the kinetic term and a +1/2 power on 2 pi i dt;
    it exists only as a diagnostic.
    """

    lagrangian: str
    V: PotentialModel
    dt: float
    mode: str = EUCLIDEAN
    normalization: str = "gaussian-constant"
    epsilon: float = DEFAULT_EPSILON
    potential_point: str = "midpoint"
    literal_printed: bool = False

    def __post_init__(self):
        if self.lagrangian not in (L_BASE, L_PRIME):
            raise ValueError(f"unknown lagrangian {self.lagrangian!r}")
        if self.mode not in TIME_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.potential_point not in POTENTIAL_POINTS:
            raise ValueError(f"unknown potential point {self.potential_point!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.literal_printed and self.lagrangian != L_BASE:
            raise ValueError("literal_printed applies to the base Lagrangian only")

    @property
    def step(self):
        """dt(1 - i epsilon) in real time, dt in Euclidean time."""
        if self.mode == EUCLIDEAN:
            return self.dt
        return self.dt * (1 - 1j * self.epsilon)

    @property
    def form(self):
        base = BaseLagrangian(self.V)
        return base if self.lagrangian == L_BASE else WorkedPrimeLagrangian(base)

    def describe(self):
        return {"lagrangian": self.lagrangian, "mode": self.mode, "dt": self.dt,
                "normalization": self.normalization,
                "epsilon": self.epsilon if self.mode == REAL_TIME else 0.0,
                "potential_point": self.potential_point,
                "literal_printed": self.literal_printed}


def euclidean_lagrangian(lagrangian, Vx, w):
    """L_E = w^2/2 + V (base) or w^4/24 + w^2 V/2 + V^2/2 (alternative)."""
    if lagrangian == L_BASE:
        return 0.5 * w * w + Vx
    return w**4 / 24 + 0.5 * w * w * Vx + 0.5 * Vx * Vx


def _sample_point(spec, x, d):
    return x + 0.5 * d if spec.potential_point == "midpoint" else x + 0.0 * d


def _exponent(spec, x, d, kinetic_only=False):
    tau = spec.step
    xp = _sample_point(spec, x, d)
    w = d / tau
    if spec.mode == EUCLIDEAN:
        Vx = np.asarray(spec.V(xp), dtype=float)
        out = -euclidean_lagrangian(spec.lagrangian, Vx, w) * tau
        if kinetic_only:
            out = out + euclidean_lagrangian(spec.lagrangian, Vx, 0.0) * tau
        return out
    if spec.literal_printed:
        Vx = np.asarray(spec.V(xp), dtype=float)
        return 1j * ((d / spec.dt) ** 2 - (0.0 if kinetic_only else Vx)) * tau
    form = spec.form
    out = 1j * form.evaluate(xp, w) * tau
    if kinetic_only:
        out = out - 1j * form.evaluate(xp, 0.0 * w) * tau
    return out


def _gaussian_constant(spec):
    tau = spec.step
    if spec.mode == EUCLIDEAN:
        return (2 * np.pi * tau) ** -0.5
    if spec.literal_printed:
        return (2j * np.pi * tau) ** 0.5
    return (2j * np.pi * tau) ** -0.5


def _stationary_phase(spec, x, d):
    form = spec.form
    xp = _sample_point(spec, x, d)
    if np.any(np.asarray(form.d2_dv2(xp, d / spec.dt)) <= 0):
        raise NormalizationError("stationary-phase normalization needs d2L/dv2 > 0")
    tau = spec.step
    hess = form.d2_dv2(xp, d / tau)
    if spec.mode == EUCLIDEAN:
        return (2 * np.pi * tau / hess) ** -0.5
    return (2j * np.pi * tau / hess) ** -0.5


def _column_calibration(spec, sources, grid):
    """1 / (dx * sum over destinations of exp(kinetic exponent)) for each source."""
    sources = np.asarray(sources, dtype=float)
    flat = sources.ravel()
    pts = grid.points
    D = grid.displacement(flat[None, :], pts[:, None])
    sums = np.sum(np.exp(_exponent(spec, flat[None, :], D, kinetic_only=True)), axis=0) * grid.dx
    return (1.0 / sums).reshape(sources.shape)


def _kernel(spec, x, d, grid):
    expo = np.exp(_exponent(spec, x, d))
    if spec.normalization == "gaussian-constant":
        return _gaussian_constant(spec) * expo
    if spec.normalization == "stationary-phase":
        return _stationary_phase(spec, x, d) * expo
    if grid is None:
        raise ValueError("column-sum calibration needs the grid")
    return _column_calibration(spec, x, grid) * expo


def step_kernel(spec: KernelSpec, x, x_prime, grid: GridSpec | None = None):
    """One-step kernel density for x -> x'.

    With a ``grid`` the displacement uses the minimum image on periodic
    boxes. Column-sum calibration needs the grid because its normaliser is a
    sum over all destination nodes.
    """
    x = np.asarray(x, dtype=float)
    if grid is not None:
        d = grid.displacement(x, x_prime)
    else:
        d = np.asarray(x_prime, dtype=float) - x
    x, d = np.broadcast_arrays(x, d)
    out = _kernel(spec, x, d, grid)
    return complex(out) if np.ndim(out) == 0 else out


def one_step_matrix(spec: KernelSpec, grid: GridSpec):
    """Kernel densities K[i, j] for the step x_j -> x_i."""
    pts = grid.points
    n = grid.n_points
    X = np.broadcast_to(pts[None, :], (n, n))
    D = grid.displacement(pts[None, :], pts[:, None])
    return np.asarray(_kernel(spec, X, D, grid), dtype=complex)


@dataclass(frozen=True, eq=False)
class LatticeAmplitude:
    matrix: np.ndarray
    n_steps: int
    spec: KernelSpec
    grid: GridSpec
    reliable: bool = True
    boundary_mass: float = 0.0
    probe_norm_ratio: float = 1.0

    @property
    def t_total(self):
        return self.spec.dt * self.n_steps

    @property
    def density(self):
        return self.matrix

    @property
    def source(self):
        return "lattice-L" if self.spec.lagrangian == L_BASE else "lattice-Lprime"


def _probe(grid, A):
    """Propagate a unit Gaussian from the box centre; return (edge mass fraction, norm ratio)."""
    pts = grid.points
    psi0 = np.exp(-0.5 * (pts - grid.center) ** 2) / np.pi**0.25
    psi = A @ psi0 * grid.dx
    dens = np.abs(psi) ** 2
    total = float(np.sum(dens))
    if not np.isfinite(total) or total == 0.0:
        return math.inf, math.inf
    k = max(1, int(round(_EDGE_FRACTION * grid.n_points)))
    edge = float(np.sum(dens[:k]) + np.sum(dens[-k:]))
    ratio = math.sqrt(total * grid.dx) / math.sqrt(float(np.sum(psi0**2)) * grid.dx)
    return edge / total, ratio


def compose(spec: KernelSpec, grid: GridSpec, n_steps: int) -> LatticeAmplitude:
    """n-step transfer-matrix amplitude (kernel density)."""
    if n_steps < 0 or int(n_steps) != n_steps:
        raise ValueError("n_steps must be a non-negative integer")
    n = grid.n_points
    if n_steps == 0:
        return LatticeAmplitude(np.eye(n, dtype=complex) / grid.dx, 0, spec, grid)
    T = one_step_matrix(spec, grid) * grid.dx
    A = np.linalg.matrix_power(T, int(n_steps)) / grid.dx
    edge, ratio = _probe(grid, A)
    reliable = bool(np.all(np.isfinite(A))) and edge <= BOUNDARY_MASS_LIMIT
    if spec.mode == REAL_TIME and ratio > _MAX_REAL_TIME_GROWTH:
        reliable = False
    if not reliable:
        log.warning("lattice amplitude flagged unreliable (edge mass %.3g, norm ratio %.3g)",
                    edge, ratio)
    return LatticeAmplitude(A, int(n_steps), spec, grid, reliable, edge, ratio)


def implied_ground_energy(lattice: LatticeAmplitude, method="eigen") -> float:
    """Lowest energy implied by a Euclidean lattice amplitude.

    ``eigen``: -ln(lambda_max)/t with lambda_max the dominant eigenvalue of
    A dx. ``trace``: -ln(tr A dx)/t, which also carries the excited-state
    sum and so sits below the eigenvalue estimate by ~exp(-gap t)/t.
    """
    if lattice.spec.mode != EUCLIDEAN:
        raise ValueError("implied ground energy needs a Euclidean amplitude")
    M = lattice.matrix * lattice.grid.dx
    if method == "trace":
        top = float(np.real(np.trace(M)))
    elif method == "eigen":
        top = float(np.max(np.real(np.linalg.eigvals(M))))
    else:
        raise ValueError(f"unknown method {method!r}")
    if not top > 0:
        raise NormalizationError("lattice amplitude has no positive dominant mode")
    return -math.log(top) / lattice.t_total


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    n_list: tuple
    errors: tuple
    order: float | None
    note: str
    reference_source: str
    reliable: tuple = ()
    amplitudes: tuple = field(default=(), repr=False)

    def table(self):
        return [{"n": n, "error": e, "reference": self.reference_source}
                for n, e in zip(self.n_list, self.errors)]


def fit_order(n_list, errors):
    """Order p of e(n) ~ n^-p, or (None, reason) when it is not defined."""
    e = np.asarray(errors, dtype=float)
    if not np.all(np.isfinite(e)) or np.any(e <= 0):
        return None, "non-finite or zero errors"
    if np.max(e) / np.min(e) < 2.0:
        return None, "flat error sequence (no decrease by a factor of 2)"
    if np.any(np.diff(e) >= 0):
        return None, "non-monotone error sequence"
    slope = np.polyfit(np.log(np.asarray(n_list, dtype=float)), np.log(e), 1)[0]
    return float(-slope), "ok"


def convergence_study(spec: KernelSpec, grid: GridSpec, reference: PropagatorMatrix,
                      n_list, interior_fraction=0.5) -> ConvergenceResult:
    """Max interior error of the n-step lattice against ``reference`` for each n.

    The total time is the reference's; each run uses dt = t/n.
    """
    if reference.mode != spec.mode:
        raise ValueError("reference and kernel must share the time mode")
    if reference.grid != grid:
        raise ValueError("reference and lattice must share the grid")
    mask = grid.interior_mask(interior_fraction)
    sub = np.ix_(mask, mask)
    ref = reference.density[sub]
    errors, flags, amps = [], [], []
    for n in n_list:
        A = compose(replace(spec, dt=reference.t / n), grid, n)
        errors.append(float(np.max(np.abs(A.matrix[sub] - ref))))
        flags.append(A.reliable)
        amps.append(A)
    order, note = fit_order(n_list, errors)
    return ConvergenceResult(tuple(int(n) for n in n_list), tuple(errors), order, note,
                             reference.source, tuple(flags), tuple(amps))
