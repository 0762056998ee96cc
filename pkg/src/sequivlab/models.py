"""Primitive physical models: potentials, Sigma maps, phase points, grids.

Natural units throughout (hbar = m = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import OutOfDomainError, PreconditionError, UnboundedPotentialError

REAL_TIME = "real-time"
EUCLIDEAN = "euclidean"
TIME_MODES = (REAL_TIME, EUCLIDEAN)

POTENTIAL_KINDS = ("harmonic", "quartic-well", "shifted-harmonic", "constant", "tabulated")


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """A one-dimensional potential V(x) plus a constant energy offset.

    Use the classmethod constructors rather than building instances by hand.
    ``shift`` is added to the raw potential on every evaluation.
    """

    kind: str
    params: dict = field(default_factory=dict)
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not math.isfinite(self.shift):
            raise ValueError("shift must be finite")

    @classmethod
    def harmonic(cls, omega=1.0, shift=0.0):
        return cls("harmonic", {"omega": float(omega)}, float(shift))

    @classmethod
    def quartic_well(cls, lam=1.0, shift=0.0):
        if lam <= 0:
            raise ValueError("quartic-well needs lam > 0")
        return cls("quartic-well", {"lam": float(lam)}, float(shift))

    @classmethod
    def shifted_harmonic(cls, omega=1.0, c0=0.0, shift=0.0):
        return cls("shifted-harmonic", {"omega": float(omega), "c0": float(c0)}, float(shift))

    @classmethod
    def constant(cls, v0, shift=0.0):
        return cls("constant", {"v0": float(v0)}, float(shift))

    @classmethod
    def tabulated(cls, xs, values, shift=0.0):
        xs = np.asarray(xs, dtype=float)
        values = np.asarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != values.shape or xs.size < 4:
            raise ValueError("tabulated potential needs matching 1-D arrays with >= 4 points")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated abscissae must be strictly increasing")
        return cls("tabulated", {"xs": tuple(xs), "values": tuple(values)}, float(shift))

    @cached_property
    def _spline(self):
        return CubicSpline(np.array(self.params["xs"]), np.array(self.params["values"]))

    @property
    def is_smooth(self):
        return self.kind != "tabulated"

    def _check_domain(self, x):
        if self.kind == "tabulated":
            lo, hi = self.params["xs"][0], self.params["xs"][-1]
            if np.any((x < lo) | (x > hi)):
                raise OutOfDomainError(f"x outside tabulated range [{lo}, {hi}]")

    def raw(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "harmonic":
            return 0.5 * p["omega"] ** 2 * x**2
        if self.kind == "quartic-well":
            return p["lam"] * x**4
        if self.kind == "shifted-harmonic":
            return 0.5 * p["omega"] ** 2 * x**2 + p["c0"]
        if self.kind == "constant":
            return np.full_like(x, p["v0"])
        self._check_domain(x)
        return self._spline(x)

    def __call__(self, x):
        out = self.raw(x) + self.shift
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind in ("harmonic", "shifted-harmonic"):
            out = p["omega"] ** 2 * x
        elif self.kind == "quartic-well":
            out = 4.0 * p["lam"] * x**3
        elif self.kind == "constant":
            out = np.zeros_like(x)
        else:
            self._check_domain(x)
            out = self._spline(x, 1)
        return float(out) if np.ndim(out) == 0 else out

    def with_shift(self, extra):
        return replace(self, shift=self.shift + float(extra))

    def describe(self):
        d = {"kind": self.kind, "shift": self.shift}
        if self.kind != "tabulated":
            d.update(self.params)
        return d


def eval_potential(V: PotentialModel, x):
    """Evaluate V at x (raw potential plus shift)."""
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return V(x)


def _minimum_on(V, points):
    values = np.asarray(V(points), dtype=float)
    i = int(np.argmin(values))
    vmin = float(values[i])
    # refine between neighbouring nodes; the grid minimum is an upper bound
    lo = points[max(i - 1, 0)]
    hi = points[min(i + 1, len(points) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda y: float(V(y)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if res.success and res.fun < vmin:
            vmin = float(res.fun)
    return vmin, i


def shift_to_positive(V: PotentialModel, domain: "GridSpec", margin: float,
                      check_unbounded: bool = True) -> PotentialModel:
    """Return V shifted so that min V >= margin on ``domain``.

    If the minimum already clears the margin V is returned unchanged, which
    makes the operation idempotent. With ``check_unbounded`` a minimum sitting
    on a boundary node with V still decreasing outward is rejected.
    """
    if margin <= 0:
        raise PreconditionError("margin must be positive")
    points = domain.points
    vmin, i = _minimum_on(V, points)
    if check_unbounded and i in (0, len(points) - 1):
        slope = V.derivative(points[i])
        outward_down = (i == 0 and slope > 0) or (i == len(points) - 1 and slope < 0)
        if outward_down:
            raise UnboundedPotentialError(
                "minimum at the domain boundary with V decreasing outward; "
                "potential looks unbounded below on this domain")
    if vmin >= margin:
        return V
    return V.with_shift(margin - vmin)


@dataclass(frozen=True)
class SigmaMap:
    """The free function Sigma(z) used to build the alternative Lagrangian."""

    kind: str
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity-affine", "half-square"):
            raise ValueError(f"unknown sigma kind {self.kind!r}")

    def __call__(self, z):
        if self.kind == "half-square":
            return 0.5 * z * z
        return self.alpha * z + self.beta

    def derivative(self, z):
        if self.kind == "half-square":
            return z
        return self.alpha * np.ones_like(z) if np.ndim(z) else self.alpha

    @property
    def derivative_is_constant(self):
        return self.kind == "identity-affine"


HALF_SQUARE = SigmaMap("half-square")
IDENTITY = SigmaMap("identity-affine", 1.0, 0.0)


def sigma_eval_and_derivative(sigma: SigmaMap, z):
    return sigma(z), sigma.derivative(z)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    v: float
    t: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.v, self.t)):
            raise ValueError("phase point components must be finite")


@dataclass(frozen=True)
class GridSpec:
    """Uniform position grid.

    Nodes are ``x_min + k*dx`` for ``k = 0..n_points-1`` and
    ``dx = (x_max - x_min)/(n_points - 1)``. For the periodic boundary the
    box closes one spacing past ``x_max`` (length ``n_points*dx``); for the
    Dirichlet boundary the wavefunction vanishes one spacing outside both ends.
    """

    x_min: float
    x_max: float
    n_points: int
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise ValueError("n_points must be an integer >= 8")
        if self.boundary not in ("dirichlet", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self):
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def length(self):
        return self.n_points * self.dx

    @property
    def periodic(self):
        return self.boundary == "periodic"

    @property
    def center(self):
        return 0.5 * (self.x_min + self.x_max)

    def displacement(self, x_from, x_to):
        """x_to - x_from, wrapped to the minimum image on periodic grids."""
        d = np.asarray(x_to, dtype=float) - np.asarray(x_from, dtype=float)
        if self.periodic:
            L = self.length
            d = (d + 0.5 * L) % L - 0.5 * L
        return d

    def nearest_index(self, x):
        return int(np.clip(round((x - self.x_min) / self.dx), 0, self.n_points - 1))

    def interior_mask(self, fraction=0.5):
        half = 0.5 * (self.x_max - self.x_min)
        return np.abs(self.points - self.center) <= fraction * half + 1e-12 * half

    def describe(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points,
                "boundary": self.boundary, "dx": self.dx}


@dataclass(frozen=True)
class TimeLattice:
    t_total: float
    n_steps: int
    mode: str = EUCLIDEAN

    def __post_init__(self):
        if self.n_steps < 1 or int(self.n_steps) != self.n_steps:
            raise ValueError("n_steps must be an integer >= 1")
        if not self.t_total > 0:
            raise ValueError("t_total must be positive")
        if self.mode not in TIME_MODES:
            raise ValueError(f"unknown time mode {self.mode!r}")

    @property
    def dt(self):
        return self.t_total / self.n_steps
