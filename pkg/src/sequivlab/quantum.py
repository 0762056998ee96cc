"""Grid Hamiltonians, their spectral propagators and the two H' operators.

Matrices act on vectors of nodal wavefunction values. Kernel densities
(propagator entries divided by dx) are what converge as the grid refines.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import OperatorError, PreconditionError
from .models import EUCLIDEAN, REAL_TIME, TIME_MODES, GridSpec, PotentialModel

SOURCES = ("spectral-H", "spectral-Hprime", "ordered-Hprime", "lattice-L", "lattice-Lprime")

_OPERATOR_SOURCE = {"H": "spectral-H", "Hprime-spectral": "spectral-Hprime",
                    "Hprime-ordered": "ordered-Hprime"}


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues and eigenvectors normalised so sum |phi|^2 dx = 1."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dx: float

    @property
    def unit_vectors(self):
        # orthonormal in the plain (unweighted) inner product
        return self.eigenvectors * np.sqrt(self.dx)

    def gram_defect(self):
        U = self.unit_vectors
        return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[1]))))


@dataclass(frozen=True, eq=False)
class WaveOperator:
    matrix: np.ndarray
    grid: GridSpec
    label: str = "H"

    @property
    def hermiticity_defect(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        try:
            E, U = np.linalg.eigh(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise OperatorError(f"eigensolver failed: {exc}") from exc
        return SpectralDecomposition(E, U / np.sqrt(self.grid.dx), self.grid.dx)

    def eigenvalues(self, k=None):
        E = self.spectrum.eigenvalues
        return E if k is None else E[:k]

    def eigen_residuals(self, k):
        """||H phi_j - E_j phi_j|| for the lowest k modes (unit-normalised phi)."""
        sp = self.spectrum
        U = sp.unit_vectors[:, :k]
        R = self.matrix @ U - U * sp.eigenvalues[:k]
        return np.linalg.norm(R, axis=0)


@dataclass(frozen=True, eq=False)
class PropagatorMatrix:
    """exp(-i H t(1 - i eps)) or exp(-H t) on the grid.

    ``epsilon`` is the relative damping of a regulated real-time propagator;
    it is zero for the plain unitary case.
    """

    matrix: np.ndarray
    t: float
    source: str
    mode: str
    grid: GridSpec
    epsilon: float = 0.0

    @property
    def density(self):
        return self.matrix / self.grid.dx

    def unitarity_defect(self):
        U = self.matrix
        return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def _fourier_matrix(n):
    return np.fft.fft(np.eye(n), axis=0, norm="ortho")


def _wavenumbers(grid):
    return 2 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.dx)


def momentum_matrix(grid: GridSpec):
    """p = -i d/dx. Spectral on periodic grids, central differences otherwise."""
    n = grid.n_points
    if grid.periodic:
        F = _fourier_matrix(n)
        P = F.conj().T @ (_wavenumbers(grid)[:, None] * F)
        return 0.5 * (P + P.conj().T)
    off = np.full(n - 1, -0.5j / grid.dx)
    return np.diag(off, 1) - np.diag(off, -1)


def momentum_squared_matrix(grid: GridSpec):
    """p^2 = -d2/dx2; spectral (periodic) or 3-point with zero outside (Dirichlet)."""
    n = grid.n_points
    if grid.periodic:
        F = _fourier_matrix(n)
        P2 = F.conj().T @ ((_wavenumbers(grid) ** 2)[:, None] * F)
        return 0.5 * (P2 + P2.conj().T)
    dx2 = grid.dx**2
    return (np.diag(np.full(n, 2.0 / dx2)) + np.diag(np.full(n - 1, -1.0 / dx2), 1)
            + np.diag(np.full(n - 1, -1.0 / dx2), -1)).astype(complex)


def build_hamiltonian(V: PotentialModel, grid: GridSpec) -> WaveOperator:
    """H = p^2/2 + V(x) on the grid."""
    H = 0.5 * momentum_squared_matrix(grid) + np.diag(np.asarray(V(grid.points), dtype=float))
    return WaveOperator(0.5 * (H + H.conj().T), grid, "H")


def spectral_propagator(H: WaveOperator, t, mode=REAL_TIME, epsilon=0.0) -> PropagatorMatrix:
    """U = Phi diag(exp(-i E t)) Phi^dagger, or exp(-E t) in Euclidean mode.

    With ``epsilon`` > 0 (real time only) the time is continued to
    t (1 - i epsilon), matching a regulated lattice.
    """
    if mode not in TIME_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    sp = H.spectrum
    U = sp.unit_vectors
    E = sp.eigenvalues
    if mode == EUCLIDEAN:
        factors = np.exp(-E * t)
    else:
        factors = np.exp(-1j * E * t * (1 - 1j * epsilon))
    M = (U * factors) @ U.conj().T
    source = _OPERATOR_SOURCE.get(H.label, H.label)
    return PropagatorMatrix(M, float(t), source, mode, H.grid, float(epsilon) if mode == REAL_TIME else 0.0)


def build_hprime_spectral(H: WaveOperator) -> WaveOperator:
    """H' = H^2/2 by functional calculus: same eigenvectors, eigenvalues E^2/2."""
    sp = H.spectrum
    U = sp.unit_vectors
    M = (U * (0.5 * sp.eigenvalues**2)) @ U.conj().T
    return WaveOperator(0.5 * (M + M.conj().T), H.grid, "Hprime-spectral")


def _inverse_potential_middle_term(V, grid):
    """p V^-1 p.

    Dirichlet: D^T diag(1/V at edges) D with D the forward difference onto
    the n+1 cell edges (zero beyond the ends). Periodic: P diag(1/V) P with
    the spectral momentum.
    """
    inv = 1.0 / np.asarray(V(grid.points), dtype=float)
    if grid.periodic:
        P = momentum_matrix(grid)
        return P @ (inv[:, None] * P)
    n = grid.n_points
    D = np.zeros((n + 1, n))
    idx = np.arange(n)
    D[idx + 1, idx] = -1.0 / grid.dx
    D[idx, idx] += 1.0 / grid.dx
    edge_inv = np.empty(n + 1)
    edge_inv[1:-1] = 0.5 * (inv[1:] + inv[:-1])
    edge_inv[0], edge_inv[-1] = inv[0], inv[-1]
    return (D.T @ (edge_inv[:, None] * D)).astype(complex)


def build_hprime_ordered(V: PotentialModel, grid: GridSpec) -> WaveOperator:
    """H' = V^2/2 + (V^-1 p^2 + p V^-1 p + p^2 V^-1)/6, truncated at this order."""
    values = np.asarray(V(grid.points), dtype=float)
    if np.min(values) <= 0:
        raise PreconditionError("ordered H' needs V > 0 on every grid node")
    inv = 1.0 / values
    P2 = momentum_squared_matrix(grid)
    outer = inv[:, None] * P2 + P2 * inv[None, :]
    M = np.diag(0.5 * values**2).astype(complex) + (outer + _inverse_potential_middle_term(V, grid)) / 6
    return WaveOperator(M, grid, "Hprime-ordered")


def commutator_norm(A: WaveOperator, B: WaveOperator, relative=False):
    """Largest entry of [A, B]; with ``relative`` divided by ||A||_2 ||B||_2."""
    C = A.matrix @ B.matrix - B.matrix @ A.matrix
    out = float(np.max(np.abs(C)))
    if relative:
        scale = np.max(np.abs(A.eigenvalues())) * np.max(np.abs(B.eigenvalues()))
        out = out / scale if scale > 0 else out
    return out


def amplitude(P: PropagatorMatrix, x_from, x_to):
    """<x_to| U |x_from> as a kernel density (entry / dx), snapping to nodes."""
    grid = P.grid
    i = grid.nearest_index(x_from)
    j = grid.nearest_index(x_to)
    pts = grid.points
    if abs(pts[i] - x_from) > 1e-9 * grid.dx or abs(pts[j] - x_to) > 1e-9 * grid.dx:
        warnings.warn("amplitude endpoints snapped to the nearest grid nodes", stacklevel=2)
    return complex(P.matrix[j, i] / grid.dx)
