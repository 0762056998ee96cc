"""Numerical laboratory for s-equivalent Lagrangians and their quantizations."""

__version__ = "0.1.0"

from .models import (EUCLIDEAN, HALF_SQUARE, IDENTITY, REAL_TIME, GridSpec, PhasePoint,
                     PotentialModel, SigmaMap, TimeLattice, eval_potential,
                     shift_to_positive, sigma_eval_and_derivative)
from .lagrangian import (BaseLagrangian, DerivedLagrangian, HamiltonianForm, LagrangianForm,
                         build_sprime_lagrangian, equivalence_test, hessian, legendre_energy)
from .momentum import (MomentumMap, asymptotic_hprime, asymptotic_velocity, conjugate_momentum,
                       hprime_series, invert_momentum, log_approx_velocity, pde_residual,
                       series_velocity)
from .classical import (conservation_drift, integrate, normal_form, s_equivalence_distance)
from .quantum import (amplitude, build_hamiltonian, build_hprime_ordered, build_hprime_spectral,
                      spectral_propagator)
from .lattice import (KernelSpec, compose, convergence_study, free_kernel, step_kernel)
from .compare import compare_amplitudes
