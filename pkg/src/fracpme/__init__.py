"""Fractional porous medium equation laboratory on flat tori.

Modules
-------
torus         geometry, eigenbasis, transforms, quadrature
operators     (-Delta)^sigma by multipliers and by Balakrishnan / Phillips / subordination
solver        implicit Euler nonlinear resolvents and trajectories
inequalities  Nash, Sobolev-Poincare, super-Poincare, log-Sobolev, Stroock-Varopoulos
asymptotics   smoothing exponents, decay fits, convergence to the mean
checkpoint    coefficient dumps with a JSON header
experiments   configuration-driven runs used by the ``fracpme`` command
"""

from .asymptotics import (
    ConvergenceReport,
    DecayFitReport,
    DecayWindowError,
    SmoothingBoundReport,
    convergence_to_mean,
    fit_decay,
    smoothing_bound_check,
    smoothing_exponents_closed,
    smoothing_exponents_noncompact,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .inequalities import (
    CheckResult,
    EnsembleSpec,
    InequalityReport,
    UndefinedRatioError,
    beta_from_nash,
    calibrate_constants,
    check_constants,
    dirichlet_form,
    log_sobolev_check,
    nash_ratio,
    sobolev_poincare_ratio,
    stroock_varopoulos_check,
    super_poincare_check,
    ultracontractivity_fit,
    young_functional,
)
from .operators import (
    DEFAULT_QUADRATURE,
    SUBORDINATION_QUADRATURE,
    FracParams,
    QuadratureSpec,
    apply_frac_laplacian,
    apply_frac_laplacian_balakrishnan,
    apply_phillips,
    fit_heat_kernel_envelope,
    heat_kernel,
    linear_resolvent,
    semigroup_apply,
    semigroup_subordinated,
)
from .solver import (
    PMEConfig,
    SolverError,
    Trajectory,
    beta,
    evolve,
    implicit_step,
    omega_limit_study,
    phi,
    semilinear_resolvent,
)
from .torus import (
    Field,
    ManifoldSpec,
    SpectralField,
    forward_transform,
    integrate,
    inverse_transform,
    lp_norm,
    make_torus,
    mean,
    random_field,
)

__version__ = "0.1.0"
