"""Numerical laboratory for the collision entropy dissipation of kinetic
theory: functional evaluation, dissipation/Fisher inequality verification,
and relaxation experiments on a velocity grid."""

from .distributions import (
    AnisotropicGaussian,
    FermiDiracAnisotropic,
    FermiDiracState,
    GaussianMixture,
    GridDistribution,
    MomentSummary,
    diagonalize,
    evaluate,
    fermi_dirac_anisotropic,
    fermi_dirac_equilibrium,
    log_gradient,
    maxwellian,
    moments,
    normalize,
    to_grid,
)
from .quadrature import (
    QuadratureRule,
    SingularKernelPolicy,
    grid_rule,
    pair_integral,
    single_integral,
    sup_over_candidates,
    tensor_gauss,
)
from .decay import (
    DecayHypothesis,
    Trajectory,
    envelope,
    fit_rate,
    landau_rate_constants,
    verify_envelope,
    verify_hypothesis,
)
from .solver import SolverConfig, apply_collision, apply_collision_lfd, coefficients, run

__version__ = "0.1.0"
