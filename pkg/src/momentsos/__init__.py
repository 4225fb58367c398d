"""Moment-SOS bounds, Christoffel-Darboux kernels, and log-det certificates.

The package computes lower and upper bounds for polynomial optimization
problems over basic semialgebraic sets, Christoffel-Darboux kernels and
Christoffel functions of (pseudo-)moment sequences, the Christoffel
representation of interior-cone polynomials through log-det duality, and
verifies the associated identities (generalized Pell equations, CF
disintegration, the log-det Fenchel inequality).
"""

__version__ = "0.1.0"

from .christoffel import (
    CDKernel,
    ChristoffelPoly,
    MomentMatrixSingularError,
    OrthonormalBasis,
    cd_kernel_eval,
    cf_eval,
    cf_reciprocal_poly,
    cf_variational,
    equilibrium_moment_estimate,
    orthonormal_basis,
    reproducing_check,
    support_score,
)
from .christrep import (
    ChristoffelRep,
    NotInteriorError,
    assemble_representation,
    canonical_set,
    christoffel_representation,
    equilibrium_experiment,
    fenchel_gap,
    pell_check,
    pstar_density,
    recover_dual,
    solve_logdet_primal,
)
from .disintegration import DisintegrationReport, disintegrate_cf, marginal_moments
from .estimator import ChristoffelSupportEstimator
from .hierarchy import (
    LowerBoundResult,
    UpperBoundResult,
    build_lower_relaxation,
    extract_minimizers,
    flatness_check,
    lower_bound,
    upper_bound,
    upper_bound_pushforward,
)
from .linalg import NotPositiveDefiniteError, cholesky, gen_eig_min, psd_solve, sym_eig
from .moments import (
    DegreeOverflowError,
    MeasureDescriptor,
    MomentSequence,
    SemialgebraicSet,
    archimedean_augment,
    catalog_moments,
    empirical_moments,
    nonneg_test,
    pushforward_moments,
)
from .poly import MonomialBasis, Polynomial
from .sdp import SdpBlock, SdpProblem, SdpSolution, SolveOptions, solve_sdp

__all__ = [
    "CDKernel",
    "ChristoffelPoly",
    "ChristoffelRep",
    "ChristoffelSupportEstimator",
    "DegreeOverflowError",
    "DisintegrationReport",
    "LowerBoundResult",
    "MeasureDescriptor",
    "MomentMatrixSingularError",
    "MomentSequence",
    "MonomialBasis",
    "NotInteriorError",
    "NotPositiveDefiniteError",
    "OrthonormalBasis",
    "Polynomial",
    "SdpBlock",
    "SdpProblem",
    "SdpSolution",
    "SemialgebraicSet",
    "SolveOptions",
    "UpperBoundResult",
    "archimedean_augment",
    "assemble_representation",
    "build_lower_relaxation",
    "canonical_set",
    "catalog_moments",
    "cd_kernel_eval",
    "cf_eval",
    "cf_reciprocal_poly",
    "cf_variational",
    "cholesky",
    "christoffel_representation",
    "disintegrate_cf",
    "empirical_moments",
    "equilibrium_experiment",
    "equilibrium_moment_estimate",
    "extract_minimizers",
    "fenchel_gap",
    "flatness_check",
    "gen_eig_min",
    "lower_bound",
    "marginal_moments",
    "nonneg_test",
    "orthonormal_basis",
    "pell_check",
    "pstar_density",
    "psd_solve",
    "pushforward_moments",
    "recover_dual",
    "reproducing_check",
    "solve_logdet_primal",
    "solve_sdp",
    "support_score",
    "sym_eig",
    "upper_bound",
    "upper_bound_pushforward",
]
