"""Finite-size spectral densities of structured non-Hermitian random matrices.

Analytic densities for M = S + L X R (diagonal source S, positive diagonal
deformations L and R, i.i.d. complex Gaussian noise X) and for a rank-one
off-diagonal source, plus densities of inverse spectra, all at finite
matrix size.  A reproducible Monte Carlo engine estimates the same
densities from sampled eigenvalues, and a statistical comparator ties the
two together.  The ``density`` console script drives everything from TOML
configs.
"""

from ._scan import density_at, integrated_mass, map_density, resolve_workers
from .blocks import (
    BlockValue,
    PoleSystem,
    bosonic_reg,
    chgue_bosonic_check,
    fermionic_reg,
    fermionic_unreg,
    merge_close_poles,
    residue_sum,
    stable_pole_sum,
)
from .errors import (
    AccuracyError,
    DomainError,
    GeometryMismatchError,
    InsufficientSamplesError,
    InvalidInputError,
    NearSingularError,
    NumericalFailureError,
    SingularJetError,
    SpecDensError,
)
from .linalg import as_complex_matrix, eigenvalues
from .model import (
    EnsembleGroup,
    GridScan,
    LineScan,
    MultiplicityVector,
    RankOneNonNormalEnsemble,
    ScanGeometry,
    StructuredEnsemble,
    alpha_pair,
    alpha_pair_indep,
    build_ensemble,
    merge_multiplicities,
)
from .montecarlo import (
    ComparisonReport,
    DensityProfile,
    analytic_profile,
    compare,
    empirical_density,
    realize,
    sample_ginibre,
)
from .nonnormal import KPlusMinus, nn_bosonic, nn_density, nn_fermionic, nn_generating
from .normal_density import (
    DensityPoint,
    ginibre_density,
    ginibre_inverse_density,
    generating_reg,
    inverse_generating,
    spectral_density,
    spectral_density_inverse,
    spectral_density_point,
)
from .specfun import (
    Jet,
    bessel_i0,
    bessel_i0_scaled,
    gamma_inc0,
    harmonic_number,
    laguerre,
    mod_laguerre,
    numerator_jet,
    tricomi_u,
)

__version__ = "0.1.0"
