"""Information scrambling on spin-1/2 chains: OTOCs computed directly and from
two-point-measurement (wing-flap) statistics, plus the work-based thermodynamics."""

__version__ = "0.1.0"

from .spin import (
    ChainSpec,
    SpinOperator,
    build_h0,
    build_h1,
    build_h2,
    build_wingflap,
    embed_local,
    pauli,
)
from .spectral import (
    DensityMatrix,
    ProjectorFamily,
    SpectralDecomposition,
    eig_hermitian,
    matrix_function,
    operator_exponential,
    propagator,
    spectral_projectors,
    thermal_state,
)
from .scrambling import (
    commutator_measure,
    heisenberg_wingflap,
    infinite_temperature_otoc,
    otoc,
    square_commutator_expectation,
)
from .tpm import (
    Moments,
    OutcomeDistribution,
    characteristic_function,
    dissipation_check,
    jarzynski_check,
    linear_response_gap,
    moments,
    pinsker_gap,
    relative_entropy,
    service_state_work,
    tpm_distribution,
    transition_matrix,
    verify_otoc_identity,
)
