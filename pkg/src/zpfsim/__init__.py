"""Zero-point field simulation toolkit.

Samples Gaussian vacuum field modes with the cubic spectral density,
integrates stochastic particle trajectories driven by the sampled force,
checks the boost invariance of the spectrum, evolves Wigner functions
under the truncated Moyal hierarchy, and compares stationary trajectory
statistics against closed-form quantum references.
"""

from .boost import BoostReport, boost_modes, boost_spectrum_check
from .dynamics import (
    ComparisonReport,
    EnsembleStats,
    ParticleState,
    SedConfig,
    Trajectory,
    drift_force,
    integrate_trajectory,
    radiation_reaction_force,
    run_ensemble,
    stationary_report,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    GridEscapeError,
    IntegrationBlowupError,
)
from .field import (
    FieldRealization,
    ModeSet,
    Periodogram,
    build_mode_set,
    estimate_spectrum,
    eval_field,
    eval_field_grid,
    force_psd,
    realization_from_csv,
    realization_to_csv,
    sample_vacuum_amplitudes,
    synth_field_grid,
)
from .oracles import (
    GaussianWignerParams,
    QuantumMoments,
    QuarticGroundState,
    oscillator_ground_oracle,
    polynomial_ground_state,
    quartic_ground_oracle,
    rotate_gaussian,
    vacuum_wigner_mode,
)
from .potentials import PotentialSpec, harmonic, quartic
from .units import UnitSystem
from .wigner import (
    HamiltonianSpec,
    MoyalOrder,
    ScalingReport,
    WignerGrid,
    cfl_limit,
    evolve_wigner,
    expectation,
    gaussian_grid,
    grid_from_binary,
    grid_from_csv,
    grid_to_binary,
    grid_to_csv,
    hbar_scaling_study,
    l2_distance,
    marginal,
    moyal_rhs,
)

__version__ = "0.1.0"

__all__ = [
    "BoostReport",
    "ComparisonReport",
    "ConfigurationError",
    "ConvergenceError",
    "EnsembleStats",
    "FieldRealization",
    "GaussianWignerParams",
    "GridEscapeError",
    "HamiltonianSpec",
    "IntegrationBlowupError",
    "ModeSet",
    "MoyalOrder",
    "ParticleState",
    "Periodogram",
    "PotentialSpec",
    "QuantumMoments",
    "QuarticGroundState",
    "ScalingReport",
    "SedConfig",
    "Trajectory",
    "UnitSystem",
    "WignerGrid",
    "boost_modes",
    "boost_spectrum_check",
    "build_mode_set",
    "cfl_limit",
    "drift_force",
    "estimate_spectrum",
    "eval_field",
    "eval_field_grid",
    "evolve_wigner",
    "expectation",
    "force_psd",
    "gaussian_grid",
    "grid_from_binary",
    "grid_from_csv",
    "grid_to_binary",
    "grid_to_csv",
    "harmonic",
    "hbar_scaling_study",
    "integrate_trajectory",
    "l2_distance",
    "marginal",
    "moyal_rhs",
    "oscillator_ground_oracle",
    "polynomial_ground_state",
    "quartic",
    "quartic_ground_oracle",
    "radiation_reaction_force",
    "realization_from_csv",
    "realization_to_csv",
    "rotate_gaussian",
    "run_ensemble",
    "sample_vacuum_amplitudes",
    "stationary_report",
    "synth_field_grid",
    "vacuum_wigner_mode",
]
