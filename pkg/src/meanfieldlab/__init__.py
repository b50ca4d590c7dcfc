"""Simulation laboratory for moderately interacting particle flows with
cut-off pair interaction and local velocity alignment."""

from .concentration import (
    ConcentrationEstimate,
    deviation_statistics,
    empirical_fourth_moment,
    estimate_set_probability,
    fourth_moment_oracle,
    reference_bound,
    set_membership,
)
from .coupling import (
    DeviationRecord,
    ExceedanceEstimate,
    coupled_trials,
    estimate_exceedance,
    phase_sup_distance,
    run_coupled_trial,
    sweep_exceedance,
)
from .dynamics import (
    IntegrationError,
    IntegratorConfig,
    acceleration,
    accelerations,
    auto_config,
    evolve,
    stable_dt,
    step,
)
from .ensemble import (
    DensityBoundReport,
    InitialLaw,
    PhaseEnsemble,
    convolved_envelope,
    convolved_force,
    convolved_mollifier_grad,
    density_bound_estimates,
    local_velocity,
    read_ensemble_csv,
    sample_initial,
    write_ensemble_csv,
)
from .kernels import (
    ModelParams,
    cutoff_h,
    force_bound,
    linear_drift,
    lipschitz_envelope,
    mollifier,
    mollifier_grad,
    mollifier_grad_bound,
    newtonian_force,
    velocity_cutoff,
)
from .scaling import (
    ExponentSet,
    ScalingReport,
    attach_scaling,
    compute_n,
    derive_scaling,
    n_components,
    theoretical_bound,
    validate_exponents,
    vartheta_admissible,
)

__version__ = "0.1.0"
