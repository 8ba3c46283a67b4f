"""Simulation laboratory for measurement-based feedback state preparation on a qutrit."""

from .qcore import (
    DimensionError,
    SpectralDecomposition,
    StateValidityError,
    ValidationReport,
    basis_state,
    fidelity,
    fidelity_pure_target,
    matrix_exponential,
    maximally_mixed,
    spectral_decomposition,
    validate_density,
)
from .channels import (
    ControlFamily,
    MeasurementModel,
    ParameterError,
    QuantumChannel,
    amplitude_damping,
    apply_channel,
    choi_matrix,
    condition_on_outcome,
    control_unitary,
    default_control_family,
    depolarizing,
    imprecise_measurement,
    is_cptp,
    outcome_probabilities,
    random_permutation,
    terminal_measurement,
)
from .controllers import (
    BasicTable,
    ControlAction,
    FullState,
    OpenLoop,
    Observation,
    OutcomePair,
    Policy,
    Stochastic,
    basic_policy,
    derive_basic_gains,
    policy_act,
)
from .dynamics import (
    EnvConfig,
    EpisodeTrace,
    FilterDivergenceError,
    StepRecord,
    estimate_average_state,
    filter_update,
    run_episode,
    step_nominal,
    step_true,
)
from .rngstream import RngStream

__version__ = "0.1.0"
