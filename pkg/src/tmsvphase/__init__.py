"""Adaptive phase estimation with two-mode squeezed vacuum and parity detection.

A library plus CLI for simulating Bayesian feedback phase estimation in a
Mach-Zehnder interferometer: signal physics, a Fourier-series posterior on
the period-pi circle, sharpness-maximizing phase control, and Monte Carlo
ensembles benchmarked against the Heisenberg limit and Cramer-Rao bound.
"""

__version__ = "0.1.0"

from .bayes_filter import (
    FourierPosterior,
    Outcome,
    density_curve,
    estimate,
    flat_prior,
    interval_mass,
    sharpness,
    shifted,
    static_posterior,
    update,
    wrapped_error,
)
from .errors import (
    CapacityError,
    DegenerateUpdateError,
    InvalidParameterError,
    OracleScaleError,
    PrecisionCapError,
    TableConstructionError,
    TmsvPhaseError,
    UndefinedEstimateError,
)
from .fock_oracle import oracle_even_probability, simulate_mzi, thin
from .montecarlo import (
    EnsembleStats,
    FixedPhase,
    RandomPhase,
    TrialConfig,
    TrialRecord,
    grid_configs,
    run_ensemble,
    run_record,
    simulate_record,
    sweep,
)
from .policy import (
    AdaptivePolicy,
    ControlPolicy,
    StaticPolicy,
    choose_phase,
    initial_phase,
    predicted_average_sharpness,
)
from .signal_model import (
    TERM_COUNT_PRESETS,
    LikelihoodTable,
    PortDistribution,
    ReferenceLimits,
    TmsvSpec,
    build_likelihood_table,
    even_probability,
    fisher_information,
    lossy_signal,
    parity_closed_form,
    parity_fock,
    port_distribution,
    reference_limits,
    tmsv_weights,
)
