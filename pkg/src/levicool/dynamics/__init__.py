from .engine import (
    Ensemble,
    EnsembleSeries,
    config_hash,
    fit_heating_rates,
    measure,
    noise_scales,
    run_ensemble,
    run_trajectory,
    step,
)
from .model import (
    DOF_LABELS,
    DofSystem,
    FeedbackConfig,
    InstabilityError,
    IntegratorConfig,
    MeasurementModel,
    NonConvergenceError,
    SimState,
    SimulationError,
    Thermal,
    trajectory_generator,
)
from .steady import (
    LimitPoint,
    SteadyState,
    SweepPoint,
    feedback_on,
    minimum_point,
    optimal_limit,
    run_dimensionless,
    scaled_gain,
    steady_state_occupation,
    sweep_eta,
    sweep_gain,
)
