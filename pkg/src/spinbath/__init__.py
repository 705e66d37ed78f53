"""Exact expectation-value dynamics of the central-spin bath model."""
from .analysis import (
    DecoherenceReport,
    analyze,
    decoherence_time,
    envelope_bounds,
    fluctuation_stats,
    recurrence_search,
    return_amplitude,
)
from .closed_form import (
    ConsistencyError,
    Curve,
    case2_expectation,
    case2_phasor,
    case3_expectation,
    expectation,
    gamma0,
    gamma1,
    log_r1_abs2,
    r1,
    r1_abs2,
    r1_log_polar,
    r2,
    r3,
    sample_curve,
)
from .ensemble import EnsembleStats, SamplingPolicy, ensemble_average, sample_model
from .model import (
    EnvQubit,
    ModelConfig,
    ObservableSpec,
    ParticleObservable,
    SystemObservable,
    SystemQubit,
    TimeGrid,
    case1_spec,
    case2_spec,
    case3_spec,
    identity_particle_block,
    identity_system_block,
    spin_x_block,
    spin_z_block,
)

__version__ = "0.1.0"
