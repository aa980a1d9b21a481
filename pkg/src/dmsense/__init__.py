"""Distributed multistatic MIMO sensing: CRLBs, signal synthesis, MLE, CLI."""

from .scenario import (
    SPEED_OF_LIGHT,
    DegenerateGeometryError,
    GeometricSpread,
    NodeSet,
    PathParams,
    RadioConfig,
    Scenario,
    ScenarioValidationError,
    Target,
    compute_delay,
    compute_doppler,
    geometric_spread,
    path_params,
)
from .waveform import (
    GAUSSIAN_OCDM,
    GAUSSIAN_OFDM,
    CrossCorr,
    QuadratureError,
    WaveformError,
    WaveformModel,
    WaveformMoments,
    ambiguity_map,
    corr_value_grid,
    cross_corr,
    delay_resolution,
    doppler_resolution,
    make_waveform,
    moments,
    per_transmitter,
)
from .fim import (
    CrlbReport,
    FimBundle,
    MultiCrlbReport,
    MultiFim,
    SafetyMetrics,
    SingularInformationError,
    TargetCrlb,
    TightnessReport,
    crlb_multi,
    crlb_single,
    crlb_static,
    multi_target_fim,
    safety_metrics,
    single_target_fim,
    tightness_check,
)
from .signals import (
    MleGrid,
    MleResult,
    MonteCarloReport,
    ReceivedSignal,
    dump_received,
    estimate_rcs,
    llf_multi,
    llf_single,
    load_received,
    mle_multi_decoupled,
    mle_single,
    monte_carlo,
    synthesize,
)

__version__ = "0.1.0"
