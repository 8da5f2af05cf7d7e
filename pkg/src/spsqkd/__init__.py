"""Pulse-level simulation and finite-key analysis for single-photon-source
time-bin/phase QKD over lossy telecom fiber."""

from .channel import (
    BasisRates,
    ChannelParams,
    DetectorParams,
    expected_basis_rates,
    expected_gain,
    expected_qber,
    noise_prob_per_gate,
    transmittance,
)
from .config import DEFAULTS, RunConfig
from .correlate import (
    CoincidenceHistogram,
    G2Curve,
    G2FitResult,
    TimestampSeries,
    cross_correlate,
    fit_g2,
    g2_model,
    load_timestamps,
    normalize_g2,
    pulsed_g2,
)
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    InsufficientStatisticsError,
    SpsQkdError,
)
from .keyrate import (
    KeyRateInput,
    KeyRateReport,
    SecurityParams,
    SweepPoint,
    binary_entropy,
    cutoff_loss_db,
    grouped_secure_key_rate,
    ie_bb84,
    ie_rfi,
    secure_key_rate,
    sifted_block_length,
    sweep_loss,
    untagged_ratio,
)
from .optics import (
    BASES,
    OpticsParams,
    QubitState,
    combine_flip_probabilities,
    detection_distribution,
    effective_phase_error,
    fringe_visibility,
    phase_error_from_visibility,
    pmd_polarization_qber,
)
from .protocol import (
    RfiGroup,
    SiftedResult,
    background_correct,
    background_uncorrect,
    c_statistic,
    estimate_theta,
    rfi_group,
    sift,
)
from .simulate import OUTCOMES, TallySet, TrialConfig, run, split_run
from .source import (
    PhotonNumberDist,
    SourceParams,
    coherence_length,
    multi_photon_bound,
    photon_number_distribution,
)

__version__ = "0.1.0"
