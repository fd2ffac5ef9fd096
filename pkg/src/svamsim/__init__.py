"""Single-RF-chain beam alignment simulations built on sliding sub-aperture
combining, with estimation-bound analysis, Bayesian angle/gain inference,
adaptive beam controllers, and a seeded Monte Carlo harness."""

from .arrays import (
    AngularGrid,
    RegionOfInterest,
    SlaGeometry,
    manifold_complement_and_projector,
    manifold_matrix,
    sla_sampling_matrix,
    ula_manifold,
    ula_manifold_derivative,
)
from .beams import (
    BeamSpec,
    Beamformer,
    CodebookNode,
    FirDesignParams,
    HierarchicalCodebook,
    beam_gain,
    beam_gain_profile,
    build_hierarchical_codebook,
    design_beamformer,
    export_taps,
)
from .channel import ChannelParams, antenna_snapshot, combine
from .sensing import (
    MeasurementHistory,
    SegmentMeasurement,
    SvamConfig,
    benchmark_combiner,
    measure_segment,
    svam_combiner,
)
from .crb import (
    CrbResult,
    crb_benchmark,
    crb_general,
    crb_svam,
    crb_unknown_alpha,
    gain_condition_sufficient,
    gain_term,
)
from .inference import (
    AlphaPosterior,
    alpha_posterior,
    approx_log_likelihood,
    gamma_mle,
    known_alpha_posterior,
    likelihood_terms,
    posterior_pmf,
)
from .adaptive import (
    AdaptConfig,
    HierNode,
    SegmentLog,
    TrialRecord,
    cumul_peak,
    hier_beam_search,
    run_alignment,
    run_hiepm_known_alpha,
    select_codeword_posterior_matching,
    select_next_beam,
)
from .harness import (
    ExperimentConfig,
    MetricRow,
    bootstrap_rmse_interval,
    config_from_file,
    crb_table,
    emit_csv,
    noise_variance_from_snr,
    rmse,
    run_adaptive_trials,
    run_experiment,
    run_hiepm_trials,
    theta_from_u,
    u_from_theta,
    write_crb_csv,
    write_trajectories,
)

__all__ = [
    "AngularGrid",
    "RegionOfInterest",
    "SlaGeometry",
    "manifold_complement_and_projector",
    "manifold_matrix",
    "sla_sampling_matrix",
    "ula_manifold",
    "ula_manifold_derivative",
    "BeamSpec",
    "Beamformer",
    "CodebookNode",
    "FirDesignParams",
    "HierarchicalCodebook",
    "beam_gain",
    "beam_gain_profile",
    "build_hierarchical_codebook",
    "design_beamformer",
    "export_taps",
    "ChannelParams",
    "antenna_snapshot",
    "combine",
    "MeasurementHistory",
    "SegmentMeasurement",
    "SvamConfig",
    "benchmark_combiner",
    "measure_segment",
    "svam_combiner",
    "CrbResult",
    "crb_benchmark",
    "crb_general",
    "crb_svam",
    "crb_unknown_alpha",
    "gain_condition_sufficient",
    "gain_term",
    "AlphaPosterior",
    "alpha_posterior",
    "approx_log_likelihood",
    "gamma_mle",
    "known_alpha_posterior",
    "likelihood_terms",
    "posterior_pmf",
    "AdaptConfig",
    "HierNode",
    "SegmentLog",
    "TrialRecord",
    "cumul_peak",
    "hier_beam_search",
    "run_alignment",
    "run_hiepm_known_alpha",
    "select_codeword_posterior_matching",
    "select_next_beam",
    "ExperimentConfig",
    "MetricRow",
    "bootstrap_rmse_interval",
    "config_from_file",
    "crb_table",
    "emit_csv",
    "noise_variance_from_snr",
    "rmse",
    "run_adaptive_trials",
    "run_experiment",
    "run_hiepm_trials",
    "theta_from_u",
    "u_from_theta",
    "write_crb_csv",
    "write_trajectories",
]

__version__ = "0.1.0"
