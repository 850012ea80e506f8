//! Link-level simulation of OTFS with superimposed pilots.
//!
//! The crate covers the delay-Doppler transform chain, a sparse channel model,
//! superimposed-pilot frames, MMSE channel estimators (non-iterative,
//! iterative data-aided, embedded pilot and full pilot frame), a damped
//! message-passing detector, closed-form link analysis and a seeded
//! Monte-Carlo harness.

pub mod analysis;
pub mod channel;
pub mod detector;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod linalg;
pub mod modem;
pub mod sim;
pub mod transform;

pub use analysis::{
    complexity_counts, ep_overhead, optimal_pilot_power, sinr_lower_bound, spectral_efficiency, ComplexityParams,
    LinkParams, OptimalPower, Scheme, SinrPolynomial,
};
pub use channel::{
    awgn, build_omega, quantize_profile, sample_channel, ChannelGeometry, ChannelProfile, ChannelRealization,
    ChannelTaps, Omega, PathSpec, SparseEffectiveChannel, Tap,
};
pub use detector::{cancel_pilots, detect, DetectOutcome, MpConfig, MpState};
pub use error::{Error, Result};
pub use estimators::{
    cpa_estimate, ep_estimate, mse_lower_bound, perfect_data_mse, spi_run, spi_step, spni_error_stats, spni_estimate,
    EpLayout, EstimationResult, EstimatorKind, InterferenceModel, SpiOutcome, SpiStop,
};
pub use grid::{DdFrame, DdGrid, TfFrame};
pub use linalg::HermitianMatrix;
pub use modem::{ConstellationSpec, PilotSequence, PowerSplit};
pub use transform::{add_cp, remove_cp, OtfsOperators, Pulse};

pub use num_complex::Complex64;
