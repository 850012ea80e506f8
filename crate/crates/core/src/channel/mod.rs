//! Delay-Doppler channel: profiles, integer taps, gain draws, the sparse
//! effective channel and the `Ω` matrices.

pub mod dense;
mod effective;
mod profile;
mod realization;
mod taps;

pub use effective::{build_omega, ChannelGeometry, Omega, SparseEffectiveChannel};
pub use profile::{db_to_linear, ChannelProfile, PathSpec};
pub use realization::{awgn, cn, sample_channel, ChannelRealization};
pub use taps::{quantize_profile, ChannelTaps, Tap};
