//! Closed-form link metrics: the SINR lower bound and its optimal pilot
//! power, spectral efficiency per scheme and operation counts.

mod complexity;
mod se;
mod sinr;

pub use complexity::{complexity_counts, ComplexityParams};
pub use se::{ep_overhead, nominal_mse, spectral_efficiency, Scheme};
pub use sinr::{optimal_for, optimal_pilot_power, sinr_lower_bound, LinkParams, OptimalPower, RootChoice, SinrPolynomial};
