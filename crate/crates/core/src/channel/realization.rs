use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::taps::ChannelTaps;
use crate::error::{Error, Result};

/// One draw of the path gains for a fixed tap set.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: ChannelTaps,
    pub h: Vec<Complex64>,
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
#[inline]
pub fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws independent `h_i ~ CN(0, var_i)`.
pub fn sample_channel<R: Rng + ?Sized>(taps: &ChannelTaps, rng: &mut R) -> ChannelRealization {
    let h = taps.taps().iter().map(|t| cn(rng, t.var)).collect();
    ChannelRealization {
        taps: taps.clone(),
        h,
    }
}

/// I.i.d. `CN(0, var)` noise generated directly in the delay-Doppler domain.
pub fn awgn<R: Rng + ?Sized>(len: usize, var: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(var.is_finite() && var >= 0.0) {
        return Err(Error::invalid(format!("noise variance must be non-negative, got {var}")));
    }
    Ok((0..len).map(|_| cn(rng, var)).collect())
}
