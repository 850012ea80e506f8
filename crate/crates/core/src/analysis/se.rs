use std::fmt;
use std::str::FromStr;

use crate::analysis::sinr::{sinr_lower_bound, LinkParams};
use crate::channel::ChannelTaps;
use crate::error::{Error, Result};
use crate::estimators::ep_mse;
use crate::grid::DdGrid;

/// Transmission and estimation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    SpNi,
    SpI,
    Ep,
    Cpa,
    PerfectCsi,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::SpNi, Scheme::SpI, Scheme::Ep, Scheme::Cpa, Scheme::PerfectCsi];

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::SpNi => "SP-NI",
            Scheme::SpI => "SP-I",
            Scheme::Ep => "EP",
            Scheme::Cpa => "CPA",
            Scheme::PerfectCsi => "perfect-CSI",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.as_str() {
            "spni" => Ok(Scheme::SpNi),
            "spi" => Ok(Scheme::SpI),
            "ep" => Ok(Scheme::Ep),
            "cpa" => Ok(Scheme::Cpa),
            "perfectcsi" | "perfect" => Ok(Scheme::PerfectCsi),
            _ => Err(Error::UnknownScheme(s.trim().to_string())),
        }
    }
}

/// Embedded-pilot overhead `(2 l_max + 1)(4 k_max + 1) / MN`.
pub fn ep_overhead(l_max: usize, k_max: usize, grid: &DdGrid) -> Result<f64> {
    let needed = (2 * l_max + 1) * (4 * k_max + 1);
    if needed > grid.mn() {
        return Err(Error::Layout {
            needed,
            available: grid.mn(),
        });
    }
    Ok(needed as f64 / grid.mn() as f64)
}

/// Channel-estimate MSE predicted for `scheme` when the Gram matrix of the
/// known symbols is replaced by its mean `MN·P·I`.
///
/// * SP-NI: pilot energy `σ²_p` per bin against `σ²_h σ²_d + σ²_w`.
/// * SP-I: the perfect-data limit, pilot plus known data (unit energy)
///   against `σ²_w`.
/// * CPA: a full unit-power pilot frame against `σ²_w`.
/// * EP: the single-pilot closed form.
/// * perfect CSI: zero.
pub fn nominal_mse(scheme: Scheme, params: &LinkParams, taps: &ChannelTaps) -> Result<f64> {
    let mn = params.grid.mn() as f64;
    let (d, p, w) = (params.split.sigma2_d(), params.split.sigma2_p(), params.sigma2_w);
    let sum = |energy: f64, c: f64| -> f64 {
        taps.taps()
            .iter()
            .map(|t| if t.var > 0.0 { 1.0 / (mn * energy / c + 1.0 / t.var) } else { 0.0 })
            .sum()
    };
    Ok(match scheme {
        Scheme::SpNi => sum(p, params.sigma2_h * d + w),
        Scheme::SpI => sum(p + d, w),
        Scheme::Cpa => sum(1.0, w),
        Scheme::Ep => {
            let pilot = ((2 * params.l_max + 1) * (4 * params.k_max + 1)) as f64;
            ep_mse(taps, pilot, w)
        }
        Scheme::PerfectCsi => 0.0,
    })
}

/// Spectral efficiency in bit/s/Hz given the channel-estimate MSE `mse`.
///
/// Superimposed schemes use the SINR lower bound at `params.split`; EP and
/// CPA send data at unit power and lose `η` and half the frames respectively.
pub fn spectral_efficiency(scheme: Scheme, params: &LinkParams, mse: f64) -> Result<f64> {
    params.validate()?;
    if !(mse >= 0.0 && mse <= params.sigma2_h * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "mse {mse} must lie in [0, σ²_h = {}]",
            params.sigma2_h
        )));
    }
    let unit_power_sinr = (params.sigma2_h - mse) / (params.sigma2_w + mse);
    let se = match scheme {
        Scheme::SpNi | Scheme::SpI => (1.0 + sinr_lower_bound(params, mse)).log2(),
        Scheme::Ep => {
            let eta = ep_overhead(params.l_max, params.k_max, &params.grid)?;
            (1.0 - eta) * (1.0 + unit_power_sinr).log2()
        }
        Scheme::Cpa => 0.5 * (1.0 + unit_power_sinr).log2(),
        Scheme::PerfectCsi => (1.0 + params.sigma2_h / params.sigma2_w).log2(),
    };
    Ok(se.max(0.0))
}
