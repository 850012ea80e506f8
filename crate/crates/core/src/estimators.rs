//! MMSE channel estimators: superimposed pilots without and with data aid,
//! the full pilot frame, and the embedded pilot with guard zeros.

use std::sync::Arc;

use num_complex::Complex64;

use crate::channel::{build_omega, ChannelGeometry, ChannelTaps, Omega, SparseEffectiveChannel};
use crate::detector::{cancel_pilots, detect, MpConfig};
use crate::error::{check_len, Error, Result};
use crate::grid::{DdFrame, DdGrid};
use crate::linalg::HermitianMatrix;
use crate::modem::{PilotSequence, PowerSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    SpNi,
    SpI,
    Cpa,
    Ep,
    Perfect,
}

impl EstimatorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EstimatorKind::SpNi => "SP-NI",
            EstimatorKind::SpI => "SP-I",
            EstimatorKind::Cpa => "CPA",
            EstimatorKind::Ep => "EP",
            EstimatorKind::Perfect => "perfect",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub h_hat: Vec<Complex64>,
    /// Error covariance `Σ`.
    pub err_cov: HermitianMatrix,
    /// `Tr(Σ)`.
    pub mse: f64,
    pub method: EstimatorKind,
    /// Diagonal loading applied when the normal matrix failed to factor.
    pub jitter: Option<f64>,
}

/// Identity-scaled covariance of the noise plus data interference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceModel {
    pub scalar_var: f64,
}

impl InterferenceModel {
    /// Data treated as interference: `σ²_h σ²_d + σ²_w`.
    pub fn sp_ni(taps: &ChannelTaps, split: PowerSplit, sigma2_w: f64) -> Self {
        Self {
            scalar_var: taps.sigma2_h() * split.sigma2_d() + sigma2_w,
        }
    }

    /// Detected data treated as an independent draw: `2 σ²_h σ²_d + σ²_w`.
    pub fn sp_i(taps: &ChannelTaps, split: PowerSplit, sigma2_w: f64) -> Self {
        Self {
            scalar_var: 2.0 * taps.sigma2_h() * split.sigma2_d() + sigma2_w,
        }
    }

    pub fn noise_only(sigma2_w: f64) -> Self {
        Self { scalar_var: sigma2_w }
    }
}

/// `Σ = (Ω^H Ω / c + C_h⁻¹)⁻¹`, `ĥ = Σ Ω^H y / c`, evaluated in the
/// prior-whitened form `Σ = D (D G D / c + I)⁻¹ D` with `D = C_h^{1/2}` so that
/// zero-power taps and zero pilots need no special casing.
fn mmse_solve(
    omega: &Omega,
    y: &[Complex64],
    vars: &[f64],
    c: f64,
    method: EstimatorKind,
) -> Result<EstimationResult> {
    check_len(omega.q(), vars.len())?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("interference variance must be positive, got {c}")));
    }
    let d: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
    let mut a = omega.gram().scale_sym(&d);
    let q = vars.len();
    for i in 0..q {
        for j in 0..q {
            a[(i, j)] /= c;
        }
    }
    a.add_diag(1.0);
    let mut jitter = None;
    let chol = match a.cholesky() {
        Ok(ch) => ch,
        Err(_) => {
            let j = 1e-12 * a.trace();
            log::warn!("normal matrix not positive definite; loading diagonal by {j:e}");
            a.add_diag(j);
            jitter = Some(j);
            a.cholesky()?
        }
    };
    let sigma = chol.inverse().scale_sym(&d);
    let b: Vec<Complex64> = omega.adjoint_mul(y)?.into_iter().map(|v| v / c).collect();
    let h_hat = sigma.mul_vec(&b);
    let mse = sigma.trace();
    Ok(EstimationResult {
        h_hat,
        err_cov: sigma,
        mse,
        method,
        jitter,
    })
}

/// Non-iterative estimate treating data as interference.
pub fn spni_estimate(
    y: &[Complex64],
    omega_p: &Omega,
    taps: &ChannelTaps,
    split: PowerSplit,
    sigma2_w: f64,
) -> Result<EstimationResult> {
    let c = InterferenceModel::sp_ni(taps, split, sigma2_w).scalar_var;
    mmse_solve(omega_p, y, &taps.vars(), c, EstimatorKind::SpNi)
}

/// Per-sample variance of the residual after pilot cancellation:
/// `σ²_p B_h + σ²_w`.
pub fn spni_error_stats(result: &EstimationResult, split: PowerSplit, sigma2_w: f64) -> f64 {
    split.sigma2_p() * result.mse + sigma2_w
}

/// One data-aided estimate from the previous hard decisions `x_hat_d`
/// (amplitude included).
pub fn spi_step(
    y: &[Complex64],
    omega_p: &Omega,
    x_hat_d: &[Complex64],
    geometry: &ChannelGeometry,
    split: PowerSplit,
    sigma2_w: f64,
) -> Result<EstimationResult> {
    let model = InterferenceModel::sp_i(geometry.taps(), split, sigma2_w);
    spi_step_with_model(y, omega_p, x_hat_d, geometry, model)
}

/// [`spi_step`] with an explicit interference model.
pub fn spi_step_with_model(
    y: &[Complex64],
    omega_p: &Omega,
    x_hat_d: &[Complex64],
    geometry: &ChannelGeometry,
    model: InterferenceModel,
) -> Result<EstimationResult> {
    let omega = omega_p.add(&build_omega(x_hat_d, geometry)?)?;
    mmse_solve(&omega, y, &geometry.taps().vars(), model.scalar_var, EstimatorKind::SpI)
}

/// Stopping rule of the iterative estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiStop {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpiStop {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpiOutcome {
    pub estimate: EstimationResult,
    /// Constellation indices of the final decisions.
    pub symbols: Vec<usize>,
    /// Non-iterative starting point and its decisions.
    pub initial: EstimationResult,
    pub initial_symbols: Vec<usize>,
    /// Data-aided estimation steps performed.
    pub iterations: usize,
    /// Message-passing rounds summed over every detection call.
    pub mp_iterations: usize,
    /// Clamped interference variances summed over every detection call.
    pub clamped: usize,
}

/// Detects data given a channel estimate with MSE `mse`.
fn detect_with_estimate(
    y: &[Complex64],
    h_hat: &[Complex64],
    mse: f64,
    geometry: &Arc<ChannelGeometry>,
    pilots: &PilotSequence,
    split: PowerSplit,
    sigma2_w: f64,
    mp: &MpConfig,
) -> Result<crate::detector::DetectOutcome> {
    let h_eff = SparseEffectiveChannel::new(geometry.clone(), h_hat.to_vec())?;
    let y_d = cancel_pilots(y, &h_eff, pilots)?;
    let floor = split.sigma2_p() * mse + sigma2_w;
    detect(&y_d, &h_eff.scaled(split.sigma2_d().sqrt()), floor, mp)
}

/// Data vector `√σ²_d α_j` for decided indices.
pub fn symbols_to_vec(symbols: &[usize], mp: &MpConfig, sigma2_d: f64) -> Vec<Complex64> {
    let amp = sigma2_d.sqrt();
    symbols.iter().map(|&j| mp.constellation.points()[j] * amp).collect()
}

/// Non-iterative detection: the estimate and the decisions made with it.
pub fn spni_detect(
    y: &[Complex64],
    pilots: &PilotSequence,
    omega_p: &Omega,
    geometry: &Arc<ChannelGeometry>,
    split: PowerSplit,
    sigma2_w: f64,
    mp: &MpConfig,
) -> Result<(EstimationResult, crate::detector::DetectOutcome)> {
    let est = spni_estimate(y, omega_p, geometry.taps(), split, sigma2_w)?;
    let out = detect_with_estimate(y, &est.h_hat, est.mse, geometry, pilots, split, sigma2_w, mp)?;
    Ok((est, out))
}

/// Alternates data-aided estimation and detection, starting from the
/// non-iterative decisions, until `‖ĥ⁽ⁿ⁾ − ĥ⁽ⁿ⁻¹⁾‖² < tol` or `max_iter` steps.
#[allow(clippy::too_many_arguments)]
pub fn spi_run(
    y: &[Complex64],
    pilots: &PilotSequence,
    omega_p: &Omega,
    geometry: &Arc<ChannelGeometry>,
    split: PowerSplit,
    sigma2_w: f64,
    mp: &MpConfig,
    stop: SpiStop,
) -> Result<SpiOutcome> {
    if stop.max_iter == 0 {
        return Err(Error::invalid("the iterative estimator needs max_iter ≥ 1"));
    }
    let (initial, first) = spni_detect(y, pilots, omega_p, geometry, split, sigma2_w, mp)?;
    let mut prev_h = initial.h_hat.clone();
    let mut symbols = first.symbols.clone();
    let mut mp_iterations = first.iterations;
    let mut clamped = first.clamped;
    let mut estimate = initial.clone();
    let mut iterations = 0;
    while iterations < stop.max_iter {
        iterations += 1;
        let x_hat = symbols_to_vec(&symbols, mp, split.sigma2_d());
        estimate = spi_step(y, omega_p, &x_hat, geometry, split, sigma2_w)?;
        let out = detect_with_estimate(y, &estimate.h_hat, estimate.mse, geometry, pilots, split, sigma2_w, mp)?;
        symbols = out.symbols;
        mp_iterations += out.iterations;
        clamped += out.clamped;
        let delta: f64 = estimate.h_hat.iter().zip(&prev_h).map(|(a, b)| (a - b).norm_sqr()).sum();
        prev_h = estimate.h_hat.clone();
        if delta < stop.tol {
            break;
        }
    }
    Ok(SpiOutcome {
        estimate,
        symbols,
        initial_symbols: first.symbols,
        initial,
        iterations,
        mp_iterations,
        clamped,
    })
}

/// Estimate from a frame carrying only pilots (no data interference).
pub fn cpa_estimate(
    y_pilot_frame: &[Complex64],
    omega_full: &Omega,
    taps: &ChannelTaps,
    sigma2_w: f64,
) -> Result<EstimationResult> {
    mmse_solve(omega_full, y_pilot_frame, &taps.vars(), sigma2_w, EstimatorKind::Cpa)
}

/// Embedded-pilot frame layout: one pilot at `(l_p, k_p)` inside a guard of
/// delays `l_p ± l_max` and Dopplers `k_p ± 2 k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpLayout {
    pub l_p: usize,
    pub k_p: usize,
    pub l_max: usize,
    pub k_max: usize,
}

impl EpLayout {
    /// Pilot at `(⌊M/2⌋, ⌊N/2⌋)`.
    pub fn centered(grid: &DdGrid, l_max: usize, k_max: usize) -> Result<Self> {
        Self::new(grid, grid.m() / 2, grid.n() / 2, l_max, k_max)
    }

    pub fn new(grid: &DdGrid, l_p: usize, k_p: usize, l_max: usize, k_max: usize) -> Result<Self> {
        let needed = (2 * l_max + 1) * (4 * k_max + 1);
        let fits = l_p >= l_max && l_p + l_max < grid.m() && k_p >= 2 * k_max && k_p + 2 * k_max < grid.n();
        if needed > grid.mn() || !fits {
            return Err(Error::Layout {
                needed,
                available: grid.mn(),
            });
        }
        Ok(Self { l_p, k_p, l_max, k_max })
    }

    /// Bins taken by the pilot and its guard, `(2 l_max + 1)(4 k_max + 1)`.
    pub fn guard_bins(&self) -> usize {
        (2 * self.l_max + 1) * (4 * self.k_max + 1)
    }

    /// Pilot power: the energy of every guard bin moved onto the pilot.
    pub fn pilot_power(&self) -> f64 {
        self.guard_bins() as f64
    }

    pub fn is_guard(&self, l: usize, k: usize) -> bool {
        l.abs_diff(self.l_p) <= self.l_max && k.abs_diff(self.k_p) <= 2 * self.k_max
    }

    /// `true` for bins that carry data.
    pub fn data_mask(&self, grid: &DdGrid) -> Vec<bool> {
        (0..grid.mn())
            .map(|idx| {
                let (l, k) = grid.coords(idx);
                !self.is_guard(l, k)
            })
            .collect()
    }

    /// Frame with the pilot alone.
    pub fn pilot_frame(&self, grid: DdGrid) -> PilotSequence {
        let mut f = DdFrame::zeros(grid);
        f.set(self.l_p, self.k_p, Complex64::new(self.pilot_power().sqrt(), 0.0));
        PilotSequence::from_frame(f, self.pilot_power())
    }

    /// Data vector with the guard region zeroed.
    pub fn mask_data(&self, grid: &DdGrid, data: &[Complex64]) -> Result<DdFrame> {
        check_len(grid.mn(), data.len())?;
        let mask = self.data_mask(grid);
        let v = data
            .iter()
            .zip(mask)
            .map(|(d, m)| if m { *d } else { Complex64::new(0.0, 0.0) })
            .collect();
        DdFrame::from_vec(*grid, v)
    }
}

/// Per-tap scalar MMSE from the pilot response at `(l_p + l_i, k_p + k_i)`.
pub fn ep_estimate(
    y: &[Complex64],
    layout: &EpLayout,
    geometry: &ChannelGeometry,
    sigma2_w: f64,
) -> Result<EstimationResult> {
    let grid = geometry.grid();
    check_len(grid.mn(), y.len())?;
    let p = layout.pilot_power();
    let sp = p.sqrt();
    let pilot = grid.index(layout.l_p, layout.k_p);
    let q = geometry.q();
    let mut h_hat = Vec::with_capacity(q);
    let mut diag = Vec::with_capacity(q);
    for (i, t) in geometry.taps().taps().iter().enumerate() {
        let a = geometry.row(pilot, i);
        let alpha = geometry.alpha(a, i);
        let den = p * t.var + sigma2_w;
        if den > 0.0 {
            h_hat.push(alpha.conj() * y[a] * (t.var * sp / den));
            diag.push(sigma2_w * t.var / den);
        } else {
            h_hat.push(Complex64::new(0.0, 0.0));
            diag.push(0.0);
        }
    }
    let err_cov = HermitianMatrix::from_diag(&diag);
    Ok(EstimationResult {
        h_hat,
        mse: diag.iter().sum(),
        err_cov,
        method: EstimatorKind::Ep,
        jitter: None,
    })
}

/// `B_{h,EP} = Σ σ²_w v_i / (P v_i + σ²_w)`.
pub fn ep_mse(taps: &ChannelTaps, pilot_power: f64, sigma2_w: f64) -> f64 {
    taps.taps()
        .iter()
        .map(|t| {
            let den = pilot_power * t.var + sigma2_w;
            if den > 0.0 {
                sigma2_w * t.var / den
            } else {
                0.0
            }
        })
        .sum()
}

/// `Q² / (Q M N σ²_p / (σ²_h σ²_d + σ²_w) + σ̃²_h)`.
pub fn mse_lower_bound(taps: &ChannelTaps, split: PowerSplit, sigma2_w: f64, grid: &DdGrid) -> Result<f64> {
    let q = taps.q() as f64;
    let tilde = taps.sigma2_h_tilde()?;
    let c = taps.sigma2_h() * split.sigma2_d() + sigma2_w;
    if c <= 0.0 {
        return Err(Error::invalid("interference variance must be positive"));
    }
    Ok(q * q / (q * grid.mn() as f64 * split.sigma2_p() / c + tilde))
}

/// Error-covariance trace when the transmitted data is known exactly:
/// `Tr[(Ω^H Ω / σ²_w + C_h⁻¹)⁻¹]` with `Ω = Ω_p + Ω_d`.
pub fn perfect_data_mse(
    omega_p: &Omega,
    x_d_true: &[Complex64],
    geometry: &ChannelGeometry,
    sigma2_w: f64,
) -> Result<f64> {
    let omega = omega_p.add(&build_omega(x_d_true, geometry)?)?;
    let zeros = vec![Complex64::new(0.0, 0.0); omega.rows()];
    Ok(mmse_solve(&omega, &zeros, &geometry.taps().vars(), sigma2_w, EstimatorKind::Perfect)?.mse)
}
