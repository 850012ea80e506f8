//! Seeded Monte-Carlo runner.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the master seed,
//! the SNR value and the trial index, so results do not depend on thread
//! count or scheduling. The key leaves out the scheme and pilot power: all
//! schemes at one SNR see the same channels, bits and noise.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{nominal_mse, optimal_pilot_power, spectral_efficiency, LinkParams, Scheme};
use crate::channel::{build_omega, sample_channel, ChannelGeometry, ChannelTaps, SparseEffectiveChannel};
use crate::detector::{cancel_pilots, detect, detect_masked};
use crate::error::Result;
use crate::estimators::{
    cpa_estimate, ep_estimate, mse_lower_bound, perfect_data_mse, spi_run, spni_detect, EpLayout,
};
use crate::grid::DdGrid;
use crate::modem::{map_bits, superimpose, symbol_indices, transmit_through, PilotSequence, PowerSplit};
use crate::sim::config::{RunConfig, SplitMode};
use crate::sim::record::{wilson_interval, MetricRecord};

/// Trials added per round once the configured count is reached and more
/// bit errors are needed.
const TOP_UP_BATCH: usize = 64;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stream for one trial at one SNR.
pub fn trial_rng(master: u64, snr_db: f64, trial: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(master) ^ snr_db.to_bits());
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial);
    rng
}

/// Result of one trial.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialOutcome {
    pub bits: u64,
    pub bit_errors: u64,
    /// `‖h − ĥ‖²`.
    pub sq_err: f64,
    /// SP-I only: squared error of the non-iterative starting estimate.
    pub sq_err_initial: f64,
    /// Error-covariance trace predicted for this trial.
    pub mse_analytic: f64,
    pub spi_iters: usize,
    pub mp_iters: usize,
    pub clamped: usize,
}

/// Link parameters of one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellSetup {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub sigma2_w: f64,
    pub split: PowerSplit,
}

/// Validated configuration with the channel geometry built once.
#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: RunConfig,
    grid: DdGrid,
    geometry: Arc<ChannelGeometry>,
    ep: Option<EpLayout>,
}

impl Scenario {
    /// Checks the whole configuration, including the embedded-pilot layout
    /// when that scheme is requested, before any trial runs.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let taps = cfg.taps()?;
        let ep = if cfg.schemes.contains(&Scheme::Ep) {
            let (l, k) = cfg.ep_guard_for(&taps);
            Some(EpLayout::centered(&grid, l, k)?)
        } else {
            None
        };
        let geometry = Arc::new(ChannelGeometry::new(grid, taps)?);
        Ok(Self {
            cfg,
            grid,
            geometry,
            ep,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &DdGrid {
        &self.grid
    }

    pub fn taps(&self) -> &ChannelTaps {
        self.geometry.taps()
    }

    pub fn geometry(&self) -> &Arc<ChannelGeometry> {
        &self.geometry
    }

    /// Pilot/data split used by the superimposed schemes at `snr_db`.
    pub fn split_at(&self, snr_db: f64) -> Result<PowerSplit> {
        match self.cfg.split {
            SplitMode::Fixed(p) => PowerSplit::from_pilot(p),
            SplitMode::Optimal => {
                let params = self.link_params(snr_to_noise(snr_db), PowerSplit::from_pilot(0.5)?)?;
                PowerSplit::from_pilot(optimal_pilot_power(&params)?.sigma2_p)
            }
        }
    }

    pub fn cell(&self, scheme: Scheme, snr_db: f64) -> Result<CellSetup> {
        Ok(CellSetup {
            scheme,
            snr_db,
            sigma2_w: snr_to_noise(snr_db),
            split: self.split_at(snr_db)?,
        })
    }

    fn link_params(&self, sigma2_w: f64, split: PowerSplit) -> Result<LinkParams> {
        let (l, k) = self.cfg.ep_guard_for(self.taps());
        Ok(LinkParams::from_taps(self.grid, self.taps(), sigma2_w, split)?.with_guard(l, k))
    }

    fn ep_layout(&self) -> Result<EpLayout> {
        match self.ep {
            Some(l) => Ok(l),
            None => {
                let (l, k) = self.cfg.ep_guard_for(self.taps());
                EpLayout::centered(&self.grid, l, k)
            }
        }
    }

    /// Runs one trial of `cell`.
    pub fn trial(&self, cell: &CellSetup, trial: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(self.cfg.seed, cell.snr_db, trial);
        let mp = &self.cfg.mp;
        let constellation = &mp.constellation;
        let mn = self.grid.mn();
        let bps = constellation.bits_per_symbol();

        let real = sample_channel(self.taps(), &mut rng);
        let bits: Vec<u8> = (0..mn * bps).map(|_| rng.random_range(0..2u8)).collect();
        let truth = symbol_indices(&bits, constellation);
        let pilot_seed = rng.next_u64();
        let h = SparseEffectiveChannel::new(self.geometry.clone(), real.h.clone())?;
        let sq_err = |h_hat: &[Complex64]| -> f64 { real.h.iter().zip(h_hat).map(|(a, b)| (a - b).norm_sqr()).sum() };
        let count = |decided: &[usize], active: Option<&[bool]>| -> (u64, u64) {
            let mut judged = 0u64;
            let mut errors = 0u64;
            for (b, (&d, &t)) in decided.iter().zip(&truth).enumerate() {
                if active.is_some_and(|m| !m[b]) {
                    continue;
                }
                judged += bps as u64;
                errors += constellation.bit_errors(d, t) as u64;
            }
            (judged, errors)
        };
        let sigma2_w = cell.sigma2_w;

        let mut out = TrialOutcome::default();
        match cell.scheme {
            Scheme::SpNi | Scheme::SpI => {
                let split = cell.split;
                let pilots = PilotSequence::generate(self.grid, split.sigma2_p(), pilot_seed)?;
                let data = map_bits(&bits, constellation, split.sigma2_d(), self.grid)?;
                let x = superimpose(&data, &pilots)?;
                let y = transmit_through(&x, &h, sigma2_w, &mut rng)?.into_vec();
                let omega_p = build_omega(pilots.as_slice(), &self.geometry)?;
                if cell.scheme == Scheme::SpNi {
                    let (est, det) = spni_detect(&y, &pilots, &omega_p, &self.geometry, split, sigma2_w, mp)?;
                    (out.bits, out.bit_errors) = count(&det.symbols, None);
                    out.sq_err = sq_err(&est.h_hat);
                    out.sq_err_initial = out.sq_err;
                    out.mse_analytic = est.mse;
                    out.mp_iters = det.iterations;
                    out.clamped = det.clamped;
                } else {
                    let res = spi_run(&y, &pilots, &omega_p, &self.geometry, split, sigma2_w, mp, self.cfg.spi)?;
                    (out.bits, out.bit_errors) = count(&res.symbols, None);
                    out.sq_err = sq_err(&res.estimate.h_hat);
                    out.sq_err_initial = sq_err(&res.initial.h_hat);
                    out.mse_analytic = perfect_data_mse(&omega_p, data.as_slice(), &self.geometry, sigma2_w)?;
                    out.spi_iters = res.iterations;
                    out.mp_iters = res.mp_iterations;
                    out.clamped = res.clamped;
                }
            }
            Scheme::Ep => {
                let layout = self.ep_layout()?;
                let pilots = layout.pilot_frame(self.grid);
                let mask = layout.data_mask(&self.grid);
                let data = layout.mask_data(&self.grid, map_bits(&bits, constellation, 1.0, self.grid)?.as_slice())?;
                let x = superimpose(&data, &pilots)?;
                let y = transmit_through(&x, &h, sigma2_w, &mut rng)?.into_vec();
                let est = ep_estimate(&y, &layout, &self.geometry, sigma2_w)?;
                let h_hat = SparseEffectiveChannel::new(self.geometry.clone(), est.h_hat.clone())?;
                let y_d = cancel_pilots(&y, &h_hat, &pilots)?;
                let det = detect_masked(&y_d, &h_hat, sigma2_w, mp, Some(&mask))?;
                (out.bits, out.bit_errors) = count(&det.symbols, Some(&mask));
                out.sq_err = sq_err(&est.h_hat);
                out.sq_err_initial = out.sq_err;
                out.mse_analytic = est.mse;
                out.mp_iters = det.iterations;
                out.clamped = det.clamped;
            }
            Scheme::Cpa => {
                let data = map_bits(&bits, constellation, 1.0, self.grid)?;
                let y = transmit_through(&data, &h, sigma2_w, &mut rng)?.into_vec();
                let pilots = PilotSequence::generate(self.grid, 1.0, pilot_seed)?;
                let y_p = transmit_through(pilots.frame(), &h, sigma2_w, &mut rng)?.into_vec();
                let omega = build_omega(pilots.as_slice(), &self.geometry)?;
                let est = cpa_estimate(&y_p, &omega, self.taps(), sigma2_w)?;
                let h_hat = SparseEffectiveChannel::new(self.geometry.clone(), est.h_hat.clone())?;
                let det = detect(&y, &h_hat, sigma2_w, mp)?;
                (out.bits, out.bit_errors) = count(&det.symbols, None);
                out.sq_err = sq_err(&est.h_hat);
                out.sq_err_initial = out.sq_err;
                out.mse_analytic = est.mse;
                out.mp_iters = det.iterations;
                out.clamped = det.clamped;
            }
            Scheme::PerfectCsi => {
                let data = map_bits(&bits, constellation, 1.0, self.grid)?;
                let y = transmit_through(&data, &h, sigma2_w, &mut rng)?.into_vec();
                let det = detect(&y, &h, sigma2_w, mp)?;
                (out.bits, out.bit_errors) = count(&det.symbols, None);
                out.mp_iters = det.iterations;
                out.clamped = det.clamped;
            }
        }
        Ok(out)
    }

    /// Bits judged per successful trial.
    pub fn bits_per_trial(&self, scheme: Scheme) -> Result<u64> {
        let bps = self.cfg.mp.constellation.bits_per_symbol() as u64;
        let symbols = match scheme {
            Scheme::Ep => {
                let layout = self.ep_layout()?;
                layout.data_mask(&self.grid).iter().filter(|&&a| a).count() as u64
            }
            _ => self.grid.mn() as u64,
        };
        Ok(symbols * bps)
    }

    /// Runs one cell under the stopping rule and aggregates it.
    pub fn run_cell(&self, cell: &CellSetup) -> Result<MetricRecord> {
        let start = Instant::now();
        let mut tally = Tally::default();
        let mut next = 0usize;
        let mut target = self.cfg.trials;
        loop {
            let results: Vec<Result<TrialOutcome>> =
                (next..target).into_par_iter().map(|t| self.trial(cell, t as u64)).collect();
            for (t, r) in (next..target).zip(results) {
                tally.add(r, cell, t);
            }
            next = target;
            let need_more = tally.errors < self.cfg.min_errors && next < self.cfg.max_trials;
            if !need_more {
                break;
            }
            target = (next + TOP_UP_BATCH).min(self.cfg.max_trials);
        }
        let good = tally.trials - tally.faults;
        let per_trial = self.bits_per_trial(cell.scheme)?;
        assert_eq!(tally.bits, good * per_trial, "bit accounting mismatch in {} at {} dB", cell.scheme, cell.snr_db);
        self.aggregate(cell, &tally, start.elapsed().as_secs_f64())
    }

    fn aggregate(&self, cell: &CellSetup, t: &Tally, wall_time: f64) -> Result<MetricRecord> {
        let good = (t.trials - t.faults) as f64;
        let mean = |v: f64| if good > 0.0 { v / good } else { f64::NAN };
        let ber = if t.bits > 0 { t.errors as f64 / t.bits as f64 } else { f64::NAN };
        let (ber_lo, ber_hi) = wilson_interval(t.errors, t.bits);
        let (sigma2_p, sigma2_d) = match cell.scheme {
            Scheme::SpNi | Scheme::SpI => (cell.split.sigma2_p(), cell.split.sigma2_d()),
            Scheme::Ep => (self.ep_layout()?.pilot_power(), 1.0),
            Scheme::Cpa => (1.0, 1.0),
            Scheme::PerfectCsi => (0.0, 1.0),
        };
        let mse_sim = if cell.scheme == Scheme::PerfectCsi { 0.0 } else { mean(t.sq_err) };
        let params = self.link_params(cell.sigma2_w, cell.split).ok();
        let mse_bound = match (cell.scheme, &params) {
            (Scheme::SpNi, _) => mse_lower_bound(self.taps(), cell.split, cell.sigma2_w, &self.grid).unwrap_or(f64::NAN),
            (s, Some(p)) => nominal_mse(s, p, self.taps())?,
            _ => f64::NAN,
        };
        let se = match &params {
            Some(p) if mse_sim.is_finite() => {
                spectral_efficiency(cell.scheme, p, mse_sim.clamp(0.0, p.sigma2_h)).unwrap_or(f64::NAN)
            }
            _ => f64::NAN,
        };
        let spi = if cell.scheme == Scheme::SpI { mean(t.spi_iters as f64) } else { f64::NAN };
        Ok(MetricRecord {
            scheme: cell.scheme,
            snr_db: cell.snr_db,
            sigma2_p,
            sigma2_d,
            m: self.grid.m(),
            n: self.grid.n(),
            damping: self.cfg.mp.damping,
            trials: t.trials,
            faults: t.faults,
            bits: t.bits,
            bit_errors: t.errors,
            ber,
            ber_lo,
            ber_hi,
            mse_sim,
            mse_analytic: if cell.scheme == Scheme::PerfectCsi { 0.0 } else { mean(t.mse_analytic) },
            mse_bound,
            se_bits_per_hz: se,
            avg_spi_iters: spi,
            avg_mp_iters: mean(t.mp_iters as f64),
            clamped: t.clamped,
            seed: self.cfg.seed,
            wall_time,
        })
    }

    /// Every (scheme, SNR) cell, schemes outermost.
    pub fn run(&self) -> Result<Vec<MetricRecord>> {
        let mut records = Vec::new();
        for &scheme in &self.cfg.schemes {
            for &snr in &self.cfg.snr_db {
                let cell = self.cell(scheme, snr)?;
                let rec = self.run_cell(&cell)?;
                log::info!(
                    "{scheme} {snr} dB: ber {:.3e} ({} bits), mse {:.3e}, {} trials",
                    rec.ber,
                    rec.bits,
                    rec.mse_sim,
                    rec.trials
                );
                records.push(rec);
            }
        }
        Ok(records)
    }
}

/// `σ²_w = 10^(−SNR/10)` for unit symbol power.
pub fn snr_to_noise(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

#[derive(Debug, Default)]
struct Tally {
    trials: u64,
    faults: u64,
    bits: u64,
    errors: u64,
    sq_err: f64,
    mse_analytic: f64,
    spi_iters: usize,
    mp_iters: usize,
    clamped: u64,
}

impl Tally {
    fn add(&mut self, r: Result<TrialOutcome>, cell: &CellSetup, trial: usize) {
        self.trials += 1;
        match r {
            Ok(o) => {
                self.bits += o.bits;
                self.errors += o.bit_errors;
                self.sq_err += o.sq_err;
                self.mse_analytic += o.mse_analytic;
                self.spi_iters += o.spi_iters;
                self.mp_iters += o.mp_iters;
                self.clamped += o.clamped as u64;
            }
            Err(e) => {
                log::warn!("{} at {} dB, trial {trial}: {e}", cell.scheme, cell.snr_db);
                self.faults += 1;
            }
        }
    }
}

/// Validates `cfg` and runs every cell.
pub fn run_scenario(cfg: &RunConfig) -> Result<Vec<MetricRecord>> {
    Scenario::new(cfg.clone())?.run()
}
