//! Superimposed-pilot frames: constellations, pilot sequences, superposition
//! and the transmit/receive paths.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{awgn, ChannelRealization, SparseEffectiveChannel};
use crate::error::{check_len, Error, Result};
use crate::grid::{DdFrame, DdGrid};
use crate::transform::{add_cp, remove_cp, unit_phase, OtfsOperators};

/// Per-bin power budget `σ²_d + σ²_p = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    sigma2_d: f64,
    sigma2_p: f64,
}

impl PowerSplit {
    pub fn new(sigma2_d: f64, sigma2_p: f64) -> Result<Self> {
        if !(sigma2_d >= 0.0 && sigma2_p >= 0.0) || ((sigma2_d + sigma2_p) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "power split must be non-negative and sum to one, got σ²_d = {sigma2_d}, σ²_p = {sigma2_p}"
            )));
        }
        Ok(Self { sigma2_d, sigma2_p })
    }

    /// Split with pilot power `sigma2_p` and data power `1 - sigma2_p`.
    pub fn from_pilot(sigma2_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma2_p) {
            return Err(Error::invalid(format!("pilot power must lie in [0, 1], got {sigma2_p}")));
        }
        Ok(Self {
            sigma2_d: 1.0 - sigma2_p,
            sigma2_p,
        })
    }

    pub fn sigma2_d(&self) -> f64 {
        self.sigma2_d
    }

    pub fn sigma2_p(&self) -> f64 {
        self.sigma2_p
    }
}

/// Unit-energy constellation with points listed in bit-label order: the
/// point at index `j` carries the bits of `j`, most significant first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl ConstellationSpec {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        let s = points.len();
        if s < 2 || !s.is_power_of_two() {
            return Err(Error::invalid(format!("constellation size must be a power of two ≥ 2, got {s}")));
        }
        let e: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / s as f64;
        if (e - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("constellation must have unit average energy, got {e}")));
        }
        Ok(Self {
            points,
            bits_per_symbol: s.trailing_zeros() as usize,
        })
    }

    /// Bit 0 maps to +1, bit 1 to −1.
    pub fn bpsk() -> Self {
        Self::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).expect("valid")
    }

    /// Gray-mapped QPSK: the first bit selects the sign of the real part,
    /// the second the sign of the imaginary part.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(vec![
            Complex64::new(a, a),
            Complex64::new(a, -a),
            Complex64::new(-a, a),
            Complex64::new(-a, -a),
        ])
        .expect("valid")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::bpsk()),
            "qpsk" => Ok(Self::qpsk()),
            other => Err(Error::invalid(format!("unknown constellation `{other}`"))),
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Symbol index carried by `bits` (MSB first).
    pub fn index_of(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    /// Appends the bit label of symbol `idx` to `out`.
    pub fn push_bits(&self, idx: usize, out: &mut Vec<u8>) {
        for s in (0..self.bits_per_symbol).rev() {
            out.push(((idx >> s) & 1) as u8);
        }
    }

    /// Index of the nearest point to `v / scale`; ties go to the lower index.
    pub fn nearest(&self, v: Complex64, scale: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, p) in self.points.iter().enumerate() {
            let d = (v - p * scale).norm_sqr();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }

    /// Bit differences between two symbol indices.
    pub fn bit_errors(&self, a: usize, b: usize) -> u32 {
        ((a ^ b) as u32).count_ones()
    }

    /// Mean and mean energy of the symbol under a pmf.
    pub(crate) fn moments(&self, pmf: &[f64]) -> (Complex64, f64) {
        let mut mean = Complex64::new(0.0, 0.0);
        let mut e = 0.0;
        for (p, a) in pmf.iter().zip(&self.points) {
            mean += a * *p;
            e += p * a.norm_sqr();
        }
        (mean, e)
    }
}

/// Maps `MN · bits_per_symbol` bits to a data frame scaled by `√σ²_d`.
pub fn map_bits(bits: &[u8], constellation: &ConstellationSpec, sigma2_d: f64, grid: DdGrid) -> Result<DdFrame> {
    let bps = constellation.bits_per_symbol();
    check_len(grid.mn() * bps, bits.len())?;
    let amp = sigma2_d.sqrt();
    let values = bits
        .chunks(bps)
        .map(|c| constellation.points()[constellation.index_of(c)] * amp)
        .collect();
    DdFrame::from_vec(grid, values)
}

/// Symbol indices of a frame of data symbols (inverse of the mapping step).
pub fn symbol_indices(bits: &[u8], constellation: &ConstellationSpec) -> Vec<usize> {
    bits.chunks(constellation.bits_per_symbol())
        .map(|c| constellation.index_of(c))
        .collect()
}

/// Hard nearest-point demapping of a data frame scaled by `√σ²_d`.
pub fn demap(frame: &DdFrame, constellation: &ConstellationSpec, sigma2_d: f64) -> Vec<u8> {
    let amp = sigma2_d.sqrt();
    let mut out = Vec::with_capacity(frame.as_slice().len() * constellation.bits_per_symbol());
    for v in frame.as_slice() {
        constellation.push_bits(constellation.nearest(*v, amp), &mut out);
    }
    out
}

/// Known QPSK pilots of constant power `σ²_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSequence {
    values: DdFrame,
    sigma2_p: f64,
    seed: u64,
}

impl PilotSequence {
    pub fn generate(grid: DdGrid, sigma2_p: f64, seed: u64) -> Result<Self> {
        if !(sigma2_p.is_finite() && sigma2_p >= 0.0) {
            return Err(Error::invalid(format!("pilot power must be non-negative, got {sigma2_p}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qpsk = ConstellationSpec::qpsk();
        let amp = sigma2_p.sqrt();
        let values = DdFrame::from_fn(grid, |_, _| qpsk.points()[rng.random_range(0..4)] * amp);
        Ok(Self {
            values,
            sigma2_p,
            seed,
        })
    }

    /// Pilot frame drawn from a caller-owned stream (one sequence per trial).
    pub fn generate_with<R: Rng + ?Sized>(grid: DdGrid, sigma2_p: f64, rng: &mut R) -> Result<Self> {
        let seed = rng.random();
        Self::generate(grid, sigma2_p, seed)
    }

    /// Wraps an arbitrary known pilot frame (for example an embedded pilot).
    pub fn from_frame(values: DdFrame, sigma2_p: f64) -> Self {
        Self {
            values,
            sigma2_p,
            seed: 0,
        }
    }

    pub fn frame(&self) -> &DdFrame {
        &self.values
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.values.as_slice()
    }

    pub fn sigma2_p(&self) -> f64 {
        self.sigma2_p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `X = X_d + X_p`.
pub fn superimpose(data: &DdFrame, pilots: &PilotSequence) -> Result<DdFrame> {
    data.add(pilots.frame())
}

/// Production receive path `y = H_eff x + w`.
pub fn transmit_through<R: Rng + ?Sized>(
    x: &DdFrame,
    channel: &SparseEffectiveChannel,
    sigma2_w: f64,
    rng: &mut R,
) -> Result<DdFrame> {
    let mut y = channel.mul(x.as_slice())?;
    let w = awgn(y.len(), sigma2_w, rng)?;
    for (a, b) in y.iter_mut().zip(w) {
        *a += b;
    }
    DdFrame::from_vec(*channel.grid(), y)
}

/// Noise-free reference path through the time domain: Heisenberg transform,
/// cyclic prefix of `l_max` samples, a time-varying tapped delay line, prefix
/// removal and the Wigner transform.
pub fn pipeline_receive(x: &DdFrame, real: &ChannelRealization, ops: &OtfsOperators) -> Result<DdFrame> {
    let mn = ops.grid().mn();
    let l_max = real.taps.l_max();
    let s = ops.heisenberg_tx(x)?;
    let tx = add_cp(&s, l_max)?;
    let mut rx = vec![Complex64::new(0.0, 0.0); tx.len()];
    for (n, r) in rx.iter_mut().enumerate().skip(l_max) {
        // sample index n of the prefixed block is time n - l_max of the frame
        let t = n as i64 - l_max as i64;
        for (tap, h) in real.taps.taps().iter().zip(&real.h) {
            let src = n - tap.l;
            *r += h * unit_phase(tap.k * (t - tap.l as i64), mn) * tx[src];
        }
    }
    let r = remove_cp(&rx, l_max, mn)?;
    ops.wigner_rx(&r)
}
