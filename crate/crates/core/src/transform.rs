//! OTFS transform chain with rectangular pulses.
//!
//! All DFT factors carry `1/sqrt(M)` and `1/sqrt(N)` scaling so every map here
//! is unitary:
//!
//! * ISFFT: `X_tf = F_M X F_N^H`, SFFT its inverse.
//! * Heisenberg (rectangular pulse): `s = vec(X F_N^H) = (F_N^H ⊗ I_M) vec(X)`.
//! * Wigner (rectangular pulse): `y = (F_N ⊗ I_M) r`.
//!
//! The cyclic shift `Π^l` and the Doppler diagonal `Δ^k` are kept implicit.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};
use crate::grid::{DdFrame, DdGrid, TfFrame};

/// Pulse shape used by the transmit and receive filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pulse {
    /// `G_tx = G_rx = I_M`.
    #[default]
    Rectangular,
}

/// Cached DFT plans for one grid. Immutable and cheap to share across threads.
#[derive(Clone)]
pub struct OtfsOperators {
    grid: DdGrid,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    z: Complex64,
    pulse: Pulse,
}

impl std::fmt::Debug for OtfsOperators {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OtfsOperators")
            .field("grid", &self.grid)
            .field("z", &self.z)
            .field("pulse", &self.pulse)
            .finish()
    }
}

#[derive(Clone, Copy)]
enum Axis {
    Delay,
    Doppler,
}

impl OtfsOperators {
    pub fn new(grid: DdGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            fwd_m: planner.plan_fft_forward(grid.m()),
            inv_m: planner.plan_fft_inverse(grid.m()),
            fwd_n: planner.plan_fft_forward(grid.n()),
            inv_n: planner.plan_fft_inverse(grid.n()),
            z: Complex64::cis(2.0 * PI / grid.mn() as f64),
            pulse: Pulse::Rectangular,
        }
    }

    pub fn grid(&self) -> &DdGrid {
        &self.grid
    }

    /// Doppler phase base `exp(2πj / MN)`.
    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn pulse(&self) -> Pulse {
        self.pulse
    }

    fn check_frame(&self, frame: &DdFrame) -> Result<()> {
        if frame.grid().m() != self.grid.m() || frame.grid().n() != self.grid.n() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.mn(),
                got: frame.grid().mn(),
            });
        }
        Ok(())
    }

    /// Unitary DFT along one axis of a column-major `M x N` buffer.
    fn dft_along(&self, data: &mut [Complex64], axis: Axis, inverse: bool) {
        let (m, n) = (self.grid.m(), self.grid.n());
        match axis {
            Axis::Delay => {
                let plan = if inverse { &self.inv_m } else { &self.fwd_m };
                let scale = 1.0 / (m as f64).sqrt();
                // columns are contiguous
                plan.process(data);
                data.iter_mut().for_each(|v| *v *= scale);
            }
            Axis::Doppler => {
                let plan = if inverse { &self.inv_n } else { &self.fwd_n };
                let scale = 1.0 / (n as f64).sqrt();
                let mut row = vec![Complex64::new(0.0, 0.0); n];
                for l in 0..m {
                    for (k, v) in row.iter_mut().enumerate() {
                        *v = data[l + m * k];
                    }
                    plan.process(&mut row);
                    for (k, v) in row.iter().enumerate() {
                        data[l + m * k] = v * scale;
                    }
                }
            }
        }
    }

    /// `X_tf = F_M X F_N^H`.
    pub fn isfft(&self, frame: &DdFrame) -> Result<TfFrame> {
        self.check_frame(frame)?;
        let mut out = frame.clone();
        self.dft_along(out.as_mut_slice(), Axis::Delay, false);
        self.dft_along(out.as_mut_slice(), Axis::Doppler, true);
        Ok(out)
    }

    /// `X = F_M^H X_tf F_N`, the inverse of [`OtfsOperators::isfft`].
    pub fn sfft(&self, tf: &TfFrame) -> Result<DdFrame> {
        self.check_frame(tf)?;
        let mut out = tf.clone();
        self.dft_along(out.as_mut_slice(), Axis::Delay, true);
        self.dft_along(out.as_mut_slice(), Axis::Doppler, false);
        Ok(out)
    }

    /// Time-domain transmit samples `s = (F_N^H ⊗ I_M) vec(X)`.
    pub fn heisenberg_tx(&self, frame: &DdFrame) -> Result<Vec<Complex64>> {
        self.check_frame(frame)?;
        let mut s = frame.as_slice().to_vec();
        self.dft_along(&mut s, Axis::Doppler, true);
        Ok(s)
    }

    /// Delay-Doppler frame `y = (F_N ⊗ I_M) r` from CP-free received samples.
    pub fn wigner_rx(&self, r: &[Complex64]) -> Result<DdFrame> {
        check_len(self.grid.mn(), r.len())?;
        let mut y = r.to_vec();
        self.dft_along(&mut y, Axis::Doppler, false);
        DdFrame::from_vec(self.grid, y)
    }
}

/// Prepends the last `l_max` samples of `s`.
pub fn add_cp(s: &[Complex64], l_max: usize) -> Result<Vec<Complex64>> {
    if s.is_empty() || l_max >= s.len() {
        return Err(Error::invalid(format!(
            "cyclic prefix length {l_max} must be below the block length {}",
            s.len()
        )));
    }
    let mut out = Vec::with_capacity(s.len() + l_max);
    out.extend_from_slice(&s[s.len() - l_max..]);
    out.extend_from_slice(s);
    Ok(out)
}

/// Drops the first `l_max` samples; `r` must hold `block_len + l_max` samples.
pub fn remove_cp(r: &[Complex64], l_max: usize, block_len: usize) -> Result<Vec<Complex64>> {
    if l_max >= block_len {
        return Err(Error::invalid(format!(
            "cyclic prefix length {l_max} must be below the block length {block_len}"
        )));
    }
    check_len(block_len + l_max, r.len())?;
    Ok(r[l_max..].to_vec())
}

/// Implicit `Π^l`: cyclic shift down by `l` on vectors of length `len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicShift {
    len: usize,
    shift: usize,
}

impl CyclicShift {
    pub fn new(len: usize, shift: usize) -> Self {
        assert!(len > 0);
        Self {
            len,
            shift: shift % len,
        }
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Column holding the single nonzero of row `row`.
    #[inline]
    pub fn source(&self, row: usize) -> usize {
        (row + self.len - self.shift) % self.len
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.len);
        (0..self.len).map(|j| v[self.source(j)]).collect()
    }

    pub fn compose(&self, other: &CyclicShift) -> CyclicShift {
        assert_eq!(self.len, other.len);
        CyclicShift::new(self.len, self.shift + other.shift)
    }

    /// `(Π^l)^H = Π^{-l}`.
    pub fn adjoint(&self) -> CyclicShift {
        CyclicShift::new(self.len, self.len - self.shift)
    }
}

/// Implicit `Δ^k = diag(z^{k j})` with `z = exp(2πj / len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DopplerPhase {
    len: usize,
    k: i64,
}

impl DopplerPhase {
    pub fn new(len: usize, k: i64) -> Self {
        assert!(len > 0);
        Self { len, k }
    }

    #[inline]
    pub fn entry(&self, j: usize) -> Complex64 {
        unit_phase(self.k * j as i64, self.len)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.len);
        v.iter().enumerate().map(|(j, x)| x * self.entry(j)).collect()
    }
}

/// `exp(2πj * num / den)` with the exponent reduced exactly before the
/// floating-point conversion.
#[inline]
pub(crate) fn unit_phase(num: i64, den: usize) -> Complex64 {
    let r = num.rem_euclid(den as i64);
    Complex64::cis(2.0 * PI * r as f64 / den as f64)
}

/// `Π^l`, reduced mod `len`.
pub fn permutation_power(len: usize, l: usize) -> CyclicShift {
    CyclicShift::new(len, l)
}

/// `Δ^k` for signed `k`.
pub fn doppler_power(len: usize, k: i64) -> DopplerPhase {
    DopplerPhase::new(len, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_frame(grid: DdGrid, seed: u64) -> DdFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DdFrame::from_fn(grid, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    // Direct O((MN)^2) evaluation of X_tf = F_M X F_N^H.
    fn isfft_oracle(x: &DdFrame) -> DdFrame {
        let g = *x.grid();
        let (m, n) = (g.m(), g.n());
        let s = 1.0 / ((m * n) as f64).sqrt();
        DdFrame::from_fn(g, |p, q| {
            let mut acc = c(0.0, 0.0);
            for l in 0..m {
                for k in 0..n {
                    let ph = -2.0 * PI * (p * l) as f64 / m as f64 + 2.0 * PI * (k * q) as f64 / n as f64;
                    acc += x.get(l, k) * Complex64::cis(ph);
                }
            }
            acc * s
        })
    }

    #[test]
    fn isfft_of_zero_is_zero() {
        let g = DdGrid::with_defaults(4, 4).unwrap();
        let ops = OtfsOperators::new(g);
        let out = ops.isfft(&DdFrame::zeros(g)).unwrap();
        assert!(out.as_slice().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn isfft_of_impulse_is_flat() {
        let g = DdGrid::with_defaults(2, 2).unwrap();
        let ops = OtfsOperators::new(g);
        let mut x = DdFrame::zeros(g);
        x.set(0, 0, c(1.0, 0.0));
        let out = ops.isfft(&x).unwrap();
        for v in out.as_slice() {
            assert!((v - c(0.5, 0.0)).norm() < 1e-15);
        }
        let back = ops.sfft(&out).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn isfft_matches_direct_sum() {
        let g = DdGrid::with_defaults(4, 6).unwrap();
        let ops = OtfsOperators::new(g);
        let x = random_frame(g, 3);
        let fast = ops.isfft(&x).unwrap();
        assert!(fast.max_abs_diff(&isfft_oracle(&x)) < 1e-12);
    }

    #[test]
    fn isfft_preserves_energy() {
        let g = DdGrid::with_defaults(8, 8).unwrap();
        let ops = OtfsOperators::new(g);
        let x = random_frame(g, 11);
        let e_in = x.energy();
        let e_out = ops.isfft(&x).unwrap().energy();
        assert!((e_in - e_out).abs() / e_in < 1e-12);
    }

    #[test]
    fn sfft_inverts_isfft() {
        let g = DdGrid::with_defaults(16, 16).unwrap();
        let ops = OtfsOperators::new(g);
        let x = random_frame(g, 5);
        let back = ops.sfft(&ops.isfft(&x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn heisenberg_two_point_by_hand() {
        let g = DdGrid::with_defaults(1, 2).unwrap();
        let ops = OtfsOperators::new(g);
        let x = DdFrame::from_vec(g, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let s = ops.heisenberg_tx(&x).unwrap();
        assert!((s[0] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(s[1].norm() < 1e-15);
    }

    #[test]
    fn heisenberg_wigner_round_trip_and_parseval() {
        let g = DdGrid::with_defaults(16, 16).unwrap();
        let ops = OtfsOperators::new(g);
        let x = random_frame(g, 9);
        let s = ops.heisenberg_tx(&x).unwrap();
        let e_s: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        assert!((e_s - x.energy()).abs() / x.energy() < 1e-12);
        let y = ops.wigner_rx(&s).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-12);
        assert!(ops.wigner_rx(&s[1..]).is_err());
        assert!(ops.wigner_rx(&vec![c(0.0, 0.0); g.mn()]).unwrap().energy() == 0.0);
    }

    #[test]
    fn wrong_frame_shape_is_rejected() {
        let ops = OtfsOperators::new(DdGrid::with_defaults(4, 4).unwrap());
        let other = DdFrame::zeros(DdGrid::with_defaults(4, 2).unwrap());
        assert!(ops.isfft(&other).is_err());
        assert!(ops.sfft(&other).is_err());
        assert!(ops.heisenberg_tx(&other).is_err());
    }

    #[test]
    fn cyclic_prefix_definition() {
        let s: Vec<_> = (1..=4).map(|v| c(v as f64, 0.0)).collect();
        let with = add_cp(&s, 2).unwrap();
        let re: Vec<f64> = with.iter().map(|v| v.re).collect();
        assert_eq!(re, vec![3.0, 4.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(add_cp(&s, 0).unwrap(), s);
        assert_eq!(remove_cp(&with, 2, 4).unwrap(), s);
        assert!(add_cp(&s, 4).is_err());
        assert!(remove_cp(&with, 1, 4).is_err());
    }

    #[test]
    fn shift_matches_explicit_index_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<_> = (0..12).map(|_| c(rng.random(), rng.random())).collect();
        let p1 = permutation_power(12, 1).apply(&v);
        for j in 0..12 {
            assert_eq!(p1[j], v[(j + 11) % 12]);
        }
        assert_eq!(permutation_power(12, 0).apply(&v), v);
        assert_eq!(doppler_power(12, 0).apply(&v), v);
    }

    #[test]
    fn shift_is_unitary_and_composes() {
        let len = 20;
        for a in 0..len {
            let p = permutation_power(len, a);
            let e = p.compose(&p.adjoint());
            assert_eq!(e.shift(), 0);
            for b in 0..len {
                let q = permutation_power(len, b);
                assert_eq!(p.compose(&q), permutation_power(len, (a + b) % len));
            }
        }
    }

    #[test]
    fn doppler_entries_are_powers_of_z() {
        let ops = OtfsOperators::new(DdGrid::with_defaults(4, 3).unwrap());
        assert!((ops.z().norm() - 1.0).abs() < 1e-15);
        let d = doppler_power(12, -2);
        for j in 0..12 {
            let expect = ops.z().powi(-2 * j as i32);
            assert!((d.entry(j) - expect).norm() < 1e-12);
        }
    }
}
