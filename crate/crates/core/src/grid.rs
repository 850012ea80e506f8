//! Delay-Doppler frame geometry and the frame container.
//!
//! Frames are stored column-major by Doppler index: the symbol at delay `l`
//! and Doppler `k` lives at vector position `l + M * k`.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

/// Frame geometry. The symbol duration is always `1 / delta_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdGrid {
    m: usize,
    n: usize,
    delta_f: f64,
    fc: f64,
}

impl DdGrid {
    pub const DEFAULT_SUBCARRIER_SPACING: f64 = 15e3;
    pub const DEFAULT_CARRIER: f64 = 4e9;

    pub fn new(m: usize, n: usize, delta_f: f64, fc: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!("grid must be non-empty, got {m}x{n}")));
        }
        if !(delta_f.is_finite() && delta_f > 0.0) {
            return Err(Error::invalid(format!("subcarrier spacing must be positive, got {delta_f}")));
        }
        if !(fc.is_finite() && fc >= 0.0) {
            return Err(Error::invalid(format!("carrier frequency must be non-negative, got {fc}")));
        }
        Ok(Self { m, n, delta_f, fc })
    }

    /// `M x N` grid at 15 kHz spacing and a 4 GHz carrier.
    pub fn with_defaults(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, Self::DEFAULT_SUBCARRIER_SPACING, Self::DEFAULT_CARRIER)
    }

    /// Number of delay bins.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of Doppler bins.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn fc(&self) -> f64 {
        self.fc
    }

    /// Symbol duration `T = 1 / delta_f`.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.delta_f
    }

    pub fn delay_resolution(&self) -> f64 {
        self.symbol_duration() / self.m as f64
    }

    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.n as f64 * self.symbol_duration())
    }

    #[inline]
    pub fn index(&self, l: usize, k: usize) -> usize {
        debug_assert!(l < self.m && k < self.n);
        l + self.m * k
    }

    /// Inverse of [`DdGrid::index`].
    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.m, idx / self.m)
    }

    pub(crate) fn same_shape(&self, other: &DdGrid) -> bool {
        self.m == other.m && self.n == other.n
    }
}

/// An `M x N` complex grid. Used for delay-Doppler frames and, via
/// [`TfFrame`], for time-frequency frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DdFrame {
    grid: DdGrid,
    values: Vec<Complex64>,
}

/// Time-frequency frame: row `m` is the subcarrier, column `n` the symbol slot.
pub type TfFrame = DdFrame;

impl DdFrame {
    pub fn zeros(grid: DdGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.mn()],
        }
    }

    pub fn from_vec(grid: DdGrid, values: Vec<Complex64>) -> Result<Self> {
        check_len(grid.mn(), values.len())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: DdGrid, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.mn());
        for k in 0..grid.n() {
            for l in 0..grid.m() {
                values.push(f(l, k));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &DdGrid {
        &self.grid
    }

    pub fn get(&self, l: usize, k: usize) -> Complex64 {
        self.values[self.grid.index(l, k)]
    }

    pub fn set(&mut self, l: usize, k: usize, v: Complex64) {
        let i = self.grid.index(l, k);
        self.values[i] = v;
    }

    /// The vectorized frame, `vec(X)`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Elementwise sum of two frames on the same grid.
    pub fn add(&self, other: &DdFrame) -> Result<DdFrame> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::DimensionMismatch {
                expected: self.grid.mn(),
                got: other.grid.mn(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DdFrame {
            grid: self.grid,
            values,
        })
    }

    pub fn max_abs_diff(&self, other: &DdFrame) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolutions_follow_from_spacing() {
        let g = DdGrid::with_defaults(32, 16).unwrap();
        let t = 1.0 / 15e3;
        assert!((g.symbol_duration() - t).abs() < 1e-18);
        assert!((g.delay_resolution() - t / 32.0).abs() < 1e-18);
        assert!((g.doppler_resolution() - 15e3 / 16.0).abs() < 1e-9);
        assert!((g.symbol_duration() * g.delta_f() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(DdGrid::with_defaults(0, 4).is_err());
        assert!(DdGrid::with_defaults(4, 0).is_err());
        assert!(DdGrid::new(4, 4, -1.0, 0.0).is_err());
    }

    #[test]
    fn vectorization_is_column_major_by_doppler() {
        let g = DdGrid::with_defaults(3, 4).unwrap();
        let f = DdFrame::from_fn(g, |l, k| Complex64::new(l as f64, k as f64));
        for l in 0..3 {
            for k in 0..4 {
                let v = f.as_slice()[l + 3 * k];
                assert_eq!(v, Complex64::new(l as f64, k as f64));
                assert_eq!(g.coords(l + 3 * k), (l, k));
            }
        }
    }

    #[test]
    fn add_rejects_mismatched_grids() {
        let a = DdFrame::zeros(DdGrid::with_defaults(2, 2).unwrap());
        let b = DdFrame::zeros(DdGrid::with_defaults(2, 3).unwrap());
        assert!(a.add(&b).is_err());
    }
}
