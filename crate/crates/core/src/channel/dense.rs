//! Dense materializations used only as test oracles.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::realization::ChannelRealization;
use crate::error::{check_len, Error, Result};
use crate::grid::DdGrid;
use crate::transform::unit_phase;

/// Largest `MN` the dense builders accept by default.
pub const DEFAULT_ORACLE_CAP: usize = 4096;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len(self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

fn check_cap(mn: usize, cap: usize) -> Result<()> {
    if mn > cap {
        Err(Error::ResourceLimit { mn, cap })
    } else {
        Ok(())
    }
}

/// Time-domain `H = Σ h_i Π^{l_i} Δ^{k_i}`.
pub fn build_dense_h(real: &ChannelRealization, grid: &DdGrid, cap: usize) -> Result<DenseMatrix> {
    let mn = grid.mn();
    check_cap(mn, cap)?;
    check_len(real.taps.q(), real.h.len())?;
    let mut h = DenseMatrix::zeros(mn, mn);
    for (t, g) in real.taps.taps().iter().zip(&real.h) {
        // row j of Π^l Δ^k holds z^{k (j - l)} at column (j - l) mod MN
        for j in 0..mn {
            let c = (j + mn - t.l % mn) % mn;
            h[(j, c)] += g * unit_phase(t.k * c as i64, mn);
        }
    }
    Ok(h)
}

/// `B_tx = F_N^H ⊗ I_M` (`inverse = true`) or `B_rx = F_N ⊗ I_M`.
pub fn dense_doppler_dft(grid: &DdGrid, inverse: bool, cap: usize) -> Result<DenseMatrix> {
    let (m, n, mn) = (grid.m(), grid.n(), grid.mn());
    check_cap(mn, cap)?;
    let sign = if inverse { 1.0 } else { -1.0 };
    let s = 1.0 / (n as f64).sqrt();
    let mut b = DenseMatrix::zeros(mn, mn);
    for k in 0..n {
        for kk in 0..n {
            let v = Complex64::cis(sign * 2.0 * PI * (k * kk) as f64 / n as f64) * s;
            for l in 0..m {
                b[(l + m * k, l + m * kk)] = v;
            }
        }
    }
    Ok(b)
}

/// `H_eff = B_rx H B_tx` assembled densely.
pub fn build_dense_effective(real: &ChannelRealization, grid: &DdGrid, cap: usize) -> Result<DenseMatrix> {
    let h = build_dense_h(real, grid, cap)?;
    let btx = dense_doppler_dft(grid, true, cap)?;
    let brx = dense_doppler_dft(grid, false, cap)?;
    brx.matmul(&h)?.matmul(&btx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::taps::{ChannelTaps, Tap};

    fn real(l: usize, k: i64) -> ChannelRealization {
        ChannelRealization {
            taps: ChannelTaps::new(vec![Tap { l, k, var: 1.0 }]).unwrap(),
            h: vec![Complex64::new(1.0, 0.0)],
        }
    }

    #[test]
    fn single_origin_tap_is_identity() {
        let g = DdGrid::with_defaults(2, 2).unwrap();
        assert_eq!(build_dense_h(&real(0, 0), &g, 16).unwrap(), DenseMatrix::identity(4));
    }

    #[test]
    fn unit_delay_is_cyclic_shift() {
        let g = DdGrid::with_defaults(4, 1).unwrap();
        let h = build_dense_h(&real(1, 0), &g, 16).unwrap();
        for j in 0..4 {
            for c in 0..4 {
                let e = if c == (j + 3) % 4 { 1.0 } else { 0.0 };
                assert_eq!(h[(j, c)], Complex64::new(e, 0.0));
            }
        }
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let g = DdGrid::with_defaults(8, 8).unwrap();
        assert!(matches!(
            build_dense_h(&real(0, 0), &g, 32),
            Err(Error::ResourceLimit { mn: 64, cap: 32 })
        ));
    }

    #[test]
    fn row_energy_equals_gain_energy() {
        let g = DdGrid::with_defaults(4, 4).unwrap();
        let r = ChannelRealization {
            taps: ChannelTaps::new(vec![Tap { l: 0, k: 1, var: 1.0 }, Tap { l: 2, k: -1, var: 1.0 }]).unwrap(),
            h: vec![Complex64::new(0.3, 0.4), Complex64::new(-1.0, 0.2)],
        };
        let h = build_dense_h(&r, &g, 64).unwrap();
        let e: f64 = r.h.iter().map(|v| v.norm_sqr()).sum();
        for j in 0..16 {
            let row: f64 = (0..16).map(|c| h[(j, c)].norm_sqr()).sum();
            assert!((row - e).abs() < 1e-12);
        }
    }
}
