//! Q-sparse effective channel `H_eff = Σ h_i Γ_i` with `Γ_i = B_rx Π^{l_i} Δ^{k_i} B_tx`.
//!
//! Each `Γ_i` has exactly one unit-modulus entry per row: output bin `(l, k)`
//! reads input bin `([l - l_i]_M, [k - k_i]_N)` with phase `α_i(l, k)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::channel::realization::ChannelRealization;
use crate::channel::taps::ChannelTaps;
use crate::error::{check_len, Result};
use crate::grid::DdGrid;
use crate::linalg::HermitianMatrix;
use crate::transform::unit_phase;

/// Index sets and phases of every `Γ_i`, independent of the gains.
#[derive(Debug, Clone)]
pub struct ChannelGeometry {
    grid: DdGrid,
    taps: ChannelTaps,
    /// `cols[a * Q + i]`: input bin feeding output `a` through tap `i`.
    cols: Vec<usize>,
    /// `alpha[a * Q + i]`: phase of that entry.
    alpha: Vec<Complex64>,
    /// `rows[b * Q + i]`: output bin fed by input `b` through tap `i`.
    rows: Vec<usize>,
}

impl ChannelGeometry {
    pub fn new(grid: DdGrid, taps: ChannelTaps) -> Result<Self> {
        taps.validate_for(&grid)?;
        let (m, n, mn, q) = (grid.m(), grid.n(), grid.mn(), taps.q());
        let mut cols = vec![0; mn * q];
        let mut alpha = vec![Complex64::new(0.0, 0.0); mn * q];
        let mut rows = vec![0; mn * q];
        for k in 0..n {
            for l in 0..m {
                let a = grid.index(l, k);
                for (i, t) in taps.taps().iter().enumerate() {
                    let ls = (l + m - t.l) % m;
                    let ks = (k as i64 - t.k).rem_euclid(n as i64) as usize;
                    let b = grid.index(ls, ks);
                    let mut ph = unit_phase(t.k * ls as i64, mn);
                    if l < t.l {
                        ph *= unit_phase(-(k as i64), n);
                    }
                    cols[a * q + i] = b;
                    alpha[a * q + i] = ph;
                    rows[b * q + i] = a;
                }
            }
        }
        Ok(Self {
            grid,
            taps,
            cols,
            alpha,
            rows,
        })
    }

    pub fn grid(&self) -> &DdGrid {
        &self.grid
    }

    pub fn taps(&self) -> &ChannelTaps {
        &self.taps
    }

    pub fn q(&self) -> usize {
        self.taps.q()
    }

    #[inline]
    pub fn col(&self, a: usize, i: usize) -> usize {
        self.cols[a * self.q() + i]
    }

    #[inline]
    pub fn alpha(&self, a: usize, i: usize) -> Complex64 {
        self.alpha[a * self.q() + i]
    }

    #[inline]
    pub fn row(&self, b: usize, i: usize) -> usize {
        self.rows[b * self.q() + i]
    }

    /// `I(a)`: input bins with a nonzero entry in row `a`, in tap order.
    pub fn row_index(&self, a: usize) -> &[usize] {
        let q = self.q();
        &self.cols[a * q..(a + 1) * q]
    }

    /// `J(b)`: output bins with a nonzero entry in column `b`, in tap order.
    pub fn col_index(&self, b: usize) -> &[usize] {
        let q = self.q();
        &self.rows[b * q..(b + 1) * q]
    }

    /// `Γ_i v`.
    pub fn apply_tap(&self, i: usize, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.grid.mn()).map(|a| self.alpha(a, i) * v[self.col(a, i)]).collect()
    }

    /// `Γ_i^H v`.
    pub fn apply_tap_adjoint(&self, i: usize, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (a, va) in v.iter().enumerate() {
            out[self.col(a, i)] = self.alpha(a, i).conj() * va;
        }
        out
    }
}

/// `H_eff` for a given gain vector (true or estimated).
#[derive(Debug, Clone)]
pub struct SparseEffectiveChannel {
    geometry: Arc<ChannelGeometry>,
    gains: Vec<Complex64>,
}

impl SparseEffectiveChannel {
    pub fn new(geometry: Arc<ChannelGeometry>, gains: Vec<Complex64>) -> Result<Self> {
        check_len(geometry.q(), gains.len())?;
        Ok(Self { geometry, gains })
    }

    pub fn from_realization(grid: DdGrid, real: &ChannelRealization) -> Result<Self> {
        let geo = Arc::new(ChannelGeometry::new(grid, real.taps.clone())?);
        Self::new(geo, real.h.clone())
    }

    pub fn geometry(&self) -> &Arc<ChannelGeometry> {
        &self.geometry
    }

    pub fn grid(&self) -> &DdGrid {
        self.geometry.grid()
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    /// Same support with every gain multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            geometry: self.geometry.clone(),
            gains: self.gains.iter().map(|g| g * s).collect(),
        }
    }

    /// Stored entry for row `a` and tap `i`: `h_i α_i(a)` at column `col(a, i)`.
    #[inline]
    pub fn tap_entry(&self, a: usize, i: usize) -> Complex64 {
        self.gains[i] * self.geometry.alpha(a, i)
    }

    /// `H_eff(a, b)`; zero off the support.
    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        (0..self.geometry.q())
            .filter(|&i| self.geometry.col(a, i) == b)
            .map(|i| self.tap_entry(a, i))
            .sum()
    }

    pub fn mul(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mn = self.grid().mn();
        check_len(mn, x.len())?;
        let q = self.geometry.q();
        Ok((0..mn)
            .map(|a| (0..q).map(|i| self.tap_entry(a, i) * x[self.geometry.col(a, i)]).sum())
            .collect())
    }
}

/// `Ω = [Γ_1 x, …, Γ_Q x]`, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Omega {
    rows: usize,
    cols: Vec<Vec<Complex64>>,
}

impl Omega {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn q(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, i: usize) -> &[Complex64] {
        &self.cols[i]
    }

    pub fn get(&self, row: usize, i: usize) -> Complex64 {
        self.cols[i][row]
    }

    /// `Ω h`.
    pub fn mul(&self, h: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.q(), h.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (c, hi) in self.cols.iter().zip(h) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * hi;
            }
        }
        Ok(out)
    }

    /// `Ω^H y`.
    pub fn adjoint_mul(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.rows, y.len())?;
        Ok(self
            .cols
            .iter()
            .map(|c| c.iter().zip(y).map(|(a, b)| a.conj() * b).sum())
            .collect())
    }

    /// `Ω^H Ω`.
    pub fn gram(&self) -> HermitianMatrix {
        let q = self.q();
        let mut g = HermitianMatrix::zeros(q);
        for i in 0..q {
            for j in i..q {
                let v: Complex64 = self.cols[i].iter().zip(&self.cols[j]).map(|(a, b)| a.conj() * b).sum();
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
            g[(i, i)] = Complex64::new(g[(i, i)].re, 0.0);
        }
        g
    }

    /// Elementwise sum of two matrices of equal shape.
    pub fn add(&self, other: &Omega) -> Result<Omega> {
        check_len(self.rows, other.rows)?;
        check_len(self.q(), other.q())?;
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Omega { rows: self.rows, cols })
    }
}

/// Builds `Ω` for a symbol vector via the shift-and-phase rule.
pub fn build_omega(symbol_vec: &[Complex64], geometry: &ChannelGeometry) -> Result<Omega> {
    let mn = geometry.grid().mn();
    check_len(mn, symbol_vec.len())?;
    let cols = (0..geometry.q()).map(|i| geometry.apply_tap(i, symbol_vec)).collect();
    Ok(Omega { rows: mn, cols })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::taps::Tap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_tap_gives_scaled_identity() {
        let g = DdGrid::with_defaults(4, 4).unwrap();
        let taps = ChannelTaps::new(vec![Tap { l: 0, k: 0, var: 1.0 }]).unwrap();
        let geo = Arc::new(ChannelGeometry::new(g, taps).unwrap());
        let h = SparseEffectiveChannel::new(geo, vec![c(0.5, -2.0)]).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                let e = if a == b { c(0.5, -2.0) } else { c(0.0, 0.0) };
                assert_eq!(h.entry(a, b), e);
            }
        }
    }

    #[test]
    fn index_sets_have_q_entries_and_are_consistent() {
        let g = DdGrid::with_defaults(6, 5).unwrap();
        let taps = ChannelTaps::new(vec![
            Tap { l: 0, k: 0, var: 1.0 },
            Tap { l: 2, k: -1, var: 1.0 },
            Tap { l: 3, k: 2, var: 1.0 },
        ])
        .unwrap();
        let geo = ChannelGeometry::new(g, taps).unwrap();
        for a in 0..g.mn() {
            assert_eq!(geo.row_index(a).len(), 3);
            for i in 0..3 {
                assert_eq!(geo.row(geo.col(a, i), i), a);
                assert!((geo.alpha(a, i).norm() - 1.0).abs() < 1e-14);
            }
        }
        let mut count = vec![0; g.mn()];
        for a in 0..g.mn() {
            for &b in geo.row_index(a) {
                count[b] += 1;
            }
        }
        assert!(count.iter().all(|&n| n == 3));
    }

    #[test]
    fn omega_of_zero_and_identity() {
        let g = DdGrid::with_defaults(3, 3).unwrap();
        let geo = ChannelGeometry::new(g, ChannelTaps::new(vec![Tap { l: 0, k: 0, var: 1.0 }]).unwrap()).unwrap();
        let z = build_omega(&vec![c(0.0, 0.0); 9], &geo).unwrap();
        assert!(z.column(0).iter().all(|v| v.norm() == 0.0));
        let x: Vec<_> = (0..9).map(|i| c(i as f64, 1.0)).collect();
        assert_eq!(build_omega(&x, &geo).unwrap().column(0), &x[..]);
        assert!(build_omega(&x[1..], &geo).is_err());
    }

    #[test]
    fn adjoint_inverts_tap() {
        let g = DdGrid::with_defaults(4, 6).unwrap();
        let geo = ChannelGeometry::new(g, ChannelTaps::new(vec![Tap { l: 3, k: -2, var: 1.0 }]).unwrap()).unwrap();
        let x: Vec<_> = (0..24).map(|i| c((i * 7 % 5) as f64, i as f64 * 0.1)).collect();
        let back = geo.apply_tap_adjoint(0, &geo.apply_tap(0, &x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
