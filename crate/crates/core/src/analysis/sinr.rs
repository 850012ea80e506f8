use crate::channel::ChannelTaps;
use crate::error::{Error, Result};
use crate::grid::DdGrid;
use crate::modem::PowerSplit;

/// Channel and noise summary used by the closed-form metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub grid: DdGrid,
    pub q: usize,
    /// `σ²_h = Σ var_i`.
    pub sigma2_h: f64,
    /// `σ̃²_h = Σ 1 / var_i`.
    pub sigma2_h_tilde: f64,
    pub sigma2_w: f64,
    pub split: PowerSplit,
    /// Guard extents for the embedded-pilot overhead.
    pub l_max: usize,
    pub k_max: usize,
}

impl LinkParams {
    pub fn from_taps(grid: DdGrid, taps: &ChannelTaps, sigma2_w: f64, split: PowerSplit) -> Result<Self> {
        let p = Self {
            grid,
            q: taps.q(),
            sigma2_h: taps.sigma2_h(),
            sigma2_h_tilde: taps.sigma2_h_tilde()?,
            sigma2_w,
            split,
            l_max: taps.l_max(),
            k_max: taps.k_max(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || !(self.sigma2_h > 0.0) || !(self.sigma2_h_tilde > 0.0) {
            return Err(Error::invalid("link parameters need Q ≥ 1 and positive channel power sums"));
        }
        if !(self.sigma2_w.is_finite() && self.sigma2_w > 0.0) {
            return Err(Error::invalid(format!("noise variance must be positive, got {}", self.sigma2_w)));
        }
        Ok(())
    }

    pub fn with_split(self, split: PowerSplit) -> Self {
        Self { split, ..self }
    }

    pub fn with_noise(self, sigma2_w: f64) -> Self {
        Self { sigma2_w, ..self }
    }

    /// Overrides the guard extents used for the embedded-pilot overhead.
    pub fn with_guard(self, l_max: usize, k_max: usize) -> Self {
        Self { l_max, k_max, ..self }
    }

    /// `Q M N`.
    fn qmn(&self) -> f64 {
        (self.q * self.grid.mn()) as f64
    }
}

/// `σ²_d (σ²_h − B) / (σ²_d B + Q σ²_p B + σ²_w)`.
pub fn sinr_lower_bound(params: &LinkParams, mse: f64) -> f64 {
    let (d, p) = (params.split.sigma2_d(), params.split.sigma2_p());
    d * (params.sigma2_h - mse) / (d * mse + params.q as f64 * p * mse + params.sigma2_w)
}

/// SINR bound as a rational function of `σ²_p`:
/// `(N1 σ⁴_p + N2 σ²_p + N3) / (D1 σ⁴_p + D2 σ²_p + D3)`, with the
/// stationarity quadratic `a σ⁴_p + b σ²_p + c = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrPolynomial {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SinrPolynomial {
    /// Coefficients of `sinr_lower_bound(mse_lower_bound(σ²_p))` with
    /// `σ²_d = 1 − σ²_p`.
    pub fn build(params: &LinkParams) -> Self {
        let (s, t, w, q, k) = (
            params.sigma2_h,
            params.sigma2_h_tilde,
            params.sigma2_w,
            params.q as f64,
            params.qmn(),
        );
        let a1 = s * k - t * s * s + q * q * s;
        let a0 = (s + w) * (s * t - q * q);
        Self::from_coefficients(-a1, a1 - a0, a0, Self::d(params))
    }

    /// Numerator coefficients exactly as printed in the source derivation;
    /// kept for comparison only since they do not reproduce the composition.
    pub fn printed(params: &LinkParams) -> Self {
        let (s, t, w, q, k) = (
            params.sigma2_h,
            params.sigma2_h_tilde,
            params.sigma2_w,
            params.q as f64,
            params.qmn(),
        );
        let n1 = s * k - s * t + s * q * q;
        let n2 = s * k - 2.0 * s * t + s * q * q - t * w + q * s + q * q * w;
        let n3 = s * t + t * w - q * q * s - q * q * w;
        Self::from_coefficients(n1, n2, n3, Self::d(params))
    }

    fn d(params: &LinkParams) -> [f64; 3] {
        let (s, t, w, q, mn) = (
            params.sigma2_h,
            params.sigma2_h_tilde,
            params.sigma2_w,
            params.q as f64,
            params.grid.mn() as f64,
        );
        [
            s * q * q - s * q * q * q,
            s * q.powi(3) + w * q.powi(3) - 2.0 * s * q * q - w * q * q + w * q * mn - s * t * w,
            q * q * s + q * q * w + s * t * w + t * w * w,
        ]
    }

    fn from_coefficients(n1: f64, n2: f64, n3: f64, [d1, d2, d3]: [f64; 3]) -> Self {
        Self {
            n1,
            n2,
            n3,
            d1,
            d2,
            d3,
            a: d2 * n1 - d1 * n2,
            b: 2.0 * (d3 * n1 - d1 * n3),
            c: d3 * n2 - d2 * n3,
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        (self.n1 * p * p + self.n2 * p + self.n3) / (self.d1 * p * p + self.d2 * p + self.d3)
    }

    /// Real roots of the stationarity quadratic, printed branch first.
    pub fn stationary_points(&self) -> Vec<f64> {
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs());
        if scale == 0.0 {
            return Vec::new();
        }
        if self.a.abs() <= 1e-14 * scale {
            return if self.b != 0.0 { vec![-self.c / self.b] } else { Vec::new() };
        }
        let disc = self.b * self.b - 4.0 * self.a * self.c;
        if disc < 0.0 {
            return Vec::new();
        }
        let sq = disc.sqrt();
        vec![(-self.b + sq) / (2.0 * self.a), (-self.b - sq) / (2.0 * self.a)]
    }
}

/// Which candidate produced the reported optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootChoice {
    /// `|(−b + √(b² − 4ac)) / 2a|`.
    PrintedBranch,
    /// `(−b − √(b² − 4ac)) / 2a`.
    OtherBranch,
    /// `a = 0`: root of `b σ²_p + c = 0`.
    Linear,
    /// No admissible root; grid maximizer used.
    GridFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPower {
    pub sigma2_p: f64,
    pub sigma2_d: f64,
    pub choice: RootChoice,
    /// Maximizer of the rational SINR over `[0.001, 0.999]`.
    pub grid_maximizer: f64,
    /// `|sigma2_p − grid_maximizer| ≤ 1e-3`.
    pub agrees_with_grid: bool,
    /// Value of the SINR bound at the optimum.
    pub sinr: f64,
}

fn grid_maximize(f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, steps) = (0.001, 0.999, 99_800usize);
    let h = (hi - lo) / steps as f64;
    let mut best = lo;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=steps {
        let p = lo + h * i as f64;
        let v = f(p);
        if v > best_v {
            best_v = v;
            best = p;
        }
    }
    // golden-section polish inside the bracketing cell
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Pilot power maximizing the SINR bound, cross-checked with a grid search.
pub fn optimal_pilot_power(params: &LinkParams) -> Result<OptimalPower> {
    params.validate()?;
    optimal_for(&SinrPolynomial::build(params))
}

/// Root selection for an explicit coefficient set.
pub fn optimal_for(poly: &SinrPolynomial) -> Result<OptimalPower> {
    let grid_max = grid_maximize(|p| poly.eval(p));
    let roots = poly.stationary_points();
    let admissible = |p: f64| p > 0.0 && p < 1.0 && poly.eval(p).is_finite();
    let mut pick: Option<(f64, RootChoice)> = None;
    let linear = roots.len() == 1;
    for (idx, r) in roots.iter().enumerate() {
        let (cand, choice) = match (linear, idx) {
            (true, _) => (*r, RootChoice::Linear),
            (false, 0) => (r.abs(), RootChoice::PrintedBranch),
            _ => (*r, RootChoice::OtherBranch),
        };
        if !admissible(cand) {
            continue;
        }
        // keep the stationary point that is a maximum in the interior
        let better = match pick {
            None => true,
            Some((p, _)) => poly.eval(cand) > poly.eval(p),
        };
        if better {
            pick = Some((cand, choice));
        }
    }
    let (p, choice) = match pick {
        Some((p, c)) if poly.eval(p) >= poly.eval(grid_max) - 1e-9 * poly.eval(grid_max).abs() => (p, c),
        _ => (grid_max, RootChoice::GridFallback),
    };
    let agrees = (p - grid_max).abs() <= 1e-3;
    if !agrees {
        log::warn!("closed-form pilot power {p} disagrees with grid maximizer {grid_max}");
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("optimal pilot power {p} is outside (0, 1)")));
    }
    Ok(OptimalPower {
        sigma2_p: p,
        sigma2_d: 1.0 - p,
        choice,
        grid_maximizer: grid_max,
        agrees_with_grid: agrees,
        sinr: poly.eval(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{quantize_profile, ChannelProfile};
    use crate::estimators::mse_lower_bound;

    fn params(normalize: bool, snr_db: f64) -> (LinkParams, ChannelTaps) {
        let g = DdGrid::with_defaults(16, 16).unwrap();
        let taps = quantize_profile(&ChannelProfile::table2(normalize), &g).unwrap();
        let w = 10f64.powf(-snr_db / 10.0);
        let split = PowerSplit::from_pilot(0.3).unwrap();
        (LinkParams::from_taps(g, &taps, w, split).unwrap(), taps)
    }

    #[test]
    fn bound_limits() {
        let (p, _) = params(true, 10.0);
        let d = p.split.sigma2_d();
        assert!((sinr_lower_bound(&p, 0.0) - d * p.sigma2_h / p.sigma2_w).abs() < 1e-12);
        assert_eq!(sinr_lower_bound(&p, p.sigma2_h), 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..=50 {
            let v = sinr_lower_bound(&p, p.sigma2_h * i as f64 / 50.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn coefficients_match_direct_composition() {
        for norm in [true, false] {
            for snr in [0.0, 10.0, 20.0] {
                let (p, taps) = params(norm, snr);
                let poly = SinrPolynomial::build(&p);
                for i in 1..50 {
                    let sp = i as f64 / 50.0;
                    let split = PowerSplit::from_pilot(sp).unwrap();
                    let b = mse_lower_bound(&taps, split, p.sigma2_w, &p.grid).unwrap();
                    let direct = sinr_lower_bound(&p.with_split(split), b);
                    let v = poly.eval(sp);
                    assert!((v - direct).abs() <= 1e-9 * direct.abs(), "{v} vs {direct}");
                }
                assert!(poly.eval(0.0).is_finite());
            }
        }
    }

    #[test]
    fn printed_numerator_differs() {
        let (p, _) = params(true, 10.0);
        let good = SinrPolynomial::build(&p);
        let printed = SinrPolynomial::printed(&p);
        assert_eq!(good.d2, printed.d2);
        assert!((good.eval(0.3) - printed.eval(0.3)).abs() > 1e-3);
    }

    #[test]
    fn optimum_is_stationary_and_matches_grid() {
        for snr in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let (p, _) = params(true, snr);
            let opt = optimal_pilot_power(&p).unwrap();
            assert!(opt.agrees_with_grid);
            assert!((opt.sigma2_p + opt.sigma2_d - 1.0).abs() < 1e-15);
            let poly = SinrPolynomial::build(&p);
            let f0 = poly.eval(opt.sigma2_p);
            for dp in [-0.05, 0.05] {
                let q = opt.sigma2_p + dp;
                if q > 0.0 && q < 1.0 {
                    assert!(poly.eval(q) < f0);
                }
            }
            let h = 1e-6;
            let deriv = (poly.eval(opt.sigma2_p + h) - poly.eval(opt.sigma2_p - h)) / (2.0 * h);
            assert!(deriv.abs() < 1e-6 * f0, "derivative {deriv} at {}", opt.sigma2_p);
        }
    }
}
