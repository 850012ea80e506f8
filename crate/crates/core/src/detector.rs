//! Damped message-passing detector over the Q-sparse effective channel.
//!
//! Observation node `a` and variable node `b` share an edge for every tap `i`
//! with `col(a, i) = b`; edges are indexed `e = a * Q + i`. Each round first
//! recomputes every observation-to-variable message from the previous pmfs
//! and then every pmf from those messages, so results do not depend on the
//! evaluation order.

use num_complex::Complex64;

use crate::channel::SparseEffectiveChannel;
use crate::error::{check_len, Error, Result};
use crate::modem::{ConstellationSpec, PilotSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct MpConfig {
    /// Damping weight on the new pmf, in `(0, 1]`.
    pub damping: f64,
    /// Convergence threshold: a node counts as converged when its largest
    /// aggregate probability is at least `1 - epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub constellation: ConstellationSpec,
    /// Use `|r|²` instead of `|r|` in the symbol likelihood exponent.
    pub gaussian_exponent: bool,
}

impl Default for MpConfig {
    fn default() -> Self {
        Self {
            damping: 0.6,
            epsilon: 0.1,
            max_iters: 20,
            constellation: ConstellationSpec::bpsk(),
            gaussian_exponent: true,
        }
    }
}

impl MpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("at least one message-passing iteration is required"));
        }
        Ok(())
    }
}

/// Working state of one detection run.
#[derive(Debug, Clone)]
pub struct MpState {
    mn: usize,
    q: usize,
    s: usize,
    active: Vec<bool>,
    edge_active: Vec<bool>,
    /// `pmf[e * S + j]`: message `p_{b,a}(α_j)` on edge `e`.
    pmf: Vec<f64>,
    mean: Vec<Complex64>,
    var: Vec<f64>,
    /// `aggregate[b * S + j]`: normalized `p_b(α_j)`.
    aggregate: Vec<f64>,
    zeta_history: Vec<f64>,
    clamped: usize,
    // scratch: normalized log-likelihood per edge and symbol
    loglik: Vec<f64>,
}

impl MpState {
    /// Uniform pmfs on every edge. `active` marks the variable nodes that
    /// carry unknown symbols; inactive nodes are known zeros.
    pub fn new(h: &SparseEffectiveChannel, cfg: &MpConfig, active: Option<&[bool]>) -> Result<Self> {
        let geo = h.geometry();
        let (mn, q, s) = (h.grid().mn(), geo.q(), cfg.constellation.size());
        let active = match active {
            Some(m) => {
                check_len(mn, m.len())?;
                m.to_vec()
            }
            None => vec![true; mn],
        };
        let edge_active = (0..mn * q).map(|e| active[geo.col(e / q, e % q)]).collect();
        Ok(Self {
            mn,
            q,
            s,
            active,
            edge_active,
            pmf: vec![1.0 / s as f64; mn * q * s],
            mean: vec![Complex64::new(0.0, 0.0); mn * q],
            var: vec![0.0; mn * q],
            aggregate: vec![1.0 / s as f64; mn * s],
            zeta_history: Vec::new(),
            clamped: 0,
            loglik: vec![0.0; mn * q * s],
        })
    }

    pub fn edge_pmf(&self, a: usize, i: usize) -> &[f64] {
        let e = a * self.q + i;
        &self.pmf[e * self.s..(e + 1) * self.s]
    }

    pub fn mean(&self, a: usize, i: usize) -> Complex64 {
        self.mean[a * self.q + i]
    }

    pub fn variance(&self, a: usize, i: usize) -> f64 {
        self.var[a * self.q + i]
    }

    pub fn aggregate(&self, b: usize) -> &[f64] {
        &self.aggregate[b * self.s..(b + 1) * self.s]
    }

    pub fn zeta_history(&self) -> &[f64] {
        &self.zeta_history
    }

    /// Number of interference variances that came out negative and were
    /// clamped to the noise floor.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Observation-to-variable messages: Gaussian mean and variance of the
    /// interference seen by each edge, plus the additive `noise_floor`.
    pub fn obs_to_var(&mut self, h: &SparseEffectiveChannel, noise_floor: f64, cfg: &MpConfig) {
        let (q, s) = (self.q, self.s);
        let mut m = vec![Complex64::new(0.0, 0.0); q];
        let mut v = vec![0.0; q];
        for a in 0..self.mn {
            let mut total_m = Complex64::new(0.0, 0.0);
            let mut total_v = 0.0;
            for i in 0..q {
                let e = a * q + i;
                if !self.edge_active[e] {
                    m[i] = Complex64::new(0.0, 0.0);
                    v[i] = 0.0;
                    continue;
                }
                let hab = h.tap_entry(a, i);
                let (mean, energy) = cfg.constellation.moments(&self.pmf[e * s..(e + 1) * s]);
                m[i] = mean * hab;
                v[i] = energy * hab.norm_sqr() - m[i].norm_sqr();
                total_m += m[i];
                total_v += v[i];
            }
            for i in 0..q {
                let e = a * q + i;
                self.mean[e] = total_m - m[i];
                let mut interf = total_v - v[i];
                if interf < 0.0 {
                    // rounding can leave tiny negatives; only count real violations
                    if interf < -1e-12 * (total_v.abs() + noise_floor) {
                        self.clamped += 1;
                    }
                    interf = 0.0;
                }
                self.var[e] = interf + noise_floor;
            }
        }
    }

    /// Variable-to-observation pmfs with damping, and the aggregate pmfs.
    pub fn var_to_obs(&mut self, y_d: &[Complex64], h: &SparseEffectiveChannel, cfg: &MpConfig) {
        let (q, s) = (self.q, self.s);
        let pts = cfg.constellation.points();
        for e in 0..self.mn * q {
            if !self.edge_active[e] {
                continue;
            }
            let a = e / q;
            let hab = h.tap_entry(a, e % q);
            let r0 = y_d[a] - self.mean[e];
            let ll = &mut self.loglik[e * s..(e + 1) * s];
            for (j, p) in pts.iter().enumerate() {
                let d2 = (r0 - hab * p).norm_sqr();
                let d = if cfg.gaussian_exponent { d2 } else { d2.sqrt() };
                ll[j] = -d / self.var[e];
            }
            let lse = log_sum_exp(ll);
            ll.iter_mut().for_each(|x| *x -= lse);
        }
        let geo = h.geometry();
        let mut total = vec![0.0; s];
        let mut tmp = vec![0.0; s];
        for b in 0..self.mn {
            if !self.active[b] {
                continue;
            }
            total.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..q {
                let e = geo.row(b, i) * q + i;
                for j in 0..s {
                    total[j] += self.loglik[e * s + j];
                }
            }
            for i in 0..q {
                let e = geo.row(b, i) * q + i;
                for j in 0..s {
                    tmp[j] = total[j] - self.loglik[e * s + j];
                }
                softmax_in_place(&mut tmp);
                let p = &mut self.pmf[e * s..(e + 1) * s];
                for j in 0..s {
                    p[j] = cfg.damping * tmp[j] + (1.0 - cfg.damping) * p[j];
                }
                let z: f64 = p.iter().sum();
                p.iter_mut().for_each(|x| *x /= z);
            }
            tmp.copy_from_slice(&total);
            softmax_in_place(&mut tmp);
            self.aggregate[b * s..(b + 1) * s].copy_from_slice(&tmp);
        }
    }

    /// Hard decisions from the aggregate pmfs; ties go to the lowest index.
    pub fn decisions(&self) -> Vec<usize> {
        (0..self.mn)
            .map(|b| {
                let p = self.aggregate(b);
                let mut best = 0;
                for j in 1..p.len() {
                    if p[j] > p[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

/// Fraction of active variable nodes whose largest aggregate probability is
/// at least `1 - ε`.
pub fn convergence_indicator(state: &MpState, cfg: &MpConfig) -> f64 {
    let mut hit = 0usize;
    let mut count = 0usize;
    for b in 0..state.mn {
        if !state.active[b] {
            continue;
        }
        count += 1;
        let max = state.aggregate(b).iter().cloned().fold(0.0, f64::max);
        if max >= 1.0 - cfg.epsilon {
            hit += 1;
        }
    }
    if count == 0 {
        1.0
    } else {
        hit as f64 / count as f64
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        z += *x;
    }
    v.iter_mut().for_each(|x| *x /= z);
}

/// `y_d = y - Ĥ x_p`.
pub fn cancel_pilots(y: &[Complex64], h_hat: &SparseEffectiveChannel, pilots: &PilotSequence) -> Result<Vec<Complex64>> {
    check_len(h_hat.grid().mn(), y.len())?;
    let hp = h_hat.mul(pilots.as_slice())?;
    Ok(y.iter().zip(hp).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone)]
pub struct DetectOutcome {
    /// Constellation index per variable node (0 for inactive nodes).
    pub symbols: Vec<usize>,
    pub iterations: usize,
    pub zeta: f64,
    pub clamped: usize,
}

/// Runs message passing on `y_d` with the unit-energy constellation of `cfg`;
/// symbol amplitude must be folded into `h`.
pub fn detect(y_d: &[Complex64], h: &SparseEffectiveChannel, noise_floor: f64, cfg: &MpConfig) -> Result<DetectOutcome> {
    detect_masked(y_d, h, noise_floor, cfg, None)
}

/// As [`detect`], with only the `active` variable nodes unknown.
pub fn detect_masked(
    y_d: &[Complex64],
    h: &SparseEffectiveChannel,
    noise_floor: f64,
    cfg: &MpConfig,
    active: Option<&[bool]>,
) -> Result<DetectOutcome> {
    cfg.validate()?;
    check_len(h.grid().mn(), y_d.len())?;
    if !(noise_floor.is_finite() && noise_floor > 0.0) {
        return Err(Error::invalid(format!("noise floor must be positive, got {noise_floor}")));
    }
    let mut state = MpState::new(h, cfg, active)?;
    let mut decision = vec![0usize; state.mn];
    let mut best = 0.0;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        state.obs_to_var(h, noise_floor, cfg);
        state.var_to_obs(y_d, h, cfg);
        let zeta = convergence_indicator(&state, cfg);
        state.zeta_history.push(zeta);
        if zeta >= best {
            best = zeta;
            decision = state.decisions();
        }
        if zeta >= 1.0 {
            break;
        }
    }
    for (d, a) in decision.iter_mut().zip(&state.active) {
        if !a {
            *d = 0;
        }
    }
    Ok(DetectOutcome {
        symbols: decision,
        iterations,
        zeta: best,
        clamped: state.clamped,
    })
}
