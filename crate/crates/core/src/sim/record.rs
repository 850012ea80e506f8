//! Per-cell metrics and their CSV form.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::Scheme;
use crate::error::{Error, Result};

/// Aggregated results of one (scheme, SNR, split) cell. `NaN` marks a metric
/// that does not apply to the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub sigma2_p: f64,
    pub sigma2_d: f64,
    pub m: usize,
    pub n: usize,
    pub damping: f64,
    /// Trials run, including faulted ones.
    pub trials: u64,
    /// Trials abandoned after a numerical fault.
    pub faults: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// 95% Wilson score interval.
    pub ber_lo: f64,
    pub ber_hi: f64,
    /// Mean `‖h − ĥ‖²`.
    pub mse_sim: f64,
    /// Mean error-covariance trace predicted for the realized pilots.
    pub mse_analytic: f64,
    /// Closed-form MSE used for the spectral efficiency.
    pub mse_bound: f64,
    pub se_bits_per_hz: f64,
    pub avg_spi_iters: f64,
    pub avg_mp_iters: f64,
    /// Interference variances clamped at zero by the detector.
    pub clamped: u64,
    pub seed: u64,
    pub wall_time: f64,
}

/// Column order of the CSV file.
pub const CSV_COLUMNS: [&str; 23] = [
    "scheme",
    "snr_db",
    "sigma2_p",
    "sigma2_d",
    "m",
    "n",
    "damping",
    "trials",
    "faults",
    "bits",
    "bit_errors",
    "ber",
    "ber_lo",
    "ber_hi",
    "mse_sim",
    "mse_analytic",
    "mse_bound",
    "se_bits_per_hz",
    "avg_spi_iters",
    "avg_mp_iters",
    "clamped",
    "seed",
    "wall_time",
];

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = n as f64;
    let p = k as f64 / nf;
    let den = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / den;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

impl MetricRecord {
    fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{:e},{:e},{:e},{},{},{:e},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e}",
            self.scheme.tag(),
            self.snr_db,
            self.sigma2_p,
            self.sigma2_d,
            self.m,
            self.n,
            self.damping,
            self.trials,
            self.faults,
            self.bits,
            self.bit_errors,
            self.ber,
            self.ber_lo,
            self.ber_hi,
            self.mse_sim,
            self.mse_analytic,
            self.mse_bound,
            self.se_bits_per_hz,
            self.avg_spi_iters,
            self.avg_mp_iters,
            self.clamped,
            self.seed,
            self.wall_time,
        );
        s
    }

    fn from_fields(f: &[&str]) -> std::result::Result<Self, String> {
        if f.len() != CSV_COLUMNS.len() {
            return Err(format!("expected {} fields, got {}", CSV_COLUMNS.len(), f.len()));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("{name}: cannot parse `{s}`"))
        }
        Ok(Self {
            scheme: f[0].parse().map_err(|e: Error| e.to_string())?,
            snr_db: num(f[1], "snr_db")?,
            sigma2_p: num(f[2], "sigma2_p")?,
            sigma2_d: num(f[3], "sigma2_d")?,
            m: num(f[4], "m")?,
            n: num(f[5], "n")?,
            damping: num(f[6], "damping")?,
            trials: num(f[7], "trials")?,
            faults: num(f[8], "faults")?,
            bits: num(f[9], "bits")?,
            bit_errors: num(f[10], "bit_errors")?,
            ber: num(f[11], "ber")?,
            ber_lo: num(f[12], "ber_lo")?,
            ber_hi: num(f[13], "ber_hi")?,
            mse_sim: num(f[14], "mse_sim")?,
            mse_analytic: num(f[15], "mse_analytic")?,
            mse_bound: num(f[16], "mse_bound")?,
            se_bits_per_hz: num(f[17], "se_bits_per_hz")?,
            avg_spi_iters: num(f[18], "avg_spi_iters")?,
            avg_mp_iters: num(f[19], "avg_mp_iters")?,
            clamped: num(f[20], "clamped")?,
            seed: num(f[21], "seed")?,
            wall_time: num(f[22], "wall_time")?,
        })
    }
}

/// CSV text: header plus one row per record, LF line endings.
pub fn to_csv(records: &[MetricRecord]) -> String {
    let mut s = CSV_COLUMNS.join(",");
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn emit_csv(records: &[MetricRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, to_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str, origin: &Path) -> Result<Vec<MetricRecord>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_COLUMNS.join(",") {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            msg: "unexpected header".into(),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            MetricRecord::from_fields(&fields).map_err(|msg| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 2,
                msg,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}
